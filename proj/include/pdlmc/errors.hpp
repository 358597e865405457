#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace pdlmc {

/// Invalid problem/sampler/run configuration detected before or during setup.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A non-finite value surfaced during evaluation or sampling.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what,
                        std::optional<std::uint64_t> iteration = std::nullopt)
      : std::runtime_error(iteration ? what + " (iteration " + std::to_string(*iteration) + ")"
                                     : what),
        iteration_(iteration) {}

  std::optional<std::uint64_t> iteration() const noexcept { return iteration_; }

 private:
  std::optional<std::uint64_t> iteration_;
};

}  // namespace pdlmc
