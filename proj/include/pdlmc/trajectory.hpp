#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "pdlmc/core.hpp"

namespace pdlmc {

struct StepSchedule {
  enum class Kind { kConstant, kInverseSqrt };

  Kind kind = Kind::kConstant;
  double base = 1e-3;

  static StepSchedule constant(double eta) { return {Kind::kConstant, eta}; }
  static StepSchedule inverse_sqrt(double scale) { return {Kind::kInverseSqrt, scale}; }

  double at(std::uint64_t k) const noexcept {
    return kind == Kind::kConstant ? base : base / std::sqrt(static_cast<double>(k) + 1.0);
  }

  bool operator==(const StepSchedule&) const = default;
};

struct SamplerConfig {
  StepSchedule eta_x = StepSchedule::constant(1e-3);
  StepSchedule eta_lambda = StepSchedule::constant(1e-3);
  StepSchedule eta_nu = StepSchedule::constant(1e-3);
  /// Outer iterations: LMC steps for lmc/pdlmc/projected, dual updates for
  /// the mini-batch and DLMC samplers.
  std::uint64_t iterations = 1000;
  double burn_in_fraction = 0.5;
  std::uint64_t minibatch = 1;
  std::uint64_t dlmc_inner = 1;
  double dlmc_gamma = 1e-3;
  bool dlmc_warm_start = true;
  std::uint64_t seed = 0;
  std::uint64_t log_stride = 1;
  /// Runs abort once any |lambda_i| or |nu_j| exceeds this.
  double dual_cap = 1e4;

  void validate() const {
    auto positive = [](const StepSchedule& s, const char* key) {
      if (!(s.base > 0.0) || !std::isfinite(s.base)) {
        throw ConfigError(std::string(key) + " must be a positive finite step size");
      }
    };
    positive(eta_x, "eta_x");
    positive(eta_lambda, "eta_lambda");
    positive(eta_nu, "eta_nu");
    if (iterations == 0) throw ConfigError("iterations must be positive");
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
      throw ConfigError("burn_in must lie in [0, 1)");
    }
    if (minibatch == 0) throw ConfigError("minibatch must be at least 1");
    if (dlmc_inner == 0) throw ConfigError("dlmc_inner must be at least 1");
    if (!(dlmc_gamma > 0.0) || !std::isfinite(dlmc_gamma)) {
      throw ConfigError("dlmc_gamma must be a positive finite step size");
    }
    if (log_stride == 0) throw ConfigError("log_stride must be at least 1");
    if (!(dual_cap > 0.0)) throw ConfigError("dual_cap must be positive");
  }

  bool operator==(const SamplerConfig&) const = default;
};

/// View of one logged iteration inside a Trajectory.
struct TrajectoryRecord {
  std::uint64_t k;
  std::span<const double> x;
  std::span<const double> lambda;
  std::span<const double> nu;
  std::span<const double> g_of_x;
  std::span<const double> h_of_x;
};

/// Append-only, column-major log of a chain.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::size_t dim, std::size_t num_ineq, std::size_t num_eq, SamplerConfig config,
             std::string problem_label)
      : dim_(dim),
        num_ineq_(num_ineq),
        num_eq_(num_eq),
        config_(std::move(config)),
        label_(std::move(problem_label)) {}

  void reserve(std::size_t records) {
    ks_.reserve(records);
    x_.reserve(records * dim_);
    lambda_.reserve(records * num_ineq_);
    nu_.reserve(records * num_eq_);
    g_.reserve(records * num_ineq_);
    h_.reserve(records * num_eq_);
  }

  void append(std::uint64_t k, std::span<const double> x, std::span<const double> lambda,
              std::span<const double> nu, std::span<const double> g,
              std::span<const double> h) {
    if (!ks_.empty() && k <= ks_.back()) {
      throw std::logic_error("trajectory records must be appended in increasing k");
    }
    if (x.size() != dim_ || lambda.size() != num_ineq_ || nu.size() != num_eq_ ||
        g.size() != num_ineq_ || h.size() != num_eq_) {
      throw std::logic_error("trajectory record has inconsistent sizes");
    }
    ks_.push_back(k);
    x_.insert(x_.end(), x.begin(), x.end());
    lambda_.insert(lambda_.end(), lambda.begin(), lambda.end());
    nu_.insert(nu_.end(), nu.begin(), nu.end());
    g_.insert(g_.end(), g.begin(), g.end());
    h_.insert(h_.end(), h.begin(), h.end());
  }

  std::size_t size() const noexcept { return ks_.size(); }
  bool empty() const noexcept { return ks_.empty(); }

  TrajectoryRecord operator[](std::size_t i) const {
    return {ks_[i],
            slice(x_, i, dim_),
            slice(lambda_, i, num_ineq_),
            slice(nu_, i, num_eq_),
            slice(g_, i, num_ineq_),
            slice(h_, i, num_eq_)};
  }
  TrajectoryRecord back() const { return (*this)[size() - 1]; }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t num_ineq() const noexcept { return num_ineq_; }
  std::size_t num_eq() const noexcept { return num_eq_; }
  const SamplerConfig& config_echo() const noexcept { return config_; }
  const std::string& problem_label() const noexcept { return label_; }
  std::span<const std::uint64_t> ks() const noexcept { return ks_; }

  /// Same shape and identical bytes in every logged column.
  friend bool bitwise_equal(const Trajectory& a, const Trajectory& b) {
    auto same = [](const auto& u, const auto& v) {
      return u.size() == v.size() &&
             (u.empty() || std::memcmp(u.data(), v.data(), u.size() * sizeof(u[0])) == 0);
    };
    return a.dim_ == b.dim_ && a.num_ineq_ == b.num_ineq_ && a.num_eq_ == b.num_eq_ &&
           same(a.ks_, b.ks_) && same(a.x_, b.x_) && same(a.lambda_, b.lambda_) &&
           same(a.nu_, b.nu_) && same(a.g_, b.g_) && same(a.h_, b.h_);
  }

 private:
  static std::span<const double> slice(const std::vector<double>& column, std::size_t row,
                                       std::size_t width) {
    return std::span<const double>(column).subspan(row * width, width);
  }

  std::size_t dim_ = 0;
  std::size_t num_ineq_ = 0;
  std::size_t num_eq_ = 0;
  SamplerConfig config_;
  std::string label_;
  std::vector<std::uint64_t> ks_;
  std::vector<double> x_;
  std::vector<double> lambda_;
  std::vector<double> nu_;
  std::vector<double> g_;
  std::vector<double> h_;
};

}  // namespace pdlmc
