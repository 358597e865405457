#pragma once

// trajectory.csv: k, x_0..x_{d-1}, lambda_0.., nu_0.., g_0.., h_0..
// Values are written with 17 significant digits so a reload is exact.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include "pdlmc/labeled_table.hpp"
#include "pdlmc/trajectory.hpp"

namespace pdlmc {

inline void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write trajectory '" + path + "'");
  out << 'k';
  auto header = [&](const char* prefix, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out << ',' << prefix << i;
  };
  header("x_", traj.dim());
  header("lambda_", traj.num_ineq());
  header("nu_", traj.num_eq());
  header("g_", traj.num_ineq());
  header("h_", traj.num_eq());
  out << '\n';
  std::string line;
  for (std::size_t r = 0; r < traj.size(); ++r) {
    const auto rec = traj[r];
    line = std::to_string(rec.k);
    for (auto column : {rec.x, rec.lambda, rec.nu, rec.g_of_x, rec.h_of_x}) {
      for (double v : column) {
        line += ',';
        line += detail::format_double(v);
      }
    }
    line += '\n';
    out << line;
  }
  if (!out) throw ConfigError("failed while writing trajectory '" + path + "'");
}

inline Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open trajectory '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": missing header row");
  const auto header = detail::split_commas(line);
  if (header.empty() || detail::trim(header[0]) != "k") {
    throw ConfigError(path + ":1: first column must be 'k'");
  }
  auto count = [&](std::string_view prefix) {
    return static_cast<std::size_t>(std::count_if(header.begin(), header.end(), [&](auto h) {
      h = detail::trim(h);
      return h.starts_with(prefix) && h.size() > prefix.size() &&
             std::isdigit(static_cast<unsigned char>(h[prefix.size()]));
    }));
  };
  const std::size_t d = count("x_");
  const std::size_t I = count("lambda_");
  const std::size_t J = count("nu_");
  if (count("g_") != I || count("h_") != J || header.size() != 1 + d + 2 * I + 2 * J) {
    throw ConfigError(path + ":1: inconsistent trajectory header");
  }
  Trajectory traj(d, I, J, SamplerConfig{}, "");
  std::vector<double> values(header.size() - 1);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_commas(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (cells.size() != header.size()) throw ConfigError(where + ": wrong number of fields");
    std::uint64_t k = 0;
    const auto kcell = detail::trim(cells[0]);
    const auto [ptr, ec] = std::from_chars(kcell.data(), kcell.data() + kcell.size(), k);
    if (ec != std::errc() || ptr != kcell.data() + kcell.size()) {
      throw ConfigError(where + ": malformed iteration index");
    }
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (!detail::parse_double(cells[c], values[c - 1])) {
        throw ConfigError(where + ": malformed value in column " + std::to_string(c));
      }
    }
    const std::span<const double> v(values);
    traj.append(k, v.subspan(0, d), v.subspan(d, I), v.subspan(d + I, J),
                v.subspan(d + I + J, I), v.subspan(d + 2 * I + J, J));
  }
  return traj;
}

}  // namespace pdlmc
