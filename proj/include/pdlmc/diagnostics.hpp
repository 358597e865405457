#pragma once

// Post-hoc statistics over trajectories. All functions are pure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdlmc/core.hpp"
#include "pdlmc/trajectory.hpp"

namespace pdlmc {

enum class ErgodicWeights { kUniform, kStepSize };

struct Window {
  std::size_t first_index = 0;  // into the trajectory's records
  std::uint64_t first_k = 0;
  std::uint64_t last_k = 0;
  std::size_t count = 0;
};

/// Records kept after discarding the first `burn_in_fraction` of them.
inline Window kept_window(const Trajectory& traj, double burn_in_fraction) {
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw ConfigError("burn_in must lie in [0, 1)");
  }
  const auto first =
      static_cast<std::size_t>(std::floor(burn_in_fraction * static_cast<double>(traj.size())));
  if (first >= traj.size()) throw ConfigError("no trajectory records left after burn-in");
  return {first, traj[first].k, traj.back().k, traj.size() - first};
}

struct ErgodicReport {
  std::string phi_label;
  Vector ergodic_value;
  Window window;
  ErgodicWeights weights = ErgodicWeights::kUniform;
};

using RecordStatistic = std::function<Vector(const TrajectoryRecord&)>;

/// Weighted average of phi over the kept records; step-size weights are
/// proportional to eta_x(k) of the recorded iteration.
inline ErgodicReport ergodic_average(const Trajectory& traj, const RecordStatistic& phi,
                                     double burn_in_fraction,
                                     ErgodicWeights weights = ErgodicWeights::kUniform,
                                     std::string label = "phi") {
  const Window w = kept_window(traj, burn_in_fraction);
  Vector sum;
  double total_weight = 0.0;
  for (std::size_t i = w.first_index; i < traj.size(); ++i) {
    const auto rec = traj[i];
    const Vector v = phi(rec);
    if (sum.empty()) sum.assign(v.size(), 0.0);
    const double c = weights == ErgodicWeights::kUniform ? 1.0 : traj.config_echo().eta_x.at(rec.k);
    for (std::size_t j = 0; j < v.size(); ++j) sum[j] += c * v[j];
    total_weight += c;
  }
  for (double& s : sum) s /= total_weight;
  return {std::move(label), std::move(sum), w, weights};
}

inline RecordStatistic sample_identity() {
  return [](const TrajectoryRecord& r) { return Vector(r.x.begin(), r.x.end()); };
}

inline Vector ergodic_mean(const Trajectory& traj, double burn_in_fraction) {
  return ergodic_average(traj, sample_identity(), burn_in_fraction, ErgodicWeights::kUniform, "x")
      .ergodic_value;
}

struct FeasibilityReport {
  Vector ergodic_slack;
  /// Max of ergodic_slack; negative infinity when there are no inequalities.
  double max_slack = -std::numeric_limits<double>::infinity();
  Vector ergodic_equality;
  /// Fraction of kept samples outside the support (support problems only).
  std::optional<double> outside_fraction;
};

inline FeasibilityReport feasibility_report(const Trajectory& traj, const Problem& p,
                                            double burn_in_fraction) {
  const Window w = kept_window(traj, burn_in_fraction);
  FeasibilityReport rep;
  rep.ergodic_slack.assign(traj.num_ineq(), 0.0);
  rep.ergodic_equality.assign(traj.num_eq(), 0.0);
  std::size_t outside = 0;
  for (std::size_t i = w.first_index; i < traj.size(); ++i) {
    const auto rec = traj[i];
    for (std::size_t c = 0; c < rec.g_of_x.size(); ++c) rep.ergodic_slack[c] += rec.g_of_x[c];
    for (std::size_t c = 0; c < rec.h_of_x.size(); ++c) rep.ergodic_equality[c] += rec.h_of_x[c];
    if (!p.support.empty() && !p.in_support(rec.x)) ++outside;
  }
  const double n = static_cast<double>(w.count);
  for (double& s : rep.ergodic_slack) s /= n;
  for (double& s : rep.ergodic_equality) s /= n;
  for (double s : rep.ergodic_slack) rep.max_slack = std::max(rep.max_slack, s);
  if (!p.support.empty()) rep.outside_fraction = static_cast<double>(outside) / n;
  return rep;
}

/// Fraction of kept samples within `width` of the support boundary.
inline double boundary_fraction(const Trajectory& traj, const Problem& p, double width,
                                double burn_in_fraction) {
  if (!p.region) throw ConfigError("problem '" + p.label + "' has no support region");
  const Window w = kept_window(traj, burn_in_fraction);
  std::size_t near = 0;
  for (std::size_t i = w.first_index; i < traj.size(); ++i) {
    if (distance_to_boundary(*p.region, traj[i].x) <= width) ++near;
  }
  return static_cast<double>(near) / static_cast<double>(w.count);
}

/// KL between N(mean1, I) and N(mean2, I).
inline double gaussian_kl(std::span<const double> mean1, std::span<const double> mean2) {
  if (mean1.size() != mean2.size()) throw ConfigError("gaussian_kl: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < mean1.size(); ++i) {
    const double d = mean1[i] - mean2[i];
    s += d * d;
  }
  return 0.5 * s;
}

/// Empirical W2 between equally sized sorted samples (quantile coupling).
inline double w2_1d(std::span<const double> sorted_a, std::span<const double> sorted_b) {
  if (sorted_a.empty() || sorted_b.empty()) throw ConfigError("w2_1d: empty sample");
  if (sorted_a.size() != sorted_b.size()) {
    throw ConfigError("w2_1d: sample sizes differ; resample to a common size first");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < sorted_a.size(); ++i) {
    const double d = sorted_a[i] - sorted_b[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(sorted_a.size()));
}

/// Evenly spaced order statistics, so samples of different sizes can be
/// compared with w2_1d. Input must be sorted.
inline Vector quantile_subsample(std::span<const double> sorted, std::size_t n) {
  if (sorted.empty() || n == 0) throw ConfigError("quantile_subsample: empty input");
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const auto idx = static_cast<std::size_t>(u * static_cast<double>(sorted.size()));
    out[i] = sorted[std::min(idx, sorted.size() - 1)];
  }
  return out;
}

struct DualReadout {
  Vector final_lambda;
  Vector final_nu;
  Vector ergodic_lambda;
  Vector ergodic_nu;
  double activity_threshold = 0.0;
  std::vector<std::size_t> active_set;
  std::vector<std::string> notes;
};

/// Multiplier summary. `activity_threshold` defaults to
/// 1e-3 * max(1, max_i ergodic lambda_i). Since -lambda and -nu are
/// gradients of the optimal KL with respect to the constraint levels, the
/// notes translate each multiplier into that sensitivity.
inline DualReadout dual_readout(const Trajectory& traj, const Problem& p, double burn_in_fraction,
                                std::optional<double> activity_threshold = std::nullopt) {
  DualReadout out;
  const auto last = traj.back();
  out.final_lambda.assign(last.lambda.begin(), last.lambda.end());
  out.final_nu.assign(last.nu.begin(), last.nu.end());
  const std::size_t I = traj.num_ineq();
  auto stacked = ergodic_average(
      traj,
      [](const TrajectoryRecord& r) {
        Vector v(r.lambda.begin(), r.lambda.end());
        v.insert(v.end(), r.nu.begin(), r.nu.end());
        return v;
      },
      burn_in_fraction);
  Vector& duals = stacked.ergodic_value;
  if (duals.empty()) duals.assign(I + traj.num_eq(), 0.0);
  out.ergodic_lambda.assign(duals.begin(), duals.begin() + static_cast<std::ptrdiff_t>(I));
  out.ergodic_nu.assign(duals.begin() + static_cast<std::ptrdiff_t>(I), duals.end());

  double lambda_max = 0.0;
  for (double l : out.ergodic_lambda) lambda_max = std::max(lambda_max, l);
  out.activity_threshold = activity_threshold.value_or(1e-3 * std::max(1.0, lambda_max));

  auto name_of = [](const std::vector<DifferentiableField>& fields, std::size_t i,
                    const char* prefix) {
    return i < fields.size() && !fields[i].name.empty() ? fields[i].name
                                                        : prefix + std::to_string(i);
  };
  for (std::size_t i = 0; i < I; ++i) {
    std::ostringstream note;
    const std::string name = name_of(p.ineq, i, "g_");
    if (out.ergodic_lambda[i] > out.activity_threshold) {
      out.active_set.push_back(i);
      note << "inequality '" << name << "' is active (lambda = " << out.ergodic_lambda[i]
           << "): relaxing its bound by eps lowers the optimal KL by about "
           << out.ergodic_lambda[i] << " * eps";
    } else {
      note << "inequality '" << name << "' is inactive (lambda ~ 0): the reference model "
           << "already satisfies it and small changes to its bound leave the solution unchanged";
    }
    out.notes.push_back(note.str());
  }
  for (std::size_t j = 0; j < out.ergodic_nu.size(); ++j) {
    std::ostringstream note;
    const double nu = out.ergodic_nu[j];
    note << "equality '" << name_of(p.eq, j, "h_") << "' has nu = " << nu << ": ";
    if (std::abs(nu) <= out.activity_threshold) {
      note << "essentially free, the reference model is compatible with this condition";
    } else if (nu > 0.0) {
      note << "shifting E[h] upward by eps lowers the optimal KL by about " << nu << " * eps";
    } else {
      note << "shifting E[h] downward by eps lowers the optimal KL by about " << -nu << " * eps";
    }
    out.notes.push_back(note.str());
  }
  return out;
}

}  // namespace pdlmc
