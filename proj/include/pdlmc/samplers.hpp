#pragma once

// Langevin-type samplers sharing one logging and noise contract:
//   * x-update number n (counted across the whole run) consumes
//     NormalStream(seed).normals(n, ...); dual updates consume no noise;
//   * record k holds the sample whose g/h drive the k-th dual update,
//     the duals in force at that point, and g/h at that sample;
//   * the final state is always logged with k = iterations.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdlmc/core.hpp"
#include "pdlmc/random_stream.hpp"
#include "pdlmc/trajectory.hpp"

namespace pdlmc {

/// x - eta * grad + sqrt(2 eta) * noise, in place.
inline void lmc_step_inplace(std::span<double> x, std::span<const double> grad, double eta,
                             std::span<const double> noise) {
  const double scale = std::sqrt(2.0 * eta);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = x[i] - eta * grad[i] + scale * noise[i];
  if (!all_finite(x)) throw NumericError("Langevin step produced a non-finite sample");
}

inline Vector lmc_step(std::span<const double> x, std::span<const double> grad, double eta,
                       std::span<const double> noise) {
  if (!(eta > 0.0)) throw ConfigError("step size must be positive");
  if (grad.size() != x.size() || noise.size() != x.size()) {
    throw ConfigError("lmc_step: dimension mismatch");
  }
  Vector next(x.begin(), x.end());
  lmc_step_inplace(next, grad, eta, noise);
  return next;
}

/// Scratch buffers reused across iterations of one chain.
struct ChainWorkspace {
  Vector grad;
  Vector scratch;
  Vector noise;
  Vector g;
  Vector h;

  explicit ChainWorkspace(const Problem& p)
      : grad(p.dim), scratch(p.dim), noise(p.dim), g(p.num_ineq()), h(p.num_eq()) {}
};

namespace detail {

inline void check_start(const Problem& p, const SamplerConfig& cfg, std::span<const double> x0) {
  cfg.validate();
  if (x0.size() != p.dim) {
    throw ConfigError("x0 has dimension " + std::to_string(x0.size()) + ", problem '" +
                      p.label + "' expects " + std::to_string(p.dim));
  }
  if (!all_finite(x0)) throw ConfigError("x0 must be finite");
}

inline bool should_log(std::uint64_t k, const SamplerConfig& cfg) {
  return k % cfg.log_stride == 0;
}

inline std::size_t expected_records(const SamplerConfig& cfg) {
  return static_cast<std::size_t>(cfg.iterations / cfg.log_stride + 2);
}

/// One Langevin move of x on U(., dual) using x-update number `n`.
inline void langevin_move(const Problem& p, const DualState& dual, std::span<double> x,
                          double eta, const NormalStream& stream, std::uint64_t n,
                          ChainWorkspace& ws) {
  u_grad_into(p, x, dual, ws.grad, ws.scratch);
  stream.normals(n, ws.noise);
  lmc_step_inplace(x, ws.grad, eta, ws.noise);
}

inline void check_dual_cap(const DualState& dual, double cap) {
  for (std::size_t i = 0; i < dual.lambda.size(); ++i) {
    if (!(dual.lambda[i] >= 0.0)) {
      throw std::logic_error("lambda_" + std::to_string(i) + " is negative after projection");
    }
    if (dual.lambda[i] > cap) {
      throw NumericError("lambda_" + std::to_string(i) + " exceeded the dual cap " +
                         std::to_string(cap));
    }
  }
  for (std::size_t j = 0; j < dual.nu.size(); ++j) {
    if (!(std::abs(dual.nu[j]) <= cap)) {
      throw NumericError("nu_" + std::to_string(j) + " exceeded the dual cap " +
                         std::to_string(cap));
    }
  }
}

/// Rethrows numeric failures with the iteration attached.
template <typename Body>
void with_iteration_context(std::uint64_t k, Body&& body) {
  try {
    body();
  } catch (const NumericError& e) {
    if (e.iteration()) throw;
    throw NumericError(e.what(), k);
  }
}

inline void log_state(Trajectory& traj, const Problem& p, std::uint64_t k,
                      std::span<const double> x, const DualState& dual, ChainWorkspace& ws) {
  eval_fields(p.ineq, x, ws.g);
  eval_fields(p.eq, x, ws.h);
  traj.append(k, x, dual.lambda, dual.nu, ws.g, ws.h);
}

}  // namespace detail

/// One PD-LMC iteration on `state`: x moves on U at the current duals, then
/// lambda and nu ascend along g(x_k), h(x_k) at the pre-move sample. When
/// `log` is given, the pre-move state is appended on logging iterations.
inline void advance_pdlmc(const Problem& p, const SamplerConfig& cfg, ChainState& state,
                          ChainWorkspace& ws, Trajectory* log = nullptr) {
  const std::uint64_t k = state.k;
  detail::with_iteration_context(k, [&] {
    eval_fields(p.ineq, state.x, ws.g);
    eval_fields(p.eq, state.x, ws.h);
    if (log && detail::should_log(k, cfg)) {
      log->append(k, state.x, state.dual.lambda, state.dual.nu, ws.g, ws.h);
    }
    detail::langevin_move(p, state.dual, state.x, cfg.eta_x.at(k), state.stream, k, ws);
    const double eta_l = cfg.eta_lambda.at(k);
    for (std::size_t i = 0; i < ws.g.size(); ++i) state.dual.lambda[i] += eta_l * ws.g[i];
    project_nonneg_inplace(state.dual.lambda);
    const double eta_n = cfg.eta_nu.at(k);
    for (std::size_t j = 0; j < ws.h.size(); ++j) state.dual.nu[j] += eta_n * ws.h[j];
    detail::check_dual_cap(state.dual, cfg.dual_cap);
  });
  ++state.k;
}

/// Plain LMC on f; constraint fields are only evaluated for logging.
inline Trajectory run_lmc(const Problem& p, const SamplerConfig& cfg, std::span<const double> x0) {
  detail::check_start(p, cfg, x0);
  Trajectory traj(p.dim, p.num_ineq(), p.num_eq(), cfg, p.label);
  traj.reserve(detail::expected_records(cfg));
  const DualState dual = DualState::zeros(p);
  const DualState no_tilt{{}, {}};
  const Problem unconstrained{p.dim, p.f, {}, {}, p.label, {}, {}, {}};
  const NormalStream stream(cfg.seed);
  ChainWorkspace ws(p);
  Vector x(x0.begin(), x0.end());
  for (std::uint64_t k = 0; k < cfg.iterations; ++k) {
    detail::with_iteration_context(k, [&] {
      if (detail::should_log(k, cfg)) detail::log_state(traj, p, k, x, dual, ws);
      detail::langevin_move(unconstrained, no_tilt, x, cfg.eta_x.at(k), stream, k, ws);
    });
  }
  detail::with_iteration_context(cfg.iterations, [&] {
    detail::log_state(traj, p, cfg.iterations, x, dual, ws);
  });
  return traj;
}

/// Primal-dual LMC: simultaneous Langevin descent in x and projected
/// stochastic (sub)gradient ascent in (lambda, nu), starting from zero duals.
inline Trajectory run_pdlmc(const Problem& p, const SamplerConfig& cfg,
                            std::span<const double> x0) {
  detail::check_start(p, cfg, x0);
  Trajectory traj(p.dim, p.num_ineq(), p.num_eq(), cfg, p.label);
  traj.reserve(detail::expected_records(cfg));
  ChainState state{Vector(x0.begin(), x0.end()), DualState::zeros(p), 0, NormalStream(cfg.seed)};
  ChainWorkspace ws(p);
  while (state.k < cfg.iterations) advance_pdlmc(p, cfg, state, ws, &traj);
  detail::with_iteration_context(state.k, [&] {
    detail::log_state(traj, p, state.k, state.x, state.dual, ws);
  });
  return traj;
}

/// PD-LMC whose dual step averages g, h over `minibatch` consecutive
/// x-iterates. `iterations` counts dual updates, so the chain makes
/// iterations * minibatch Langevin moves in total. Record t logs the first
/// sample of block t.
inline Trajectory run_dual_ascent_minibatch(const Problem& p, const SamplerConfig& cfg,
                                            std::span<const double> x0) {
  detail::check_start(p, cfg, x0);
  Trajectory traj(p.dim, p.num_ineq(), p.num_eq(), cfg, p.label);
  traj.reserve(detail::expected_records(cfg));
  const NormalStream stream(cfg.seed);
  ChainWorkspace ws(p);
  Vector x(x0.begin(), x0.end());
  DualState dual = DualState::zeros(p);
  Vector g_sum(p.num_ineq());
  Vector h_sum(p.num_eq());
  const std::uint64_t batch = cfg.minibatch;
  std::uint64_t n = 0;
  for (std::uint64_t t = 0; t < cfg.iterations; ++t) {
    detail::with_iteration_context(t, [&] {
      for (std::uint64_t b = 0; b < batch; ++b, ++n) {
        eval_fields(p.ineq, x, ws.g);
        eval_fields(p.eq, x, ws.h);
        if (b == 0) {
          if (detail::should_log(t, cfg)) traj.append(t, x, dual.lambda, dual.nu, ws.g, ws.h);
          g_sum = ws.g;
          h_sum = ws.h;
        } else {
          for (std::size_t i = 0; i < g_sum.size(); ++i) g_sum[i] += ws.g[i];
          for (std::size_t j = 0; j < h_sum.size(); ++j) h_sum[j] += ws.h[j];
        }
        detail::langevin_move(p, dual, x, cfg.eta_x.at(n), stream, n, ws);
      }
      const double inv_batch = 1.0 / static_cast<double>(batch);
      const double eta_l = cfg.eta_lambda.at(t);
      for (std::size_t i = 0; i < g_sum.size(); ++i) {
        dual.lambda[i] += eta_l * (batch == 1 ? g_sum[i] : g_sum[i] * inv_batch);
      }
      project_nonneg_inplace(dual.lambda);
      const double eta_n = cfg.eta_nu.at(t);
      for (std::size_t j = 0; j < h_sum.size(); ++j) {
        dual.nu[j] += eta_n * (batch == 1 ? h_sum[j] : h_sum[j] * inv_batch);
      }
      detail::check_dual_cap(dual, cfg.dual_cap);
    });
  }
  detail::with_iteration_context(cfg.iterations, [&] {
    detail::log_state(traj, p, cfg.iterations, x, dual, ws);
  });
  return traj;
}

/// (Stochastic) dual LMC: each outer iteration runs `dlmc_inner` Langevin
/// moves with step `dlmc_gamma` at frozen lambda, then one projected ascent
/// step on lambda. The ascent uses g at the last sample the inner loop moved
/// from (see README). Inequality constraints only.
inline Trajectory run_dlmc(const Problem& p, const SamplerConfig& cfg,
                           std::span<const double> x0) {
  detail::check_start(p, cfg, x0);
  if (p.num_eq() > 0) {
    throw ConfigError("dlmc supports inequality constraints only; problem '" + p.label +
                      "' has " + std::to_string(p.num_eq()) + " equality constraint(s)");
  }
  Trajectory traj(p.dim, p.num_ineq(), 0, cfg, p.label);
  traj.reserve(detail::expected_records(cfg));
  const NormalStream stream(cfg.seed);
  ChainWorkspace ws(p);
  const Vector start(x0.begin(), x0.end());
  Vector x = start;
  DualState dual = DualState::zeros(p);
  const std::uint64_t inner = cfg.dlmc_inner;
  for (std::uint64_t k = 0; k < cfg.iterations; ++k) {
    detail::with_iteration_context(k, [&] {
      if (!cfg.dlmc_warm_start) x = start;
      for (std::uint64_t i = 0; i < inner; ++i) {
        if (i + 1 == inner) {
          eval_fields(p.ineq, x, ws.g);
          if (detail::should_log(k, cfg)) traj.append(k, x, dual.lambda, dual.nu, ws.g, ws.h);
        }
        detail::langevin_move(p, dual, x, cfg.dlmc_gamma, stream, k * inner + i, ws);
      }
      const double eta_l = cfg.eta_lambda.at(k);
      for (std::size_t i = 0; i < ws.g.size(); ++i) dual.lambda[i] += eta_l * ws.g[i];
      project_nonneg_inplace(dual.lambda);
      detail::check_dual_cap(dual, cfg.dual_cap);
    });
  }
  detail::with_iteration_context(cfg.iterations, [&] {
    detail::log_state(traj, p, cfg.iterations, x, dual, ws);
  });
  return traj;
}

using Projector = std::function<void(std::span<double>)>;

inline Projector region_projector(const Region& region) {
  return [region](std::span<double> x) { project_onto(region, x); };
}

/// LMC on f followed by a projection onto the support after every move.
inline Trajectory run_projected_lmc(const Problem& p, const SamplerConfig& cfg,
                                    std::span<const double> x0, const Projector& projector) {
  detail::check_start(p, cfg, x0);
  Trajectory traj(p.dim, p.num_ineq(), p.num_eq(), cfg, p.label);
  traj.reserve(detail::expected_records(cfg));
  const DualState dual = DualState::zeros(p);
  const DualState no_tilt{{}, {}};
  const Problem unconstrained{p.dim, p.f, {}, {}, p.label, {}, {}, {}};
  const NormalStream stream(cfg.seed);
  ChainWorkspace ws(p);
  Vector x(x0.begin(), x0.end());
  projector(x);
  auto check_inside = [&](std::uint64_t k) {
    for (const auto& s : p.support) {
      if (s(x) > 1e-9) {
        throw std::logic_error("projector left the support at iteration " + std::to_string(k) +
                               ": " + s.name + " = " + std::to_string(s(x)));
      }
    }
  };
  for (std::uint64_t k = 0; k < cfg.iterations; ++k) {
    detail::with_iteration_context(k, [&] {
      if (detail::should_log(k, cfg)) detail::log_state(traj, p, k, x, dual, ws);
      detail::langevin_move(unconstrained, no_tilt, x, cfg.eta_x.at(k), stream, k, ws);
      projector(x);
    });
    check_inside(k);
  }
  detail::with_iteration_context(cfg.iterations, [&] {
    detail::log_state(traj, p, cfg.iterations, x, dual, ws);
  });
  return traj;
}

inline Trajectory run_projected_lmc(const Problem& p, const SamplerConfig& cfg,
                                    std::span<const double> x0) {
  if (!p.region) {
    throw ConfigError("projected-lmc needs a problem with a support region; '" + p.label +
                      "' has none");
  }
  return run_projected_lmc(p, cfg, x0, region_projector(*p.region));
}

struct RejectionResult {
  std::vector<Vector> samples;
  double acceptance_rate = 0.0;
  std::uint64_t proposals = 0;
};

/// Exact draws from N(mean, I) restricted to the support, by proposing from
/// the untruncated Gaussian.
inline RejectionResult rejection_sample(const Problem& p, std::uint64_t n, std::uint64_t seed) {
  if (!p.gaussian_mean) {
    throw ConfigError("rejection sampling needs a unit-covariance Gaussian target; '" + p.label +
                      "' has none");
  }
  if (n == 0) throw ConfigError("rejection sampling needs n >= 1");
  constexpr std::uint64_t kCheckEvery = 10'000'000;
  constexpr double kMinRate = 1e-6;
  const NormalStream stream(seed, StreamDomain::kRejection);
  const Vector& mean = *p.gaussian_mean;
  RejectionResult out;
  out.samples.reserve(static_cast<std::size_t>(n));
  Vector z(p.dim);
  while (out.samples.size() < n) {
    stream.normals(out.proposals, z);
    ++out.proposals;
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += mean[i];
    if (p.in_support(z)) out.samples.push_back(z);
    if (out.proposals % kCheckEvery == 0 &&
        static_cast<double>(out.samples.size()) < kMinRate * static_cast<double>(out.proposals)) {
      throw NumericError("rejection sampler acceptance rate fell below 1e-6 after " +
                         std::to_string(out.proposals) + " proposals");
    }
  }
  out.acceptance_rate =
      static_cast<double>(out.samples.size()) / static_cast<double>(out.proposals);
  return out;
}

/// Wraps rejection draws in a Trajectory (zero duals) so diagnostics apply.
inline Trajectory rejection_trajectory(const Problem& p, const RejectionResult& draws,
                                       const SamplerConfig& cfg) {
  Trajectory traj(p.dim, p.num_ineq(), p.num_eq(), cfg, p.label);
  traj.reserve(draws.samples.size());
  const DualState dual = DualState::zeros(p);
  ChainWorkspace ws(p);
  for (std::size_t i = 0; i < draws.samples.size(); ++i) {
    detail::log_state(traj, p, i, draws.samples[i], dual, ws);
  }
  return traj;
}

}  // namespace pdlmc
