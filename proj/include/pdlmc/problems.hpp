#pragma once

// Built-in constrained sampling problems and their ground-truth oracles.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pdlmc/core.hpp"
#include "pdlmc/labeled_table.hpp"
#include "pdlmc/random_stream.hpp"

namespace pdlmc {

// ---------------------------------------------------------------------------
// Truncated Gaussian: N(mean, I) restricted to an interval or a ball.

struct TruncatedGaussianSpec {
  Vector mean;
  Region region;
  /// Right-hand side padding: the constraint is E[[s(x)]_+] <= slack.
  double slack = 0.0;
};

inline DifferentiableField squared_distance_potential(Vector center, std::string name) {
  auto c = std::make_shared<const Vector>(std::move(center));
  DifferentiableField f;
  f.name = std::move(name);
  f.value = [c](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - (*c)[i];
      s += d * d;
    }
    return 0.5 * s;
  };
  f.gradient = [c](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - (*c)[i];
  };
  return f;
}

/// s(x) = (x - a)(x - b) for intervals, ||x - c||^2 - r^2 for balls.
inline DifferentiableField support_field(const Region& region) {
  DifferentiableField s;
  if (const auto* iv = std::get_if<Interval>(&region)) {
    const double a = iv->lower;
    const double b = iv->upper;
    s.name = "s_interval";
    s.value = [a, b](std::span<const double> x) { return (x[0] - a) * (x[0] - b); };
    s.gradient = [a, b](std::span<const double> x, std::span<double> out) {
      out[0] = 2.0 * x[0] - a - b;
    };
    return s;
  }
  const auto& ball = std::get<Ball>(region);
  auto c = std::make_shared<const Vector>(ball.center);
  const double r2 = ball.radius * ball.radius;
  s.name = "s_ball";
  s.value = [c, r2](std::span<const double> x) {
    double n2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - (*c)[i];
      n2 += d * d;
    }
    return n2 - r2;
  };
  s.gradient = [c](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = 2.0 * (x[i] - (*c)[i]);
  };
  return s;
}

inline Problem make_truncated_gaussian(const TruncatedGaussianSpec& spec) {
  if (spec.mean.empty() || !all_finite(spec.mean)) {
    throw ConfigError("truncated gaussian: mean must be a non-empty finite vector");
  }
  if (!(spec.slack >= 0.0)) throw ConfigError("truncated gaussian: slack must be >= 0");
  const std::size_t d = spec.mean.size();
  if (const auto* iv = std::get_if<Interval>(&spec.region)) {
    if (d != 1) throw ConfigError("truncated gaussian: interval regions need a 1-D mean");
    if (!(iv->lower < iv->upper)) {
      throw ConfigError("truncated gaussian: interval needs lower < upper");
    }
  } else {
    const auto& ball = std::get<Ball>(spec.region);
    if (ball.center.size() != d) {
      throw ConfigError("truncated gaussian: ball center and mean dimensions differ");
    }
    if (!(ball.radius > 0.0)) throw ConfigError("truncated gaussian: radius must be positive");
  }

  DifferentiableField s = support_field(spec.region);
  Problem p;
  p.dim = d;
  p.f = squared_distance_potential(spec.mean, "f");
  p.ineq.push_back(offset_field(hinge_constraint(s), -spec.slack, "support"));
  p.label = std::holds_alternative<Interval>(spec.region) ? "truncated_gaussian_interval"
                                                          : "truncated_gaussian_ball";
  p.gaussian_mean = spec.mean;
  p.support.push_back(std::move(s));
  p.region = spec.region;
  return p;
}

struct TruncatedMoments {
  Vector mean;
  /// Truncated-law mass within `boundary_width` of the boundary.
  double boundary_mass = 0.0;
  /// Untruncated-law mass of the region (the rejection acceptance rate).
  double region_mass = 0.0;
};

inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double standard_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

namespace detail {

inline TruncatedMoments interval_moments(double mu, double lower, double upper, double width) {
  const double a = lower - mu;
  const double b = upper - mu;
  const double z = standard_normal_cdf(b) - standard_normal_cdf(a);
  if (!(z > 0.0)) throw NumericError("truncated gaussian: interval has zero probability");
  TruncatedMoments m;
  m.mean = {mu + (standard_normal_pdf(a) - standard_normal_pdf(b)) / z};
  const double w = std::min(width, 0.5 * (b - a));
  m.boundary_mass = (standard_normal_cdf(a + w) - standard_normal_cdf(a) + standard_normal_cdf(b) -
                     standard_normal_cdf(b - w)) /
                    z;
  m.region_mass = z;
  return m;
}

/// Polar quadrature about the ball center of weight(r, theta) * density.
template <typename Weight>
double ball_integral(double cx, double cy, double mx, double my, double r_lo, double r_hi,
                     Weight weight) {
  using boost::math::quadrature::gauss_kronrod;
  constexpr double kTol = 1e-12;
  constexpr unsigned kDepth = 15;
  double worst = 0.0;
  auto radial = [&](double theta) {
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    auto integrand = [&](double r) {
      const double dx = cx + r * ct - mx;
      const double dy = cy + r * st - my;
      return weight(r, ct, st) * r * std::exp(-0.5 * (dx * dx + dy * dy)) /
             (2.0 * std::numbers::pi);
    };
    double err = 0.0;
    const double v = gauss_kronrod<double, 31>::integrate(integrand, r_lo, r_hi, kDepth, kTol,
                                                          &err);
    worst = std::max(worst, err);
    return v;
  };
  double err = 0.0;
  const double total = gauss_kronrod<double, 31>::integrate(radial, 0.0, 2.0 * std::numbers::pi,
                                                            kDepth, kTol, &err);
  // Inner errors are absolute; integrated over the angle they bound the total's error.
  const double rel = (2.0 * std::numbers::pi * worst + err) / std::max(std::abs(total), 1e-300);
  if (!std::isfinite(total) || rel > 1e-8) {
    throw NumericError("ball quadrature did not converge (relative error estimate " +
                       std::to_string(rel) + ")");
  }
  return total;
}

}  // namespace detail

/// Mean, boundary mass and region mass of the truncated law, in closed form
/// for intervals and by polar quadrature for 2-D balls.
inline TruncatedMoments truncated_moments_oracle(const TruncatedGaussianSpec& spec,
                                                 double boundary_width = 1e-3) {
  if (const auto* iv = std::get_if<Interval>(&spec.region)) {
    if (spec.mean.size() != 1) throw ConfigError("interval oracle needs a 1-D mean");
    return detail::interval_moments(spec.mean[0], iv->lower, iv->upper, boundary_width);
  }
  const auto& ball = std::get<Ball>(spec.region);
  if (spec.mean.size() == 1) {
    return detail::interval_moments(spec.mean[0], ball.center[0] - ball.radius,
                                    ball.center[0] + ball.radius, boundary_width);
  }
  if (spec.mean.size() != 2) {
    throw ConfigError("ball oracle supports dimensions 1 and 2 only");
  }
  const double cx = ball.center[0];
  const double cy = ball.center[1];
  const double mx = spec.mean[0];
  const double my = spec.mean[1];
  const double rad = ball.radius;
  const double mass = detail::ball_integral(cx, cy, mx, my, 0.0, rad,
                                            [](double, double, double) { return 1.0; });
  const double first = detail::ball_integral(
      cx, cy, mx, my, 0.0, rad, [cx](double r, double ct, double) { return cx + r * ct; });
  const double second = detail::ball_integral(
      cx, cy, mx, my, 0.0, rad, [cy](double r, double, double st) { return cy + r * st; });
  const double w = std::min(boundary_width, rad);
  const double rim = detail::ball_integral(cx, cy, mx, my, rad - w, rad,
                                           [](double, double, double) { return 1.0; });
  TruncatedMoments m;
  m.mean = {first / mass, second / mass};
  m.boundary_mass = rim / mass;
  m.region_mass = mass;
  return m;
}

// ---------------------------------------------------------------------------
// Gaussian with a linear moment constraint E[x] = b.

struct GaussianMomentSpec {
  Vector b;
};

inline Problem make_gaussian_moment(const GaussianMomentSpec& spec) {
  if (spec.b.empty() || !all_finite(spec.b)) {
    throw ConfigError("gaussian moment: b must be a non-empty finite vector");
  }
  const std::size_t d = spec.b.size();
  Problem p;
  p.dim = d;
  p.f = squared_distance_potential(Vector(d, 0.0), "f");
  for (std::size_t j = 0; j < d; ++j) {
    const double bj = spec.b[j];
    DifferentiableField h;
    h.name = "h_" + std::to_string(j);
    h.value = [bj, j](std::span<const double> x) { return bj - x[j]; };
    h.gradient = [j](std::span<const double>, std::span<double> out) {
      std::fill(out.begin(), out.end(), 0.0);
      out[j] = -1.0;
    };
    p.eq.push_back(std::move(h));
  }
  p.label = "gaussian_moment";
  p.gaussian_mean = Vector(d, 0.0);
  return p;
}

/// The dual function nu -> -||nu||^2/2 + nu'b, maximized at nu = b.
inline double gaussian_moment_dual(const GaussianMomentSpec& spec, std::span<const double> nu) {
  double v = 0.0;
  for (std::size_t j = 0; j < nu.size(); ++j) v += -0.5 * nu[j] * nu[j] + nu[j] * spec.b[j];
  return v;
}

// ---------------------------------------------------------------------------
// Bayesian logistic regression with group prevalence-parity constraints.

struct LogisticFairnessSpec {
  LabeledTable data;
  double prior_variance = 3.0;
  double delta = 0.01;
  /// Constrained groups; empty means one constraint per group in `data`.
  std::vector<GroupRows> groups;
};

inline double logistic(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

/// log(1 + e^t) without overflow.
inline double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

namespace detail {

inline double dot_row(const LabeledTable& t, std::size_t n, std::span<const double> theta) {
  const double* row = t.row(n);
  double s = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) s += row[i] * theta[i];
  return s;
}

}  // namespace detail

/// Average of q(x_n; theta) = logistic(x_n' theta) over `rows` (all rows if empty).
inline double mean_prevalence(const LabeledTable& t, std::span<const std::size_t> rows,
                              std::span<const double> theta) {
  double s = 0.0;
  if (rows.empty()) {
    for (std::size_t n = 0; n < t.num_rows(); ++n) s += logistic(detail::dot_row(t, n, theta));
    return s / static_cast<double>(t.num_rows());
  }
  for (std::size_t n : rows) s += logistic(detail::dot_row(t, n, theta));
  return s / static_cast<double>(rows.size());
}

namespace detail {

/// Predicted probabilities q_n = logistic(x_n' theta) for the most recent
/// theta, shared by f and every constraint of one fairness problem. The
/// cache is per thread so a Problem stays safe to share across chains.
class PrevalenceCache {
 public:
  explicit PrevalenceCache(std::shared_ptr<const LabeledTable> data)
      : data_(std::move(data)), id_(next_id()) {}

  const LabeledTable& data() const noexcept { return *data_; }

  std::span<const double> at(std::span<const double> theta) const {
    thread_local Slot slot;
    if (slot.id != id_ || !std::equal(theta.begin(), theta.end(), slot.theta.begin(),
                                      slot.theta.end())) {
      slot.id = id_;
      slot.theta.assign(theta.begin(), theta.end());
      slot.q.resize(data_->num_rows());
      for (std::size_t n = 0; n < data_->num_rows(); ++n) {
        slot.q[n] = logistic(dot_row(*data_, n, theta));
      }
    }
    return slot.q;
  }

 private:
  struct Slot {
    std::uint64_t id = 0;
    Vector theta;
    Vector q;
  };
  static std::uint64_t next_id() {
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
  }
  std::shared_ptr<const LabeledTable> data_;
  std::uint64_t id_;
};

}  // namespace detail

inline Problem make_logistic_fairness(const LogisticFairnessSpec& spec) {
  auto data = std::make_shared<const LabeledTable>(spec.data);
  if (data->num_rows() == 0) throw ConfigError("logistic fairness: dataset is empty");
  if (!(spec.prior_variance > 0.0)) {
    throw ConfigError("logistic fairness: prior_variance must be positive");
  }
  if (!(spec.delta > 0.0)) throw ConfigError("logistic fairness: delta must be positive");
  std::vector<GroupRows> groups = spec.groups.empty() ? data->groups() : spec.groups;
  for (const auto& g : groups) {
    if (g.rows.empty()) throw ConfigError("logistic fairness: group '" + g.name + "' is empty");
    for (std::size_t n : g.rows) {
      if (n >= data->num_rows()) {
        throw ConfigError("logistic fairness: group '" + g.name + "' indexes past the data");
      }
    }
  }
  const std::size_t d = data->num_cols();
  const double inv_var = 1.0 / spec.prior_variance;
  auto cache = std::make_shared<const detail::PrevalenceCache>(data);

  Problem p;
  p.dim = d;
  p.label = "logistic_fairness";
  p.f.name = "f_logistic_posterior";
  p.f.value = [data, inv_var](std::span<const double> theta) {
    double v = 0.0;
    for (std::size_t n = 0; n < data->num_rows(); ++n) {
      const double sign = data->labels[n] == 1 ? 1.0 : -1.0;
      v += softplus(-sign * detail::dot_row(*data, n, theta));
    }
    for (double t : theta) v += 0.5 * t * t * inv_var;
    return v;
  };
  p.f.gradient = [cache, inv_var](std::span<const double> theta, std::span<double> out) {
    const LabeledTable& t = cache->data();
    const auto q = cache->at(theta);
    for (std::size_t i = 0; i < theta.size(); ++i) out[i] = theta[i] * inv_var;
    for (std::size_t n = 0; n < t.num_rows(); ++n) {
      // d/dt softplus(-sign t) = q - y
      const double w = q[n] - static_cast<double>(t.labels[n]);
      const double* row = t.row(n);
      for (std::size_t i = 0; i < theta.size(); ++i) out[i] += w * row[i];
    }
  };

  const double inv_n = 1.0 / static_cast<double>(data->num_rows());
  for (const auto& group : groups) {
    // Per-row weight of q in  mean_all(q) - mean_group(q) - delta.
    auto weights = std::make_shared<Vector>(data->num_rows(), inv_n);
    const double inv_g = 1.0 / static_cast<double>(group.rows.size());
    for (std::size_t n : group.rows) (*weights)[n] -= inv_g;
    const double delta = spec.delta;
    DifferentiableField g;
    g.name = group.name;
    g.value = [cache, weights, delta](std::span<const double> theta) {
      const auto q = cache->at(theta);
      double v = 0.0;
      for (std::size_t n = 0; n < q.size(); ++n) v += (*weights)[n] * q[n];
      return v - delta;
    };
    g.gradient = [cache, weights](std::span<const double> theta, std::span<double> out) {
      const LabeledTable& t = cache->data();
      const auto q = cache->at(theta);
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t n = 0; n < t.num_rows(); ++n) {
        const double w = (*weights)[n] * q[n] * (1.0 - q[n]);
        const double* row = t.row(n);
        for (std::size_t i = 0; i < theta.size(); ++i) out[i] += w * row[i];
      }
    };
    p.ineq.push_back(std::move(g));
  }
  return p;
}

/// Adult-schema synthetic data: five features (feat_0 is the group
/// indicator), binary label, group in {male, female}. The generating model
/// gives a positive rate near 0.3 for male rows and 0.1 for female rows.
inline LabeledTable synthetic_adult(std::size_t rows = 2000, std::uint64_t seed = 20240601) {
  const NormalStream stream(seed, StreamDomain::kSynthesis);
  LabeledTable t;
  t.feature_names = {"feat_0", "feat_1", "feat_2", "feat_3", "feat_4"};
  t.group_names = {"male", "female"};
  Vector z(6);
  for (std::size_t n = 0; n < rows; ++n) {
    stream.normals(n, z);
    const auto [u_group, u_label] = stream.uniform_pair(n, 7);
    const bool male = u_group < 2.0 / 3.0;
    const double m = male ? 1.0 : 0.0;
    const double age = z[0] + 0.3 * m;
    const double education = z[1];
    const double hours = z[2] + 0.5 * m;
    const double other = z[3];
    const double logit = -2.6 + 1.3 * m + 0.7 * age + 0.8 * education + 0.4 * hours;
    const int label = u_label < logistic(logit) ? 1 : 0;
    t.append_row({m, age, education, hours, other}, label, male ? 0 : 1);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Bayesian market model over the mean log-return vector rho, with the
// per-asset variance fixed at its empirical value.

struct MarketSpec {
  std::vector<std::string> asset_names;
  /// returns[i] is the series of asset i.
  std::vector<Vector> returns;
  double prior_variance = 3.0;
  Vector target_means;
  std::optional<Vector> variance_caps;
};

struct MarketPosterior {
  Vector mean;
  Vector precision;
  Vector noise_variance;
};

/// Conjugate posterior of rho_i given N(rho_i, s_i^2) observations and a
/// N(0, prior_variance) prior, with s_i^2 the unbiased sample variance.
inline MarketPosterior market_posterior(const MarketSpec& spec) {
  if (spec.returns.empty()) throw ConfigError("market: no assets");
  if (!(spec.prior_variance > 0.0)) throw ConfigError("market: prior_variance must be positive");
  MarketPosterior post;
  for (std::size_t i = 0; i < spec.returns.size(); ++i) {
    const Vector& r = spec.returns[i];
    if (r.size() < 2) {
      throw ConfigError("market: asset " + std::to_string(i) + " needs at least 2 returns");
    }
    if (!all_finite(r)) throw ConfigError("market: asset " + std::to_string(i) + " has non-finite returns");
    const double n = static_cast<double>(r.size());
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : r) ss += (v - mean) * (v - mean);
    const double var = ss / (n - 1.0);
    if (!(var > 0.0)) {
      throw ConfigError("market: asset " + std::to_string(i) + " has a zero-variance series");
    }
    const double precision = n / var + 1.0 / spec.prior_variance;
    post.noise_variance.push_back(var);
    post.precision.push_back(precision);
    post.mean.push_back((n * mean / var) / precision);
  }
  return post;
}

/// Exact multipliers of the equality-constrained Gaussian posterior:
/// tilting by nu'(t - rho) shifts the mean by nu / precision.
inline Vector market_multipliers(const MarketSpec& spec) {
  const MarketPosterior post = market_posterior(spec);
  Vector nu(post.mean.size());
  for (std::size_t i = 0; i < nu.size(); ++i) {
    nu[i] = post.precision[i] * (spec.target_means[i] - post.mean[i]);
  }
  return nu;
}

inline Problem make_market(const MarketSpec& spec) {
  if (spec.variance_caps) {
    throw ConfigError(
        "market: variance caps are not representable, the model samples mean returns only "
        "with the covariance fixed at its empirical diagonal");
  }
  const MarketPosterior post = market_posterior(spec);
  const std::size_t assets = spec.returns.size();
  if (spec.target_means.size() != assets || !all_finite(spec.target_means)) {
    throw ConfigError("market: target_means must be finite with one entry per asset");
  }
  // f(rho) = sum_i [sum_t (r_ti - rho_i)^2 / (2 s_i^2) + rho_i^2 / (2 tau^2)], written via
  // per-asset sufficient statistics.
  struct Stats {
    Vector count, sum, sum_sq, inv_var;
    double inv_prior;
  };
  auto stats = std::make_shared<Stats>();
  stats->inv_prior = 1.0 / spec.prior_variance;
  for (std::size_t i = 0; i < assets; ++i) {
    const Vector& r = spec.returns[i];
    stats->count.push_back(static_cast<double>(r.size()));
    stats->sum.push_back(std::accumulate(r.begin(), r.end(), 0.0));
    stats->sum_sq.push_back(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
    stats->inv_var.push_back(1.0 / post.noise_variance[i]);
  }

  Problem p;
  p.dim = assets;
  p.label = "market";
  p.f.name = "f_market_posterior";
  p.f.value = [stats](std::span<const double> rho) {
    double v = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
      const double sq = stats->sum_sq[i] - 2.0 * rho[i] * stats->sum[i] +
                        stats->count[i] * rho[i] * rho[i];
      v += 0.5 * sq * stats->inv_var[i] + 0.5 * rho[i] * rho[i] * stats->inv_prior;
    }
    return v;
  };
  p.f.gradient = [stats](std::span<const double> rho, std::span<double> out) {
    for (std::size_t i = 0; i < rho.size(); ++i) {
      out[i] = (stats->count[i] * rho[i] - stats->sum[i]) * stats->inv_var[i] +
               rho[i] * stats->inv_prior;
    }
  };
  for (std::size_t i = 0; i < assets; ++i) {
    const double target = spec.target_means[i];
    DifferentiableField h;
    h.name = i < spec.asset_names.size() ? spec.asset_names[i] : "asset_" + std::to_string(i);
    h.value = [target, i](std::span<const double> rho) { return target - rho[i]; };
    h.gradient = [i](std::span<const double>, std::span<double> out) {
      std::fill(out.begin(), out.end(), 0.0);
      out[i] = -1.0;
    };
    p.eq.push_back(std::move(h));
  }
  return p;
}

/// Synthetic daily returns r_ti = mean_i + sd_i * z_ti. With
/// `common_shock` every asset reuses the same z_t (perfect correlation).
inline std::vector<Vector> synthetic_returns(std::span<const double> means,
                                             std::span<const double> sds, std::size_t length,
                                             bool common_shock, std::uint64_t seed) {
  const NormalStream stream(seed, StreamDomain::kSynthesis);
  std::vector<Vector> out(means.size(), Vector(length));
  Vector z(means.size());
  for (std::size_t t = 0; t < length; ++t) {
    stream.normals(t, z);
    for (std::size_t i = 0; i < means.size(); ++i) {
      out[i][t] = means[i] + sds[i] * (common_shock ? z[0] : z[i]);
    }
  }
  return out;
}

}  // namespace pdlmc
