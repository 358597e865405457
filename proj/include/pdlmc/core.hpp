#pragma once

// Problem description for constrained sampling: a potential f, inequality
// fields g (E[g] <= 0) and equality fields h (E[h] = 0), together with the
// tilted potential U(x, lambda, nu) = f(x) + lambda'g(x) + nu'h(x).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pdlmc/errors.hpp"
#include "pdlmc/random_stream.hpp"

namespace pdlmc {

using Vector = std::vector<double>;

inline bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
}

/// A scalar field on R^d with an analytic (sub)gradient.
struct DifferentiableField {
  using ValueFn = std::function<double(std::span<const double>)>;
  /// Writes the gradient into `out` (size d), overwriting it.
  using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;

  std::string name;
  ValueFn value;
  GradientFn gradient;

  double operator()(std::span<const double> x) const { return value(x); }

  Vector grad(std::span<const double> x) const {
    Vector out(x.size());
    gradient(x, out);
    return out;
  }
};

struct Interval {
  double lower;
  double upper;
};

struct Ball {
  Vector center;
  double radius;
};

/// Convex support set for support-constrained problems.
using Region = std::variant<Interval, Ball>;

/// Euclidean projection onto the region, in place.
inline void project_onto(const Region& region, std::span<double> x) {
  if (const auto* iv = std::get_if<Interval>(&region)) {
    x[0] = std::clamp(x[0], iv->lower, iv->upper);
    return;
  }
  const auto& ball = std::get<Ball>(region);
  double norm2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - ball.center[i];
    norm2 += d * d;
  }
  const double norm = std::sqrt(norm2);
  if (norm <= ball.radius) return;
  // Shrink the scale until rounding leaves the point inside the closed ball.
  const Vector offset = [&] {
    Vector d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - ball.center[i];
    return d;
  }();
  for (double scale = ball.radius / norm;; scale = std::nextafter(scale, 0.0)) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = ball.center[i] + scale * offset[i];
      const double d = x[i] - ball.center[i];
      r2 += d * d;
    }
    if (r2 <= ball.radius * ball.radius) return;
  }
}

/// Distance from a point to the boundary of the region.
inline double distance_to_boundary(const Region& region, std::span<const double> x) {
  if (const auto* iv = std::get_if<Interval>(&region)) {
    return std::min(std::abs(x[0] - iv->lower), std::abs(x[0] - iv->upper));
  }
  const auto& ball = std::get<Ball>(region);
  double norm2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - ball.center[i];
    norm2 += d * d;
  }
  return std::abs(std::sqrt(norm2) - ball.radius);
}

struct Problem {
  std::size_t dim = 0;
  DifferentiableField f;
  std::vector<DifferentiableField> ineq;
  std::vector<DifferentiableField> eq;
  std::string label;

  /// Mean of the target when it is N(mean, I); enables rejection sampling.
  std::optional<Vector> gaussian_mean;
  /// Raw support fields s_i; x lies in the support iff s_i(x) <= 0 for all i.
  std::vector<DifferentiableField> support;
  std::optional<Region> region;

  std::size_t num_ineq() const noexcept { return ineq.size(); }
  std::size_t num_eq() const noexcept { return eq.size(); }

  bool in_support(std::span<const double> x) const {
    return std::all_of(support.begin(), support.end(),
                       [&](const DifferentiableField& s) { return s(x) <= 0.0; });
  }
};

struct DualState {
  Vector lambda;
  Vector nu;

  static DualState zeros(const Problem& p) {
    return {Vector(p.num_ineq(), 0.0), Vector(p.num_eq(), 0.0)};
  }
};

/// Loop variables of one chain. The noise for step k is
/// `stream.normals(k, ...)`, so (x, dual, k, stream) fully determines the
/// successor state.
struct ChainState {
  Vector x;
  DualState dual;
  std::uint64_t k = 0;
  NormalStream stream{0};
};

namespace detail {

inline void check_dims(const Problem& p, std::span<const double> x, const DualState& d) {
  if (x.size() != p.dim) {
    throw ConfigError("point has dimension " + std::to_string(x.size()) + ", problem '" +
                      p.label + "' expects " + std::to_string(p.dim));
  }
  if (d.lambda.size() != p.num_ineq() || d.nu.size() != p.num_eq()) {
    throw ConfigError("dual state sizes (" + std::to_string(d.lambda.size()) + ", " +
                      std::to_string(d.nu.size()) + ") do not match problem '" + p.label +
                      "' constraints (" + std::to_string(p.num_ineq()) + ", " +
                      std::to_string(p.num_eq()) + ")");
  }
}

inline double checked_value(const DifferentiableField& field, std::span<const double> x) {
  const double v = field(x);
  if (!std::isfinite(v)) {
    throw NumericError("field '" + field.name + "' returned a non-finite value");
  }
  return v;
}

inline void checked_gradient(const DifferentiableField& field, std::span<const double> x,
                             std::span<double> out) {
  field.gradient(x, out);
  if (!all_finite(out)) {
    throw NumericError("field '" + field.name + "' returned a non-finite gradient");
  }
}

}  // namespace detail

/// Evaluates g(x) into `out` (size I).
inline void eval_fields(std::span<const DifferentiableField> fields, std::span<const double> x,
                        std::span<double> out) {
  for (std::size_t i = 0; i < fields.size(); ++i) out[i] = detail::checked_value(fields[i], x);
}

inline double u_value(const Problem& p, std::span<const double> x, const DualState& d) {
  detail::check_dims(p, x, d);
  double u = detail::checked_value(p.f, x);
  for (std::size_t i = 0; i < p.ineq.size(); ++i) {
    u += d.lambda[i] * detail::checked_value(p.ineq[i], x);
  }
  for (std::size_t j = 0; j < p.eq.size(); ++j) {
    u += d.nu[j] * detail::checked_value(p.eq[j], x);
  }
  return u;
}

/// Gradient of U in x, written into `out`. `scratch` must have size d.
/// Accumulation order is f, then g_1..g_I, then h_1..h_J; with no
/// constraints the result is exactly grad f.
inline void u_grad_into(const Problem& p, std::span<const double> x, const DualState& d,
                        std::span<double> out, std::span<double> scratch) {
  detail::checked_gradient(p.f, x, out);
  auto accumulate = [&](const DifferentiableField& field, double weight) {
    if (weight == 0.0) return;
    detail::checked_gradient(field, x, scratch);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += weight * scratch[i];
  };
  for (std::size_t i = 0; i < p.ineq.size(); ++i) accumulate(p.ineq[i], d.lambda[i]);
  for (std::size_t j = 0; j < p.eq.size(); ++j) accumulate(p.eq[j], d.nu[j]);
}

inline Vector u_grad(const Problem& p, std::span<const double> x, const DualState& d) {
  detail::check_dims(p, x, d);
  Vector out(x.size());
  Vector scratch(x.size());
  u_grad_into(p, x, d, out, scratch);
  return out;
}

inline void project_nonneg_inplace(std::span<double> v) noexcept {
  for (double& e : v) e = e > 0.0 ? e : 0.0;
}

inline Vector project_nonneg(Vector v) {
  project_nonneg_inplace(v);
  return v;
}

/// x -> max(s(x), 0) with subgradient 1(s(x) > 0) grad s(x). The selection
/// at the kink s(x) = 0 is the zero vector.
inline DifferentiableField hinge_constraint(DifferentiableField s) {
  auto shared = std::make_shared<const DifferentiableField>(std::move(s));
  DifferentiableField hinge;
  hinge.name = "hinge(" + shared->name + ")";
  hinge.value = [shared](std::span<const double> x) { return std::max((*shared)(x), 0.0); };
  hinge.gradient = [shared](std::span<const double> x, std::span<double> out) {
    if ((*shared)(x) > 0.0) {
      shared->gradient(x, out);
    } else {
      std::fill(out.begin(), out.end(), 0.0);
    }
  };
  return hinge;
}

/// Shifts a field by a constant: x -> field(x) + offset.
inline DifferentiableField offset_field(DifferentiableField field, double offset,
                                        std::string name) {
  auto shared = std::make_shared<const DifferentiableField>(std::move(field));
  DifferentiableField shifted;
  shifted.name = std::move(name);
  shifted.value = [shared, offset](std::span<const double> x) { return (*shared)(x) + offset; };
  shifted.gradient = [shared](std::span<const double> x, std::span<double> out) {
    shared->gradient(x, out);
  };
  return shifted;
}

/// Central differences, one coordinate at a time.
inline Vector finite_diff_grad(const DifferentiableField& field, std::span<const double> x,
                               double step) {
  if (!(step > 0.0)) throw ConfigError("finite difference step must be positive");
  Vector probe(x.begin(), x.end());
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double up = field(probe);
    probe[i] = x[i] - step;
    const double down = field(probe);
    probe[i] = x[i];
    out[i] = (up - down) / (2.0 * step);
  }
  return out;
}

}  // namespace pdlmc
