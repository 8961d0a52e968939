#pragma once

// Tanh-sinh (double exponential) quadrature on a finite interval.
//
// The integrand receives the node together with its exact distances to both
// endpoints, so integrable endpoint singularities such as 1/sqrt(b - x) can be
// evaluated without the cancellation in b - x once x has rounded to b.

#include <cmath>
#include <cstddef>
#include <numbers>

namespace relaxor {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int levels = 0;
  std::size_t evaluations = 0;
};

struct QuadratureOptions {
  double rel_tol = 1e-13;
  double abs_tol = 1e-300;
  int max_levels = 9;  // step h = 2^-level
  double t_max = 5.8;  // nodes beyond this are closer to the ends than any double can attribute
};

/// Integrates f(x, x - a, b - x) over [a, b].
template <class F>
QuadratureResult tanh_sinh(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  QuadratureResult res;
  const double half = 0.5 * (b - a);
  if (half == 0.0) return res;
  const double length = b - a;
  constexpr double kHalfPi = 0.5 * std::numbers::pi;

  // contribution of the node pair at +-t
  auto pair_sum = [&](double t) {
    const double u = kHalfPi * std::sinh(t);
    const double cu = std::cosh(u);
    const double w = kHalfPi * std::cosh(t) / (cu * cu);
    const double delta = length / (std::exp(2.0 * u) + 1.0);  // distance of both nodes to their near end
    if (t == 0.0) {
      res.evaluations += 1;
      return w * f(a + half, half, half);
    }
    res.evaluations += 2;
    return w * (f(b - delta, length - delta, delta) + f(a + delta, delta, length - delta));
  };

  double h = 1.0;
  double sum = pair_sum(0.0);
  for (double t = h; t <= opt.t_max; t += h) sum += pair_sum(t);
  double estimate = half * h * sum;
  res.value = estimate;
  res.error_estimate = std::abs(estimate);

  for (int level = 1; level <= opt.max_levels; ++level) {
    h *= 0.5;
    double fresh = 0.0;
    for (double t = h; t <= opt.t_max; t += 2.0 * h) fresh += pair_sum(t);
    sum += fresh;
    const double next = half * h * sum;
    res.error_estimate = std::abs(next - estimate);
    res.value = next;
    res.levels = level;
    estimate = next;
    // the error roughly squares per level, so a small change already means convergence
    if (level >= 3 && (res.error_estimate <= opt.rel_tol * std::abs(next) || res.error_estimate <= opt.abs_tol)) break;
  }
  return res;
}

}  // namespace relaxor
