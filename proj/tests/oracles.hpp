#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Each one reaches its answer by a different route than the library: plain
// bisection instead of Lambert W, event-stopped integration instead of
// quadrature, finite differences instead of closed forms.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "relaxor/model.hpp"
#include "relaxor/ode.hpp"
#include "relaxor/singular_orbit.hpp"

namespace oracle {

/// Root of f on [a, b] by bisection; f(a) and f(b) must differ in sign.
inline double bisect(const std::function<double(double)>& f, double a, double b, int iterations = 200) {
  double fa = f(a);
  const double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa < 0.0) == (fb < 0.0)) throw std::invalid_argument("bisect: no sign change");
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (a + b);
    if (mid == a || mid == b) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

/// w with w e^w = x on the requested side of -1 (upper: w >= -1).
inline double lambert_w_bisect(double x, bool upper) {
  auto f = [x](double w) { return w * std::exp(w) - x; };
  if (upper) {
    double hi = 1.0;
    while (f(hi) < 0.0) hi *= 2.0;
    return bisect(f, -1.0, hi);
  }
  double lo = -2.0;
  while (f(lo) < 0.0) lo *= 2.0;  // w e^w rises towards 0 from below as w -> -inf
  return bisect(f, lo, -1.0);
}

/// Level function of the Lotka-Volterra pair (p, z) on M1 (c = 1) or M0 (c = r).
inline double lv_level(relaxor::Manifold man, double p, double z, const relaxor::Params& prm) {
  using relaxor::Manifold;
  relaxor::SlowPoint s = man == Manifold::M1 ? relaxor::SlowPoint{p, 1.0, z} : relaxor::SlowPoint{1.0, p, z};
  return relaxor::conserved_quantity(man, s, prm);
}

/// z on the level set through `a` at abscissa p: upper (z above the centre) or lower half.
inline double lv_z_bisect(relaxor::Manifold man, double p, relaxor::Anchor a, bool upper, const relaxor::Params& prm) {
  const double c = man == relaxor::Manifold::M1 ? 1.0 : prm.r;
  const double target = lv_level(man, a.p, a.z, prm);
  auto f = [&](double z) { return lv_level(man, p, z, prm) - target; };
  if (upper) {
    double hi = 2.0 * c;
    while (f(hi) > 0.0) hi *= 2.0;
    return bisect(f, c, hi);
  }
  double lo = 0.5 * c;
  while (f(lo) > 0.0) lo *= 0.5;
  return bisect(f, lo, c);
}

/// Slow time from `start` to the first arrival at `end` on the Lotka-Volterra
/// cycle through both, found by integrating the slow flow and stopping when
/// the polar angle about the centre (in log coordinates) reaches that of `end`.
inline double travel_time_events(relaxor::Manifold man, relaxor::Anchor start, relaxor::Anchor end,
                                 const relaxor::Params& prm) {
  using relaxor::Vec;
  const double c = man == relaxor::Manifold::M1 ? 1.0 : prm.r;
  auto angle = [c](double p, double z) { return std::atan2(std::log(z / c), std::log(p)); };
  // counterclockwise in (log p, log z/c): the angle increases
  double target = angle(end.p, end.z) - angle(start.p, start.z);
  while (target <= 0.0) target += 2.0 * std::numbers::pi;
  while (target > 2.0 * std::numbers::pi) target -= 2.0 * std::numbers::pi;

  auto rhs = [&](double, const Vec<2>& y) { return Vec<2>{(c - y[1]) * y[0], (y[0] - 1.0) * prm.m * y[1]}; };
  relaxor::OdeOptions o;
  o.rtol = 1e-12;
  o.atol = 1e-14;
  double swept = 0.0;
  double prev = angle(start.p, start.z);
  double result = -1.0;
  relaxor::integrate_dp5<2>(rhs, 0.0, Vec<2>{start.p, start.z}, 1e6, o, [&](const relaxor::DenseStep<2>& st) {
    double a1 = angle(st.y1[0], st.y1[1]);
    double d = a1 - prev;
    if (d < -std::numbers::pi) d += 2.0 * std::numbers::pi;
    if (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
    if (swept + d < target) {
      swept += d;
      prev = a1;
      return true;
    }
    // refine inside the step on the continuous extension
    const double base = swept, a0 = prev;
    auto g = [&](double t) {
      const auto y = st.at(t);
      double dd = angle(y[0], y[1]) - a0;
      if (dd < -std::numbers::pi) dd += 2.0 * std::numbers::pi;
      if (dd > std::numbers::pi) dd -= 2.0 * std::numbers::pi;
      return base + dd - target;
    };
    result = bisect(g, st.t0, st.t1());
    return false;
  });
  if (result < 0.0) throw std::runtime_error("travel_time_events: end point never reached");
  return result;
}

/// Jacobian of full_rhs by central differences.
inline std::array<std::array<double, 4>, 4> jacobian_fd(const relaxor::State& s, const relaxor::Params& prm,
                                                        double eps, double h = 1e-6) {
  std::array<std::array<double, 4>, 4> J{};
  auto as_array = [](const relaxor::State& x) { return std::array<double, 4>{x.p1, x.p2, x.z, x.q}; };
  auto from_array = [](const std::array<double, 4>& a) { return relaxor::State{a[0], a[1], a[2], a[3]}; };
  const auto x0 = as_array(s);
  for (int k = 0; k < 4; ++k) {
    auto xp = x0, xm = x0;
    xp[k] += h;
    xm[k] -= h;
    const auto fp = as_array(relaxor::full_rhs(from_array(xp), prm, eps));
    const auto fm = as_array(relaxor::full_rhs(from_array(xm), prm, eps));
    for (int i = 0; i < 4; ++i) J[i][k] = (fp[i] - fm[i]) / (2.0 * h);
  }
  return J;
}

/// det(J - lambda I) for a 4x4 real matrix and complex lambda (Laplace / elimination).
inline std::complex<double> char_poly(const std::array<std::array<double, 4>, 4>& J, std::complex<double> lambda) {
  std::array<std::array<std::complex<double>, 4>, 4> a{};
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) a[i][k] = J[i][k] - (i == k ? lambda : 0.0);
  std::complex<double> det = 1.0;
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) == 0.0) return 0.0;
    if (piv != col) {
      std::swap(a[piv], a[col]);
      det = -det;
    }
    det *= a[col][col];
    for (int r = col + 1; r < 4; ++r) {
      const auto f = a[r][col] / a[col][col];
      for (int k = col; k < 4; ++k) a[r][k] -= f * a[col][k];
    }
  }
  return det;
}

}  // namespace oracle
