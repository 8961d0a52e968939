#pragma once

// Adaptive Dormand-Prince 5(4) integrator with 4th order dense output.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <vector>

#include "relaxor/error.hpp"

namespace relaxor {

template <std::size_t N>
using Vec = std::array<double, N>;

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0: choose automatically
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 50'000'000;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
  double t_final = 0.0;
  bool stopped = false;  // observer asked to stop before t_end
};

/// One accepted step with its continuous extension.
template <std::size_t N>
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  Vec<N> y0{};
  Vec<N> y1{};
  std::array<Vec<N>, 5> r{};

  double t1() const { return t0 + h; }

  Vec<N> at(double t) const {
    const double th = h == 0.0 ? 0.0 : (t - t0) / h;
    const double th1 = 1.0 - th;
    Vec<N> y;
    for (std::size_t i = 0; i < N; ++i) {
      y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
    }
    return y;
  }

  double component_at(std::size_t i, double t) const {
    const double th = h == 0.0 ? 0.0 : (t - t0) / h;
    const double th1 = 1.0 - th;
    return r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
  }
};

namespace detail {

template <std::size_t N>
double error_norm(const Vec<N>& err, const Vec<N>& y0, const Vec<N>& y1, const OdeOptions& o) {
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double sc = o.atol + o.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double e = err[i] / sc;
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(N));
}

template <std::size_t N>
bool all_finite(const Vec<N>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace detail

/// Integrates y' = rhs(t, y) from t0 to t_end (t_end > t0).
/// observer(const DenseStep<N>&) is called after every accepted step; returning false stops.
/// Throws Stiffness when the step size underflows.
template <std::size_t N, class Rhs, class Observer>
OdeStats integrate_dp5(Rhs&& rhs, double t0, Vec<N> y, double t_end, const OdeOptions& opt, Observer&& observer) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                   d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                   d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

  OdeStats stats;
  stats.t_final = t0;
  if (!(t_end > t0)) return stats;

  auto eval = [&](double t, const Vec<N>& x) {
    ++stats.evaluations;
    return rhs(t, x);
  };

  Vec<N> k1 = eval(t0, y);
  double h = opt.initial_step;
  if (!(h > 0.0)) {
    // Hairer's starting step heuristic
    double dn = 0.0, fn = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = opt.atol + opt.rtol * std::abs(y[i]);
      dn += (y[i] / sc) * (y[i] / sc);
      fn += (k1[i] / sc) * (k1[i] / sc);
    }
    dn = std::sqrt(dn / N);
    fn = std::sqrt(fn / N);
    double h0 = (dn < 1e-5 || fn < 1e-5) ? 1e-6 : 0.01 * dn / fn;
    h0 = std::min(h0, t_end - t0);
    Vec<N> y1;
    for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + h0 * k1[i];
    const Vec<N> f1 = eval(t0 + h0, y1);
    double d2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = opt.atol + opt.rtol * std::abs(y[i]);
      d2 += ((f1[i] - k1[i]) / sc) * ((f1[i] - k1[i]) / sc);
    }
    d2 = std::sqrt(d2 / N) / h0;
    const double big = std::max(fn, d2);
    const double h1 = big <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / big, 0.2);
    h = std::min(100.0 * h0, h1);
  }
  h = std::min({h, opt.max_step, t_end - t0});

  double t = t0;
  DenseStep<N> step;
  Vec<N> k2, k3, k4, k5, k6, k7, ys, ynew, err;
  while (t < t_end) {
    if (stats.accepted + stats.rejected >= opt.max_steps) {
      throw Error(ErrorCode::Stiffness, "integrator exceeded the step budget");
    }
    const double min_step = 1e-14 * std::max(1.0, std::abs(t));
    if (h < min_step) {
      std::ostringstream os;
      os.precision(10);
      os << "step size underflow at t = " << t << " (h = " << h << ")";
      throw Error(ErrorCode::Stiffness, os.str());
    }
    bool last = false;
    if (t + h >= t_end || t + 1.01 * h >= t_end) {
      h = t_end - t;
      last = true;
    }

    for (std::size_t i = 0; i < N; ++i) ys[i] = y[i] + h * a21 * k1[i];
    k2 = eval(t + c2 * h, ys);
    for (std::size_t i = 0; i < N; ++i) ys[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    k3 = eval(t + c3 * h, ys);
    for (std::size_t i = 0; i < N; ++i) ys[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = eval(t + c4 * h, ys);
    for (std::size_t i = 0; i < N; ++i) {
      ys[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    }
    k5 = eval(t + c5 * h, ys);
    for (std::size_t i = 0; i < N; ++i) {
      ys[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    }
    k6 = eval(t + h, ys);
    for (std::size_t i = 0; i < N; ++i) {
      ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    }
    k7 = eval(t + h, ynew);
    for (std::size_t i = 0; i < N; ++i) {
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    }

    double en = detail::error_norm(err, y, ynew, opt);
    if (!std::isfinite(en) || !detail::all_finite(ynew)) en = std::numeric_limits<double>::infinity();

    if (en <= 1.0) {
      step.t0 = t;
      step.h = h;
      step.y0 = y;
      step.y1 = ynew;
      for (std::size_t i = 0; i < N; ++i) {
        const double ydiff = ynew[i] - y[i];
        const double bspl = h * k1[i] - ydiff;
        step.r[0][i] = y[i];
        step.r[1][i] = ydiff;
        step.r[2][i] = bspl;
        step.r[3][i] = ydiff - h * k7[i] - bspl;
        step.r[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      ++stats.accepted;
      t = last ? t_end : t + h;
      y = ynew;
      k1 = k7;
      stats.t_final = t;
      if (!observer(static_cast<const DenseStep<N>&>(step))) {
        stats.stopped = true;
        return stats;
      }
      const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      h = std::min(h * fac, opt.max_step);
    } else {
      ++stats.rejected;
      const double fac = std::isfinite(en) ? std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9) : 0.25;
      h *= fac;
    }
  }
  return stats;
}

/// Integrates from t0 and returns the state at each of the sorted `times` (all >= t0).
template <std::size_t N, class Rhs>
std::vector<Vec<N>> integrate_sampled(Rhs&& rhs, double t0, const Vec<N>& y0, const std::vector<double>& times,
                                      const OdeOptions& opt, OdeStats* stats_out = nullptr) {
  std::vector<Vec<N>> out;
  out.reserve(times.size());
  std::size_t next = 0;
  while (next < times.size() && times[next] <= t0) {
    out.push_back(y0);
    ++next;
  }
  if (next == times.size()) return out;
  Vec<N> last = y0;
  const OdeStats st = integrate_dp5<N>(
      rhs, t0, y0, times.back(), opt, [&](const DenseStep<N>& step) {
        while (next < times.size() && times[next] <= step.t1()) out.push_back(step.at(times[next++]));
        last = step.y1;
        return true;
      });
  while (out.size() < times.size()) out.push_back(last);
  if (stats_out) *stats_out = st;
  return out;
}

}  // namespace relaxor
