#include "relaxor/lambertw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "relaxor/error.hpp"

namespace relaxor {

namespace {

constexpr int kMaxIter = 60;

[[noreturn]] void domain_error(Branch b, double x) {
  std::ostringstream os;
  os.precision(17);
  os << "lambert_w: x = " << x << " outside the domain of branch " << to_string(b);
  throw Error(ErrorCode::LambertDomain, os.str());
}

// h(t) = -t - log(1 - t) = sum_{k>=2} t^k / k
double h_of_t(double t) {
  if (std::abs(t) < 0.1) {
    double term = t * t;
    double sum = 0.0;
    for (int k = 2; k < 24; ++k) {
      sum += term / k;
      term *= t;
    }
    return sum;
  }
  return -t - std::log1p(-t);
}

struct OffsetRoot {
  double y;  // -W
  double t;  // 1 + W
};

// Solve y - 1 - log(y) = s on y <= 1 (principal) or y >= 1 (lower).
OffsetRoot solve_offset(Branch b, double s) {
  if (s == 0.0) return {1.0, 0.0};

  if (b == Branch::Principal && s > 1.0) {
    // y small: with v = log y solve e^v - 1 - v = s
    double v = -1.0 - s;
    for (int i = 0; i < kMaxIter; ++i) {
      const double ev = std::exp(v);
      const double f = ev - 1.0 - v - s;
      const double step = f / (ev - 1.0);
      v -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(v))) break;
    }
    const double y = std::exp(v);
    return {y, -std::expm1(v)};
  }

  if (b == Branch::Lower && s > 1.0) {
    // y large: Halley on g(y) = y - 1 - log(y) - s
    double y = s + 1.0 + std::log(s + 1.0);
    for (int i = 0; i < kMaxIter; ++i) {
      const double f = y - 1.0 - std::log(y) - s;
      const double d1 = 1.0 - 1.0 / y;
      const double d2 = 1.0 / (y * y);
      const double step = f / d1 / (1.0 - f * d2 / (2.0 * d1 * d1));
      y -= step;
      if (std::abs(step) <= 1e-16 * y) break;
    }
    return {y, 1.0 - y};
  }

  // Near the branch point: Halley on h(t) = s seeded with the series
  // t = u - u^2/3 + u^3/36 + u^4/270, u = +-sqrt(2 s).
  const double u = (b == Branch::Principal ? 1.0 : -1.0) * std::sqrt(2.0 * s);
  double t = u + u * u * (-1.0 / 3.0 + u * (1.0 / 36.0 + u / 270.0));
  if (b == Branch::Principal) t = std::min(t, 1.0 - 1e-16);
  for (int i = 0; i < kMaxIter; ++i) {
    const double f = h_of_t(t) - s;
    const double d1 = t / (1.0 - t);
    const double d2 = 1.0 / ((1.0 - t) * (1.0 - t));
    if (d1 == 0.0) break;
    double step = f / d1 / (1.0 - f * d2 / (2.0 * d1 * d1));
    double next = t - step;
    if (b == Branch::Principal) {
      if (next >= 1.0) next = 0.5 * (t + 1.0);
      if (next <= 0.0) next = 0.5 * t;
    } else if (next >= 0.0) {
      next = 0.5 * t;
    }
    step = t - next;
    t = next;
    if (std::abs(step) <= 4e-16 * std::abs(t)) break;
  }
  return {1.0 - t, t};
}

double positive_w0(double x) {
  // Newton on w + log(w) = log(x), w > 0
  const double lx = std::log(x);
  double w;
  if (x <= 2.718281828459045) {
    const double l1 = std::log1p(x);
    w = l1 * (1.0 - std::log1p(l1) / (2.0 + l1));
  } else {
    const double l2 = std::log(lx);
    w = lx - l2 + l2 / lx;
  }
  if (!(w > 0.0)) w = x;
  for (int i = 0; i < kMaxIter; ++i) {
    const double f = w + std::log(w) - lx;
    const double step = f * w / (w + 1.0);
    double next = w - step;
    if (next <= 0.0) next = 0.5 * w;
    const double change = w - next;
    w = next;
    if (std::abs(change) <= 1e-16 * w) break;
  }
  return w;
}

}  // namespace

double log_gap(double y) {
  if (!(y > 0.0)) {
    std::ostringstream os;
    os << "log_gap: argument " << y << " must be positive";
    throw Error(ErrorCode::LambertDomain, os.str());
  }
  return h_of_t(1.0 - y);
}

const char* to_string(Branch b) { return b == Branch::Principal ? "W0" : "W-1"; }

double lambert_w_offset(Branch b, double s) {
  if (!(s >= 0.0) || std::isnan(s)) {
    std::ostringstream os;
    os << "lambert_w_offset: offset s = " << s << " must be non-negative";
    throw Error(ErrorCode::LambertDomain, os.str());
  }
  if (std::isinf(s)) return b == Branch::Principal ? -0.0 : -std::numeric_limits<double>::infinity();
  return -solve_offset(b, s).y;
}

double lambert_w_offset_plus_one(Branch b, double s) {
  if (!(s >= 0.0) || std::isnan(s)) {
    std::ostringstream os;
    os << "lambert_w_offset_plus_one: offset s = " << s << " must be non-negative";
    throw Error(ErrorCode::LambertDomain, os.str());
  }
  if (std::isinf(s)) return b == Branch::Principal ? 1.0 : -std::numeric_limits<double>::infinity();
  return solve_offset(b, s).t;
}

double lambert_w(Branch b, double x) {
  if (!std::isfinite(x)) domain_error(b, x);
  if (x >= 0.0) {
    if (b == Branch::Lower) domain_error(b, x);
    if (x == 0.0) return 0.0;
    return positive_w0(x);
  }
  double s = -1.0 - std::log(-x);
  if (s < 0.0) {
    // tolerate arguments that miss -1/e by rounding only
    if (s < -4.0 * std::numeric_limits<double>::epsilon()) domain_error(b, x);
    s = 0.0;
  }
  return lambert_w_offset(b, s);
}

}  // namespace relaxor
