#include "relaxor/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "relaxor/error.hpp"

namespace relaxor {

namespace {

[[noreturn]] void domain_error(const std::string& msg) { throw Error(ErrorCode::ParameterDomain, msg); }

void check_unscaled(const UnscaledParams& u) {
  std::ostringstream os;
  if (!(u.r1 > 0.0) || !(u.r2 > 0.0)) {
    os << "growth rates must be positive (r1=" << u.r1 << ", r2=" << u.r2 << ")";
    domain_error(os.str());
  }
  if (!(u.r1 > u.r2)) {
    os << "prey trade-off requires r1 > r2 (r1=" << u.r1 << ", r2=" << u.r2 << ")";
    domain_error(os.str());
  }
  if (u.beta1 != 1.0 || u.beta2 != 1.0) {
    os << "predation rates must satisfy beta1 = beta2 = 1 (beta1=" << u.beta1 << ", beta2=" << u.beta2 << ")";
    domain_error(os.str());
  }
  if (!(u.e > 0.0) || !(u.m > 0.0) || !(u.V > 0.0)) {
    os << "e, m and V must be positive (e=" << u.e << ", m=" << u.m << ", V=" << u.V << ")";
    domain_error(os.str());
  }
  if (!(u.q2 >= 0.0 && u.q2 <= 1.0)) {
    os << "q2 must lie in [0, 1] (q2=" << u.q2 << ")";
    domain_error(os.str());
  }
  if (!(u.eps_raw >= 0.0)) {
    os << "eps_raw must be non-negative (eps_raw=" << u.eps_raw << ")";
    domain_error(os.str());
  }
  if (u.q2 == 0.0) throw Error(ErrorCode::SingularScaling, "q2 = 0 leaves the p2 scale undefined");
}

}  // namespace

void Params::validate() const {
  if (!(r > 0.0 && r < 1.0)) {
    std::ostringstream os;
    os << "r must lie in (0, 1), got " << r;
    domain_error(os.str());
  }
  if (!(m > 0.0) || !std::isfinite(m)) {
    std::ostringstream os;
    os << "m must be positive, got " << m;
    domain_error(os.str());
  }
}

const char* to_string(Manifold m) {
  switch (m) {
    case Manifold::M0: return "M0";
    case Manifold::M1: return "M1";
    case Manifold::Msw: return "Msw";
  }
  return "?";
}

ScalingMap::ScalingMap(const UnscaledParams& u) {
  check_unscaled(u);
  r1_ = u.r1;
  p1_scale_ = u.m / u.e;
  p2_scale_ = u.m / (u.e * u.q2);
  z_scale_ = u.r1;
  m_rescaled_ = u.m / u.r1;
  V_ = u.V;
}

State ScalingMap::to_rescaled(const State& s) const {
  return {s.p1 / p1_scale_, s.p2 / p2_scale_, s.z / z_scale_, s.q};
}

State ScalingMap::to_unscaled(const State& s) const {
  return {s.p1 * p1_scale_, s.p2 * p2_scale_, s.z * z_scale_, s.q};
}

StateDeriv ScalingMap::deriv_to_rescaled(const StateDeriv& d) const {
  // d/dt_rescaled = (1 / r1) d/dt_unscaled
  return {d.p1 / (p1_scale_ * r1_), d.p2 / (p2_scale_ * r1_), d.z / (z_scale_ * r1_), d.q / r1_};
}

Rescaled rescale(const UnscaledParams& u) {
  ScalingMap map(u);
  Params p{u.r2 / u.r1, u.m / u.r1};
  p.validate();
  return {p, map, map.eps_to_rescaled(u.eps_raw)};
}

StateDeriv unscaled_rhs(const State& s, const UnscaledParams& u) {
  check_unscaled(u);
  if (!(u.eps_raw > 0.0)) throw Error(ErrorCode::ParameterDomain, "unscaled_rhs needs eps_raw > 0");
  const double q = s.q;
  StateDeriv d;
  d.p1 = u.r1 * s.p1 - u.beta1 * q * s.p1 * s.z;
  d.p2 = u.r2 * s.p2 - u.beta2 * (1.0 - q) * s.p2 * s.z;
  d.z = u.e * q * u.beta1 * s.p1 * s.z + u.e * (1.0 - q) * u.q2 * u.beta2 * s.p2 * s.z - u.m * s.z;
  d.q = q * (1.0 - q) * u.V * u.e * (s.p1 - u.q2 * s.p2) / u.eps_raw;
  return d;
}

StateDeriv full_rhs(const State& s, const Params& p, double eps) {
  if (!(eps > 0.0)) {
    throw Error(ErrorCode::ParameterDomain, "full_rhs requires eps > 0; use slow_rhs / fast_heteroclinic for eps = 0");
  }
  const double q = s.q;
  StateDeriv d;
  d.p1 = (1.0 - q * s.z) * s.p1;
  d.p2 = (p.r - (1.0 - q) * s.z) * s.p2;
  d.z = (q * s.p1 + (1.0 - q) * s.p2 - 1.0) * p.m * s.z;
  d.q = q * (1.0 - q) * (s.p1 - s.p2) / eps;
  return d;
}

SlowPoint slow_rhs(const SlowPoint& s, const Params& p, Manifold man) {
  switch (man) {
    case Manifold::M0:
      return {s.p1, (p.r - s.z) * s.p2, (s.p2 - 1.0) * p.m * s.z};
    case Manifold::M1:
      return {(1.0 - s.z) * s.p1, p.r * s.p2, (s.p1 - 1.0) * p.m * s.z};
    case Manifold::Msw:
      break;
  }
  throw Error(ErrorCode::UnsupportedManifold, "slow flow is only defined on M0 and M1");
}

double fast_heteroclinic(double tau, double p1, double p2) {
  constexpr double kMaxExponent = 700.0;
  const double x = std::clamp((p1 - p2) * tau, -kMaxExponent, kMaxExponent);
  // e^x / (e^x + 1) written to stay finite for either sign
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double ex = std::exp(x);
  return ex / (ex + 1.0);
}

double conserved_quantity(Manifold man, const SlowPoint& s, const Params& p) {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  switch (man) {
    case Manifold::M0:
      if (!positive(s.p2) || !positive(s.z)) throw Error(ErrorCode::ParameterDomain, "H0 needs p2 > 0 and z > 0");
      return p.m * std::log(s.p2) - p.m * s.p2 + p.r * std::log(s.z) - s.z;
    case Manifold::M1:
      if (!positive(s.p1) || !positive(s.z)) throw Error(ErrorCode::ParameterDomain, "H1 needs p1 > 0 and z > 0");
      return p.m * std::log(s.p1) - p.m * s.p1 + std::log(s.z) - s.z;
    case Manifold::Msw:
      break;
  }
  throw Error(ErrorCode::UnsupportedManifold, "no conserved quantity on Msw");
}

State coexistence_equilibrium(const Params& p) {
  p.validate();
  return {1.0, 1.0, 1.0 + p.r, 1.0 / (1.0 + p.r)};
}

std::array<std::complex<double>, 4> characteristic_roots(const Params& p) {
  p.validate();
  const double b = (p.m + 2.0 * p.r + p.m * p.r * p.r) / (1.0 + p.r);
  const double c = p.m * p.r;
  // b^2 - 4c = (m^2 (1+r^2)^2 - 8 m r^2 + 4 r^2) / (1+r)^2 >= 0 for all admissible (r, m)
  const double disc = std::max(0.0, b * b - 4.0 * c);
  const double big = -0.5 * (b + std::sqrt(disc));  // most negative lambda^2
  const double small = c / big;                        // Vieta: product of lambda^2 is c
  const double w1 = std::sqrt(-small);
  const double w2 = std::sqrt(-big);
  using C = std::complex<double>;
  return {C(0.0, w1), C(0.0, -w1), C(0.0, w2), C(0.0, -w2)};
}

}  // namespace relaxor
