#pragma once

// Predator / two-prey system with a fast predator diet trait q.
//
// Rescaled form (all downstream work happens here):
//   p1' = (1 - q z) p1
//   p2' = (r - (1 - q) z) p2
//   z'  = (q p1 + (1 - q) p2 - 1) m z
//   eps q' = q (1 - q) (p1 - p2)

#include <array>
#include <complex>

namespace relaxor {

/// Parameters of the unscaled model. beta1 and beta2 must both equal 1.
struct UnscaledParams {
  double r1 = 1.0;
  double r2 = 0.5;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double e = 1.0;
  double q2 = 1.0;
  double m = 0.4;
  double V = 1.0;
  double eps_raw = 0.0;
};

struct Params {
  double r = 0.5;
  double m = 0.4;

  /// Throws ParameterDomain unless 0 < r < 1 and m > 0.
  void validate() const;
};

struct State {
  double p1 = 0.0;
  double p2 = 0.0;
  double z = 0.0;
  double q = 0.0;
};

/// Time derivative of a State; same layout.
using StateDeriv = State;

/// Slow coordinates (p1, p2, z). Also used for their derivatives.
struct SlowPoint {
  double p1 = 0.0;
  double p2 = 0.0;
  double z = 0.0;
};

enum class Manifold { M0, M1, Msw };

const char* to_string(Manifold m);

/// Coordinate map between the unscaled and the rescaled model.
class ScalingMap {
 public:
  explicit ScalingMap(const UnscaledParams& u);

  State to_rescaled(const State& unscaled) const;
  State to_unscaled(const State& rescaled) const;
  double time_to_rescaled(double t_unscaled) const { return t_unscaled * r1_; }
  double time_to_unscaled(double t_rescaled) const { return t_rescaled / r1_; }
  double eps_to_rescaled(double eps_raw) const { return eps_raw / (m_rescaled_ * V_); }
  double eps_to_unscaled(double eps) const { return eps * m_rescaled_ * V_; }

  /// Rescaled derivative from an unscaled one at the matching point (chain rule).
  StateDeriv deriv_to_rescaled(const StateDeriv& unscaled) const;

 private:
  double r1_;
  double p1_scale_;
  double p2_scale_;
  double z_scale_;
  double m_rescaled_;
  double V_;
};

struct Rescaled {
  Params params;
  ScalingMap map;
  double eps = 0.0;
};

Rescaled rescale(const UnscaledParams& u);

/// Right-hand side of the unscaled model (beta1 = beta2 = 1).
StateDeriv unscaled_rhs(const State& s, const UnscaledParams& u);

/// Right-hand side of the rescaled model; eps must be positive.
StateDeriv full_rhs(const State& s, const Params& p, double eps);

/// Slow flow on M0 (q = 0) or M1 (q = 1).
SlowPoint slow_rhs(const SlowPoint& s, const Params& p, Manifold man);

/// Heteroclinic fast-layer solution with q(0) = 1/2.
double fast_heteroclinic(double tau, double p1, double p2);

/// Lotka-Volterra first integral: H0(p2, z) on M0, H1(p1, z) on M1.
double conserved_quantity(Manifold man, const SlowPoint& s, const Params& p);

State coexistence_equilibrium(const Params& p);

/// Roots of lambda^4 + b lambda^2 + m r with b = (m + 2 r + m r^2) / (1 + r),
/// ordered (+i w1, -i w1, +i w2, -i w2) with w1 < w2.
std::array<std::complex<double>, 4> characteristic_roots(const Params& p);

}  // namespace relaxor
