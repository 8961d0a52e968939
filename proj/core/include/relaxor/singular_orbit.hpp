#pragma once

// Singular (eps -> 0) periodic orbits: slow Lotka-Volterra segments on M1 and
// M0 glued by instantaneous jumps of q at A (0 -> 1) and B (1 -> 0).
//
// On both slow manifolds the coupled pair (p, z) follows p' = (c - z) p,
// z' = (p - 1) m z with c = 1 on M1 (p = p1) and c = r on M0 (p = p2), and
//   (m / c) g(p) + g(z / c),   g(y) = y - 1 - log y,
// is conserved. Level sets are closed curves around (1, c); z / c on the
// upper branch is -W_{-1}, on the lower branch -W_0, of the same argument.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "relaxor/lambertw.hpp"
#include "relaxor/model.hpp"

namespace relaxor {

struct Anchor {
  double p = 0.0;
  double z = 0.0;
};

/// The closed Lotka-Volterra level set through an anchor on M0 or M1.
/// Branch::Lower selects the upper half (z above the centre), Branch::Principal the lower half.
class LvOrbit {
 public:
  LvOrbit(Manifold man, Anchor a, const Params& p);

  Manifold manifold() const { return man_; }
  /// z coordinate of the centre: 1 on M1, r on M0
  double center_z() const { return c_; }
  /// (m / c) g(p) + g(z / c); zero at the centre
  double level() const { return level_; }

  /// (pmin, pmax); throws DegenerateOrbit on the centre.
  std::pair<double, double> extrema() const;

  /// z on the chosen half at abscissa p; throws OffOrbit outside [pmin, pmax].
  double branch_z(double p, Branch b) const;

  /// Abscissa on the chosen half at height z (the prey coordinate of that point).
  double branch_p(double z, Branch b) const;

  /// Time of first arrival at `to` when starting at `from` and following the slow flow.
  /// Throws InconsistentEndpoints when either point is off this level set.
  double travel_time(Anchor from, Anchor to) const;

  /// Time to go once round the orbit.
  double period() const;

 private:
  // time spent on one half between two abscissae (order irrelevant)
  double half_time(Branch b, double pa, double pb) const;
  Branch half_of(Anchor a) const;

  Manifold man_;
  Params params_;
  double c_;
  double k_;  // m / c
  double level_;
};

/// z on the upper (Branch::Lower, W-1) or lower (Branch::Principal, W0) half of the H1 orbit through a.
double lv_branch_M1(double p1, Anchor a, Branch b, const Params& p);
/// As lv_branch_M1 on the H0 orbit through a (centre height r).
double lv_branch_M0(double p2, Anchor a, Branch b, const Params& p);

std::pair<double, double> extrema_M1(Anchor a, const Params& p);
std::pair<double, double> extrema_M0(Anchor a, const Params& p);

/// p2B with H0(p2A, zA) = H0(p2B, zB); Branch::Principal gives p2B <= 1, Branch::Lower p2B >= 1.
/// Throws NoSolution when zB does not reach the H0 level of (p2A, zA).
double eliminate_p2B(double p2A, double zA, double zB, const Params& p, Branch b);
/// p1B with H1(p1A, zA) = H1(p1B, zB); branch convention as eliminate_p2B.
double eliminate_p1B(double p1A, double zA, double zB, const Params& p, Branch b);

/// Slow time on M1 from (p1A, zA) to (p1B, zB).
double travel_time_M1(Anchor start, Anchor end, const Params& p);
/// Slow time on M0 from (p2B, zB) to (p2A, zA).
double travel_time_M0(Anchor start, Anchor end, const Params& p);

struct JumpPair {
  SlowPoint A;
  SlowPoint B;
  double T0 = 0.0;
  double T1 = 0.0;

  double period() const { return T0 + T1; }
};

/// Which root of the elimination to use for p1B and p2B.
struct BranchChoice {
  Branch p1B = Branch::Principal;
  Branch p2B = Branch::Lower;
};

/// Branch choice implied by an approximate B.
BranchChoice branch_choice_for(const SlowPoint& B);

struct ResidualEval {
  double res1 = 0.0;  // (1/r) log(p2B / p2A) - T1
  double res2 = 0.0;  // log(p1A / p1B) - T0
  double p1B = 0.0;
  double p2B = 0.0;
  double T0 = 0.0;
  double T1 = 0.0;
};

ResidualEval existence_residual(double p1A, double p2A, double zA, double zB, BranchChoice branches,
                                const Params& p);

/// The four original conditions evaluated directly from all six coordinates:
/// H0(A) - H0(B), H1(A) - H1(B), p2B - p2A e^{r T1}, p1A - p1B e^{T0}.
std::array<double, 4> direct_conditions(const JumpPair& j, const Params& p);

/// Integrals of p1 - p2 over the M1 segment and over the M0 segment.
std::array<double, 2> switching_balance(const JumpPair& j, const Params& p);

enum class FamilyCoord { p1A, p2A, zA, zB };

const char* to_string(FamilyCoord c);
FamilyCoord family_coord_from_string(const std::string& s);

struct Pinning {
  FamilyCoord first = FamilyCoord::p1A;
  FamilyCoord second = FamilyCoord::zA;
};

struct NewtonOptions {
  double tol = 1e-12;         // target max-norm of the residual
  double accept_tol = 1e-10;  // accepted residual if progress stalls
  int max_iterations = 60;
  double fd_step = 1e-7;      // relative forward-difference step
};

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;  // max-norm of (res1, res2)
};

/// Approximate jump pair; only the four family coordinates and the sides of B are used.
struct JumpSeed {
  SlowPoint A;
  SlowPoint B;
};

/// Damped Newton with the pinned coordinates fixed at their seed values.
JumpPair solve_jump_points(const JumpSeed& seed, const Params& p, const Pinning& pin = {},
                           const NewtonOptions& opt = {}, SolveReport* report = nullptr);

/// Explicit form: pinned values, guess for the free pair and branch choice.
JumpPair solve_jump_points(const Pinning& pin, std::array<double, 2> pinned, std::array<double, 2> guess,
                           BranchChoice branches, const Params& p, const NewtonOptions& opt = {},
                           SolveReport* report = nullptr);

/// Family member whose segments also balance the switching function, i.e. both
/// integrals of p1 - p2 vanish. These members form a curve; p1A stays pinned at
/// its seed value and (p2A, zA, zB) are solved for.
JumpPair solve_balanced_jump_points(const JumpSeed& seed, const Params& p, const NewtonOptions& opt = {},
                                    SolveReport* report = nullptr);

struct GridAxis {
  double lo = 0.0;
  double hi = 0.0;
  int count = 1;

  double at(int i) const;
};

struct FamilyGrid {
  Pinning pin;
  GridAxis first;
  GridAxis second;
  std::vector<JumpSeed> seeds;  // empty: built-in multi-start guesses
};

struct FamilyRow {
  double r = 0.0;
  double m = 0.0;
  int first_index = 0;
  int second_index = 0;
  double pinned_first = 0.0;
  double pinned_second = 0.0;
  JumpPair jumps;
  double residual = 0.0;
};

struct FamilyTable {
  Params params;
  Pinning pin;
  std::vector<FamilyRow> rows;

  std::vector<std::string> columns() const;
  std::string to_csv() const;
  std::string to_json() const;
  static FamilyTable from_json(const std::string& text);
};

FamilyTable scan_family(const Params& p, const FamilyGrid& grid, const NewtonOptions& opt = {});

struct SegmentSamples {
  std::vector<double> t;  // time since the start of the segment
  std::vector<SlowPoint> x;
};

struct SingularOrbit {
  Params params;
  JumpPair jumps;
  SegmentSamples segM1;  // q = 1, from A to B
  SegmentSamples segM0;  // q = 0, from B to A
  double period = 0.0;

  /// Orbit time series over one period starting at A: the M1 samples, then the M0
  /// samples shifted by T1 without their first point (B appears once, with q = 1).
  void time_series(std::vector<double>& t, std::vector<State>& s) const;

  std::string to_json() const;
  static SingularOrbit from_json(const std::string& text);
};

SingularOrbit assemble_singular_orbit(const JumpPair& j, const Params& p, std::size_t samples_per_segment = 2000);

/// Named seeds for a few reference orbits.
struct OrbitPreset {
  std::string name;
  Params params;
  JumpSeed seed;
  bool balanced = false;  // solve for the balanced member instead of pinning (p1A, zA)
};

const std::vector<OrbitPreset>& orbit_presets();
std::optional<OrbitPreset> find_orbit_preset(const std::string& name);

}  // namespace relaxor
