#pragma once

// Extrema, synchronization type and cycle orientation of oscillations.

#include <array>
#include <string>
#include <vector>

#include "relaxor/model.hpp"
#include "relaxor/simulator.hpp"
#include "relaxor/singular_orbit.hpp"

namespace relaxor {

/// Samples of one or more oscillations. A positive period marks exactly periodic
/// data covering [t0, t0 + period] (singular orbits, closed Lotka-Volterra cycles).
struct TimeSeries {
  std::vector<double> t;
  std::vector<State> s;
  double period = 0.0;
};

TimeSeries series_of(const Trajectory& tr);
TimeSeries series_of(const SingularOrbit& orbit);

/// Jump A (up) at t = 0 and jump B (down) at t = T1.
std::vector<JumpEvent> jump_events_of(const SingularOrbit& orbit);

enum class Variable { p1 = 0, p2 = 1, z = 2 };
enum class ExtremumKind { Max, Min };
enum class ExtremumLocation { Interior, AtJump };

const char* to_string(Variable v);
const char* to_string(ExtremumKind k);
const char* to_string(ExtremumLocation l);

struct Extremum {
  double t = 0.0;
  double value = 0.0;
  ExtremumKind kind = ExtremumKind::Max;
  ExtremumLocation location = ExtremumLocation::Interior;
  int jump = -1;  // index into ExtremaList::jumps when at a jump
  double prominence = 0.0;
};

struct ExtremaList {
  /// Extrema of p1, p2 and z over all available data (periodic data is unrolled
  /// over three periods), sorted by time with alternating kinds.
  std::array<std::vector<Extremum>, 3> vars;
  /// Jump events the extrema were aligned with (shifted copies included for periodic data).
  std::vector<JumpEvent> jumps;
  double window_begin = 0.0;  // classification considers [window_begin, window_end)
  double window_end = 0.0;
  double period = 0.0;
  double align_tol = 0.0;

  const std::vector<Extremum>& of(Variable v) const { return vars[static_cast<int>(v)]; }
  bool in_window(double t) const { return t >= window_begin && t < window_end; }
};

/// 1e-3 of the period for singular orbits, 5 eps for simulated trajectories.
double default_align_tol(const SingularOrbit& orbit);
double default_align_tol(const Trajectory& tr);

/// Throws InsufficientData when the data do not cover one full period.
ExtremaList find_extrema(const TimeSeries& ts, const std::vector<JumpEvent>& jumps, double align_tol);

enum class SyncLabel { PreyPreyAntiphase, PredatorPreyPrey, PredatorPrey2Alternating, Unclassified };
enum class Orientation { Clockwise, Counterclockwise, Neither };

const char* to_string(SyncLabel l);
const char* to_string(Orientation o);

/// One predator peak and its distances to the neighbouring prey peaks.
struct PeakGap {
  double t = 0.0;
  double gap_prev = 0.0;
  double gap_next = 0.0;
  double weight = 0.0;  // prominence of the predator peak
  Orientation verdict = Orientation::Neither;
};

struct OrientationReport {
  Orientation overall = Orientation::Neither;  // prey peaks of both species pooled
  Orientation prey1 = Orientation::Neither;
  Orientation prey2 = Orientation::Neither;
  std::vector<PeakGap> gaps;  // pooled
  bool sufficient = false;    // at least one predator peak with prey peaks on both sides
};

/// Predator peaks closer to the following prey peak than to the preceding one vote
/// Clockwise, the reverse Counterclockwise, and peaks within `midway_tol` (as a
/// fraction of the gap sum) of the midpoint vote Neither; votes are weighted by prominence.
OrientationReport classify_orientation(const ExtremaList& ex, double midway_tol = 0.15);

/// Which extremum (if any) each variable has at a jump.
struct JumpAlignment {
  JumpDirection direction = JumpDirection::Up;
  double t = 0.0;
  SlowPoint at;
  std::array<int, 3> kind{};  // per variable: +1 max, -1 min, 0 none
};

struct SyncClass {
  SyncLabel label = SyncLabel::Unclassified;
  Orientation orientation = Orientation::Neither;
  bool prey_antiphase = false;           // opposite prey extrema at both jumps
  bool predator_minima_at_jumps = false;  // z minima at both jumps
  std::vector<JumpAlignment> alignments;  // jumps inside the window
  OrientationReport orientation_detail;
  ExtremaList extrema;
};

/// A and B are the up and down jump points (exact for singular orbits, event averages otherwise).
SyncClass classify_synchronization(const ExtremaList& ex, const JumpPair& j, const Params& p);

/// Full pipeline for a singular orbit or a simulated trajectory.
SyncClass classify(const SingularOrbit& orbit);
SyncClass classify(const Trajectory& tr);
/// Periodic data without jumps, e.g. one closed Lotka-Volterra cycle.
SyncClass classify(const TimeSeries& ts, const Params& p);

/// Classification report as JSON (labels, per-jump extremum table, peak-gap statistics).
std::string report_json(const SyncClass& c);

/// Closed Lotka-Volterra cycle on M1 through (p1, z) as periodic data (p2 held at 1).
TimeSeries lv_cycle_series(Anchor a, const Params& p, std::size_t samples = 2000);

}  // namespace relaxor
