#pragma once

// Direct simulation of the full system for eps > 0.
//
// The trait is integrated as u = log(q / (1 - q)), with u' = (p1 - p2) / eps.
// In this coordinate nothing is stiff and q never rounds to exactly 0 or 1.

#include <string>
#include <vector>

#include "relaxor/model.hpp"
#include "relaxor/singular_orbit.hpp"

namespace relaxor {

struct SimConfig {
  double eps = 0.025;
  double t_end = 50.0;
  double rel_tol = 1e-10;
  double abs_tol = 1e-10;
  double max_step = 0.0;    // 0: eps / 2
  std::size_t samples = 0;  // 0: max(2000, 8 t_end / eps) + 1

  void validate() const;
  double effective_max_step() const;
  std::size_t effective_samples() const;
};

struct Trajectory {
  Params params;
  SimConfig config;
  std::vector<double> times;
  std::vector<State> states;
  std::vector<double> logit_q;  // u = log(q / (1 - q)) at each sample; empty if unknown

  std::string to_csv() const;
  std::string to_json() const;
  static Trajectory from_json(const std::string& text);
  static Trajectory from_csv(const std::string& text, const Params& p, const SimConfig& c);
};

Trajectory integrate(const State& s0, const Params& p, const SimConfig& c);

/// End state after `duration` (negative: backwards in time), same integrator settings.
State flow(const State& s0, const Params& p, const SimConfig& c, double duration);

struct ScheduleEntry {
  double eps = 0.0;
  double duration = 0.0;
};

/// 0.025 -> 0.2 and 0.2 -> 0.5 in ten linear steps of 50 time units, then 0.5 -> 1 in ten steps of 30.
std::vector<ScheduleEntry> default_schedule();

/// Chains integrations, each starting from the previous final state.
std::vector<Trajectory> continue_in_eps(const State& s0, const Params& p, const std::vector<ScheduleEntry>& schedule,
                                        const SimConfig& base = {});

enum class JumpDirection { Up, Down };

const char* to_string(JumpDirection d);

struct JumpEvent {
  double t = 0.0;
  State s;
  JumpDirection direction = JumpDirection::Up;
};

/// Crossings of q through `threshold`, refined by cubic Hermite interpolation.
std::vector<JumpEvent> detect_jump_events(const Trajectory& tr, double threshold = 0.5);

/// Largest distance, over samples with t <= horizon, from the slow coordinates of
/// the trajectory to the orbit's two slow segments.
double closeness_check(const Trajectory& tr, const SingularOrbit& orbit, double horizon);

/// Distance from a slow point to the orbit's two slow segments.
double distance_to_orbit(const SlowPoint& x, const SingularOrbit& orbit);

/// Balanced singular orbit passing closest to x (golden-section search along the balanced curve).
JumpPair nearest_balanced_jump_points(const SlowPoint& x, const Params& p, double p1A_lo = 1.02,
                                      double p1A_hi = 2.5);

}  // namespace relaxor
