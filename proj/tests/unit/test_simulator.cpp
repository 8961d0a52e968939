#include <doctest.h>

#include <chrono>
#include <cmath>
#include <functional>

#include "relaxor/error.hpp"
#include "relaxor/simulator.hpp"

using namespace relaxor;

namespace {

const Params kP{0.5, 0.4};
const State kInitial{1.18, 0.87, 1.50, 0.99};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("no error raised");
}

double dist(const State& a, const State& b) {
  return std::max({std::abs(a.p1 - b.p1), std::abs(a.p2 - b.p2), std::abs(a.z - b.z), std::abs(a.q - b.q)});
}

SimConfig cfg(double eps, double t_end) {
  SimConfig c;
  c.eps = eps;
  c.t_end = t_end;
  return c;
}

}  // namespace

TEST_CASE("the coexistence equilibrium stays put") {
  const State e = coexistence_equilibrium(kP);
  const Trajectory tr = integrate(e, kP, cfg(0.1, 20.0));
  for (const auto& s : tr.states) CHECK(dist(s, e) < 1e-9);
}

TEST_CASE("endpoint converges as the tolerance is tightened") {
  SimConfig c = cfg(0.05, 10.0);
  c.rel_tol = c.abs_tol = 1e-8;
  const State a = flow(kInitial, kP, c, 10.0);
  c.rel_tol = c.abs_tol = 5e-9;
  const State b = flow(kInitial, kP, c, 10.0);
  CHECK(dist(a, b) < 10.0 * 1e-8 * 100.0);
  c.rel_tol = c.abs_tol = 1e-11;
  const State ref = flow(kInitial, kP, c, 10.0);
  CHECK(dist(b, ref) < dist(a, ref) + 1e-12);
}

TEST_CASE("trajectories stay positive with q strictly inside (0, 1)") {
  const Trajectory tr = integrate(kInitial, kP, cfg(0.025, 40.0));
  for (const auto& s : tr.states) {
    CHECK(s.p1 > 0.0);
    CHECK(s.p2 > 0.0);
    CHECK(s.z > 0.0);
    CHECK(s.q > 0.0);
    CHECK(s.q < 1.0);
  }
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == 40.0);
  CHECK(tr.times.size() == tr.config.effective_samples());
}

TEST_CASE("forward then backward returns to the start") {
  SimConfig c = cfg(0.2, 5.0);
  const State end = flow(kInitial, kP, c, 5.0);
  const State back = flow(end, kP, c, -5.0);
  CHECK(dist(back, kInitial) < 100.0 * c.rel_tol * 100.0);
}

TEST_CASE("jump events alternate in direction") {
  const Trajectory tr = integrate(kInitial, kP, cfg(0.025, 60.0));
  const auto ev = detect_jump_events(tr);
  REQUIRE(ev.size() >= 4);
  for (std::size_t i = 1; i < ev.size(); ++i) {
    CHECK(ev[i].direction != ev[i - 1].direction);
    CHECK(ev[i].t > ev[i - 1].t);
  }
  for (const auto& e : ev) CHECK(e.s.q == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("no events when q never crosses the threshold") {
  const Trajectory tr = integrate({1.5, 1.0, 1.0, 1.0}, kP, cfg(0.1, 20.0));
  CHECK(detect_jump_events(tr).empty());
}

TEST_CASE("a singular orbit sampled as a trajectory has two events per period") {
  const JumpPair j = solve_jump_points(JumpSeed{{1.81, 0.49, 1.35}, {0.51, 1.59, 1.40}}, kP);
  const SingularOrbit o = assemble_singular_orbit(j, kP, 800);
  Trajectory tr;
  tr.params = kP;
  std::vector<double> t;
  std::vector<State> s;
  o.time_series(t, s);
  for (int k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      State x = s[i];
      // nudge q off the planes so the crossings are well defined
      x.q = x.q == 1.0 ? 0.999 : 0.001;
      tr.times.push_back(t[i] + k * o.period + (i == 0 && k ? 1e-9 : 0.0));
      tr.states.push_back(x);
    }
  }
  const auto ev = detect_jump_events(tr);
  REQUIRE(ev.size() == 3);  // down at B, up at A (start of the second copy), down at B
  CHECK(ev[0].direction == JumpDirection::Down);
  CHECK(ev[1].direction == JumpDirection::Up);
  CHECK(ev[0].s.z == doctest::Approx(j.B.z).epsilon(1e-2));
  CHECK(ev[1].s.p1 == doctest::Approx(j.A.p1).epsilon(1e-2));
}

TEST_CASE("distance to an orbit vanishes on the orbit") {
  const auto preset = *find_orbit_preset("balanced");
  const SingularOrbit o = assemble_singular_orbit(solve_balanced_jump_points(preset.seed, kP), kP, 1000);
  double worst = 0.0;
  for (std::size_t i = 0; i < o.segM1.x.size(); i += 37) worst = std::max(worst, distance_to_orbit(o.segM1.x[i], o));
  CHECK(worst < 1e-12);
  CHECK(distance_to_orbit({1.0, 1.0, 3.0}, o) > 0.5);
}

TEST_CASE("closeness to the balanced singular orbit shrinks with eps") {
  const SlowPoint x0{kInitial.p1, kInitial.p2, kInitial.z};
  const JumpPair j = nearest_balanced_jump_points(x0, kP);
  const SingularOrbit o = assemble_singular_orbit(j, kP);
  auto d = [&](double eps) {
    return closeness_check(integrate(kInitial, kP, cfg(eps, 3.0 * o.period)), o, o.period);
  };
  const double d1 = d(0.025);
  const double d2 = d(0.0125);
  MESSAGE("d(0.025) = " << d1 << ", d(0.0125) = " << d2);
  CHECK(d1 == doctest::Approx(0.1296).epsilon(0.01));  // regression value at the default tolerances
  CHECK(d2 <= 0.75 * d1);

  const auto ev = detect_jump_events(integrate(kInitial, kP, cfg(0.025, o.period)));
  REQUIRE(!ev.empty());
  for (const auto& e : ev) {
    const SlowPoint& ref = e.direction == JumpDirection::Up ? j.A : j.B;
    CHECK(std::abs(e.s.p1 - ref.p1) <= 0.15);
    CHECK(std::abs(e.s.p2 - ref.p2) <= 0.15);
    CHECK(std::abs(e.s.z - ref.z) <= 0.15);
  }
}

TEST_CASE("trajectory serialization") {
  SimConfig c = cfg(0.05, 3.0);
  c.samples = 301;
  const Trajectory tr = integrate(kInitial, kP, c);

  const Trajectory back = Trajectory::from_json(tr.to_json());
  REQUIRE(back.times.size() == tr.times.size());
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    CHECK(back.times[i] == tr.times[i]);
    CHECK(back.states[i].q == tr.states[i].q);
    CHECK(back.states[i].z == tr.states[i].z);
  }
  CHECK(back.config.eps == c.eps);
  CHECK(back.to_json() == tr.to_json());

  const std::string csv = tr.to_csv();
  CHECK(csv.rfind("t,p1,p2,z,q\n", 0) == 0);
  const Trajectory fromcsv = Trajectory::from_csv(csv, kP, c);
  REQUIRE(fromcsv.times.size() == tr.times.size());
  CHECK(fromcsv.states[150].p2 == doctest::Approx(tr.states[150].p2).epsilon(1e-14));
  CHECK(code_of([&] { Trajectory::from_csv("t,p1\n0,1\n", kP, c); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("continuation") {
  SUBCASE("a single entry is a plain integration") {
    const auto runs = continue_in_eps(kInitial, kP, {{0.1, 8.0}});
    REQUIRE(runs.size() == 1);
    const Trajectory tr = integrate(kInitial, kP, cfg(0.1, 8.0));
    CHECK(dist(runs[0].states.back(), tr.states.back()) == 0.0);
  }
  SUBCASE("runs chain end to start") {
    const auto runs = continue_in_eps(kInitial, kP, {{0.1, 4.0}, {0.2, 4.0}});
    REQUIRE(runs.size() == 2);
    CHECK(dist(runs[1].states.front(), runs[0].states.back()) < 1e-15);
    CHECK(runs[1].config.eps == 0.2);
  }
  SUBCASE("failures name the schedule entry") {
    try {
      continue_in_eps(kInitial, kP, {{0.1, 2.0}, {-1.0, 2.0}});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("schedule entry") != std::string::npos);
    }
  }
  SUBCASE("default schedule shape") {
    const auto s = default_schedule();
    REQUIRE(s.size() == 30);
    CHECK(s.front().eps == doctest::Approx(0.025));
    CHECK(s[9].eps == doctest::Approx(0.2));
    CHECK(s[19].eps == doctest::Approx(0.5));
    CHECK(s.back().eps == doctest::Approx(1.0));
    CHECK(s.front().duration == 50.0);
    CHECK(s.back().duration == 30.0);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i].eps >= s[i - 1].eps);
  }
}

TEST_CASE("configuration validation") {
  CHECK(code_of([] { cfg(0.0, 1.0).validate(); }) == ErrorCode::ParameterDomain);
  CHECK(code_of([] { cfg(0.1, -1.0).validate(); }) == ErrorCode::ParameterDomain);
  SimConfig c = cfg(0.1, 1.0);
  c.rel_tol = 0.0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::ParameterDomain);
  CHECK(cfg(0.1, 1.0).effective_max_step() == 0.05);
  CHECK(cfg(0.1, 1.0).effective_samples() == 2001);
  CHECK(code_of([] { integrate({1, 1, 1, 1.5}, kP, cfg(0.1, 1.0)); }) == ErrorCode::ParameterDomain);
}

TEST_CASE("very small eps fails fast instead of hanging") {
  const auto t0 = std::chrono::steady_clock::now();
  CHECK(code_of([] { integrate(kInitial, kP, cfg(1e-9, 50.0)); }) == ErrorCode::Stiffness);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(20));
}
