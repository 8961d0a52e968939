// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "commands.hpp"
#include "oracles.hpp"
#include "relaxor/analysis.hpp"
#include "relaxor/error.hpp"
#include "relaxor/lambertw.hpp"
#include "relaxor/model.hpp"
#include "relaxor/simulator.hpp"
#include "relaxor/singular_orbit.hpp"

using namespace relaxor;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int prec = 3) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool pass = v.pass && in_time;
  failures += !pass;
  std::printf("criterion %d %s  %s: %s [%.2f s, limit %.0f s%s]\n", id, pass ? "PASS" : "FAIL", name,
              v.detail.c_str(), secs, limit_s, in_time ? "" : ", too slow");
  std::fflush(stdout);
}

double max_abs(const std::array<double, 4>& v) {
  return std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2]), std::abs(v[3])});
}

const Params kP{0.5, 0.4};
const State kInitial{1.18, 0.87, 1.50, 0.99};

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::printf("    relaxor %s -> exit %d: %s", args.front().c_str(), code, err.str().c_str());
  return code;
}

nlohmann::json load(const std::string& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

// ---------------------------------------------------------------------------

Verdict equilibrium_and_spectrum() {
  double worst_rhs = 0.0, worst_re = 0.0, worst_det = 0.0;
  int points = 0;
  for (int i = 1; i <= 9; ++i) {
    for (int k = 1; k <= 10; ++k) {
      const Params p{0.1 * i, 0.25 * k};
      const State e = coexistence_equilibrium(p);
      const State f = full_rhs(e, p, 1.0);
      worst_rhs = std::max({worst_rhs, std::abs(f.p1), std::abs(f.p2), std::abs(f.z), std::abs(f.q)});
      const auto J = oracle::jacobian_fd(e, p, 1.0);
      for (const auto& lam : characteristic_roots(p)) {
        worst_re = std::max(worst_re, std::abs(lam.real()));
        worst_det = std::max(worst_det, std::abs(oracle::char_poly(J, lam)));
      }
      ++points;
    }
  }
  return {worst_rhs < 1e-12 && worst_re < 1e-12 && worst_det < 1e-6,
          std::to_string(points) + " (r,m) points, max|rhs| = " + num(worst_rhs) + ", max|Re l| = " + num(worst_re) +
              ", max|det(J_fd - l I)| = " + num(worst_det)};
}

Verdict conservation() {
  double worst = 0.0;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0.4, 2.2);
  for (int i = 0; i < 6; ++i) {
    for (double q0 : {0.0, 1.0}) {
      const State s0{U(rng), U(rng), U(rng), q0};
      SimConfig c;
      c.eps = 0.025;
      c.t_end = 10.0;
      c.rel_tol = c.abs_tol = 1e-10;
      const Trajectory tr = integrate(s0, kP, c);
      const Manifold man = q0 == 1.0 ? Manifold::M1 : Manifold::M0;
      const double h0 = conserved_quantity(man, {s0.p1, s0.p2, s0.z}, kP);
      for (const auto& s : tr.states) worst = std::max(worst, std::abs(conserved_quantity(man, {s.p1, s.p2, s.z}, kP) - h0));
    }
  }
  return {worst < 1e-8, "12 segments of duration 10, max |dH| = " + num(worst)};
}

Verdict lambert_suite() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const bool lower = i % 2;
    const double w = lower ? -1.0 - 30.0 * U(rng) : -1.0 + 31.0 * U(rng);
    const double x = w * std::exp(w);
    const double got = lambert_w(lower ? Branch::Lower : Branch::Principal, x);
    worst = std::max(worst, std::abs(got * std::exp(got) - x) / std::max(std::abs(x), 1e-300));
  }
  const double bp0 = lambert_w(Branch::Principal, -std::exp(-1.0));
  const double bp1 = lambert_w(Branch::Lower, -std::exp(-1.0));
  const double bp = std::max(std::abs(bp0 + 1.0), std::abs(bp1 + 1.0));
  const double zero = std::abs(lambert_w(Branch::Principal, 0.0));
  return {worst <= 1e-10 && bp < 1e-8 && zero == 0.0,
          "1e4 inputs, max relative residual = " + num(worst) + ", |W(-1/e) + 1| = " + num(bp)};
}

Verdict paper_jump_points() {
  struct Quoted {
    const char* name;
    Params p;
    SlowPoint A, B;
  };
  const Quoted quoted[] = {
      {"predator-prey-prey", {0.8, 1.0}, {2.41, 0.33, 1.18}, {0.29, 2.27, 1.39}},
      {"predator/prey-2", {0.5, 0.4}, {4.27, 0.19, 0.7}, {0.06, 2.69, 0.85}},
      {"clockwise", {0.5, 0.4}, {0.97, 0.81, 2.0}, {0.22, 4.28, 0.85}},
      {"hybrid", {0.5, 0.4}, {1.81, 0.49, 1.35}, {0.51, 1.59, 1.40}},
  };
  bool ok = true;
  std::string detail;
  for (const auto& q : quoted) {
    SolveReport rep;
    const JumpPair j = solve_jump_points(JumpSeed{q.A, q.B}, q.p, {}, {}, &rep);
    const double dev = std::max({std::abs(j.A.p1 - q.A.p1), std::abs(j.A.p2 - q.A.p2), std::abs(j.A.z - q.A.z),
                                 std::abs(j.B.p1 - q.B.p1), std::abs(j.B.p2 - q.B.p2), std::abs(j.B.z - q.B.z)});
    const bool good = rep.residual < 1e-10 && dev <= 0.02;
    ok = ok && good;
    detail += std::string(detail.empty() ? "" : "; ") + q.name + " residual " + num(rep.residual) + " max dev " +
              num(dev) + (good ? "" : " (zB = " + num(j.B.z, 4) + ")");
  }
  return {ok, detail};
}

Verdict travel_time_oracle() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Params p{0.2 + 0.7 * U(rng), 0.2 + 1.6 * U(rng)};
    const Manifold man = i % 2 ? Manifold::M0 : Manifold::M1;
    const double c = man == Manifold::M1 ? 1.0 : p.r;
    const LvOrbit orbit(man, {1.3 + 1.5 * U(rng), c * (0.5 + U(rng))}, p);
    const auto [lo, hi] = orbit.extrema();
    auto point = [&](Branch b) {
      const double x = lo + (hi - lo) * (0.02 + 0.96 * U(rng));
      return Anchor{x, orbit.branch_z(x, b)};
    };
    const Anchor from = point(U(rng) < 0.5 ? Branch::Lower : Branch::Principal);
    const Anchor to = point(U(rng) < 0.5 ? Branch::Lower : Branch::Principal);
    const double t = orbit.travel_time(from, to);
    const double want = oracle::travel_time_events(man, from, to, p);
    worst = std::max(worst, std::abs(t - want) / want);
  }
  return {worst <= 1e-4, "20 segments, max relative difference = " + num(worst)};
}

Verdict closeness() {
  const JumpPair j = nearest_balanced_jump_points({kInitial.p1, kInitial.p2, kInitial.z}, kP);
  const SingularOrbit o = assemble_singular_orbit(j, kP);
  auto run = [&](double eps) {
    SimConfig c;
    c.eps = eps;
    c.t_end = 3.0 * o.period;
    return integrate(kInitial, kP, c);
  };
  const Trajectory coarse = run(0.025);
  const double d1 = closeness_check(coarse, o, o.period);
  const double d2 = closeness_check(run(0.0125), o, o.period);
  double worst_event = 0.0;
  int events = 0;
  for (const auto& e : detect_jump_events(coarse)) {
    const SlowPoint& ref = e.direction == JumpDirection::Up ? j.A : j.B;
    worst_event = std::max({worst_event, std::abs(e.s.p1 - ref.p1), std::abs(e.s.p2 - ref.p2), std::abs(e.s.z - ref.z)});
    ++events;
  }
  return {d2 <= 0.75 * d1 && events > 0 && worst_event <= 0.15,
          "d(0.025) = " + num(d1, 4) + ", d(0.0125) = " + num(d2, 4) + " (ratio " + num(d2 / d1, 3) + "), " +
              std::to_string(events) + " events, max offset " + num(worst_event)};
}

Verdict continuation() {
  const auto schedule = default_schedule();
  const auto runs = continue_in_eps(kInitial, kP, schedule);
  bool ok = std::abs(runs.back().config.eps - 1.0) < 1e-12;
  std::string detail = "reached eps = " + num(runs.back().config.eps);
  for (std::size_t k : {9u, 10u, 19u, 20u, 29u}) {
    const Trajectory& tr = runs[k];
    double qmin = 1.0;
    for (const auto& s : tr.states) qmin = std::min(qmin, s.q);
    const SyncClass c = classify(tr);
    const bool stage_end = k == 9 || k == 19 || k == 29;
    const bool good = c.prey_antiphase && c.orientation == Orientation::Neither && qmin > 0.0;
    if (stage_end) ok = ok && good;
    detail += std::string("; run ") + std::to_string(k) + " eps " + num(tr.config.eps) + ": " + to_string(c.label) +
              "/" + to_string(c.orientation) + " min q " + num(qmin) + (stage_end ? "" : " (stage start)");
  }
  return {ok, detail};
}

Verdict taxonomy() {
  const std::string base = std::string(RELAXOR_TEST_OUTPUT_DIR) + "/acceptance_taxonomy";
  fs::remove_all(base);
  struct Row {
    const char* seed;
    const char* label;        // nullptr: any
    const char* orientation;  // nullptr: any
  };
  const Row rows[] = {{"antiphase", "PreyPreyAntiphase", nullptr},
                      {"predpreyprey", "PredatorPreyPrey", nullptr},
                      {"predp2", "PredatorPrey2Alternating", nullptr},
                      {"clockwise", nullptr, "Clockwise"}};
  bool ok = true;
  std::string detail;
  auto check = [&](const std::string& what, const nlohmann::json& rep, const char* label, const char* orientation) {
    const std::string l = rep.value("label", ""), o = rep.value("orientation", "");
    const bool good = (!label || l == label) && (!orientation || o == orientation);
    ok = ok && good;
    detail += (detail.empty() ? "" : "; ") + what + " " + l + "/" + o + (good ? "" : " (unexpected)");
  };
  for (const Row& r : rows) {
    const std::string dir = base + "/" + r.seed;
    if (cli({"construct", "--seed", r.seed, "--out", dir}) != 0 || cli({"classify", dir + "/orbit.json", "--out", dir}) != 0) {
      ok = false;
      detail += std::string(detail.empty() ? "" : "; ") + r.seed + " failed";
      continue;
    }
    check(r.seed, load(dir + "/classification.json"), r.label, r.orientation);
  }
  // a Lotka-Volterra cycle on M1
  const std::string dir = base + "/lv";
  if (cli({"simulate", "--state", "1.6,1,1,1", "--t-end", "40", "--out", dir}) != 0 ||
      cli({"classify", dir + "/trajectory.json", "--out", dir}) != 0) {
    return {false, detail + "; LV cycle failed"};
  }
  check("LV cycle", load(dir + "/classification.json"), nullptr, "Counterclockwise");
  return {ok, detail};
}

Verdict family_scan() {
  FamilyGrid g;
  g.first = {0.5, 5.0, 20};
  g.second = {0.5, 3.0, 20};
  const FamilyTable t = scan_family(kP, g);
  double worst = 0.0;
  bool admissible = true;
  int high = 0, high_ok = 0;
  for (const auto& row : t.rows) {
    const JumpPair& j = row.jumps;
    worst = std::max(worst, max_abs(direct_conditions(j, kP)));
    admissible = admissible && j.A.p1 > j.A.p2 && j.B.p1 < j.B.p2 && j.T0 > 0.0 && j.T1 > 0.0;
    if (j.A.z > 1.0 && j.B.z > 1.0) {
      ++high;
      high_ok += classify(assemble_singular_orbit(j, kP)).prey_antiphase;
    }
  }
  return {t.rows.size() >= 50 && worst <= 1e-9 && admissible && high_ok == high,
          std::to_string(t.rows.size()) + " rows, max direct residual " + num(worst) + ", " + std::to_string(high_ok) +
              "/" + std::to_string(high) + " rows with zA, zB > 1 in prey-prey antiphase"};
}

}  // namespace

int main() {
  criterion(1, "equilibrium and spectrum", 1, equilibrium_and_spectrum);
  criterion(2, "conservation on the slow manifolds", 5, conservation);
  criterion(3, "Lambert W", 1, lambert_suite);
  criterion(4, "quoted jump points", 10, paper_jump_points);
  criterion(5, "travel-time oracle", 30, travel_time_oracle);
  criterion(6, "closeness to the singular orbit", 30, closeness);
  criterion(7, "continuation to eps = 1", 120, continuation);
  criterion(8, "taxonomy through the CLI", 30, taxonomy);
  criterion(9, "family scan", 300, family_scan);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
