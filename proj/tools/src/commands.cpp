#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "relaxor/analysis.hpp"
#include "relaxor/error.hpp"
#include "relaxor/model.hpp"
#include "relaxor/simulator.hpp"
#include "relaxor/singular_orbit.hpp"
#include "relaxor/version.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace relaxor::cli {

namespace {

const char* const kCommands[] = {"construct", "scan", "simulate", "continue", "classify"};

// Flags without a value; a config entry `key = true` turns into `--key`.
const std::set<std::string> kBooleanKeys = {"balanced"};

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v, int precision = 6) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string shortest(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<double> parse_list(const std::string& text, std::size_t expected, const std::string& what) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw InputError(what + ": empty entry in '" + text + "'");
    item = item.substr(b, e - b + 1);
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size() || !std::isfinite(v)) {
      throw InputError(what + ": '" + item + "' is not a number");
    }
    out.push_back(v);
  }
  if (expected != 0 && out.size() != expected) {
    throw InputError(what + ": expected " + std::to_string(expected) + " comma-separated values, got '" + text + "'");
  }
  return out;
}

SlowPoint parse_point(const std::string& text, const std::string& what) {
  const auto v = parse_list(text, 3, what);
  return {v[0], v[1], v[2]};
}

State parse_state(const std::string& text) {
  const auto v = parse_list(text, 4, "--state");
  return {v[0], v[1], v[2], v[3]};
}

GridAxis parse_axis(const std::string& text, const std::string& what) {
  const auto v = parse_list(text, 3, what);
  const double n = v[2];
  if (n < 1 || n != std::floor(n) || n > 10000) throw InputError(what + ": point count must be an integer in [1, 10000]");
  return {v[0], v[1], static_cast<int>(n)};
}

Pinning parse_pin(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw InputError("--pin: expected two coordinates such as p1A,zA");
  Pinning pin{family_coord_from_string(text.substr(0, comma)), family_coord_from_string(text.substr(comma + 1))};
  if (pin.first == pin.second) throw InputError("--pin: the two pinned coordinates must differ");
  return pin;
}

std::vector<ScheduleEntry> parse_schedule(const std::string& text) {
  std::vector<ScheduleEntry> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw InputError("--schedule: entries are eps:duration, got '" + item + "'");
    const auto e = parse_list(item.substr(0, colon), 1, "--schedule");
    const auto d = parse_list(item.substr(colon + 1), 1, "--schedule");
    out.push_back({e[0], d[0]});
  }
  if (out.empty()) throw InputError("--schedule is empty");
  return out;
}

ojson point_json(const SlowPoint& s) { return ojson::array({s.p1, s.p2, s.z}); }
ojson state_json(const State& s) { return ojson::array({s.p1, s.p2, s.z, s.q}); }

std::string point_text(const SlowPoint& s) {
  return "(" + fmt(s.p1) + ", " + fmt(s.p2) + ", " + fmt(s.z) + ")";
}

// ---------------------------------------------------------------------------
// Invocation context: option bookkeeping, sources, manifest and outputs

class Invocation {
 public:
  Invocation(std::string command, std::vector<std::string> argv, std::ostream& out)
      : out_(out) {
    manifest_.command = std::move(command);
    manifest_.argv = std::move(argv);
    manifest_.version = relaxor::version;
    manifest_.started = utc_timestamp();
  }

  std::set<std::string> flag_keys;
  std::set<std::string> config_keys;

  RunManifest& manifest() { return manifest_; }
  std::ostream& out() { return out_; }

  Source source(const std::string& key) const {
    if (flag_keys.count(key)) return Source::Flag;
    if (config_keys.count(key)) return Source::Config;
    return Source::Default;
  }
  bool given(const std::string& key) const { return source(key) != Source::Default; }

  void record(const std::string& key, ojson value) { manifest_.set(key, std::move(value), source(key)); }
  void record(const std::string& key, ojson value, Source src) { manifest_.set(key, std::move(value), src); }

  void set_out_dir(const std::string& dir) {
    out_dir_ = dir.empty() ? "." : dir;
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    if (ec || !fs::is_directory(out_dir_)) throw InputError("cannot create output directory '" + out_dir_ + "'");
  }

  std::string path(const std::string& file) const { return (fs::path(out_dir_) / file).string(); }

  void emit(const std::string& role, const std::string& file, const std::string& text) {
    const std::string p = path(file);
    write_text(p, text);
    manifest_.add_output(role, p);
    written_.push_back(p);
  }

  void finish() {
    manifest_.finished = utc_timestamp();
    const std::string p = path(manifest_.command + ".manifest.json");
    write_text(p, manifest_.to_json());
    for (const auto& w : written_) out_ << "wrote " << w << '\n';
    out_ << "wrote " << p << '\n';
  }

 private:
  std::ostream& out_;
  RunManifest manifest_;
  std::string out_dir_ = ".";
  std::vector<std::string> written_;
};

// Options shared by every subcommand.
struct Common {
  double r = 0.5;
  double m = 0.4;
  std::string out = ".";
  std::string config;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--r", c.r, "prey growth-rate ratio, 0 < r < 1")->capture_default_str();
  sub->add_option("--m", c.m, "rescaled predator death rate, m > 0")->capture_default_str();
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
  sub->add_option("--config", c.config, "key = value file; flags override its entries");
}

void record_common(Invocation& inv, const Common& c, const Params& p) {
  inv.record("r", p.r);
  inv.record("m", p.m);
  inv.record("out", c.out);
  if (!c.config.empty()) inv.manifest().config_path = c.config;
}

// ---------------------------------------------------------------------------
// Plots

Figure dual_phase_plane(const SingularOrbit& o) {
  const std::string blue = "#1f4e9c", green = "#2a8a3a";
  Series m1_left{{}, {}, "M1 (q = 1)", blue, Stroke::Solid};
  Series m0_left{{}, {}, "M0 (q = 0)", green, Stroke::Dashed};
  Series m0_right{{}, {}, "M0 (q = 0)", green, Stroke::Solid};
  Series m1_right{{}, {}, "M1 (q = 1)", blue, Stroke::Dashed};
  for (const auto& x : o.segM1.x) {
    m1_left.x.push_back(x.p1);
    m1_left.y.push_back(x.z);
    m1_right.x.push_back(x.p2);
    m1_right.y.push_back(x.z);
  }
  for (const auto& x : o.segM0.x) {
    m0_left.x.push_back(x.p1);
    m0_left.y.push_back(x.z);
    m0_right.x.push_back(x.p2);
    m0_right.y.push_back(x.z);
  }
  Panel left{"(p1, z)", "p1", "z", {decimate(m1_left), decimate(m0_left)},
             {{o.jumps.A.p1, o.jumps.A.z, "A"}, {o.jumps.B.p1, o.jumps.B.z, "B"}}, {1.0}, {}};
  Panel right{"(p2, z)", "p2", "z", {decimate(m0_right), decimate(m1_right)},
              {{o.jumps.A.p2, o.jumps.A.z, "A"}, {o.jumps.B.p2, o.jumps.B.z, "B"}}, {o.params.r}, {}};
  return {{left, right}, 2, 440.0, 340.0};
}

Panel time_series_panel(const std::vector<double>& t, const std::vector<State>& s, const std::string& title) {
  Series p1{t, {}, "p1", "#1f4e9c", Stroke::Solid};
  Series p2{t, {}, "p2", "#2a8a3a", Stroke::Dashed};
  Series z{t, {}, "z", "#b22222", Stroke::Dotted, 2.0};
  Series q{t, {}, "q", "#555555", Stroke::DashDot};
  for (const auto& x : s) {
    p1.y.push_back(x.p1);
    p2.y.push_back(x.p2);
    z.y.push_back(x.z);
    q.y.push_back(x.q);
  }
  return {title, "t", "density / trait", {decimate(p1), decimate(p2), decimate(z), decimate(q)}, {}, {}, {}};
}

Figure scan_projections(const FamilyTable& tab) {
  const std::string blue = "#1f4e9c", green = "#2a8a3a";
  auto make = [&](const char* title, const char* xl, const char* yl, auto fx, auto fy) {
    Series a{{}, {}, "A", blue, Stroke::Solid, 1.6, true};
    Series b{{}, {}, "B", green, Stroke::Solid, 1.6, true};
    for (const auto& row : tab.rows) {
      a.x.push_back(fx(row.jumps.A));
      a.y.push_back(fy(row.jumps.A));
      b.x.push_back(fx(row.jumps.B));
      b.y.push_back(fy(row.jumps.B));
    }
    return Panel{title, xl, yl, {a, b}, {}, {}, {}};
  };
  auto p1 = [](const SlowPoint& s) { return s.p1; };
  auto p2 = [](const SlowPoint& s) { return s.p2; };
  auto z = [](const SlowPoint& s) { return s.z; };
  return {{make("(p1, p2)", "p1", "p2", p1, p2), make("(p1, z)", "p1", "z", p1, z),
           make("(p2, z)", "p2", "z", p2, z)},
          3, 380.0, 320.0};
}

ojson sync_summary(const SyncClass& c) {
  return {{"label", to_string(c.label)},
          {"orientation", to_string(c.orientation)},
          {"prey_antiphase", c.prey_antiphase},
          {"predator_minima_at_jumps", c.predator_minima_at_jumps}};
}

// ---------------------------------------------------------------------------
// construct

struct ConstructArgs {
  Common common;
  std::string seed;
  std::string A, B;
  std::string pin = "p1A,zA";
  bool balanced = false;
  std::size_t samples = 2000;
  int max_iter = 60;
  double tol = 1e-12;
};

void setup_construct(CLI::App* sub, ConstructArgs& a) {
  add_common(sub, a.common);
  sub->add_option("--seed", a.seed, "named starting guess");
  sub->add_option("--A", a.A, "guess for jump point A as p1,p2,z");
  sub->add_option("--B", a.B, "guess for jump point B as p1,p2,z");
  sub->add_option("--pin", a.pin, "family coordinates held fixed at their guessed values")->capture_default_str();
  sub->add_flag("--balanced", a.balanced, "solve for the member balancing the switching function");
  sub->add_option("--samples", a.samples, "samples per slow segment")->capture_default_str();
  sub->add_option("--max-iter", a.max_iter, "Newton iteration limit")->capture_default_str();
  sub->add_option("--tol", a.tol, "Newton residual target")->capture_default_str();
}

int run_construct(Invocation& inv, ConstructArgs& a) {
  Params p{a.common.r, a.common.m};
  JumpSeed seed;
  bool balanced = a.balanced;
  bool have_A = false, have_B = false;
  if (!a.seed.empty()) {
    const auto preset = find_orbit_preset(a.seed);
    if (!preset) {
      std::string names;
      for (const auto& q : orbit_presets()) names += (names.empty() ? "" : ", ") + q.name;
      throw InputError("unknown seed '" + a.seed + "' (known: " + names + ")");
    }
    if (!inv.given("r")) p.r = preset->params.r;
    if (!inv.given("m")) p.m = preset->params.m;
    seed = preset->seed;
    balanced = balanced || preset->balanced;
    have_A = have_B = true;
  }
  if (!a.A.empty()) {
    seed.A = parse_point(a.A, "--A");
    have_A = true;
  }
  if (!a.B.empty()) {
    seed.B = parse_point(a.B, "--B");
    have_B = true;
  }
  if (!have_A || !have_B) throw InputError("construct needs --seed NAME or both --A and --B");
  p.validate();
  if (a.samples < 2 || a.samples > 10'000'000) throw InputError("--samples must lie in [2, 1e7]");
  if (a.max_iter < 1) throw InputError("--max-iter must be positive");
  if (!(a.tol > 0.0)) throw InputError("--tol must be positive");
  const Pinning pin = parse_pin(a.pin);

  inv.set_out_dir(a.common.out);
  record_common(inv, a.common, p);
  if (!a.seed.empty()) {
    if (!inv.given("r")) inv.record("r", p.r, Source::Preset);
    if (!inv.given("m")) inv.record("m", p.m, Source::Preset);
  }
  inv.record("seed", a.seed.empty() ? ojson(nullptr) : ojson(a.seed));
  inv.record("pin", a.pin);
  inv.record("balanced", balanced);
  inv.record("samples", a.samples);
  inv.record("max-iter", a.max_iter);
  inv.record("tol", a.tol);
  inv.manifest().seeds = {{"A", point_json(seed.A)}, {"B", point_json(seed.B)}};

  NewtonOptions opt;
  opt.tol = a.tol;
  opt.accept_tol = std::max(opt.accept_tol, a.tol);
  opt.max_iterations = a.max_iter;
  SolveReport rep;
  const JumpPair j = balanced ? solve_balanced_jump_points(seed, p, opt, &rep) : solve_jump_points(seed, p, pin, opt, &rep);
  const SingularOrbit orbit = assemble_singular_orbit(j, p, a.samples);

  auto& out = inv.out();
  out << "A = " << point_text(j.A) << "\nB = " << point_text(j.B) << '\n';
  out << "T1 = " << fmt(j.T1) << ", T0 = " << fmt(j.T0) << ", period = " << fmt(j.period()) << '\n';
  out << "residual = " << fmt(rep.residual, 3) << " after " << rep.iterations << " iterations\n";

  ojson summary = {{"A", point_json(j.A)}, {"B", point_json(j.B)}, {"T0", j.T0}, {"T1", j.T1},
                   {"period", j.period()}, {"iterations", rep.iterations}, {"residual", rep.residual}};
  try {
    const SyncClass c = classify(orbit);
    out << "classification: " << to_string(c.label) << ", orientation " << to_string(c.orientation) << '\n';
    summary["classification"] = sync_summary(c);
  } catch (const Error& e) {
    summary["classification"] = {{"error", e.what()}};
  }
  inv.manifest().summary = summary;

  inv.emit("orbit", "orbit.json", orbit.to_json());
  inv.emit("dual-phase-plane", "orbit.svg", render_svg(dual_phase_plane(orbit)));
  inv.finish();
  return kSuccess;
}

// ---------------------------------------------------------------------------
// scan

struct ScanArgs {
  Common common;
  std::string pin = "p1A,zA";
  std::string first = "0.5,5,20";
  std::string second = "0.5,3,20";
  std::string seed;
  std::string A, B;
  int max_iter = 60;
};

void setup_scan(CLI::App* sub, ScanArgs& a) {
  add_common(sub, a.common);
  sub->add_option("--pin", a.pin, "pinned family coordinates")->capture_default_str();
  sub->add_option("--first", a.first, "grid of the first pinned coordinate as lo,hi,count")->capture_default_str();
  sub->add_option("--second", a.second, "grid of the second pinned coordinate as lo,hi,count")->capture_default_str();
  sub->add_option("--seed", a.seed, "named extra starting guess");
  sub->add_option("--A", a.A, "extra guess for A as p1,p2,z (with --B)");
  sub->add_option("--B", a.B, "extra guess for B as p1,p2,z (with --A)");
  sub->add_option("--max-iter", a.max_iter, "Newton iteration limit")->capture_default_str();
}

int run_scan(Invocation& inv, ScanArgs& a) {
  Params p{a.common.r, a.common.m};
  p.validate();
  FamilyGrid grid;
  grid.pin = parse_pin(a.pin);
  grid.first = parse_axis(a.first, "--first");
  grid.second = parse_axis(a.second, "--second");
  if (!a.seed.empty()) {
    const auto preset = find_orbit_preset(a.seed);
    if (!preset) throw InputError("unknown seed '" + a.seed + "'");
    grid.seeds.push_back(preset->seed);
  }
  if (!a.A.empty() || !a.B.empty()) {
    if (a.A.empty() || a.B.empty()) throw InputError("--A and --B must be given together");
    grid.seeds.push_back({parse_point(a.A, "--A"), parse_point(a.B, "--B")});
  }
  if (a.max_iter < 1) throw InputError("--max-iter must be positive");

  inv.set_out_dir(a.common.out);
  record_common(inv, a.common, p);
  inv.record("pin", a.pin);
  inv.record("first", a.first);
  inv.record("second", a.second);
  inv.record("max-iter", a.max_iter);
  ojson seeds = ojson::array();
  for (const auto& s : grid.seeds) seeds.push_back({{"A", point_json(s.A)}, {"B", point_json(s.B)}});
  inv.manifest().seeds = {{"extra", seeds}, {"multistart", grid.seeds.empty()}};

  NewtonOptions opt;
  opt.max_iterations = a.max_iter;
  const FamilyTable tab = scan_family(p, grid, opt);

  double worst = 0.0;
  int antiphase = 0;
  for (const auto& row : tab.rows) {
    for (double c : direct_conditions(row.jumps, p)) worst = std::max(worst, std::abs(c));
    if (row.jumps.A.z > 1.0 && row.jumps.B.z > 1.0) ++antiphase;
  }
  auto& out = inv.out();
  out << tab.rows.size() << " of " << grid.first.count * grid.second.count << " grid points converged\n";
  out << "largest direct-condition residual " << fmt(worst, 3) << '\n';
  out << antiphase << " rows with zA > 1 and zB > 1\n";
  inv.manifest().summary = {{"grid_points", grid.first.count * grid.second.count},
                            {"rows", tab.rows.size()},
                            {"max_direct_residual", worst},
                            {"rows_zA_zB_above_1", antiphase}};

  inv.emit("family-json", "family.json", tab.to_json());
  inv.emit("family-csv", "family.csv", tab.to_csv());
  inv.emit("projections", "family.svg", render_svg(scan_projections(tab)));
  inv.finish();
  return kSuccess;
}

// ---------------------------------------------------------------------------
// simulate / continue

struct SimArgs {
  Common common;
  double eps = 0.025;
  double t_end = 50.0;
  std::string state = "1.18,0.87,1.50,0.99";
  double rel_tol = 1e-10;
  double abs_tol = 1e-10;
  double max_step = 0.0;
  std::size_t samples = 0;
  std::string schedule;  // continue only
  std::string compare;   // simulate only: orbit JSON for the closeness check
};

void add_integrator_options(CLI::App* sub, SimArgs& a) {
  sub->add_option("--state", a.state, "initial state as p1,p2,z,q")->capture_default_str();
  sub->add_option("--rel-tol", a.rel_tol, "relative tolerance")->capture_default_str();
  sub->add_option("--abs-tol", a.abs_tol, "absolute tolerance")->capture_default_str();
  sub->add_option("--max-step", a.max_step, "step bound; 0 selects eps/2")->capture_default_str();
}

void setup_simulate(CLI::App* sub, SimArgs& a) {
  add_common(sub, a.common);
  sub->add_option("--eps", a.eps, "time-scale separation")->capture_default_str();
  sub->add_option("--t-end", a.t_end, "duration")->capture_default_str();
  sub->add_option("--samples", a.samples, "output samples; 0 selects max(2000, 8 t_end / eps) + 1")
      ->capture_default_str();
  sub->add_option("--compare", a.compare, "singular orbit JSON to measure the distance to (one period)");
  add_integrator_options(sub, a);
}

void setup_continue(CLI::App* sub, SimArgs& a) {
  add_common(sub, a.common);
  sub->add_option("--schedule", a.schedule, "eps:duration entries separated by commas (default: 30-step schedule)");
  add_integrator_options(sub, a);
}

void record_integrator(Invocation& inv, const SimArgs& a) {
  inv.record("state", a.state);
  inv.record("rel-tol", a.rel_tol);
  inv.record("abs-tol", a.abs_tol);
  inv.record("max-step", a.max_step);
}

double q_min(const Trajectory& tr) {
  double v = 1.0;
  for (const auto& s : tr.states) v = std::min(v, s.q);
  return v;
}

double q_max(const Trajectory& tr) {
  double v = 0.0;
  for (const auto& s : tr.states) v = std::max(v, s.q);
  return v;
}

int run_simulate(Invocation& inv, SimArgs& a) {
  Params p{a.common.r, a.common.m};
  p.validate();
  const State s0 = parse_state(a.state);
  SimConfig c{a.eps, a.t_end, a.rel_tol, a.abs_tol, a.max_step, a.samples};
  c.validate();
  std::optional<SingularOrbit> orbit;
  if (!a.compare.empty()) orbit = SingularOrbit::from_json(read_text(a.compare));

  inv.set_out_dir(a.common.out);
  record_common(inv, a.common, p);
  inv.record("eps", a.eps);
  inv.record("t-end", a.t_end);
  inv.record("samples", c.effective_samples());
  record_integrator(inv, a);
  inv.record("compare", a.compare.empty() ? ojson(nullptr) : ojson(a.compare));
  inv.manifest().seeds = {{"state", state_json(s0)}};

  const Trajectory tr = integrate(s0, p, c);
  const auto events = detect_jump_events(tr);
  int up = 0;
  for (const auto& e : events) up += e.direction == JumpDirection::Up;

  auto& out = inv.out();
  out << tr.times.size() << " samples up to t = " << fmt(tr.times.back()) << ", final state "
      << "(" << fmt(tr.states.back().p1) << ", " << fmt(tr.states.back().p2) << ", " << fmt(tr.states.back().z)
      << ", " << fmt(tr.states.back().q) << ")\n";
  out << "q in [" << fmt(q_min(tr)) << ", " << fmt(q_max(tr)) << "], " << up << " up and "
      << events.size() - up << " down jumps\n";
  ojson summary = {{"samples", tr.times.size()},  {"final_state", state_json(tr.states.back())},
                   {"q_min", q_min(tr)},          {"q_max", q_max(tr)},
                   {"jumps_up", up},              {"jumps_down", static_cast<int>(events.size()) - up},
                   {"max_step", c.effective_max_step()}};
  if (orbit) {
    const double horizon = std::min(orbit->period, tr.times.back());
    const double d = closeness_check(tr, *orbit, horizon);
    out << "distance to the singular orbit over t <= " << fmt(horizon) << ": " << fmt(d) << '\n';
    summary["closeness"] = {{"horizon", horizon}, {"distance", d}};
  }
  inv.manifest().summary = summary;

  inv.emit("trajectory-csv", "trajectory.csv", tr.to_csv());
  inv.emit("trajectory-json", "trajectory.json", tr.to_json());
  Figure fig{{time_series_panel(tr.times, tr.states, "eps = " + fmt(c.eps))}, 1, 900.0, 360.0};
  inv.emit("time-series", "trajectory.svg", render_svg(fig));
  inv.finish();
  return kSuccess;
}

int run_continue(Invocation& inv, SimArgs& a) {
  Params p{a.common.r, a.common.m};
  p.validate();
  const State s0 = parse_state(a.state);
  const auto schedule = a.schedule.empty() ? default_schedule() : parse_schedule(a.schedule);
  SimConfig base;
  base.rel_tol = a.rel_tol;
  base.abs_tol = a.abs_tol;
  base.max_step = a.max_step;

  inv.set_out_dir(a.common.out);
  record_common(inv, a.common, p);
  ojson sched = ojson::array();
  for (const auto& e : schedule) sched.push_back({e.eps, e.duration});
  inv.record("schedule", sched);
  record_integrator(inv, a);
  inv.manifest().seeds = {{"state", state_json(s0)}};

  const auto runs = continue_in_eps(s0, p, schedule, base);

  std::string csv = "run,eps,t,p1,p2,z,q\n";
  std::vector<double> t_all;
  std::vector<State> s_all;
  std::vector<double> boundaries;
  ojson per_run = ojson::array();
  double offset = 0.0;
  auto& out = inv.out();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const Trajectory& tr = runs[k];
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      const State& s = tr.states[i];
      csv += std::to_string(k) + ',' + shortest(tr.config.eps) + ',' + shortest(offset + tr.times[i]) + ',' +
             shortest(s.p1) + ',' + shortest(s.p2) + ',' + shortest(s.z) + ',' + shortest(s.q) + '\n';
      if (i > 0 || k == 0) {
        t_all.push_back(offset + tr.times[i]);
        s_all.push_back(s);
      }
    }
    ojson entry = {{"run", k},
                   {"eps", tr.config.eps},
                   {"duration", tr.config.t_end},
                   {"t_offset", offset},
                   {"q_min", q_min(tr)},
                   {"q_max", q_max(tr)},
                   {"final_state", state_json(tr.states.back())}};
    std::string label = "-";
    try {
      const SyncClass c = classify(tr);
      entry["classification"] = sync_summary(c);
      label = std::string(to_string(c.label)) + " / " + to_string(c.orientation);
    } catch (const Error& e) {
      entry["classification"] = {{"error", e.what()}};
    }
    out << "run " << k << ": eps = " << fmt(tr.config.eps, 4) << ", min q = " << fmt(q_min(tr), 4) << ", "
        << label << '\n';
    per_run.push_back(entry);
    offset += tr.config.t_end;
    boundaries.push_back(offset);
  }
  if (!boundaries.empty()) boundaries.pop_back();
  inv.manifest().summary = {{"runs", runs.size()}, {"final_eps", runs.back().config.eps},
                            {"final_q_min", q_min(runs.back())}};

  inv.emit("continuation-csv", "continuation.csv", csv);
  inv.emit("continuation-summary", "continuation.json", ojson{{"runs", per_run}}.dump(2) + "\n");
  inv.emit("final-trajectory", "continue_final.json", runs.back().to_json());
  Panel all = time_series_panel(t_all, s_all, "continuation in eps");
  all.vlines = boundaries;
  const Trajectory& last = runs.back();
  Panel fin = time_series_panel(last.times, last.states, "final run, eps = " + fmt(last.config.eps));
  inv.emit("time-series", "continuation.svg", render_svg(Figure{{all, fin}, 1, 1000.0, 340.0}));
  inv.finish();
  return kSuccess;
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyArgs {
  Common common;
  std::string input;
  double eps = 0.025;
  std::string name = "classification";
};

void setup_classify(CLI::App* sub, ClassifyArgs& a) {
  add_common(sub, a.common);
  sub->add_option("input,--input", a.input, "orbit JSON, trajectory JSON or trajectory CSV")->required();
  sub->add_option("--eps", a.eps, "eps of a CSV trajectory (JSON inputs carry their own)")->capture_default_str();
  sub->add_option("--name", a.name, "stem of the report file")->capture_default_str();
}

int run_classify(Invocation& inv, ClassifyArgs& a) {
  const std::string text = read_text(a.input);
  std::string kind;
  SyncClass c;
  Params p{a.common.r, a.common.m};
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    ojson root;
    try {
      root = ojson::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw InputError("'" + a.input + "' is not valid JSON: " + e.what());
    }
    kind = root.value("kind", "");
    if (kind == "singular-orbit") {
      const SingularOrbit o = SingularOrbit::from_json(text);
      p = o.params;
      c = classify(o);
    } else if (kind == "trajectory") {
      const Trajectory tr = Trajectory::from_json(text);
      p = tr.params;
      c = classify(tr);
    } else {
      throw InputError("'" + a.input + "' is neither a singular orbit nor a trajectory");
    }
  } else {
    kind = "trajectory-csv";
    p.validate();
    SimConfig cfg;
    cfg.eps = a.eps;
    cfg.validate();
    const Trajectory tr = Trajectory::from_csv(text, p, cfg);
    c = classify(tr);
  }

  inv.set_out_dir(a.common.out);
  record_common(inv, a.common, p);
  inv.record("input", a.input);
  if (kind == "trajectory-csv") inv.record("eps", a.eps);
  inv.record("name", a.name);

  ojson report = ojson::parse(report_json(c));
  ojson full = {{"input", a.input}, {"kind", kind}, {"r", p.r}, {"m", p.m}};
  for (auto it = report.begin(); it != report.end(); ++it) full[it.key()] = it.value();

  auto& out = inv.out();
  out << "label: " << to_string(c.label) << '\n';
  out << "orientation: " << to_string(c.orientation) << " (prey 1: " << to_string(c.orientation_detail.prey1)
      << ", prey 2: " << to_string(c.orientation_detail.prey2) << ")\n";
  out << "prey antiphase: " << (c.prey_antiphase ? "yes" : "no")
      << ", predator minima at jumps: " << (c.predator_minima_at_jumps ? "yes" : "no") << '\n';
  inv.manifest().summary = sync_summary(c);
  inv.emit("classification", a.name + ".json", full.dump(2) + "\n");
  inv.finish();
  return kSuccess;
}

// ---------------------------------------------------------------------------

void print_usage(std::ostream& out) {
  out << "usage: relaxor <construct|scan|simulate|continue|classify> [options]\n"
         "       relaxor <command> --help   for the options of one command\n"
         "       relaxor --version\n";
}

// `--key value` tokens for the config entries, placed before the user's own
// arguments so that later (command-line) occurrences win.
std::vector<std::string> config_tokens(const std::vector<ConfigEntry>& entries) {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (e.key == "config") throw Error(ErrorCode::InvalidConfig, "config files cannot include other config files");
    if (kBooleanKeys.count(e.key)) {
      if (e.value == "true" || e.value == "1" || e.value == "yes" || e.value == "on") {
        out.push_back("--" + e.key);
      } else if (!(e.value == "false" || e.value == "0" || e.value == "no" || e.value == "off")) {
        throw Error(ErrorCode::InvalidConfig, "config line " + std::to_string(e.line) + ": '" + e.key +
                                                  "' expects true or false");
      }
      continue;
    }
    out.push_back("--" + e.key);
    out.push_back(e.value);
  }
  return out;
}

std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  return path;
}

std::set<std::string> flag_keys_of(const std::vector<std::string>& args) {
  std::set<std::string> keys;
  for (const auto& a : args) {
    if (a.size() > 2 && a.rfind("--", 0) == 0) {
      std::string k = a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2);
      keys.insert(k);
    }
  }
  return keys;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    print_usage(err);
    return kInvalidInput;
  }
  if (args[0] == "--help" || args[0] == "-h") {
    print_usage(out);
    return kSuccess;
  }
  if (args[0] == "--version") {
    out << "relaxor " << relaxor::version << '\n';
    return kSuccess;
  }
  const std::string command = args[0];
  if (std::find(std::begin(kCommands), std::end(kCommands), command) == std::end(kCommands)) {
    err << "relaxor: unknown command '" << command << "'\n";
    print_usage(err);
    return kInvalidInput;
  }

  const std::vector<std::string> rest(args.begin() + 1, args.end());
  Invocation inv(command, args, out);
  try {
    std::vector<ConfigEntry> entries;
    if (const auto cfg = find_config_path(rest)) entries = load_config(*cfg);
    for (const auto& e : entries) inv.config_keys.insert(e.key);
    inv.flag_keys = flag_keys_of(rest);

    std::vector<std::string> merged = config_tokens(entries);
    merged.insert(merged.end(), rest.begin(), rest.end());

    CLI::App app{"relaxor " + command, "relaxor " + command};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    ConstructArgs construct;
    ScanArgs scan;
    SimArgs sim;
    ClassifyArgs cls;
    std::function<int()> body;
    if (command == "construct") {
      setup_construct(&app, construct);
      body = [&] { return run_construct(inv, construct); };
    } else if (command == "scan") {
      setup_scan(&app, scan);
      body = [&] { return run_scan(inv, scan); };
    } else if (command == "simulate") {
      setup_simulate(&app, sim);
      body = [&] { return run_simulate(inv, sim); };
    } else if (command == "continue") {
      setup_continue(&app, sim);
      body = [&] { return run_continue(inv, sim); };
    } else {
      setup_classify(&app, cls);
      body = [&] { return run_classify(inv, cls); };
    }

    try {
      std::vector<std::string> reversed(merged.rbegin(), merged.rend());
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kSuccess;
    } catch (const CLI::ParseError& e) {
      err << "relaxor " << command << ": " << e.what() << '\n';
      return kInvalidInput;
    }
    return body();
  } catch (const InputError& e) {
    err << "relaxor " << command << ": " << e.what() << '\n';
    return kInvalidInput;
  } catch (const Error& e) {
    err << "relaxor " << command << ": " << to_string(e.code()) << ": " << e.what() << '\n';
    return is_input_error(e.code()) ? kInvalidInput : kNumericalFailure;
  } catch (const std::exception& e) {
    err << "relaxor " << command << ": " << e.what() << '\n';
    return kNumericalFailure;
  }
}

}  // namespace relaxor::cli
