#include "relaxor/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "relaxor/error.hpp"
#include "relaxor/ode.hpp"

namespace relaxor {

using ojson = nlohmann::ordered_json;

namespace {

double logistic(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double logit(double q) { return std::log(q) - std::log1p(-q); }

struct LogitRhs {
  Params p;
  double eps;
  Vec<4> operator()(double, const Vec<4>& y) const {
    const double q = logistic(y[3]);
    const double omq = logistic(-y[3]);
    return {(1.0 - q * y[2]) * y[0], (p.r - omq * y[2]) * y[1], (q * y[0] + omq * y[1] - 1.0) * p.m * y[2],
            (y[0] - y[1]) / eps};
  }
};

// q held at 0 or 1: the invariant slow planes
struct PlaneRhs {
  Params p;
  double q;
  Vec<4> operator()(double, const Vec<4>& y) const {
    return {(1.0 - q * y[2]) * y[0], (p.r - (1.0 - q) * y[2]) * y[1], (q * y[0] + (1.0 - q) * y[1] - 1.0) * p.m * y[2],
            0.0};
  }
};

OdeOptions ode_options(const SimConfig& c) {
  OdeOptions o;
  o.rtol = c.rel_tol;
  o.atol = c.abs_tol;
  o.max_step = c.effective_max_step();
  return o;
}

void check_state(const State& s) {
  auto ok = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!ok(s.p1) || !ok(s.p2) || !ok(s.z)) {
    throw Error(ErrorCode::ParameterDomain, "initial densities must be positive");
  }
  if (!(s.q >= 0.0 && s.q <= 1.0)) throw Error(ErrorCode::ParameterDomain, "initial q must lie in [0, 1]");
}

// Integrates from y0 (with u possibly infinite on a slow plane) and samples uniformly.
Trajectory run(const Vec<4>& y0, double q_plane, const Params& p, const SimConfig& c) {
  Trajectory tr;
  tr.params = p;
  tr.config = c;
  const std::size_t n = c.effective_samples();
  tr.times.resize(n);
  for (std::size_t i = 0; i < n; ++i) tr.times[i] = c.t_end * static_cast<double>(i) / static_cast<double>(n - 1);
  tr.times.back() = c.t_end;
  const bool on_plane = std::isnan(q_plane) == false;
  const OdeOptions o = ode_options(c);
  std::vector<Vec<4>> ys;
  if (on_plane) {
    Vec<4> start = y0;
    start[3] = 0.0;
    ys = integrate_sampled<4>(PlaneRhs{p, q_plane}, 0.0, start, tr.times, o);
  } else {
    ys = integrate_sampled<4>(LogitRhs{p, c.eps}, 0.0, y0, tr.times, o);
  }
  tr.states.reserve(n);
  if (!on_plane) tr.logit_q.reserve(n);
  for (const auto& y : ys) {
    tr.states.push_back({y[0], y[1], y[2], on_plane ? q_plane : logistic(y[3])});
    if (!on_plane) tr.logit_q.push_back(y[3]);
  }
  return tr;
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void SimConfig::validate() const {
  std::ostringstream os;
  if (!(eps > 0.0) || !std::isfinite(eps)) os << "eps must be positive (got " << eps << ")";
  else if (!(t_end > 0.0) || !std::isfinite(t_end)) os << "t_end must be positive (got " << t_end << ")";
  else if (!(rel_tol > 0.0 && rel_tol < 1.0)) os << "rel_tol must lie in (0, 1) (got " << rel_tol << ")";
  else if (!(abs_tol > 0.0 && abs_tol < 1.0)) os << "abs_tol must lie in (0, 1) (got " << abs_tol << ")";
  else if (!(max_step >= 0.0)) os << "max_step must be non-negative (got " << max_step << ")";
  else if (samples == 1) os << "samples must be 0 (automatic) or at least 2";
  const std::string msg = os.str();
  if (!msg.empty()) throw Error(ErrorCode::ParameterDomain, msg);
}

double SimConfig::effective_max_step() const { return max_step > 0.0 ? max_step : 0.5 * eps; }

std::size_t SimConfig::effective_samples() const {
  if (samples >= 2) return samples;
  const double dense = std::ceil(8.0 * t_end / eps);
  return static_cast<std::size_t>(std::max(2000.0, std::min(dense, 2e6))) + 1;
}

Trajectory integrate(const State& s0, const Params& p, const SimConfig& c) {
  p.validate();
  c.validate();
  check_state(s0);
  if (s0.q == 0.0 || s0.q == 1.0) return run({s0.p1, s0.p2, s0.z, 0.0}, s0.q, p, c);
  return run({s0.p1, s0.p2, s0.z, logit(s0.q)}, std::numeric_limits<double>::quiet_NaN(), p, c);
}

State flow(const State& s0, const Params& p, const SimConfig& c, double duration) {
  p.validate();
  c.validate();
  check_state(s0);
  if (duration == 0.0) return s0;
  const bool plane = s0.q == 0.0 || s0.q == 1.0;
  const Vec<4> y0{s0.p1, s0.p2, s0.z, plane ? 0.0 : logit(s0.q)};
  const double sign = duration > 0.0 ? 1.0 : -1.0;
  Vec<4> y = y0;
  auto keep_last = [&](const DenseStep<4>& st) {
    y = st.y1;
    return true;
  };
  const OdeOptions o = ode_options(c);
  if (plane) {
    const PlaneRhs f{p, s0.q};
    integrate_dp5<4>([&](double t, const Vec<4>& x) {
      auto d = f(t, x);
      for (double& v : d) v *= sign;
      return d;
    }, 0.0, y0, std::abs(duration), o, keep_last);
    return {y[0], y[1], y[2], s0.q};
  }
  const LogitRhs f{p, c.eps};
  integrate_dp5<4>([&](double t, const Vec<4>& x) {
    auto d = f(t, x);
    for (double& v : d) v *= sign;
    return d;
  }, 0.0, y0, std::abs(duration), o, keep_last);
  return {y[0], y[1], y[2], logistic(y[3])};
}

std::vector<ScheduleEntry> default_schedule() {
  std::vector<ScheduleEntry> s;
  auto block = [&](double a, double b, double dur) {
    for (int i = 0; i < 10; ++i) s.push_back({a + (b - a) * i / 9.0, dur});
  };
  block(0.025, 0.2, 50.0);
  block(0.2, 0.5, 50.0);
  block(0.5, 1.0, 30.0);
  return s;
}

std::vector<Trajectory> continue_in_eps(const State& s0, const Params& p, const std::vector<ScheduleEntry>& schedule,
                                        const SimConfig& base) {
  p.validate();
  check_state(s0);
  if (schedule.empty()) throw Error(ErrorCode::InvalidConfig, "continuation schedule is empty");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const auto& e = schedule[k];
    if (!(e.eps > 0.0) || !(e.duration > 0.0)) {
      std::ostringstream os;
      os << "schedule entry " << k << " needs eps > 0 and duration > 0";
      throw Error(ErrorCode::InvalidConfig, os.str());
    }
    if (k > 0 && e.eps < schedule[k - 1].eps) {
      std::ostringstream os;
      os << "schedule entry " << k << " decreases eps (" << schedule[k - 1].eps << " -> " << e.eps << ")";
      throw Error(ErrorCode::InvalidConfig, os.str());
    }
  }
  std::vector<Trajectory> out;
  out.reserve(schedule.size());
  const bool plane = s0.q == 0.0 || s0.q == 1.0;
  Vec<4> y{s0.p1, s0.p2, s0.z, plane ? 0.0 : logit(s0.q)};
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    SimConfig c = base;
    c.eps = schedule[k].eps;
    c.t_end = schedule[k].duration;
    try {
      c.validate();
      out.push_back(run(y, plane ? s0.q : std::numeric_limits<double>::quiet_NaN(), p, c));
    } catch (const Error& e) {
      std::ostringstream os;
      os << "schedule entry " << k << " (eps = " << c.eps << "): " << e.what();
      throw Error(e.code(), os.str());
    }
    const Trajectory& last = out.back();
    y = {last.states.back().p1, last.states.back().p2, last.states.back().z,
         last.logit_q.empty() ? 0.0 : last.logit_q.back()};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Events

const char* to_string(JumpDirection d) { return d == JumpDirection::Up ? "up" : "down"; }

namespace {

struct Hermite {
  double y0, y1, d0, d1, h;
  double at(double th) const {
    const double th2 = th * th, th3 = th2 * th;
    return (2 * th3 - 3 * th2 + 1) * y0 + (th3 - 2 * th2 + th) * h * d0 + (-2 * th3 + 3 * th2) * y1 +
           (th3 - th2) * h * d1;
  }
};

}  // namespace

std::vector<JumpEvent> detect_jump_events(const Trajectory& tr, double threshold) {
  std::vector<JumpEvent> events;
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::ParameterDomain, "jump threshold must lie in (0, 1)");
  }
  const std::size_t n = tr.times.size();
  if (n < 2) return events;
  const bool use_logit = tr.logit_q.size() == n;
  const double level = use_logit ? logit(threshold) : threshold;
  const double eps = tr.config.eps;
  auto value = [&](std::size_t i) { return use_logit ? tr.logit_q[i] : tr.states[i].q; };
  auto deriv = [&](std::size_t i) {
    const State& s = tr.states[i];
    const StateDeriv d = full_rhs(s, tr.params, eps);
    return std::array<double, 4>{d.p1, d.p2, d.z, use_logit ? (s.p1 - s.p2) / eps : d.q};
  };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = value(i) - level;
    const double b = value(i + 1) - level;
    const bool up = a < 0.0 && b >= 0.0;
    const bool down = a > 0.0 && b <= 0.0;
    if (!up && !down) continue;
    const double h = tr.times[i + 1] - tr.times[i];
    const auto da = deriv(i);
    const auto db = deriv(i + 1);
    const Hermite hq{a, b, da[3], db[3], h};
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double v = hq.at(mid);
      if ((v < 0.0) == up) lo = mid;
      else hi = mid;
    }
    const double th = 0.5 * (lo + hi);
    const State& sa = tr.states[i];
    const State& sb = tr.states[i + 1];
    JumpEvent ev;
    ev.t = tr.times[i] + th * h;
    ev.s.p1 = Hermite{sa.p1, sb.p1, da[0], db[0], h}.at(th);
    ev.s.p2 = Hermite{sa.p2, sb.p2, da[1], db[1], h}.at(th);
    ev.s.z = Hermite{sa.z, sb.z, da[2], db[2], h}.at(th);
    ev.s.q = threshold;
    ev.direction = up ? JumpDirection::Up : JumpDirection::Down;
    events.push_back(ev);
  }
  return events;
}

// ---------------------------------------------------------------------------
// Closeness

namespace {

double dist2_segment(const SlowPoint& x, const SlowPoint& a, const SlowPoint& b) {
  const double vx = b.p1 - a.p1, vy = b.p2 - a.p2, vz = b.z - a.z;
  const double wx = x.p1 - a.p1, wy = x.p2 - a.p2, wz = x.z - a.z;
  const double vv = vx * vx + vy * vy + vz * vz;
  double s = vv > 0.0 ? (wx * vx + wy * vy + wz * vz) / vv : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  const double dx = wx - s * vx, dy = wy - s * vy, dz = wz - s * vz;
  return dx * dx + dy * dy + dz * dz;
}

double dist2_polyline(const SlowPoint& x, const std::vector<SlowPoint>& line) {
  if (line.empty()) return std::numeric_limits<double>::infinity();
  if (line.size() == 1) return dist2_segment(x, line[0], line[0]);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < line.size(); ++i) {
    const double dx = x.p1 - line[i].p1, dy = x.p2 - line[i].p2, dz = x.z - line[i].z;
    const double d = dx * dx + dy * dy + dz * dz;
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  // the nearest point lies on a segment next to the nearest vertex for densely sampled curves
  double d = best_d;
  if (best > 0) d = std::min(d, dist2_segment(x, line[best - 1], line[best]));
  if (best + 1 < line.size()) d = std::min(d, dist2_segment(x, line[best], line[best + 1]));
  return d;
}

}  // namespace

double distance_to_orbit(const SlowPoint& x, const SingularOrbit& orbit) {
  return std::sqrt(std::min(dist2_polyline(x, orbit.segM1.x), dist2_polyline(x, orbit.segM0.x)));
}

double closeness_check(const Trajectory& tr, const SingularOrbit& orbit, double horizon) {
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.times.size() && tr.times[i] <= horizon; ++i) {
    const State& s = tr.states[i];
    worst = std::max(worst, distance_to_orbit({s.p1, s.p2, s.z}, orbit));
  }
  return worst;
}

JumpPair nearest_balanced_jump_points(const SlowPoint& x, const Params& p, double p1A_lo, double p1A_hi) {
  p.validate();
  if (!(p1A_lo > 1.0) || !(p1A_hi > p1A_lo)) {
    throw Error(ErrorCode::ParameterDomain, "balanced search needs 1 < p1A_lo < p1A_hi");
  }
  struct Sample {
    double a;
    JumpPair j;
    double d;
  };
  const double zc = 1.0 + p.r;
  auto solve_at = [&](double a, const JumpSeed& seed) {
    JumpSeed s = seed;
    s.A.p1 = a;
    const JumpPair j = solve_balanced_jump_points(s, p);
    const SingularOrbit o = assemble_singular_orbit(j, p, 600);
    return Sample{a, j, distance_to_orbit(x, o)};
  };

  // walk the curve outwards from the small-amplitude end
  std::vector<Sample> walk;
  JumpSeed seed{{p1A_lo, 2.0 - p1A_lo, zc}, {2.0 - p1A_lo, p1A_lo, zc}};
  constexpr int kSteps = 30;
  for (int i = 0; i <= kSteps; ++i) {
    const double a = p1A_lo + (p1A_hi - p1A_lo) * i / kSteps;
    try {
      walk.push_back(solve_at(a, seed));
      seed = {walk.back().j.A, walk.back().j.B};
    } catch (const Error&) {
      break;
    }
  }
  if (walk.empty()) throw Error(ErrorCode::NoSolution, "no balanced singular orbit found in the search range");
  std::size_t k = 0;
  for (std::size_t i = 1; i < walk.size(); ++i) {
    if (walk[i].d < walk[k].d) k = i;
  }
  if (walk.size() < 3) return walk[k].j;

  // golden section inside the bracketing samples
  const std::size_t lo_i = k == 0 ? 0 : k - 1;
  const std::size_t hi_i = std::min(k + 1, walk.size() - 1);
  double a = walk[lo_i].a, b = walk[hi_i].a;
  const JumpSeed near{walk[k].j.A, walk[k].j.B};
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  Sample c = solve_at(b - g * (b - a), near);
  Sample d = solve_at(a + g * (b - a), near);
  for (int it = 0; it < 40 && b - a > 1e-7; ++it) {
    if (c.d < d.d) {
      b = d.a;
      d = c;
      c = solve_at(b - g * (b - a), {d.j.A, d.j.B});
    } else {
      a = c.a;
      c = d;
      d = solve_at(a + g * (b - a), {c.j.A, c.j.B});
    }
  }
  const Sample& best = c.d < d.d ? c : d;
  return best.d <= walk[k].d ? best.j : walk[k].j;
}

// ---------------------------------------------------------------------------
// Serialization

std::string Trajectory::to_csv() const {
  std::ostringstream os;
  os << "t,p1,p2,z,q\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    const State& s = states[i];
    os << fmt(times[i]) << ',' << fmt(s.p1) << ',' << fmt(s.p2) << ',' << fmt(s.z) << ',' << fmt(s.q) << '\n';
  }
  return os.str();
}

std::string Trajectory::to_json() const {
  ojson root;
  root["kind"] = "trajectory";
  root["params"] = {{"r", params.r}, {"m", params.m}};
  root["config"] = {{"eps", config.eps},         {"t_end", config.t_end},       {"rel_tol", config.rel_tol},
                    {"abs_tol", config.abs_tol}, {"max_step", config.max_step}, {"samples", config.samples}};
  std::vector<double> p1, p2, z, q;
  for (const State& s : states) {
    p1.push_back(s.p1);
    p2.push_back(s.p2);
    z.push_back(s.z);
    q.push_back(s.q);
  }
  root["t"] = times;
  root["p1"] = p1;
  root["p2"] = p2;
  root["z"] = z;
  root["q"] = q;
  if (!logit_q.empty()) root["logit_q"] = logit_q;
  return root.dump();
}

Trajectory Trajectory::from_json(const std::string& text) {
  Trajectory tr;
  try {
    const ojson root = ojson::parse(text);
    const auto& pj = root.at("params");
    tr.params = {pj.at("r").get<double>(), pj.at("m").get<double>()};
    const auto& cj = root.at("config");
    tr.config.eps = cj.at("eps").get<double>();
    tr.config.t_end = cj.at("t_end").get<double>();
    tr.config.rel_tol = cj.at("rel_tol").get<double>();
    tr.config.abs_tol = cj.at("abs_tol").get<double>();
    tr.config.max_step = cj.at("max_step").get<double>();
    tr.config.samples = cj.at("samples").get<std::size_t>();
    tr.times = root.at("t").get<std::vector<double>>();
    const auto p1 = root.at("p1").get<std::vector<double>>();
    const auto p2 = root.at("p2").get<std::vector<double>>();
    const auto z = root.at("z").get<std::vector<double>>();
    const auto q = root.at("q").get<std::vector<double>>();
    const std::size_t n = tr.times.size();
    if (p1.size() != n || p2.size() != n || z.size() != n || q.size() != n) {
      throw Error(ErrorCode::InvalidConfig, "trajectory columns differ in length");
    }
    for (std::size_t i = 0; i < n; ++i) tr.states.push_back({p1[i], p2[i], z[i], q[i]});
    if (root.contains("logit_q")) tr.logit_q = root.at("logit_q").get<std::vector<double>>();
    if (!tr.logit_q.empty() && tr.logit_q.size() != n) {
      throw Error(ErrorCode::InvalidConfig, "logit_q column differs in length");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed trajectory: ") + e.what());
  }
  return tr;
}

Trajectory Trajectory::from_csv(const std::string& text, const Params& p, const SimConfig& c) {
  Trajectory tr;
  tr.params = p;
  tr.config = c;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidConfig, "empty trajectory CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,p1,p2,z,q") throw Error(ErrorCode::InvalidConfig, "trajectory CSV header must be t,p1,p2,z,q");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::array<double, 5> v{};
    const char* ptr = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t k = 0; k < 5; ++k) {
      const auto res = std::from_chars(ptr, end, v[k]);
      if (res.ec != std::errc()) {
        throw Error(ErrorCode::InvalidConfig, "bad number on trajectory CSV line " + std::to_string(lineno));
      }
      ptr = res.ptr;
      if (k < 4) {
        if (ptr == end || *ptr != ',') {
          throw Error(ErrorCode::InvalidConfig, "expected 5 columns on trajectory CSV line " + std::to_string(lineno));
        }
        ++ptr;
      }
    }
    tr.times.push_back(v[0]);
    tr.states.push_back({v[1], v[2], v[3], v[4]});
  }
  return tr;
}

}  // namespace relaxor
