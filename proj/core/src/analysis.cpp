#include "relaxor/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "relaxor/error.hpp"
#include "relaxor/ode.hpp"

namespace relaxor {

using ojson = nlohmann::ordered_json;

const char* to_string(Variable v) {
  switch (v) {
    case Variable::p1: return "p1";
    case Variable::p2: return "p2";
    case Variable::z: return "z";
  }
  return "?";
}

const char* to_string(ExtremumKind k) { return k == ExtremumKind::Max ? "max" : "min"; }

const char* to_string(ExtremumLocation l) { return l == ExtremumLocation::Interior ? "interior" : "at-jump"; }

const char* to_string(SyncLabel l) {
  switch (l) {
    case SyncLabel::PreyPreyAntiphase: return "PreyPreyAntiphase";
    case SyncLabel::PredatorPreyPrey: return "PredatorPreyPrey";
    case SyncLabel::PredatorPrey2Alternating: return "PredatorPrey2Alternating";
    case SyncLabel::Unclassified: return "Unclassified";
  }
  return "?";
}

const char* to_string(Orientation o) {
  switch (o) {
    case Orientation::Clockwise: return "Clockwise";
    case Orientation::Counterclockwise: return "Counterclockwise";
    case Orientation::Neither: return "Neither";
  }
  return "?";
}

TimeSeries series_of(const Trajectory& tr) { return {tr.times, tr.states, 0.0}; }

TimeSeries series_of(const SingularOrbit& orbit) {
  TimeSeries ts;
  orbit.time_series(ts.t, ts.s);
  ts.period = orbit.period;
  return ts;
}

std::vector<JumpEvent> jump_events_of(const SingularOrbit& orbit) {
  const JumpPair& j = orbit.jumps;
  return {{0.0, {j.A.p1, j.A.p2, j.A.z, 0.5}, JumpDirection::Up}, {j.T1, {j.B.p1, j.B.p2, j.B.z, 0.5}, JumpDirection::Down}};
}

double default_align_tol(const SingularOrbit& orbit) { return 1e-3 * orbit.period; }

double default_align_tol(const Trajectory& tr) { return 5.0 * tr.config.eps; }

namespace {

double component(const State& s, int v) { return v == 0 ? s.p1 : (v == 1 ? s.p2 : s.z); }

std::vector<Extremum> turning_points(const std::vector<double>& t, const std::vector<double>& x) {
  std::vector<Extremum> out;
  const std::size_t n = x.size();
  if (n < 3) return out;
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  const double scale = *mx - *mn;
  const double flat = 1e-13 * (scale + std::abs(*mx));
  int dir = 0;
  std::size_t last_move = 0;  // index where the latest non-flat move ended
  for (std::size_t i = 1; i < n; ++i) {
    const double d = x[i] - x[i - 1];
    if (std::abs(d) <= flat) continue;
    const int s = d > 0.0 ? 1 : -1;
    if (dir != 0 && s != dir) {
      Extremum e;
      const std::size_t k = last_move;
      e.kind = dir > 0 ? ExtremumKind::Max : ExtremumKind::Min;
      e.t = t[k];
      e.value = x[k];
      // parabolic refinement through the neighbouring samples
      if (k > 0 && k + 1 < n) {
        const double t0 = t[k - 1], t1 = t[k], t2 = t[k + 1];
        const double y0 = x[k - 1], y1 = x[k], y2 = x[k + 1];
        const double d01 = (y1 - y0) / (t1 - t0), d12 = (y2 - y1) / (t2 - t1);
        const double a = (d12 - d01) / (t2 - t0);
        if (a != 0.0 && ((a < 0.0) == (e.kind == ExtremumKind::Max))) {
          const double b = d01 - a * (t0 + t1);
          const double tv = -b / (2.0 * a);
          if (tv > t0 && tv < t2) {
            e.t = tv;
            const double yv = y1 + (tv - t1) * (d01 + a * (tv - t0));
            if (e.kind == ExtremumKind::Max ? yv >= y1 : yv <= y1) e.value = yv;
          }
        }
      }
      out.push_back(e);
    }
    dir = s;
    last_move = i;
  }
  // remove wiggles far below the oscillation amplitude
  const double noise = 1e-7 * std::max(scale, 1e-300);
  bool changed = true;
  while (changed && out.size() >= 2) {
    changed = false;
    for (std::size_t k = 0; k + 1 < out.size(); ++k) {
      if (std::abs(out[k].value - out[k + 1].value) < noise) {
        out.erase(out.begin() + static_cast<std::ptrdiff_t>(k), out.begin() + static_cast<std::ptrdiff_t>(k) + 2);
        changed = true;
        break;
      }
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    double prom = std::numeric_limits<double>::infinity();
    if (k > 0) prom = std::min(prom, std::abs(out[k].value - out[k - 1].value));
    if (k + 1 < out.size()) prom = std::min(prom, std::abs(out[k].value - out[k + 1].value));
    if (!std::isfinite(prom)) prom = scale;
    out[k].prominence = prom;
  }
  return out;
}

}  // namespace

ExtremaList find_extrema(const TimeSeries& ts, const std::vector<JumpEvent>& jumps, double align_tol) {
  if (ts.t.size() != ts.s.size()) throw Error(ErrorCode::InvalidConfig, "time and state columns differ in length");
  if (ts.t.size() < 3) throw Error(ErrorCode::InsufficientData, "need at least three samples");
  if (!(align_tol >= 0.0)) throw Error(ErrorCode::ParameterDomain, "align_tol must be non-negative");
  ExtremaList ex;
  ex.align_tol = align_tol;
  std::vector<double> t;
  std::vector<State> s;

  if (ts.period > 0.0) {
    const double t0 = ts.t.front();
    if (ts.t.back() - t0 < ts.period * (1.0 - 1e-9)) {
      throw Error(ErrorCode::InsufficientData, "periodic data must cover one full period");
    }
    // unroll over three periods so that extrema at the ends are seen from both sides
    for (int k = -1; k <= 1; ++k) {
      const std::size_t n = ts.t.size() - (k < 1 ? 1 : 0);
      for (std::size_t i = 0; i < n; ++i) {
        t.push_back(ts.t[i] + k * ts.period);
        s.push_back(ts.s[i]);
      }
      for (const JumpEvent& j : jumps) {
        JumpEvent c = j;
        c.t += k * ts.period;
        ex.jumps.push_back(c);
      }
    }
    ex.window_begin = t0;
    ex.window_end = t0 + ts.period;
    ex.period = ts.period;
  } else {
    t = ts.t;
    s = ts.s;
    ex.jumps = jumps;
    std::vector<double> ups;
    for (const JumpEvent& j : jumps) {
      if (j.direction == JumpDirection::Up) ups.push_back(j.t);
    }
    if (ups.size() >= 2) {
      ex.window_begin = ups.front();
      ex.window_end = ups.back();
      ex.period = (ups.back() - ups.front()) / static_cast<double>(ups.size() - 1);
    } else if (jumps.empty()) {
      ex.window_begin = t.front();
      ex.window_end = t.back();
    } else {
      throw Error(ErrorCode::InsufficientData, "fewer than one full period between jump events");
    }
  }

  std::vector<double> x(t.size());
  for (int v = 0; v < 3; ++v) {
    for (std::size_t i = 0; i < t.size(); ++i) x[i] = component(s[i], v);
    ex.vars[v] = turning_points(t, x);
    for (Extremum& e : ex.vars[v]) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < ex.jumps.size(); ++k) {
        const double d = std::abs(e.t - ex.jumps[k].t);
        if (d <= align_tol && d < best) {
          best = d;
          e.jump = static_cast<int>(k);
          e.location = ExtremumLocation::AtJump;
        }
      }
    }
  }

  if (ex.period == 0.0) {
    // no jumps: take the predator cycle as the period
    std::vector<double> peaks;
    for (const Extremum& e : ex.of(Variable::z)) {
      if (e.kind == ExtremumKind::Max) peaks.push_back(e.t);
    }
    if (peaks.size() < 2) throw Error(ErrorCode::InsufficientData, "fewer than two predator peaks");
    ex.period = (peaks.back() - peaks.front()) / static_cast<double>(peaks.size() - 1);
  }
  return ex;
}

// ---------------------------------------------------------------------------
// Orientation

OrientationReport classify_orientation(const ExtremaList& ex, double midway_tol) {
  OrientationReport rep;
  auto peaks_of = [&](Variable v) {
    std::vector<Extremum> out;
    for (const Extremum& e : ex.of(v)) {
      if (e.kind == ExtremumKind::Max) out.push_back(e);
    }
    return out;
  };
  const auto zpk = peaks_of(Variable::z);
  const auto p1pk = peaks_of(Variable::p1);
  const auto p2pk = peaks_of(Variable::p2);

  auto vote = [&](const std::vector<Extremum>& prey, std::vector<PeakGap>* gaps, bool& any) {
    std::vector<double> times;
    for (const Extremum& e : prey) times.push_back(e.t);
    std::sort(times.begin(), times.end());
    std::array<double, 3> weight{};  // Clockwise, Counterclockwise, Neither
    any = false;
    for (const Extremum& zp : zpk) {
      if (!ex.in_window(zp.t)) continue;
      const auto it = std::upper_bound(times.begin(), times.end(), zp.t);
      if (it == times.begin() || it == times.end()) continue;
      PeakGap g;
      g.t = zp.t;
      g.gap_prev = zp.t - *(it - 1);
      g.gap_next = *it - zp.t;
      g.weight = zp.prominence;
      if (std::abs(g.gap_next - g.gap_prev) <= midway_tol * (g.gap_next + g.gap_prev)) {
        g.verdict = Orientation::Neither;
      } else if (g.gap_next < g.gap_prev) {
        g.verdict = Orientation::Clockwise;
      } else {
        g.verdict = Orientation::Counterclockwise;
      }
      weight[static_cast<int>(g.verdict)] += g.weight;
      any = true;
      if (gaps) gaps->push_back(g);
    }
    if (!any) return Orientation::Neither;
    const double cw = weight[0], ccw = weight[1], nei = weight[2];
    if (cw > ccw && cw > nei) return Orientation::Clockwise;
    if (ccw > cw && ccw > nei) return Orientation::Counterclockwise;
    return Orientation::Neither;
  };

  std::vector<Extremum> pooled = p1pk;
  pooled.insert(pooled.end(), p2pk.begin(), p2pk.end());
  bool any = false, any1 = false, any2 = false;
  rep.overall = vote(pooled, &rep.gaps, any);
  rep.prey1 = vote(p1pk, nullptr, any1);
  rep.prey2 = vote(p2pk, nullptr, any2);
  rep.sufficient = any;
  return rep;
}

// ---------------------------------------------------------------------------
// Synchronization

SyncClass classify_synchronization(const ExtremaList& ex, const JumpPair& j, const Params& p) {
  SyncClass c;
  c.extrema = ex;
  bool have_up = false, have_down = false;
  bool prey_ok = true, pred_ok = true, pp2_ok = true;
  for (std::size_t k = 0; k < ex.jumps.size(); ++k) {
    const JumpEvent& jump = ex.jumps[k];
    if (!ex.in_window(jump.t)) continue;
    JumpAlignment al;
    al.direction = jump.direction;
    al.t = jump.t;
    al.at = {jump.s.p1, jump.s.p2, jump.s.z};
    for (int v = 0; v < 3; ++v) {
      double best = std::numeric_limits<double>::infinity();
      for (const Extremum& e : ex.vars[v]) {
        if (e.jump != static_cast<int>(k)) continue;
        const double d = std::abs(e.t - jump.t);
        if (d < best) {
          best = d;
          al.kind[v] = e.kind == ExtremumKind::Max ? 1 : -1;
        }
      }
    }
    const bool up = jump.direction == JumpDirection::Up;
    (up ? have_up : have_down) = true;
    // prey antiphase: p1 max / p2 min at A, p1 min / p2 max at B
    const int want1 = up ? 1 : -1;
    if (al.kind[0] != want1 || al.kind[1] != -want1) prey_ok = false;
    if (al.kind[2] != -1) pred_ok = false;
    // predator / prey 2 alternation: p2 min at A and max at B, no p1 extremum, z minima
    if (al.kind[1] != -want1 || al.kind[0] != 0 || al.kind[2] != -1) pp2_ok = false;
    c.alignments.push_back(al);
  }
  const bool both = have_up && have_down;
  c.prey_antiphase = both && prey_ok;
  c.predator_minima_at_jumps = both && pred_ok;
  const bool pp2_heights = p.r < j.A.z && j.A.z < 1.0 && p.r < j.B.z && j.B.z < 1.0;
  if (c.prey_antiphase && c.predator_minima_at_jumps) {
    c.label = SyncLabel::PredatorPreyPrey;
  } else if (c.prey_antiphase) {
    c.label = SyncLabel::PreyPreyAntiphase;
  } else if (both && pp2_ok && pp2_heights) {
    c.label = SyncLabel::PredatorPrey2Alternating;
  } else {
    c.label = SyncLabel::Unclassified;
  }
  c.orientation_detail = classify_orientation(ex);
  c.orientation = c.orientation_detail.overall;
  return c;
}

SyncClass classify(const SingularOrbit& orbit) {
  const ExtremaList ex = find_extrema(series_of(orbit), jump_events_of(orbit), default_align_tol(orbit));
  return classify_synchronization(ex, orbit.jumps, orbit.params);
}

SyncClass classify(const Trajectory& tr) {
  const auto events = detect_jump_events(tr);
  const ExtremaList ex = find_extrema(series_of(tr), events, default_align_tol(tr));
  // jump points: averages of the events inside the window
  JumpPair j;
  int nu = 0, nd = 0;
  for (const JumpEvent& e : events) {
    if (!ex.in_window(e.t)) continue;
    SlowPoint& acc = e.direction == JumpDirection::Up ? j.A : j.B;
    acc.p1 += e.s.p1;
    acc.p2 += e.s.p2;
    acc.z += e.s.z;
    ++(e.direction == JumpDirection::Up ? nu : nd);
  }
  auto scale = [](SlowPoint& s, int n) {
    if (n == 0) return;
    s.p1 /= n;
    s.p2 /= n;
    s.z /= n;
  };
  scale(j.A, nu);
  scale(j.B, nd);
  return classify_synchronization(ex, j, tr.params);
}

SyncClass classify(const TimeSeries& ts, const Params& p) {
  const double tol = ts.period > 0.0 ? 1e-3 * ts.period : 0.0;
  const ExtremaList ex = find_extrema(ts, {}, tol);
  return classify_synchronization(ex, JumpPair{}, p);
}

TimeSeries lv_cycle_series(Anchor a, const Params& p, std::size_t samples) {
  if (samples < 3) throw Error(ErrorCode::InvalidConfig, "need at least three samples");
  const LvOrbit orbit(Manifold::M1, a, p);
  const double period = orbit.period();
  TimeSeries ts;
  ts.period = period;
  for (std::size_t i = 0; i < samples; ++i) ts.t.push_back(period * static_cast<double>(i) / (samples - 1));
  ts.t.back() = period;
  OdeOptions o;
  o.rtol = 1e-12;
  o.atol = 1e-13;
  auto rhs = [&](double, const Vec<2>& y) {
    return Vec<2>{(1.0 - y[1]) * y[0], (y[0] - 1.0) * p.m * y[1]};
  };
  const auto ys = integrate_sampled<2>(rhs, 0.0, Vec<2>{a.p, a.z}, ts.t, o);
  for (const auto& y : ys) ts.s.push_back({y[0], 1.0, y[1], 1.0});
  return ts;
}

std::string report_json(const SyncClass& c) {
  ojson root;
  root["label"] = to_string(c.label);
  root["orientation"] = to_string(c.orientation);
  root["orientation_prey1"] = to_string(c.orientation_detail.prey1);
  root["orientation_prey2"] = to_string(c.orientation_detail.prey2);
  root["prey_antiphase"] = c.prey_antiphase;
  root["predator_minima_at_jumps"] = c.predator_minima_at_jumps;
  root["period"] = c.extrema.period;
  root["align_tol"] = c.extrema.align_tol;
  ojson jumps = ojson::array();
  auto kind_name = [](int k) { return k > 0 ? "max" : (k < 0 ? "min" : "none"); };
  for (const JumpAlignment& al : c.alignments) {
    jumps.push_back({{"direction", to_string(al.direction)},
                     {"t", al.t},
                     {"p1", al.at.p1},
                     {"p2", al.at.p2},
                     {"z", al.at.z},
                     {"p1_extremum", kind_name(al.kind[0])},
                     {"p2_extremum", kind_name(al.kind[1])},
                     {"z_extremum", kind_name(al.kind[2])}});
  }
  root["jumps"] = jumps;
  ojson gaps = ojson::array();
  double sum_prev = 0.0, sum_next = 0.0;
  for (const PeakGap& g : c.orientation_detail.gaps) {
    gaps.push_back({{"t", g.t},
                    {"gap_prev", g.gap_prev},
                    {"gap_next", g.gap_next},
                    {"weight", g.weight},
                    {"verdict", to_string(g.verdict)}});
    sum_prev += g.gap_prev;
    sum_next += g.gap_next;
  }
  const double n = static_cast<double>(c.orientation_detail.gaps.size());
  root["peak_gaps"] = gaps;
  root["mean_gap_prev"] = n > 0 ? sum_prev / n : 0.0;
  root["mean_gap_next"] = n > 0 ? sum_next / n : 0.0;
  ojson extrema = ojson::object();
  for (int v = 0; v < 3; ++v) {
    ojson list = ojson::array();
    for (const Extremum& e : c.extrema.vars[v]) {
      if (!c.extrema.in_window(e.t)) continue;
      list.push_back({{"t", e.t},
                      {"value", e.value},
                      {"kind", to_string(e.kind)},
                      {"location", to_string(e.location)},
                      {"prominence", e.prominence}});
    }
    extrema[to_string(static_cast<Variable>(v))] = list;
  }
  root["extrema"] = extrema;
  return root.dump(2);
}

}  // namespace relaxor
