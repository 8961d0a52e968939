#include "relaxor/singular_orbit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "relaxor/error.hpp"
#include "relaxor/ode.hpp"
#include "relaxor/quadrature.hpp"

namespace relaxor {

using ojson = nlohmann::ordered_json;

namespace {

constexpr double kLevelTol = 1e-8;

Branch other(Branch b) { return b == Branch::Principal ? Branch::Lower : Branch::Principal; }

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

// small negative offsets are rounding noise of a point that sits on an extremum
double clamp_offset(double s, double scale) {
  if (s < 0.0 && s > -1e-12 * std::max(1.0, scale)) return 0.0;
  return s;
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// LvOrbit

LvOrbit::LvOrbit(Manifold man, Anchor a, const Params& p) : man_(man), params_(p) {
  p.validate();
  if (man == Manifold::Msw) throw Error(ErrorCode::UnsupportedManifold, "Lotka-Volterra orbits live on M0 or M1");
  if (!positive(a.p) || !positive(a.z)) {
    std::ostringstream os;
    os << "anchor densities must be positive (p=" << a.p << ", z=" << a.z << ")";
    throw Error(ErrorCode::ParameterDomain, os.str());
  }
  c_ = man == Manifold::M1 ? 1.0 : p.r;
  k_ = p.m / c_;
  level_ = k_ * log_gap(a.p) + log_gap(a.z / c_);
}

std::pair<double, double> LvOrbit::extrema() const {
  if (!(level_ > 0.0)) throw Error(ErrorCode::DegenerateOrbit, "anchor sits on the Lotka-Volterra centre");
  const double s = level_ / k_;
  return {-lambert_w_offset(Branch::Principal, s), -lambert_w_offset(Branch::Lower, s)};
}

double LvOrbit::branch_z(double p, Branch b) const {
  if (!positive(p)) throw Error(ErrorCode::OffOrbit, "abscissa must be positive");
  const double s = clamp_offset(level_ - k_ * log_gap(p), level_);
  if (s < 0.0) {
    std::ostringstream os;
    os.precision(12);
    os << "p = " << p << " lies outside [pmin, pmax] of the orbit on " << to_string(man_);
    throw Error(ErrorCode::OffOrbit, os.str());
  }
  return -c_ * lambert_w_offset(b, s);
}

double LvOrbit::branch_p(double z, Branch b) const {
  if (!positive(z)) throw Error(ErrorCode::OffOrbit, "height must be positive");
  const double s = clamp_offset((level_ - log_gap(z / c_)) / k_, level_);
  if (s < 0.0) {
    std::ostringstream os;
    os.precision(12);
    os << "z = " << z << " is not reached by the orbit on " << to_string(man_);
    throw Error(ErrorCode::OffOrbit, os.str());
  }
  return -lambert_w_offset(b, s);
}

Branch LvOrbit::half_of(Anchor a) const {
  if (a.z > c_) return Branch::Lower;
  if (a.z < c_) return Branch::Principal;
  return a.p < 1.0 ? Branch::Principal : Branch::Lower;
}

double LvOrbit::half_time(Branch b, double pa, double pb) const {
  const double lo = std::min(pa, pb);
  const double hi = std::max(pa, pb);
  if (!(hi > lo)) return 0.0;
  const auto [pmin, pmax] = extrema();
  const bool lo_ext = lo <= pmin;
  const bool hi_ext = hi >= pmax;

  // dt/dp = 1 / ((c - z) p) = 1 / (c t p) with t = 1 + W_b; |t| vanishes like sqrt at extrema
  auto integrand = [&](double /*x*/, double from_lo, double to_hi) {
    double s;
    double x;
    if (lo_ext && from_lo < 0.05 * lo) {
      // distance-aware offset near pmin: s = k (log1p(d / pmin) - d)
      x = lo + from_lo;
      s = k_ * (std::log1p(from_lo / lo) - from_lo);
    } else if (hi_ext && to_hi < 0.05 * hi) {
      x = hi - to_hi;
      s = k_ * (std::log1p(-to_hi / hi) + to_hi);
    } else {
      x = from_lo < to_hi ? lo + from_lo : hi - to_hi;
      s = level_ - k_ * log_gap(x);
    }
    if (!(s > 0.0)) return 0.0;
    const double t = std::abs(lambert_w_offset_plus_one(b, s));
    if (t == 0.0) return 0.0;
    return 1.0 / (c_ * t * x);
  };
  return tanh_sinh(integrand, lo, hi).value;
}

double LvOrbit::travel_time(Anchor from, Anchor to) const {
  auto check = [&](Anchor a, const char* what) {
    if (!positive(a.p) || !positive(a.z)) {
      throw Error(ErrorCode::InconsistentEndpoints, std::string(what) + " point must have positive densities");
    }
    const double lv = k_ * log_gap(a.p) + log_gap(a.z / c_);
    if (std::abs(lv - level_) > kLevelTol * std::max(1.0, level_)) {
      std::ostringstream os;
      os.precision(12);
      os << what << " point (" << a.p << ", " << a.z << ") is off the level set on " << to_string(man_)
         << " (level difference " << lv - level_ << ")";
      throw Error(ErrorCode::InconsistentEndpoints, os.str());
    }
  };
  check(from, "start");
  check(to, "end");
  if (from.p == to.p && from.z == to.z) return 0.0;
  if (!(level_ > 0.0)) return 0.0;

  const auto [pmin, pmax] = extrema();
  const double target = std::clamp(to.p, pmin, pmax);
  const Branch target_half = half_of(to);
  double cur = std::clamp(from.p, pmin, pmax);
  Branch half = half_of(from);
  double total = 0.0;
  for (int leg = 0; leg < 3; ++leg) {
    const bool ahead = half == Branch::Principal ? target >= cur : target <= cur;
    if (half == target_half && ahead) return total + half_time(half, cur, target);
    const double end = half == Branch::Principal ? pmax : pmin;
    total += half_time(half, cur, end);
    cur = end;
    half = other(half);
  }
  throw Error(ErrorCode::InconsistentEndpoints, "travel time path did not close");
}

double LvOrbit::period() const {
  const auto [pmin, pmax] = extrema();
  return half_time(Branch::Principal, pmin, pmax) + half_time(Branch::Lower, pmin, pmax);
}

// ---------------------------------------------------------------------------
// Free functions on the level sets

double lv_branch_M1(double p1, Anchor a, Branch b, const Params& p) {
  return LvOrbit(Manifold::M1, a, p).branch_z(p1, b);
}

double lv_branch_M0(double p2, Anchor a, Branch b, const Params& p) {
  return LvOrbit(Manifold::M0, a, p).branch_z(p2, b);
}

std::pair<double, double> extrema_M1(Anchor a, const Params& p) { return LvOrbit(Manifold::M1, a, p).extrema(); }

std::pair<double, double> extrema_M0(Anchor a, const Params& p) { return LvOrbit(Manifold::M0, a, p).extrema(); }

namespace {

double eliminate(Manifold man, double pA, double zA, double zB, const Params& p, Branch b) {
  const LvOrbit orbit(man, {pA, zA}, p);
  try {
    return orbit.branch_p(zB, b);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::OffOrbit) throw;
    std::ostringstream os;
    os.precision(12);
    os << "zB = " << zB << " does not reach the " << (man == Manifold::M0 ? "H0" : "H1") << " level of (" << pA
       << ", " << zA << ")";
    throw Error(ErrorCode::NoSolution, os.str());
  }
}

}  // namespace

double eliminate_p2B(double p2A, double zA, double zB, const Params& p, Branch b) {
  return eliminate(Manifold::M0, p2A, zA, zB, p, b);
}

double eliminate_p1B(double p1A, double zA, double zB, const Params& p, Branch b) {
  return eliminate(Manifold::M1, p1A, zA, zB, p, b);
}

double travel_time_M1(Anchor start, Anchor end, const Params& p) {
  return LvOrbit(Manifold::M1, start, p).travel_time(start, end);
}

double travel_time_M0(Anchor start, Anchor end, const Params& p) {
  return LvOrbit(Manifold::M0, start, p).travel_time(start, end);
}

// ---------------------------------------------------------------------------
// Existence conditions

BranchChoice branch_choice_for(const SlowPoint& B) {
  return {B.p1 <= 1.0 ? Branch::Principal : Branch::Lower, B.p2 <= 1.0 ? Branch::Principal : Branch::Lower};
}

ResidualEval existence_residual(double p1A, double p2A, double zA, double zB, BranchChoice branches,
                                const Params& p) {
  if (!positive(p1A) || !positive(p2A) || !positive(zA) || !positive(zB)) {
    throw Error(ErrorCode::ParameterDomain, "jump coordinates must be positive");
  }
  ResidualEval ev;
  ev.p1B = eliminate_p1B(p1A, zA, zB, p, branches.p1B);
  ev.p2B = eliminate_p2B(p2A, zA, zB, p, branches.p2B);
  ev.T1 = travel_time_M1({p1A, zA}, {ev.p1B, zB}, p);
  ev.T0 = travel_time_M0({ev.p2B, zB}, {p2A, zA}, p);
  ev.res1 = std::log(ev.p2B / p2A) / p.r - ev.T1;
  ev.res2 = std::log(p1A / ev.p1B) - ev.T0;
  return ev;
}

std::array<double, 4> direct_conditions(const JumpPair& j, const Params& p) {
  return {conserved_quantity(Manifold::M0, j.A, p) - conserved_quantity(Manifold::M0, j.B, p),
          conserved_quantity(Manifold::M1, j.A, p) - conserved_quantity(Manifold::M1, j.B, p),
          j.B.p2 - j.A.p2 * std::exp(p.r * j.T1), j.A.p1 - j.B.p1 * std::exp(j.T0)};
}

std::array<double, 2> switching_balance(const JumpPair& j, const Params& p) {
  // on M1: integral of p1 = T1 + log(zB / zA) / m, of p2 = (p2B - p2A) / r
  // on M0: integral of p2 = T0 + log(zA / zB) / m, of p1 = p1A - p1B
  const double lz = std::log(j.B.z / j.A.z) / p.m;
  return {j.T1 + lz - (j.B.p2 - j.A.p2) / p.r, (j.A.p1 - j.B.p1) - j.T0 + lz};
}

const char* to_string(FamilyCoord c) {
  switch (c) {
    case FamilyCoord::p1A: return "p1A";
    case FamilyCoord::p2A: return "p2A";
    case FamilyCoord::zA: return "zA";
    case FamilyCoord::zB: return "zB";
  }
  return "?";
}

FamilyCoord family_coord_from_string(const std::string& s) {
  for (FamilyCoord c : {FamilyCoord::p1A, FamilyCoord::p2A, FamilyCoord::zA, FamilyCoord::zB}) {
    if (s == to_string(c)) return c;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown family coordinate '" + s + "' (expected p1A, p2A, zA or zB)");
}

// ---------------------------------------------------------------------------
// Newton

namespace {

template <std::size_t N>
double max_norm(const std::array<double, N>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Gaussian elimination with partial pivoting; false when singular
template <std::size_t N>
bool solve_linear(std::array<std::array<double, N>, N> a, std::array<double, N> b, std::array<double, N>& x) {
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < N; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (!(std::abs(a[piv][col]) > 0.0) || !std::isfinite(a[piv][col])) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < N; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < N; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = N; i-- > 0;) {
    double acc = b[i];
    for (std::size_t k = i + 1; k < N; ++k) acc -= a[i][k] * x[k];
    x[i] = acc / a[i][i];
  }
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// Damped Newton with a forward-difference Jacobian on positive unknowns.
template <std::size_t N, class F>
std::array<double, N> newton(F&& f, std::array<double, N> x, const NewtonOptions& opt, SolveReport& report) {
  auto try_eval = [&](const std::array<double, N>& at, std::array<double, N>& out) {
    for (double v : at) {
      if (!positive(v)) return false;
    }
    try {
      out = f(at);
    } catch (const Error&) {
      return false;
    }
    for (double v : out) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  };

  std::array<double, N> fx{};
  if (!try_eval(x, fx)) fx = f(x);  // rethrows the underlying error for an infeasible start
  double norm = max_norm(fx);
  report.iterations = 0;
  std::string stall;
  while (norm > opt.tol && report.iterations < opt.max_iterations) {
    std::array<std::array<double, N>, N> jac{};
    bool jac_ok = true;
    for (std::size_t i = 0; i < N && jac_ok; ++i) {
      double h = opt.fd_step * std::max(std::abs(x[i]), 1e-3);
      std::array<double, N> xs = x, fs{};
      xs[i] = x[i] + h;
      if (!try_eval(xs, fs)) {
        h = -h;
        xs[i] = x[i] + h;
        if (!try_eval(xs, fs)) {
          jac_ok = false;
          break;
        }
      }
      for (std::size_t r = 0; r < N; ++r) jac[r][i] = (fs[r] - fx[r]) / h;
    }
    std::array<double, N> neg{}, dx{};
    for (std::size_t r = 0; r < N; ++r) neg[r] = -fx[r];
    if (!jac_ok || !solve_linear(jac, neg, dx)) {
      stall = "singular or unavailable Jacobian";
      break;
    }
    double lambda = 1.0;
    bool accepted = false;
    while (lambda >= 1e-8) {
      std::array<double, N> xt{}, ft{};
      for (std::size_t i = 0; i < N; ++i) xt[i] = x[i] + lambda * dx[i];
      if (try_eval(xt, ft) && max_norm(ft) < (1.0 - 1e-4 * lambda) * norm) {
        x = xt;
        fx = ft;
        norm = max_norm(ft);
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    ++report.iterations;
    if (!accepted) {
      stall = "line search failed";
      break;
    }
  }
  report.residual = norm;
  if (norm > opt.accept_tol) {
    std::ostringstream os;
    os.precision(6);
    os << "Newton did not converge after " << report.iterations << " iterations (residual " << norm;
    if (!stall.empty()) os << ", " << stall;
    os << ")";
    throw Error(ErrorCode::NonConvergence, os.str());
  }
  return x;
}

double coord_of(const JumpSeed& s, FamilyCoord c) {
  switch (c) {
    case FamilyCoord::p1A: return s.A.p1;
    case FamilyCoord::p2A: return s.A.p2;
    case FamilyCoord::zA: return s.A.z;
    case FamilyCoord::zB: return s.B.z;
  }
  return 0.0;
}

std::array<FamilyCoord, 2> free_coords(const Pinning& pin) {
  std::array<FamilyCoord, 2> out{};
  std::size_t n = 0;
  for (FamilyCoord c : {FamilyCoord::p1A, FamilyCoord::p2A, FamilyCoord::zA, FamilyCoord::zB}) {
    if (c != pin.first && c != pin.second) out[n++] = c;
  }
  return out;
}

void check_pinning(const Pinning& pin) {
  if (pin.first == pin.second) throw Error(ErrorCode::InvalidConfig, "the two pinned coordinates must differ");
}

// (p1A, p2A, zA, zB) from pinned and free values
std::array<double, 4> assemble_coords(const Pinning& pin, std::array<double, 2> pinned, std::array<double, 2> freev) {
  std::array<double, 4> x{};
  const auto fc = free_coords(pin);
  x[static_cast<int>(pin.first)] = pinned[0];
  x[static_cast<int>(pin.second)] = pinned[1];
  x[static_cast<int>(fc[0])] = freev[0];
  x[static_cast<int>(fc[1])] = freev[1];
  return x;
}

JumpPair finish(const std::array<double, 4>& x, BranchChoice branches, const Params& p) {
  const ResidualEval ev = existence_residual(x[0], x[1], x[2], x[3], branches, p);
  JumpPair j;
  j.A = {x[0], x[1], x[2]};
  j.B = {ev.p1B, ev.p2B, x[3]};
  j.T0 = ev.T0;
  j.T1 = ev.T1;
  if (!(j.A.p1 > j.A.p2) || !(j.B.p1 < j.B.p2) || !(j.T0 > 0.0) || !(j.T1 > 0.0)) {
    std::ostringstream os;
    os.precision(6);
    os << "converged jump pair is inadmissible: A = (" << j.A.p1 << ", " << j.A.p2 << ", " << j.A.z << "), B = ("
       << j.B.p1 << ", " << j.B.p2 << ", " << j.B.z << "), T0 = " << j.T0 << ", T1 = " << j.T1;
    throw Error(ErrorCode::InadmissibleOrbit, os.str());
  }
  return j;
}

}  // namespace

JumpPair solve_jump_points(const Pinning& pin, std::array<double, 2> pinned, std::array<double, 2> guess,
                           BranchChoice branches, const Params& p, const NewtonOptions& opt, SolveReport* report) {
  p.validate();
  check_pinning(pin);
  SolveReport local;
  auto f = [&](const std::array<double, 2>& freev) {
    const auto x = assemble_coords(pin, pinned, freev);
    const ResidualEval ev = existence_residual(x[0], x[1], x[2], x[3], branches, p);
    return std::array<double, 2>{ev.res1, ev.res2};
  };
  const auto sol = newton<2>(f, guess, opt, local);
  if (report) *report = local;
  return finish(assemble_coords(pin, pinned, sol), branches, p);
}

JumpPair solve_jump_points(const JumpSeed& seed, const Params& p, const Pinning& pin, const NewtonOptions& opt,
                           SolveReport* report) {
  check_pinning(pin);
  const auto fc = free_coords(pin);
  return solve_jump_points(pin, {coord_of(seed, pin.first), coord_of(seed, pin.second)},
                           {coord_of(seed, fc[0]), coord_of(seed, fc[1])}, branch_choice_for(seed.B), p, opt, report);
}

JumpPair solve_balanced_jump_points(const JumpSeed& seed, const Params& p, const NewtonOptions& opt,
                                    SolveReport* report) {
  p.validate();
  const BranchChoice branches = branch_choice_for(seed.B);
  const double p1A = seed.A.p1;
  SolveReport local;
  auto pair_at = [&](const std::array<double, 3>& x, ResidualEval& ev) {
    ev = existence_residual(p1A, x[0], x[1], x[2], branches, p);
    JumpPair j;
    j.A = {p1A, x[0], x[1]};
    j.B = {ev.p1B, ev.p2B, x[2]};
    j.T0 = ev.T0;
    j.T1 = ev.T1;
    return j;
  };
  // the M0 balance follows from the other three conditions, so it is only checked afterwards
  auto f = [&](const std::array<double, 3>& x) {
    ResidualEval ev;
    const JumpPair j = pair_at(x, ev);
    return std::array<double, 3>{ev.res1, ev.res2, switching_balance(j, p)[0]};
  };
  const auto sol = newton<3>(f, {seed.A.p2, seed.A.z, seed.B.z}, opt, local);
  ResidualEval ev;
  const double unbalanced = std::abs(switching_balance(pair_at(sol, ev), p)[1]);
  local.residual = std::max(local.residual, unbalanced);
  if (report) *report = local;
  if (unbalanced > opt.accept_tol) {
    std::ostringstream os;
    os << "balanced solve left the M0 switching integral at " << unbalanced;
    throw Error(ErrorCode::NonConvergence, os.str());
  }
  return finish({p1A, sol[0], sol[1], sol[2]}, branches, p);
}

// ---------------------------------------------------------------------------
// Family scan

double GridAxis::at(int i) const {
  if (count <= 1) return lo;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
}

namespace {

std::vector<double> default_guesses(FamilyCoord c) {
  if (c == FamilyCoord::zA || c == FamilyCoord::zB) return {0.6, 0.9, 1.2, 1.5, 2.0};
  return {0.2, 0.5, 0.8, 1.2, 2.0};
}

struct Candidate {
  std::array<double, 2> guess;
  BranchChoice branches;
};

}  // namespace

FamilyTable scan_family(const Params& p, const FamilyGrid& grid, const NewtonOptions& opt) {
  p.validate();
  check_pinning(grid.pin);
  if (grid.first.count < 1 || grid.second.count < 1) throw Error(ErrorCode::InvalidConfig, "grid axes need count >= 1");
  const auto fc = free_coords(grid.pin);
  const int n1 = grid.first.count;
  const int n2 = grid.second.count;

  struct Cell {
    bool ok = false;
    JumpPair j;
    BranchChoice branches;
    double residual = 0.0;
  };
  std::vector<Cell> cells(static_cast<std::size_t>(n1) * n2);
  auto cell = [&](int i, int k) -> Cell& { return cells[static_cast<std::size_t>(i) * n2 + k]; };
  auto free_of = [&](const JumpPair& j) {
    const JumpSeed s{j.A, j.B};
    return std::array<double, 2>{coord_of(s, fc[0]), coord_of(s, fc[1])};
  };

  std::vector<Candidate> fallback;
  if (!grid.seeds.empty()) {
    for (const JumpSeed& s : grid.seeds) {
      fallback.push_back({{coord_of(s, fc[0]), coord_of(s, fc[1])}, branch_choice_for(s.B)});
    }
  } else {
    for (Branch b1 : {Branch::Principal, Branch::Lower}) {
      for (Branch b2 : {Branch::Lower, Branch::Principal}) {
        for (double g0 : default_guesses(fc[0])) {
          for (double g1 : default_guesses(fc[1])) fallback.push_back({{g0, g1}, {b1, b2}});
        }
      }
    }
  }

  for (int i = 0; i < n1; ++i) {
    for (int step = 0; step < n2; ++step) {
      const int k = (i % 2 == 0) ? step : n2 - 1 - step;  // serpentine keeps the previous cell adjacent
      const std::array<double, 2> pinned{grid.first.at(i), grid.second.at(k)};
      std::vector<Candidate> candidates;
      for (auto [di, dk] : {std::pair{0, -1}, std::pair{0, 1}, std::pair{-1, 0}, std::pair{-1, -1}, std::pair{-1, 1}}) {
        const int ii = i + di, kk = k + dk;
        if (ii < 0 || kk < 0 || kk >= n2) continue;
        const Cell& nb = cell(ii, kk);
        if (nb.ok) candidates.push_back({free_of(nb.j), nb.branches});
      }
      candidates.insert(candidates.end(), fallback.begin(), fallback.end());
      Cell& here = cell(i, k);
      for (const Candidate& c : candidates) {
        try {
          SolveReport rep;
          here.j = solve_jump_points(grid.pin, pinned, c.guess, c.branches, p, opt, &rep);
          here.ok = true;
          here.branches = c.branches;
          here.residual = rep.residual;
          break;
        } catch (const Error&) {
        }
      }
    }
  }

  FamilyTable table;
  table.params = p;
  table.pin = grid.pin;
  for (int i = 0; i < n1; ++i) {
    for (int k = 0; k < n2; ++k) {
      const Cell& c = cell(i, k);
      if (!c.ok) continue;
      FamilyRow row;
      row.r = p.r;
      row.m = p.m;
      row.first_index = i;
      row.second_index = k;
      row.pinned_first = grid.first.at(i);
      row.pinned_second = grid.second.at(k);
      row.jumps = c.j;
      row.residual = c.residual;
      table.rows.push_back(row);
    }
  }
  return table;
}

std::vector<std::string> FamilyTable::columns() const {
  return {"r",   "m",   std::string("pinned_") + to_string(pin.first), std::string("pinned_") + to_string(pin.second),
          "p1A", "p2A", "zA",
          "p1B", "p2B", "zB",
          "T0",  "T1",  "residual"};
}

namespace {

std::array<double, 13> row_values(const FamilyRow& r) {
  const JumpPair& j = r.jumps;
  return {r.r, r.m, r.pinned_first, r.pinned_second, j.A.p1, j.A.p2, j.A.z, j.B.p1, j.B.p2, j.B.z, j.T0, j.T1,
          r.residual};
}

}  // namespace

std::string FamilyTable::to_csv() const {
  std::ostringstream os;
  const auto cols = columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
  for (const FamilyRow& r : rows) {
    const auto v = row_values(r);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << fmt(v[i]);
    os << "\n";
  }
  return os.str();
}

std::string FamilyTable::to_json() const {
  ojson root;
  root["r"] = params.r;
  root["m"] = params.m;
  root["pinned"] = {to_string(pin.first), to_string(pin.second)};
  root["columns"] = columns();
  ojson arr = ojson::array();
  const auto cols = columns();
  for (const FamilyRow& r : rows) {
    const auto v = row_values(r);
    ojson obj;
    for (std::size_t i = 0; i < cols.size(); ++i) obj[cols[i]] = v[i];
    arr.push_back(obj);
  }
  root["rows"] = arr;
  return root.dump(2);
}

FamilyTable FamilyTable::from_json(const std::string& text) {
  FamilyTable t;
  try {
    const ojson root = ojson::parse(text);
    t.params = {root.at("r").get<double>(), root.at("m").get<double>()};
    t.pin = {family_coord_from_string(root.at("pinned").at(0).get<std::string>()),
             family_coord_from_string(root.at("pinned").at(1).get<std::string>())};
    const auto cols = t.columns();
    for (const auto& obj : root.at("rows")) {
      FamilyRow r;
      r.r = obj.at(cols[0]).get<double>();
      r.m = obj.at(cols[1]).get<double>();
      r.pinned_first = obj.at(cols[2]).get<double>();
      r.pinned_second = obj.at(cols[3]).get<double>();
      r.jumps.A = {obj.at("p1A").get<double>(), obj.at("p2A").get<double>(), obj.at("zA").get<double>()};
      r.jumps.B = {obj.at("p1B").get<double>(), obj.at("p2B").get<double>(), obj.at("zB").get<double>()};
      r.jumps.T0 = obj.at("T0").get<double>();
      r.jumps.T1 = obj.at("T1").get<double>();
      r.residual = obj.at("residual").get<double>();
      t.rows.push_back(r);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed family table: ") + e.what());
  }
  return t;
}

// ---------------------------------------------------------------------------
// Orbit assembly

namespace {

SegmentSamples sample_segment(const SlowPoint& start, double duration, const Params& p, Manifold man,
                              std::size_t n) {
  SegmentSamples seg;
  seg.t.resize(n);
  for (std::size_t i = 0; i < n; ++i) seg.t[i] = duration * static_cast<double>(i) / static_cast<double>(n - 1);
  seg.t.back() = duration;
  OdeOptions o;
  o.rtol = 1e-12;
  o.atol = 1e-13;
  auto rhs = [&](double, const Vec<3>& y) {
    const SlowPoint d = slow_rhs({y[0], y[1], y[2]}, p, man);
    return Vec<3>{d.p1, d.p2, d.z};
  };
  const auto ys = integrate_sampled<3>(rhs, 0.0, Vec<3>{start.p1, start.p2, start.z}, seg.t, o);
  seg.x.reserve(n);
  for (const auto& y : ys) seg.x.push_back({y[0], y[1], y[2]});
  return seg;
}

void check_endpoint(const SlowPoint& got, const SlowPoint& want, const char* what) {
  constexpr double kTol = 1e-6;
  const double d = std::max({std::abs(got.p1 - want.p1), std::abs(got.p2 - want.p2), std::abs(got.z - want.z)});
  if (d > kTol) {
    std::ostringstream os;
    os.precision(8);
    os << what << " segment ends at (" << got.p1 << ", " << got.p2 << ", " << got.z << "), expected (" << want.p1
       << ", " << want.p2 << ", " << want.z << "); mismatch " << d;
    throw Error(ErrorCode::InconsistentJumpPair, os.str());
  }
}

ojson point_json(const SlowPoint& s) { return ojson{{"p1", s.p1}, {"p2", s.p2}, {"z", s.z}}; }

SlowPoint point_from(const ojson& j) { return {j.at("p1").get<double>(), j.at("p2").get<double>(), j.at("z").get<double>()}; }

ojson segment_json(const SegmentSamples& s) {
  ojson o;
  std::vector<double> p1, p2, z;
  for (const auto& x : s.x) {
    p1.push_back(x.p1);
    p2.push_back(x.p2);
    z.push_back(x.z);
  }
  o["t"] = s.t;
  o["p1"] = p1;
  o["p2"] = p2;
  o["z"] = z;
  return o;
}

SegmentSamples segment_from(const ojson& o) {
  SegmentSamples s;
  s.t = o.at("t").get<std::vector<double>>();
  const auto p1 = o.at("p1").get<std::vector<double>>();
  const auto p2 = o.at("p2").get<std::vector<double>>();
  const auto z = o.at("z").get<std::vector<double>>();
  if (p1.size() != s.t.size() || p2.size() != s.t.size() || z.size() != s.t.size()) {
    throw Error(ErrorCode::InvalidConfig, "segment columns differ in length");
  }
  for (std::size_t i = 0; i < s.t.size(); ++i) s.x.push_back({p1[i], p2[i], z[i]});
  return s;
}

}  // namespace

SingularOrbit assemble_singular_orbit(const JumpPair& j, const Params& p, std::size_t samples_per_segment) {
  p.validate();
  if (samples_per_segment < 2) throw Error(ErrorCode::InvalidConfig, "need at least two samples per segment");
  if (!(j.T0 > 0.0) || !(j.T1 > 0.0)) throw Error(ErrorCode::InconsistentJumpPair, "travel times must be positive");
  SingularOrbit o;
  o.params = p;
  o.jumps = j;
  o.segM1 = sample_segment(j.A, j.T1, p, Manifold::M1, samples_per_segment);
  check_endpoint(o.segM1.x.back(), j.B, "M1");
  o.segM0 = sample_segment(j.B, j.T0, p, Manifold::M0, samples_per_segment);
  check_endpoint(o.segM0.x.back(), j.A, "M0");
  o.period = j.T0 + j.T1;
  return o;
}

void SingularOrbit::time_series(std::vector<double>& t, std::vector<State>& s) const {
  t.clear();
  s.clear();
  for (std::size_t i = 0; i < segM1.t.size(); ++i) {
    t.push_back(segM1.t[i]);
    s.push_back({segM1.x[i].p1, segM1.x[i].p2, segM1.x[i].z, 1.0});
  }
  const double shift = segM1.t.empty() ? 0.0 : segM1.t.back();
  for (std::size_t i = 1; i < segM0.t.size(); ++i) {
    t.push_back(shift + segM0.t[i]);
    s.push_back({segM0.x[i].p1, segM0.x[i].p2, segM0.x[i].z, 0.0});
  }
}

std::string SingularOrbit::to_json() const {
  ojson root;
  root["kind"] = "singular-orbit";
  root["r"] = params.r;
  root["m"] = params.m;
  root["A"] = point_json(jumps.A);
  root["B"] = point_json(jumps.B);
  root["T0"] = jumps.T0;
  root["T1"] = jumps.T1;
  root["period"] = period;
  root["segM1"] = segment_json(segM1);
  root["segM0"] = segment_json(segM0);
  return root.dump();
}

SingularOrbit SingularOrbit::from_json(const std::string& text) {
  SingularOrbit o;
  try {
    const ojson root = ojson::parse(text);
    o.params = {root.at("r").get<double>(), root.at("m").get<double>()};
    o.jumps.A = point_from(root.at("A"));
    o.jumps.B = point_from(root.at("B"));
    o.jumps.T0 = root.at("T0").get<double>();
    o.jumps.T1 = root.at("T1").get<double>();
    o.period = root.at("period").get<double>();
    o.segM1 = segment_from(root.at("segM1"));
    o.segM0 = segment_from(root.at("segM0"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed singular orbit: ") + e.what());
  }
  return o;
}

// ---------------------------------------------------------------------------
// Presets

const std::vector<OrbitPreset>& orbit_presets() {
  static const std::vector<OrbitPreset> presets = {
      {"predpreyprey", {0.8, 1.0}, {{2.41, 0.33, 1.18}, {0.29, 2.27, 1.39}}, false},
      {"predp2", {0.5, 0.4}, {{4.27, 0.19, 0.7}, {0.06, 2.69, 0.85}}, false},
      {"clockwise", {0.5, 0.4}, {{0.97, 0.81, 2.0}, {0.22, 4.28, 0.85}}, false},
      {"hybrid", {0.5, 0.4}, {{1.81, 0.49, 1.35}, {0.51, 1.59, 1.40}}, false},
      {"balanced", {0.5, 0.4}, {{1.19, 0.83, 1.49}, {0.83, 1.19, 1.49}}, true},
      {"antiphase", {0.5, 0.4}, {{0.97, 0.94, 1.80}, {0.28, 3.49, 1.04}}, false},
  };
  return presets;
}

std::optional<OrbitPreset> find_orbit_preset(const std::string& name) {
  for (const auto& p : orbit_presets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

}  // namespace relaxor
