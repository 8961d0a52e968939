#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "relaxor/analysis.hpp"
#include "relaxor/lambertw.hpp"
#include "relaxor/simulator.hpp"
#include "relaxor/singular_orbit.hpp"

using namespace relaxor;

namespace {

const Params kP{0.5, 0.4};
const JumpSeed kHybrid{{1.81, 0.49, 1.35}, {0.51, 1.59, 1.40}};

std::vector<double> arguments(bool lower) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> xs(4096);
  for (auto& x : xs) {
    const double w = lower ? -1.0 - 20.0 * U(rng) : -1.0 + 10.0 * U(rng);
    x = w * std::exp(w);
  }
  return xs;
}

}  // namespace

static void BM_LambertW(benchmark::State& state) {
  const bool lower = state.range(0) != 0;
  const auto xs = arguments(lower);
  const Branch b = lower ? Branch::Lower : Branch::Principal;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lambert_w(b, xs[i++ & 4095]));
  }
  state.SetLabel(lower ? "W-1" : "W0");
}
BENCHMARK(BM_LambertW)->Arg(0)->Arg(1);

static void BM_TravelTime(benchmark::State& state) {
  const LvOrbit orbit(Manifold::M1, {1.81, 1.35}, kP);
  const Anchor from{1.81, 1.35};
  const double x = 0.6;
  const Anchor to{x, orbit.branch_z(x, Branch::Lower)};
  for (auto _ : state) benchmark::DoNotOptimize(orbit.travel_time(from, to));
}
BENCHMARK(BM_TravelTime);

static void BM_SolveJumpPoints(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(solve_jump_points(kHybrid, kP));
}
BENCHMARK(BM_SolveJumpPoints)->Unit(benchmark::kMicrosecond);

static void BM_SolveBalanced(benchmark::State& state) {
  const auto preset = *find_orbit_preset("balanced");
  for (auto _ : state) benchmark::DoNotOptimize(solve_balanced_jump_points(preset.seed, kP));
}
BENCHMARK(BM_SolveBalanced)->Unit(benchmark::kMillisecond);

static void BM_Integrate(benchmark::State& state) {
  SimConfig c;
  c.eps = 1.0 / static_cast<double>(state.range(0));
  c.t_end = 50.0;
  for (auto _ : state) benchmark::DoNotOptimize(integrate({1.18, 0.87, 1.50, 0.99}, kP, c));
  state.SetLabel("eps = 1/" + std::to_string(state.range(0)));
}
BENCHMARK(BM_Integrate)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);

static void BM_ClassifyOrbit(benchmark::State& state) {
  const SingularOrbit o = assemble_singular_orbit(solve_jump_points(kHybrid, kP), kP);
  for (auto _ : state) benchmark::DoNotOptimize(classify(o));
}
BENCHMARK(BM_ClassifyOrbit)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
