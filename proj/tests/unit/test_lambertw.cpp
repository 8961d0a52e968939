#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "relaxor/error.hpp"
#include "relaxor/lambertw.hpp"

using relaxor::Branch;
using relaxor::lambert_w;

namespace {
const double kInvE = std::exp(-1.0);
}

TEST_CASE("lambert_w: exact values") {
  CHECK(lambert_w(Branch::Principal, 0.0) == 0.0);
  CHECK(lambert_w(Branch::Principal, std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lambert_w(Branch::Lower, -2.0 * std::exp(-2.0)) == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(lambert_w(Branch::Principal, -kInvE) == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(lambert_w(Branch::Lower, -kInvE) == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(relaxor::lambert_w_offset(Branch::Principal, 0.0) == -1.0);
  CHECK(relaxor::lambert_w_offset(Branch::Lower, 0.0) == -1.0);
}

TEST_CASE("lambert_w: omega constant against bisection") {
  const double oracle = oracle::lambert_w_bisect(1.0, true);
  CHECK(oracle == doctest::Approx(0.5671432904).epsilon(1e-10));
  CHECK(std::abs(lambert_w(Branch::Principal, 1.0) - oracle) < 1e-15);
}

TEST_CASE("lambert_w: bisection oracle on both branches") {
  for (double x : {-0.36, -0.3, -0.2, -0.1, -1e-3, -1e-8}) {
    CHECK(std::abs(lambert_w(Branch::Principal, x) - oracle::lambert_w_bisect(x, true)) < 1e-13);
    const double lo = oracle::lambert_w_bisect(x, false);
    CHECK(std::abs(lambert_w(Branch::Lower, x) - lo) < 1e-13 * std::abs(lo));
  }
  for (double x : {0.5, 2.0, 10.0, 1e3, 1e10}) {
    const double w = oracle::lambert_w_bisect(x, true);
    CHECK(std::abs(lambert_w(Branch::Principal, x) - w) < 1e-13 * std::max(1.0, w));
  }
}

TEST_CASE("lambert_w: round trip on random w in [-30, 30]") {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> U(-30.0, 30.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double w = U(rng);
    const Branch b = w >= -1.0 ? Branch::Principal : Branch::Lower;
    const double x = w * std::exp(w);
    const double back = lambert_w(b, x);
    worst = std::max(worst, std::abs(back - w) / std::max(std::abs(w), 1e-300));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("lambert_w: residual w e^w = x") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double x0 = -kInvE + U(rng) * kInvE * 0.999999;
    for (Branch b : {Branch::Principal, Branch::Lower}) {
      const double w = lambert_w(b, x0);
      CHECK(std::abs(w * std::exp(w) - x0) <= 1e-13 * std::abs(x0) + 1e-16);
    }
    const double xp = std::exp(40.0 * U(rng) - 20.0);
    const double w = lambert_w(Branch::Principal, xp);
    CHECK(std::abs(w * std::exp(w) - xp) <= 1e-13 * xp);
  }
}

TEST_CASE("lambert_w: monotonicity and branch ordering") {
  double prev0 = -2.0, prev1 = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double x = -kInvE + (kInvE - 1e-12) * i / 200.0;
    const double w0 = lambert_w(Branch::Principal, x);
    const double w1 = lambert_w(Branch::Lower, std::min(x, -1e-300));
    CHECK(w0 >= prev0);
    if (i > 0) {
      CHECK(w1 <= prev1);
      CHECK(w1 < -1.0);
      CHECK(w0 > -1.0);
    }
    prev0 = w0;
    prev1 = w1;
  }
}

TEST_CASE("lambert_w: domain errors") {
  auto code = [](auto f) {
    try {
      f();
    } catch (const relaxor::Error& e) {
      return e.code();
    }
    return relaxor::ErrorCode::NoSolution;
  };
  CHECK(code([] { lambert_w(Branch::Principal, -0.5); }) == relaxor::ErrorCode::LambertDomain);
  CHECK(code([] { lambert_w(Branch::Lower, 0.0); }) == relaxor::ErrorCode::LambertDomain);
  CHECK(code([] { lambert_w(Branch::Lower, 1.0); }) == relaxor::ErrorCode::LambertDomain);
  CHECK(code([] { relaxor::lambert_w_offset(Branch::Principal, -1.0); }) == relaxor::ErrorCode::LambertDomain);
  CHECK(code([] { relaxor::log_gap(0.0); }) == relaxor::ErrorCode::LambertDomain);
  CHECK_THROWS_AS(lambert_w(Branch::Principal, std::nan("")), relaxor::Error);
}

TEST_CASE("lambert_w_offset agrees with the direct form and stays accurate near the branch point") {
  for (double s : {1e-3, 0.1, 1.0, 5.0, 30.0}) {
    const double x = -std::exp(-1.0 - s);
    CHECK(relaxor::lambert_w_offset(Branch::Principal, s) == doctest::Approx(lambert_w(Branch::Principal, x)).epsilon(1e-13));
    CHECK(relaxor::lambert_w_offset(Branch::Lower, s) == doctest::Approx(lambert_w(Branch::Lower, x)).epsilon(1e-13));
  }
  // 1 + W = +-p - p^2/3 +- 11 p^3 / 72 - ..., p = sqrt(2 s)
  for (double s : {1e-16, 1e-12, 1e-8}) {
    const double p = std::sqrt(2.0 * s);
    const double up = p - p * p / 3.0 + 11.0 * p * p * p / 72.0;
    const double dn = -p - p * p / 3.0 - 11.0 * p * p * p / 72.0;
    CHECK(relaxor::lambert_w_offset_plus_one(Branch::Principal, s) == doctest::Approx(up).epsilon(1e-10));
    CHECK(relaxor::lambert_w_offset_plus_one(Branch::Lower, s) == doctest::Approx(dn).epsilon(1e-10));
  }
}

TEST_CASE("log_gap inverts through the offset form") {
  CHECK(relaxor::log_gap(1.0) == 0.0);
  for (double y : {1e-6, 0.01, 0.3, 0.9, 0.999}) {
    CHECK(-relaxor::lambert_w_offset(Branch::Principal, relaxor::log_gap(y)) == doctest::Approx(y).epsilon(1e-9));
  }
  for (double y : {1.001, 1.5, 3.0, 40.0}) {
    CHECK(-relaxor::lambert_w_offset(Branch::Lower, relaxor::log_gap(y)) == doctest::Approx(y).epsilon(1e-9));
  }
}
