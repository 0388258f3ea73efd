#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tfqkd/error.hpp"
#include "tfqkd/lp.hpp"

using namespace tfqkd;
using namespace tfqkd::lp;

using namespace tfqkd::oracles;

TEST_CASE("box optimum without rows") {
  LinearProgram lp{{1.0}, {}, {{0.0, 2.0}}};
  const auto out = solve_lp(lp);
  REQUIRE(out.optimal());
  CHECK(*out.value == doctest::Approx(2.0));
  CHECK(out.point[0] == doctest::Approx(2.0));
}

TEST_CASE("equality row saturates objective") {
  LinearProgram lp{{1.0, 1.0}, {{{1.0, 1.0}, Relation::kEqual, 1.0}}, {{0.0, 1.0}, {0.0, 1.0}}};
  const auto out = solve_lp(lp);
  REQUIRE(out.optimal());
  CHECK(*out.value == doctest::Approx(1.0));
  CHECK(solve_lp_min(lp).value.value() == doctest::Approx(1.0));
}

TEST_CASE("contradictory equality is infeasible") {
  LinearProgram lp{{1.0}, {{{1.0}, Relation::kEqual, 2.0}}, {{0.0, 1.0}}};
  const auto out = solve_lp(lp);
  CHECK(out.status == LpStatus::kInfeasible);
  CHECK_FALSE(out.value.has_value());
  CHECK(out.point.empty());
}

TEST_CASE("minimization reports the true minimum") {
  LinearProgram lp{{1.0}, {}, {{0.0, 2.0}}};
  CHECK(*solve_lp_min(lp).value == doctest::Approx(0.0));
  LinearProgram neg{{-1.0}, {}, {{0.0, 3.0}}};
  CHECK(*solve_lp_min(neg).value == doctest::Approx(-3.0));
}

TEST_CASE("unbounded objective is reported") {
  LinearProgram lp{{1.0, 0.0}, {{{1.0, -1.0}, Relation::kLessEqual, 1.0}}, {}};
  CHECK(solve_lp(lp).status == LpStatus::kUnbounded);
}

TEST_CASE("free variables and negative bounds") {
  // max -|x - 3| style: max t s.t. t <= x - 3, t <= 3 - x, x free.
  LinearProgram lp;
  lp.objective = {0.0, 1.0};
  lp.bounds = {{-kInfinity, kInfinity}, {-kInfinity, kInfinity}};
  lp.constraints = {{{-1.0, 1.0}, Relation::kLessEqual, -3.0}, {{1.0, 1.0}, Relation::kLessEqual, 3.0}};
  const auto out = solve_lp(lp);
  REQUIRE(out.optimal());
  CHECK(*out.value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.point[0] == doctest::Approx(3.0));
}

TEST_CASE("dimension mismatch is a structural error") {
  LinearProgram lp{{1.0, 2.0}, {{{1.0}, Relation::kLessEqual, 1.0}}, {}};
  CHECK_THROWS_AS(solve_lp(lp), StructuralError);
  LinearProgram bad_bounds{{1.0}, {}, {{2.0, 1.0}}};
  CHECK_THROWS_AS(solve_lp(bad_bounds), StructuralError);
  LinearProgram width{{1.0}, {}, {{0.0, 1.0}, {0.0, 1.0}}};
  CHECK_THROWS_AS(solve_lp(width), StructuralError);
}

TEST_CASE("degenerate vertex does not cycle") {
  // Classic Beale-style degenerate program.
  LinearProgram lp;
  lp.objective = {0.75, -150.0, 0.02, -6.0};
  lp.bounds = {{0, kInfinity}, {0, kInfinity}, {0, kInfinity}, {0, kInfinity}};
  lp.constraints = {
      {{0.25, -60.0, -0.04, 9.0}, Relation::kLessEqual, 0.0},
      {{0.5, -90.0, -0.02, 3.0}, Relation::kLessEqual, 0.0},
      {{0.0, 0.0, 1.0, 0.0}, Relation::kLessEqual, 1.0},
  };
  const auto out = solve_lp(lp);
  REQUIRE(out.optimal());
  CHECK(*out.value == doctest::Approx(0.05));
}

TEST_CASE("random programs agree with vertex enumeration") {
  std::mt19937_64 rng(20191105);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const LinearProgram lp = random_program(rng);
    const auto oracle = vertex_enumeration_max(lp);
    const auto out = solve_lp(lp);
    if (!oracle) {
      CHECK(out.status == LpStatus::kInfeasible);
      continue;
    }
    REQUIRE(out.optimal());
    CHECK(std::abs(*out.value - *oracle) <= 1e-8);
    CHECK(max_violation(lp, out.point) <= 1e-9);
    double dot = 0.0;
    for (std::size_t j = 0; j < out.point.size(); ++j) dot += lp.objective[j] * out.point[j];
    CHECK(std::abs(dot - *out.value) <= 1e-9);
    ++compared;
  }
  CHECK(compared == 200);
}

TEST_CASE("fixing active constraints reproduces the optimum") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    LinearProgram lp = random_program(rng);
    const auto out = solve_lp(lp);
    REQUIRE(out.optimal());
    LinearProgram fixed = lp;
    for (auto& c : fixed.constraints) {
      double s = 0.0;
      for (std::size_t j = 0; j < out.point.size(); ++j) s += c.coefficients[j] * out.point[j];
      if (std::abs(s - c.rhs) <= 1e-9) c.relation = Relation::kEqual;
    }
    const auto again = solve_lp(fixed);
    REQUIRE(again.optimal());
    CHECK(std::abs(*again.value - *out.value) <= 1e-9);
  }
}

TEST_CASE("identical inputs give bit-identical outputs") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const LinearProgram lp = random_program(rng);
    const auto a = solve_lp(lp);
    const auto b = solve_lp(lp);
    REQUIRE(a.status == b.status);
    if (a.optimal()) {
      CHECK(*a.value == *b.value);
      CHECK(a.point == b.point);
    }
  }
}

TEST_CASE("feasible region is reusable across objectives") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 30; ++trial) {
    const LinearProgram lp = random_program(rng);
    FeasibleRegion region(lp);
    REQUIRE(region.feasible());
    for (std::size_t j = 0; j < lp.objective.size(); ++j) {
      std::vector<double> c(lp.objective.size(), 0.0);
      c[j] = 1.0;
      LinearProgram single = lp;
      single.objective = c;
      CHECK(region.maximize(c).value.value() == doctest::Approx(*solve_lp(single).value).epsilon(1e-9));
      CHECK(region.minimize(c).value.value() == doctest::Approx(*solve_lp_min(single).value).epsilon(1e-9));
    }
  }
}
