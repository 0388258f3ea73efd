#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "test_support.hpp"
#include "tfqkd/channel.hpp"
#include "tfqkd/crossterm.hpp"
#include "tfqkd/decoy.hpp"
#include "tfqkd/error.hpp"
#include "tfqkd/leakage.hpp"

using namespace tfqkd;
using namespace tfqkd::leakage;
using tfqkd::testing::reference_intensities;
using tfqkd::testing::table_one;
using tfqkd::oracles::sample_feasible;

namespace {

XConstraints box(std::array<Interval, 4> x, double total) { return {x, total}; }

}  // namespace

TEST_CASE("degenerate region collapses to a point") {
  const auto r = max_leakage(box({{{1e-3, 1e-3}, {0, 0}, {0, 0}, {0, 0}}}, 1e-3));
  CHECK(r.upper_bound.value() == 0.0);
  CHECK(r.certificate_gap == 0.0);
}

TEST_CASE("free region attains the symmetric maximum") {
  const double q = 2e-4;
  const auto r = max_leakage(box({{{0, q}, {0, q}, {0, q}, {0, q}}}, q));
  CHECK(r.upper_bound.value() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.upper_bound.value() <= 1.0);
  CHECK(objective(r.witness, q) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.witness[0] == doctest::Approx(r.witness[1]).epsilon(1e-6));
  CHECK(r.witness[2] == doctest::Approx(r.witness[3]).epsilon(1e-6));
}

TEST_CASE("fixed omegas give the objective value") {
  const std::array<double, 4> x{0.1, 0.5, 0.05, 0.35};
  XConstraints c{};
  c.total = 1.0;
  for (int i = 0; i < 4; ++i) c.x[static_cast<std::size_t>(i)] = {x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(i)]};
  CHECK(max_leakage(c).upper_bound.value() == doctest::Approx(objective(x, 1.0)).epsilon(1e-12));
}

TEST_CASE("certificate holds against random feasible points") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int region = 0; region < 50; ++region) {
    XConstraints c{};
    c.total = 1e-3 * (0.1 + u(rng));
    std::array<double, 4> centre{};
    double s = 0.0;
    for (auto& v : centre) s += (v = u(rng) * u(rng));
    for (int i = 0; i < 4; ++i) {
      const double mid = centre[static_cast<std::size_t>(i)] / s * c.total;
      const double halfw = c.total * u(rng) * (u(rng) < 0.3 ? 1e-4 : 0.3);
      c.x[static_cast<std::size_t>(i)] = {std::max(0.0, mid - halfw), std::min(c.total, mid + halfw)};
    }
    const auto r = max_leakage(c);
    CHECK(r.converged);
    CHECK(r.certificate_gap <= 1e-7);
    CHECK(r.upper_bound.value() >= objective(r.witness, c.total) - 1e-12);
    for (int k = 0; k < 200; ++k) {
      const auto x = sample_feasible(c, rng);
      CHECK(objective(x, c.total) <= r.upper_bound.value() + 1e-9);
    }
  }
}

TEST_CASE("shrinking intervals converge to the point value") {
  const std::array<double, 4> om{3e-5, 1.2e-4, 2.5e-5, 1.2e-4};
  const double q = om[0] + om[1] + om[2] + om[3];
  double prev = 2.0;
  for (double width : {1e-5, 1e-6, 1e-7, 1e-8, 1e-10}) {
    XConstraints c{};
    c.total = q;
    for (int i = 0; i < 4; ++i) c.x[static_cast<std::size_t>(i)] = {om[static_cast<std::size_t>(i)] - width, om[static_cast<std::size_t>(i)] + width};
    const double b = max_leakage(c).upper_bound.value();
    CHECK(b <= prev + 1e-12);
    prev = b;
  }
  CHECK(prev == doctest::Approx(objective(om, q)).epsilon(1e-4));
}

TEST_CASE("improved constraints never leak more than the original ones") {
  const auto p = table_one(0.015);
  for (double L : {0.0, 100.0, 200.0, 300.0}) {
    const double mu = 0.1;
    const auto cfg = reference_intensities(mu);
    const auto gains = channel::build_gain_table(p, cfg, L);
    const auto yb = decoy::bound_yields(gains, cfg, 10);
    ClassIntervals iv;
    for (auto c : kParityClasses) at(iv.omega, c) = crossterm::omega_bounds(yb, mu, c);
    iv.phi = crossterm::phi_bounds(gains, yb, cfg, mu, 6);
    const auto imp = x_constraints_improved(iv, gains.code_gain);
    const auto orig = x_constraints_original(yb, mu, gains.code_gain);
    for (auto c : kParityClasses) CHECK(at(imp.x, c).hi <= at(orig.x, c).hi * (1 + 1e-9));
    const auto ri = max_leakage(imp);
    const auto ro = max_leakage(orig, kDefaultTolerance, ConstraintMode::kOriginal);
    CHECK(ri.upper_bound.value() <= ro.upper_bound.value() + 1e-9);
    const double inf = leakage_infinite(p, mu, L);
    CHECK(inf <= ri.upper_bound.value() + 1e-12);
    CHECK(inf > 0.0);
    CHECK(inf < 1.0);
  }
}

TEST_CASE("infinite-decoy leakage") {
  const auto p = table_one();
  CHECK(leakage_infinite(p, 1e-14, 50.0).value() < 1e-6);
  // Independent summation at a different cutoff.
  const double mu = 0.1, L = 100.0;
  std::array<double, 4> x{};
  for (int n = 0; n <= 45; ++n)
    for (int m = 0; m <= 45; ++m)
      x[static_cast<std::size_t>(parity_class_of(n, m))] +=
          numerics::poisson_pmf(mu, n) * numerics::poisson_pmf(mu, m) * channel::fock_yield(p, n, m, L);
  const double q = channel::code_gain_and_error(p, mu, L).gain;
  CHECK(std::abs(leakage_infinite(p, mu, L).value() - objective(x, q)) <= 1e-9);
}

TEST_CASE("inconsistent class intervals are reported") {
  ClassIntervals iv;
  for (auto c : kParityClasses) {
    at(iv.omega, c) = {0.03, 0.031};
    at(iv.phi, c) = {0.0, 0.0};
  }
  CHECK_THROWS_AS(x_constraints_improved(iv, 0.1), EstimationError);
  CHECK_THROWS_AS(x_constraints_improved(iv, 0.05), EstimationError);
  CHECK_NOTHROW(x_constraints_improved(iv, 0.122));
  CHECK_THROWS_AS(max_leakage(box({{{0.5, 0.6}, {0.5, 0.6}, {0, 0}, {0, 0}}}, 0.9)), EstimationError);
}
