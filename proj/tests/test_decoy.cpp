#include <chrono>
#include <cmath>

#include "doctest.h"
#include "test_support.hpp"
#include "tfqkd/channel.hpp"
#include "tfqkd/decoy.hpp"
#include "tfqkd/error.hpp"

using namespace tfqkd;
using tfqkd::testing::reference_intensities;
using tfqkd::testing::table_one;

TEST_CASE("intensity configuration invariants") {
  const auto cfg = reference_intensities(0.1);
  CHECK(cfg.i1() == std::vector<double>{0.0, 0.002, 0.005, 0.1, 1.3});
  CHECK(cfg.i2() == std::vector<double>{0.0, 0.002, 0.005, 0.1});
  const auto moved = cfg.with_mu(0.3);
  CHECK(moved.mu() == 0.3);
  CHECK(moved.i1() == std::vector<double>{0.0, 0.002, 0.005, 0.3, 1.3});
  CHECK(cfg.i2_only().i1() == cfg.i2());

  CHECK_THROWS_AS(IntensityConfig::from_sets(0.1, {0.0, 0.1}, {0.1, 0.2}), ConfigError);
  CHECK_THROWS_AS(IntensityConfig::from_sets(0.1, {0.1, 0.2}, {0.1}), ConfigError);
  CHECK_THROWS_AS(IntensityConfig::from_sets(0.0, {0.0}, {0.0}), ConfigError);
  CHECK_THROWS_AS(IntensityConfig::with_decoys(0.1, {0.1, 0.0}, {}), ConfigError);
  CHECK_THROWS_AS(IntensityConfig::with_decoys(0.1, {-0.1, 0.0}, {}), ConfigError);
}

TEST_CASE("vacuum intensity pins the dark-count yield") {
  const auto p = table_one(0.015);
  const auto cfg = reference_intensities(0.1);
  const auto gains = channel::build_gain_table(p, cfg, 100.0);
  const auto yb = decoy::bound_yields(gains, cfg, 10);
  const double q00 = gains.d1_gain(0.0, 0.0);
  CHECK(std::abs(yb.upper(0, 0) - q00) <= 1e-12);
  CHECK(std::abs(yb.lower(0, 0) - q00) <= 1e-12);
}

TEST_CASE("honest yields are bracketed") {
  const auto p = table_one(0.015);
  const auto cfg = reference_intensities(0.1);
  for (double L : {0.0, 100.0, 250.0}) {
    const auto yb = decoy::bound_yields(channel::build_gain_table(p, cfg, L), cfg, 10);
    for (int n = 0; n <= 10; ++n) {
      for (int m = 0; m <= 10; ++m) {
        const double y = channel::fock_yield(p, n, m, L);
        CHECK(yb.lower(n, m) <= y * (1.0 + 1e-9));
        CHECK(yb.upper(n, m) >= y * (1.0 - 1e-9));
        CHECK(yb.lower(n, m) <= yb.upper(n, m));
      }
    }
  }
}

TEST_CASE("large decoy intensity tightens two-photon yields") {
  const auto p = table_one(0.015);
  const auto full = reference_intensities(0.1);
  const auto reduced = full.i2_only();
  const auto gains = channel::build_gain_table(p, full, 100.0);
  const auto a = decoy::bound_yields(gains, full, 10);
  const auto b = decoy::bound_yields(gains, reduced, 10);
  CHECK(b.upper(2, 2) - b.lower(2, 2) > a.upper(2, 2) - a.lower(2, 2));
  // Adding an intensity never widens any bound.
  for (int n = 0; n <= 10; ++n) {
    for (int m = 0; m <= 10; ++m) {
      CHECK(a.upper(n, m) <= b.upper(n, m) + 1e-9);
      CHECK(a.lower(n, m) >= b.lower(n, m) - 1e-9);
    }
  }
}

TEST_CASE("raising the cutoff keeps earlier bounds valid") {
  const auto p = table_one(0.015);
  const auto cfg = reference_intensities(0.2);
  const auto gains = channel::build_gain_table(p, cfg, 150.0);
  const auto a = decoy::bound_yields(gains, cfg, 8);
  const auto b = decoy::bound_yields(gains, cfg, 12);
  for (int n = 0; n <= 4; ++n) {
    for (int m = 0; m <= 4; ++m) {
      const double y = channel::fock_yield(p, n, m, 150.0);
      CHECK(b.lower(n, m) <= y * (1.0 + 1e-9));
      CHECK(b.upper(n, m) >= y * (1.0 - 1e-9));
      CHECK(a.lower(n, m) <= y * (1.0 + 1e-9));
      CHECK(a.upper(n, m) >= y * (1.0 - 1e-9));
    }
  }
}

TEST_CASE("inconsistent gains name the offending pair") {
  const auto p = table_one(0.015);
  const auto cfg = reference_intensities(0.1);
  auto gains = channel::build_gain_table(p, cfg, 100.0);
  // Vacuum-and-weak pair claims fewer clicks than dark counts alone allow.
  gains.d1[{0.002, 0.0}] = 1e-9;
  try {
    decoy::bound_yields(gains, cfg, 10);
    FAIL("expected a data-integrity error");
  } catch (const DataIntegrityError& e) {
    CHECK(std::string(e.what()).find("(0.002, 0)") != std::string::npos);
  }
  auto missing = channel::build_gain_table(p, cfg, 100.0);
  missing.d1.erase({1.3, 0.0});
  CHECK_THROWS_AS(decoy::bound_yields(missing, cfg, 10), DataIntegrityError);
  CHECK_THROWS_AS(decoy::bound_yields(gains, cfg, 2), DomainError);
}
