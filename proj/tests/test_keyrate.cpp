#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "test_support.hpp"
#include "tfqkd/channel.hpp"
#include "tfqkd/error.hpp"
#include "tfqkd/keyrate.hpp"
#include "tfqkd/numerics.hpp"

using namespace tfqkd;
using tfqkd::testing::reference_intensities;
using tfqkd::testing::table_one;

namespace {

void check_point_invariant(const RatePoint& p, const ChannelParams& params) {
  const double raw =
      p.q_code.value() * (1.0 - params.ec_eff * numerics::binary_entropy(p.e_code.value()) - p.i_ae_upper.value());
  CHECK(std::abs(p.skr.value() - std::max(0.0, raw)) <= 1e-12);
  CHECK(p.total_loss_db == doctest::Approx(params.loss_coeff * p.distance_km).epsilon(1e-15));
  CHECK(p.no_key == (raw <= 0.0));
}

}  // namespace

TEST_CASE("key rate formula") {
  CHECK(keyrate::secret_key_rate(0.25, 0.0, 1.0, 0.0).value() == 0.25);
  // Independent evaluation of 2.9e-3 (1 - 1.15 h(0.01) - 0.3).
  CHECK(keyrate::secret_key_rate(2.9e-3, 0.01, 1.15, 0.3).value() ==
        doctest::Approx(0.001760554891787136).epsilon(1e-13));
  CHECK(keyrate::secret_key_rate(2.9e-3, 0.01, 1.15, 1.0).value() == 0.0);
  CHECK(keyrate::secret_key_rate(0.1, 0.5, 1.15, 0.0).value() == 0.0);
  CHECK_THROWS_AS(keyrate::secret_key_rate(0.1, 0.01, 0.9, 0.0), DomainError);
  CHECK_THROWS_AS(keyrate::secret_key_rate(0.1, 0.01, 1.1, 1.5), DomainError);
  CHECK_THROWS_AS(keyrate::secret_key_rate(-0.1, 0.01, 1.1, 0.1), DomainError);
}

TEST_CASE("repeaterless bound") {
  // Half transmittance gives exactly one bit.
  const double half = 10.0 * std::log10(2.0) / 0.2;
  CHECK(keyrate::plob_bound(0.2, half) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(keyrate::plob_bound(0.2, 100.0) == doctest::Approx(0.01449956969511508).epsilon(1e-13));
  CHECK(keyrate::plob_bound(0.2, 0.0) == std::numeric_limits<double>::infinity());
  CHECK(keyrate::plob_bound(0.2, 300.0) < keyrate::plob_bound(0.2, 200.0));
  CHECK_THROWS_AS(keyrate::plob_bound(0.2, -1.0), DomainError);

  const auto p = table_one(0.015);
  CHECK(keyrate::plob_bound(p, 100.0, false) == keyrate::plob_bound(0.2, 100.0));
  // -log2(1 - 0.145 * 0.01)
  CHECK(keyrate::plob_bound(p, 100.0, true) == doctest::Approx(0.0020934259101255963).epsilon(1e-12));
  CHECK(keyrate::plob_bound(p, 0.0, true) < std::numeric_limits<double>::infinity());
}

TEST_CASE("mode names round trip") {
  for (auto m : {RateMode::kImproved, RateMode::kOriginal, RateMode::kInfiniteImproved, RateMode::kInfiniteOriginal}) {
    CHECK(parse_rate_mode(rate_mode_name(m)) == m);
  }
  CHECK_FALSE(parse_rate_mode("best").has_value());
}

TEST_CASE("improved pipeline yields key at zero distance") {
  const auto p = table_one(0.015);
  const auto r = keyrate::evaluate_point_detailed(p, reference_intensities(0.1), 0.0, RateMode::kImproved);
  CHECK(r.point.skr.value() > 0.0);
  CHECK_FALSE(r.point.no_key);
  REQUIRE(r.intervals.has_value());
  REQUIRE(r.x.has_value());
  CHECK(r.leakage.certificate_gap <= leakage::kDefaultTolerance);
  check_point_invariant(r.point, p);
}

TEST_CASE("mode ordering at fixed intensity") {
  const auto p = table_one(0.015);
  const auto cfg = reference_intensities(0.05);
  for (double L : {0.0, 100.0, 250.0}) {
    CAPTURE(L);
    const auto inf_imp = keyrate::evaluate_point(p, cfg, L, RateMode::kInfiniteImproved);
    const auto imp = keyrate::evaluate_point(p, cfg, L, RateMode::kImproved);
    const auto orig = keyrate::evaluate_point(p, cfg, L, RateMode::kOriginal);
    const auto inf_orig = keyrate::evaluate_point(p, cfg, L, RateMode::kInfiniteOriginal);
    CHECK(inf_imp.skr.value() >= imp.skr.value());
    CHECK(imp.skr.value() >= orig.skr.value() - 1e-12);
    CHECK(inf_orig.skr.value() >= orig.skr.value());
    CHECK(imp.i_ae_upper.value() >= inf_imp.i_ae_upper.value());
    for (const auto& r : {inf_imp, imp, orig, inf_orig}) check_point_invariant(r, p);
  }
}

TEST_CASE("saturated leakage clamps to no key") {
  const auto p = table_one(0.015);
  const auto r = keyrate::evaluate_point(p, reference_intensities(0.05), 600.0, RateMode::kOriginal);
  CHECK(r.skr.value() == 0.0);
  CHECK(r.no_key);
  check_point_invariant(r, p);
}

TEST_CASE("supplied gains reproduce the modeled point") {
  const auto p = table_one(0.015);
  const auto cfg = reference_intensities(0.05);
  const auto direct = keyrate::evaluate_point_detailed(p, cfg, 150.0, RateMode::kImproved);
  std::stringstream csv;
  channel::write_gain_table_csv(csv, direct.gains);
  const auto measured = channel::read_gain_table_csv(csv);
  CHECK(measured.provenance == Provenance::kMeasured);
  const auto again = keyrate::evaluate_gains(p, measured, cfg, 150.0, RateMode::kImproved);
  CHECK(again.point.skr.value() == direct.point.skr.value());
  CHECK(again.point.i_ae_upper.value() == direct.point.i_ae_upper.value());
  CHECK_THROWS_AS(keyrate::evaluate_gains(p, measured, cfg, 150.0, RateMode::kInfiniteImproved), ConfigError);
}

TEST_CASE("sweep counts rows and records failures") {
  const auto p = table_one(0.015);
  const auto cfg = reference_intensities(0.05);
  const std::vector<RateMode> modes{RateMode::kInfiniteImproved, RateMode::kInfiniteOriginal};
  const auto rows = keyrate::sweep(p, cfg, {0.0, 100.0, 200.0}, modes, false);
  REQUIRE(rows.size() == 6);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].point.distance_km == std::vector<double>{0.0, 100.0, 200.0}[i / 2]);
    CHECK(rows[i].point.mode == modes[i % 2]);
    CHECK_FALSE(rows[i].error.has_value());
  }
  for (auto m : modes) {
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
      if (r.point.mode != m) continue;
      CHECK(r.point.skr.value() <= prev);
      prev = r.point.skr.value();
    }
  }

  PipelineOptions bad;
  bad.yield_cutoff = 2;
  const auto failed = keyrate::sweep(p, cfg, {0.0, 50.0}, {RateMode::kOriginal}, false, {}, bad);
  REQUIRE(failed.size() == 2);
  for (const auto& r : failed) {
    REQUIRE(r.error.has_value());
    CHECK(*r.error == ErrorCode::kDomain);
    CHECK_FALSE(r.error_message.empty());
  }
  CHECK_THROWS_AS(keyrate::sweep(p, cfg, {}, modes, false), DomainError);
}

TEST_CASE("intensity optimization") {
  const auto p = table_one(0.015);
  const auto cfg = reference_intensities(0.1);
  const MuGrid grid;
  const auto best = keyrate::optimize_mu(p, cfg, 0.0, RateMode::kInfiniteImproved, grid);
  CHECK_FALSE(best.no_key);
  CHECK(best.mu_star > grid.lo);
  CHECK(best.mu_star < grid.hi);
  CHECK(best.point.mu == best.mu_star);
  for (int i = 0; i < grid.steps; ++i) {
    const double mu = grid.lo * std::pow(grid.hi / grid.lo, static_cast<double>(i) / (grid.steps - 1));
    CHECK(keyrate::evaluate_point(p, cfg.with_mu(mu), 0.0, RateMode::kInfiniteImproved).skr.value() <=
          best.point.skr.value());
  }
  // A tighter grid around the optimum lands on the same rate.
  const auto narrow =
      keyrate::optimize_mu(p, cfg, 0.0, RateMode::kInfiniteImproved, {best.mu_star / 2.0, best.mu_star * 2.0, 20});
  CHECK(std::abs(narrow.point.skr.value() - best.point.skr.value()) <= 5e-3 * best.point.skr.value());

  const auto finite = keyrate::optimize_mu(p, cfg, 100.0, RateMode::kImproved, grid);
  CHECK(finite.point.skr.value() > 0.0);
  for (double mu : {0.02, 0.05, 0.1, 0.3}) {
    CHECK(keyrate::evaluate_point(p, cfg.with_mu(mu), 100.0, RateMode::kImproved).skr.value() <=
          finite.point.skr.value());
  }

  const auto none = keyrate::optimize_mu(p, cfg, 700.0, RateMode::kInfiniteImproved, grid);
  CHECK(none.no_key);
  CHECK(none.mu_star == grid.lo);
  CHECK(none.point.skr.value() == 0.0);
  CHECK_THROWS_AS(keyrate::optimize_mu(p, cfg, 0.0, RateMode::kImproved, {0.0, 1.0, 50}), DomainError);
}

TEST_CASE("tolerable loss search") {
  const auto p = table_one(0.015);
  const auto cfg = reference_intensities(0.1);
  const auto coarse = keyrate::max_tolerable_loss(p, cfg, RateMode::kInfiniteImproved, 0.5);
  const auto fine = keyrate::max_tolerable_loss(p, cfg, RateMode::kInfiniteImproved, 0.25);
  CHECK_FALSE(coarse.no_key_at_zero);
  CHECK(coarse.loss_db > 0.0);
  CHECK(std::abs(coarse.loss_db - fine.loss_db) <= 0.5);
  const double d = fine.loss_db / p.loss_coeff;
  CHECK(keyrate::optimize_mu(p, cfg, d, RateMode::kInfiniteImproved).point.skr.value() > 0.0);
  CHECK(keyrate::optimize_mu(p, cfg, d + 0.25 / p.loss_coeff + 1e-9, RateMode::kInfiniteImproved).point.skr.value() ==
        0.0);

  auto noisy = table_one(0.3);
  const auto dead = keyrate::max_tolerable_loss(noisy, cfg, RateMode::kInfiniteImproved);
  CHECK(dead.no_key_at_zero);
  CHECK(dead.loss_db == 0.0);
  CHECK_THROWS_AS(keyrate::max_tolerable_loss(p, cfg, RateMode::kInfiniteImproved, 0.0), DomainError);
}
