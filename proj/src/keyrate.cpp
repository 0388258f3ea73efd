#include "tfqkd/keyrate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "tfqkd/decoy.hpp"

namespace tfqkd {
namespace {

constexpr const char* kModule = "keyrate";

}  // namespace

std::string_view rate_mode_name(RateMode mode) {
  switch (mode) {
    case RateMode::kImproved: return "improved";
    case RateMode::kOriginal: return "original";
    case RateMode::kInfiniteImproved: return "infinite_improved";
    case RateMode::kInfiniteOriginal: return "infinite_original";
  }
  return "unknown";
}

std::optional<RateMode> parse_rate_mode(std::string_view name) {
  for (auto m : {RateMode::kImproved, RateMode::kOriginal, RateMode::kInfiniteImproved, RateMode::kInfiniteOriginal}) {
    if (rate_mode_name(m) == name) return m;
  }
  return std::nullopt;
}

namespace keyrate {

Bits secret_key_rate(double q_code, double e_code, double f, double i_ae) {
  if (!(q_code >= 0.0 && q_code <= 1.0)) throw DomainError(kModule, "code gain must lie in [0, 1]");
  if (!(e_code >= 0.0 && e_code <= 1.0)) throw DomainError(kModule, "code error must lie in [0, 1]");
  if (!(std::isfinite(f) && f >= 1.0)) throw DomainError(kModule, "error-correction inefficiency must be >= 1");
  if (!(i_ae >= 0.0 && i_ae <= 1.0)) throw DomainError(kModule, "leakage must lie in [0, 1]");
  const double raw = q_code * (1.0 - f * numerics::binary_entropy(e_code) - i_ae);
  return Bits(std::max(0.0, raw));
}

double plob_bound(double loss_coeff, double distance_km) {
  if (!(loss_coeff >= 0.0 && distance_km >= 0.0)) throw DomainError(kModule, "loss and distance must be >= 0");
  const double eta = std::pow(10.0, -loss_coeff * distance_km / 10.0);
  if (eta >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::log1p(-eta) / std::log(2.0);
}

double plob_bound(const ChannelParams& params, double distance_km, bool include_detector) {
  if (!include_detector) return plob_bound(params.loss_coeff, distance_km);
  if (!(params.loss_coeff >= 0.0 && distance_km >= 0.0)) throw DomainError(kModule, "loss and distance must be >= 0");
  const double eta = params.det_eff * std::pow(10.0, -params.loss_coeff * distance_km / 10.0);
  if (eta >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::log1p(-eta) / std::log(2.0);
}

namespace {

lp::SolverOptions solver_options(const PipelineOptions& o) {
  lp::SolverOptions s;
  s.feasibility_tol = o.lp_tol;
  s.optimality_tol = o.lp_tol;
  return s;
}

RatePoint make_point(const ChannelParams& params, double distance_km, double mu, double q, double e, double i_ae,
                     RateMode mode) {
  RatePoint p;
  p.distance_km = distance_km;
  p.total_loss_db = params.loss_coeff * distance_km;
  p.mu = mu;
  p.q_code = Probability(q);
  p.e_code = Probability(e);
  p.i_ae_upper = Bits(i_ae);
  p.mode = mode;
  p.skr = secret_key_rate(q, e, params.ec_eff, i_ae);
  p.no_key = q * (1.0 - params.ec_eff * numerics::binary_entropy(e) - i_ae) <= 0.0;
  return p;
}

// Both constraint sets are valid, so their intersection is too.
XConstraints intersect(const XConstraints& a, const XConstraints& b) {
  XConstraints out = a;
  for (auto c : kParityClasses) {
    at(out.x, c).lo = std::max(at(a.x, c).lo, at(b.x, c).lo);
    at(out.x, c).hi = std::min(at(a.x, c).hi, at(b.x, c).hi);
  }
  return out;
}

void check_options(const PipelineOptions& o) {
  if (o.yield_cutoff < 3) throw DomainError(kModule, "yield cutoff must be >= 3");
  if (o.pair_cutoff < 1) throw DomainError(kModule, "pair cutoff must be >= 1");
  if (!(o.lp_tol > 0.0)) throw DomainError(kModule, "lp tolerance must be > 0");
  if (!(o.leakage_tol > 0.0)) throw DomainError(kModule, "leakage tolerance must be > 0");
}

}  // namespace

PointReport evaluate_gains(const ChannelParams& params, const GainTable& gains, const IntensityConfig& intensities,
                           double distance_km, RateMode mode, const PipelineOptions& options) {
  params.validate();
  check_options(options);
  gains.validate();
  if (gains.mu != intensities.mu()) throw DataIntegrityError(kModule, "gain table mu differs from configured mu");
  const double mu = intensities.mu();
  const double q = gains.code_gain;
  const double e = gains.code_error;

  PointReport report;
  report.gains = gains;
  report.leakage.constraint_mode = ConstraintMode::kInfinite;
  if (q == 0.0) {
    report.leakage.upper_bound = Bits(1.0);
    report.point = make_point(params, distance_km, mu, q, e, 1.0, mode);
    return report;
  }

  const auto sopt = solver_options(options);
  switch (mode) {
    case RateMode::kImproved: {
      const auto yields = decoy::bound_yields(gains, intensities, options.yield_cutoff, sopt);
      ClassIntervals iv;
      for (auto c : kParityClasses) at(iv.omega, c) = crossterm::omega_bounds(yields, mu, c);
      iv.phi = crossterm::phi_bounds(gains, yields, intensities, mu, options.pair_cutoff, sopt);
      const auto x = intersect(leakage::x_constraints_improved(iv, q), leakage::x_constraints_original(yields, mu, q));
      report.intervals = iv;
      report.x = x;
      report.leakage = leakage::max_leakage(x, options.leakage_tol, ConstraintMode::kImproved);
      break;
    }
    case RateMode::kOriginal: {
      const auto set = options.original_decoys == OriginalDecoys::kI2 ? intensities.i2_only() : intensities;
      const auto yields = decoy::bound_yields(gains, set, options.yield_cutoff, sopt);
      const auto x = leakage::x_constraints_original(yields, mu, q);
      report.x = x;
      report.leakage = leakage::max_leakage(x, options.leakage_tol, ConstraintMode::kOriginal);
      break;
    }
    case RateMode::kInfiniteImproved:
    case RateMode::kInfiniteOriginal:
      if (gains.provenance == Provenance::kMeasured) {
        throw ConfigError(kModule, "infinite-decoy modes need the channel model, not measured gains");
      }
      if (mode == RateMode::kInfiniteImproved) {
        report.leakage.upper_bound = leakage::leakage_infinite(params, mu, distance_km);
        report.leakage.witness = leakage::exact_omegas(params, mu, distance_km);
      } else {
        const auto x = leakage::x_constraints_original(leakage::exact_yields(params, distance_km), mu, q);
        report.x = x;
        report.leakage = leakage::max_leakage(x, options.leakage_tol, ConstraintMode::kOriginal);
      }
      break;
  }
  report.point = make_point(params, distance_km, mu, q, e, report.leakage.upper_bound, mode);
  return report;
}

PointReport evaluate_point_detailed(const ChannelParams& params, const IntensityConfig& intensities,
                                    double distance_km, RateMode mode, const PipelineOptions& options) {
  params.validate();
  const auto gains = channel::build_gain_table(params, intensities, distance_km);
  return evaluate_gains(params, gains, intensities, distance_km, mode, options);
}

RatePoint evaluate_point(const ChannelParams& params, const IntensityConfig& intensities, double distance_km,
                         RateMode mode, const PipelineOptions& options) {
  return evaluate_point_detailed(params, intensities, distance_km, mode, options).point;
}

MuSearch optimize_mu(const ChannelParams& params, const IntensityConfig& intensities, double distance_km, RateMode mode,
                     const MuGrid& grid, const PipelineOptions& options) {
  if (!(grid.lo > 0.0 && grid.hi >= grid.lo && grid.steps >= 2)) {
    throw DomainError(kModule, "mu grid needs 0 < lo <= hi and at least two steps");
  }
  std::vector<double> mus(static_cast<std::size_t>(grid.steps));
  for (int i = 0; i < grid.steps; ++i) {
    mus[static_cast<std::size_t>(i)] = grid.lo * std::pow(grid.hi / grid.lo, static_cast<double>(i) / (grid.steps - 1));
  }

  auto eval = [&](double mu, RateMode m) { return evaluate_point(params, intensities.with_mu(mu), distance_km, m, options); };

  // The infinite improved rate bounds every other mode from above, so it
  // orders the grid and prunes points that cannot beat the incumbent.
  std::vector<double> ceiling(mus.size());
  for (std::size_t i = 0; i < mus.size(); ++i) {
    ceiling[i] = mode == RateMode::kInfiniteImproved ? 0.0 : eval(mus[i], RateMode::kInfiniteImproved).skr.value();
  }
  std::vector<std::size_t> order(mus.size());
  std::iota(order.begin(), order.end(), 0);
  if (mode != RateMode::kInfiniteImproved) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ceiling[a] > ceiling[b]; });
  }

  std::optional<RatePoint> best;
  std::size_t best_i = 0;
  auto consider = [&](const RatePoint& p, std::size_t idx) {
    const bool better = !best || p.skr.value() > best->skr.value() ||
                        (p.skr.value() == best->skr.value() && p.mu < best->mu);
    if (better) {
      best = p;
      best_i = idx;
    }
  };
  const bool prune = mode != RateMode::kInfiniteImproved;
  for (std::size_t i : order) {
    if (prune && ceiling[i] == 0.0) break;
    if (prune && best && ceiling[i] * (1.0 + 1e-6) < best->skr.value()) break;
    consider(eval(mus[i], mode), i);
  }
  if (!best || best->skr.value() <= 0.0) {
    const RatePoint p = eval(mus.front(), mode);
    return {mus.front(), p, true};
  }

  // Golden-section refinement inside the neighbouring grid cells.
  double a = mus[best_i == 0 ? 0 : best_i - 1];
  double b = mus[std::min(best_i + 1, mus.size() - 1)];
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c1 = b - r * (b - a), c2 = a + r * (b - a);
  RatePoint p1 = eval(c1, mode), p2 = eval(c2, mode);
  consider(p1, best_i);
  consider(p2, best_i);
  while (b - a > 1e-3 * best->mu) {
    if (p1.skr.value() >= p2.skr.value()) {
      b = c2;
      c2 = c1;
      p2 = p1;
      c1 = b - r * (b - a);
      p1 = eval(c1, mode);
      consider(p1, best_i);
    } else {
      a = c1;
      c1 = c2;
      p1 = p2;
      c2 = a + r * (b - a);
      p2 = eval(c2, mode);
      consider(p2, best_i);
    }
  }
  return {best->mu, *best, false};
}

std::vector<SweepRow> sweep(const ChannelParams& params, const IntensityConfig& intensities,
                            const std::vector<double>& distances, const std::vector<RateMode>& modes, bool optimize,
                            const MuGrid& grid, const PipelineOptions& options) {
  if (distances.empty() || modes.empty()) throw DomainError(kModule, "sweep needs at least one distance and one mode");
  // Points are independent; workers fill preallocated slots so row order
  // never depends on scheduling.
  std::vector<SweepRow> rows(distances.size() * modes.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      const double d = distances[i / modes.size()];
      const RateMode m = modes[i % modes.size()];
      SweepRow& row = rows[i];
      row.point.distance_km = d;
      row.point.total_loss_db = params.loss_coeff * d;
      row.point.mu = intensities.mu();
      row.point.mode = m;
      try {
        row.point = optimize ? optimize_mu(params, intensities, d, m, grid, options).point
                             : evaluate_point(params, intensities, d, m, options);
      } catch (const Error& e) {
        row.error = e.code();
        row.error_message = e.module() + ": " + e.what();
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(rows.size(), std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return rows;
}

LossLimit max_tolerable_loss(const ChannelParams& params, const IntensityConfig& intensities, RateMode mode,
                             double resolution_db, const MuGrid& grid, const PipelineOptions& options) {
  if (!(resolution_db > 0.0)) throw DomainError(kModule, "resolution must be > 0");
  if (!(params.loss_coeff > 0.0)) throw DomainError(kModule, "loss search needs a positive loss coefficient");
  auto positive = [&](double loss_db) {
    return optimize_mu(params, intensities, loss_db / params.loss_coeff, mode, grid, options).point.skr.value() > 0.0;
  };
  if (!positive(0.0)) return {0.0, true};
  double lo = 0.0, hi = 50.0;
  while (positive(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e4) throw EstimationError(kModule, "key rate stays positive beyond 10000 dB");
  }
  while (hi - lo > resolution_db) {
    const double mid = 0.5 * (lo + hi);
    (positive(mid) ? lo : hi) = mid;
  }
  return {lo, false};
}

}  // namespace keyrate
}  // namespace tfqkd
