#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tfqkd/channel.hpp"
#include "tfqkd/crossterm.hpp"
#include "tfqkd/error.hpp"
#include "tfqkd/intensity.hpp"
#include "tfqkd/leakage.hpp"
#include "tfqkd/numerics.hpp"

namespace tfqkd {

enum class RateMode { kImproved, kOriginal, kInfiniteImproved, kInfiniteOriginal };

std::string_view rate_mode_name(RateMode mode);
std::optional<RateMode> parse_rate_mode(std::string_view name);

// Which phase-randomized intensities the original protocol may use.
enum class OriginalDecoys { kI1, kI2 };

struct PipelineOptions {
  int yield_cutoff = 10;
  int pair_cutoff = 6;
  double lp_tol = 1e-9;
  double leakage_tol = leakage::kDefaultTolerance;
  OriginalDecoys original_decoys = OriginalDecoys::kI2;
};

struct RatePoint {
  double distance_km = 0.0;
  double total_loss_db = 0.0;
  double mu = 0.0;
  Bits skr;
  Probability q_code;
  Probability e_code;
  Bits i_ae_upper;
  RateMode mode = RateMode::kImproved;
  bool no_key = false;  // raw rate was <= 0 and clamped
};

// Everything a point evaluation derived, for reports.
struct PointReport {
  RatePoint point;
  GainTable gains;
  std::optional<ClassIntervals> intervals;  // improved mode only
  std::optional<XConstraints> x;            // absent for the infinite improved mode
  LeakageResult leakage;
};

struct MuGrid {
  double lo = 0.01;
  double hi = 1.0;
  int steps = 50;
};

struct MuSearch {
  double mu_star = 0.0;
  RatePoint point;
  bool no_key = false;
};

struct SweepRow {
  RatePoint point;
  std::optional<ErrorCode> error;  // set when this point failed
  std::string error_message;
};

struct LossLimit {
  double loss_db = 0.0;
  bool no_key_at_zero = false;
};

namespace keyrate {

Bits secret_key_rate(double q_code, double e_code, double f, double i_ae);

// -log2(1 - 10^(-alpha L / 10)); +inf at zero distance.
double plob_bound(double loss_coeff, double distance_km);

// Optionally counts the detector efficiency as part of the channel.
double plob_bound(const ChannelParams& params, double distance_km, bool include_detector);

// Model the gains at this distance and run the chosen pipeline.
RatePoint evaluate_point(const ChannelParams& params, const IntensityConfig& intensities, double distance_km,
                         RateMode mode, const PipelineOptions& options = {});

PointReport evaluate_point_detailed(const ChannelParams& params, const IntensityConfig& intensities,
                                    double distance_km, RateMode mode, const PipelineOptions& options = {});

// Run the finite-decoy pipelines on supplied gains; distance is metadata.
PointReport evaluate_gains(const ChannelParams& params, const GainTable& gains, const IntensityConfig& intensities,
                           double distance_km, RateMode mode, const PipelineOptions& options = {});

// Geometric grid over mu, then golden-section refinement of the best cell.
MuSearch optimize_mu(const ChannelParams& params, const IntensityConfig& intensities, double distance_km, RateMode mode,
                     const MuGrid& grid = {}, const PipelineOptions& options = {});

std::vector<SweepRow> sweep(const ChannelParams& params, const IntensityConfig& intensities,
                            const std::vector<double>& distances, const std::vector<RateMode>& modes, bool optimize,
                            const MuGrid& grid = {}, const PipelineOptions& options = {});

// Largest total loss in dB with a positive optimized rate, to resolution_db.
LossLimit max_tolerable_loss(const ChannelParams& params, const IntensityConfig& intensities, RateMode mode,
                             double resolution_db = 0.25, const MuGrid& grid = {},
                             const PipelineOptions& options = {});

}  // namespace keyrate
}  // namespace tfqkd
