#pragma once

#include <array>

#include "tfqkd/channel.hpp"
#include "tfqkd/crossterm.hpp"
#include "tfqkd/decoy.hpp"
#include "tfqkd/numerics.hpp"

namespace tfqkd {

// Box per class plus the sum rule x_ee + x_oe + x_oo + x_eo = total.
struct XConstraints {
  ClassArray x{};
  double total = 0.0;
};

enum class ConstraintMode { kOriginal, kImproved, kInfinite };

struct LeakageResult {
  Bits upper_bound;
  std::array<double, 4> witness{};  // feasible point in un-normalized units
  double certificate_gap = 0.0;
  ConstraintMode constraint_mode = ConstraintMode::kImproved;
  bool converged = true;            // false when the gap stayed above tolerance
};

namespace leakage {

inline constexpr double kDefaultTolerance = 1e-7;

// F(x) = h(x_ee/Q, x_oe/Q) + h(x_oo/Q, x_eo/Q).
double objective(const std::array<double, 4>& x, double total);

// Constraints without phase-locked data: 0 <= x <= (sum sqrt(p p Y))^2.
XConstraints x_constraints_original(const YieldBounds& yields, double mu, double q_code);

// x in [omega.lo + phi.lo, omega.hi + phi.hi] clamped to [0, q_code]. Throws
// EstimationError when the box cannot meet the sum rule.
XConstraints x_constraints_improved(const ClassIntervals& intervals, double q_code);

// Certified maximum of the objective over the constraints. Throws
// EstimationError on an empty region.
LeakageResult max_leakage(const XConstraints& constraints, double tolerance = kDefaultTolerance,
                          ConstraintMode mode = ConstraintMode::kImproved);

// Exact yields from the honest model; photon sums run to this cutoff.
inline constexpr int kExactCutoff = 60;

YieldBounds exact_yields(const ChannelParams& params, double distance_km, int cutoff = kExactCutoff);

// Non-cross terms with exact yields; cross terms vanish, so x is fixed.
std::array<double, 4> exact_omegas(const ChannelParams& params, double mu, double distance_km);

// Objective at x = exact omegas with Q the code gain.
Bits leakage_infinite(const ChannelParams& params, double mu, double distance_km);

}  // namespace leakage
}  // namespace tfqkd
