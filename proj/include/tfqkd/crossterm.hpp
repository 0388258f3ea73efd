#pragma once

#include <array>
#include <string_view>
#include <utility>
#include <vector>

#include "tfqkd/channel.hpp"
#include "tfqkd/decoy.hpp"
#include "tfqkd/intensity.hpp"
#include "tfqkd/lp.hpp"

namespace tfqkd {

// Joint photon-number parity; first letter is Alice's, second is Bob's.
enum class ParityClass { kEe = 0, kOe = 1, kOo = 2, kEo = 3 };

inline constexpr std::array<ParityClass, 4> kParityClasses = {ParityClass::kEe, ParityClass::kOe, ParityClass::kOo,
                                                              ParityClass::kEo};

std::string_view parity_class_name(ParityClass c);
ParityClass parity_class_of(int n, int m);

using PhotonPair = std::pair<int, int>;

// An unordered pair of distinct photon-number pairs from the same class,
// stored with first < second lexicographically.
struct PairIndex {
  PhotonPair first;
  PhotonPair second;
  ParityClass parity = ParityClass::kEe;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const noexcept { return hi - lo; }
  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
};

using ClassArray = std::array<Interval, 4>;

inline Interval& at(ClassArray& a, ParityClass c) { return a[static_cast<std::size_t>(c)]; }
inline const Interval& at(const ClassArray& a, ParityClass c) { return a[static_cast<std::size_t>(c)]; }

// Non-cross and cross contributions to each class, indexed by ParityClass.
struct ClassIntervals {
  ClassArray omega;
  ClassArray phi;
};

namespace crossterm {

std::vector<PairIndex> enumerate_pairs(ParityClass parity, int pair_cutoff);

// Diagonal contribution of a class at code intensity mu. The upper end adds
// the class's Poisson mass beyond the yield cutoff with Y = 1.
Interval omega_bounds(const YieldBounds& yields, double mu, ParityClass parity);

// Worst-case contribution of the within-class pairs that the cutoff omits,
// using |y| <= 2 sqrt(Y Y') with Y = 1 everywhere.
double pair_tail_slack(double w1, double w2, int pair_cutoff);

// Same with the certified yield upper bounds (1 beyond their cutoff).
double pair_tail_slack(double w1, double w2, int pair_cutoff, const YieldBounds& yields);

// Contribution of one class to pair_tail_slack.
double class_tail_slack(double w1, double w2, int pair_cutoff, const YieldBounds& yields, ParityClass parity);

// Certified cross-term interval per class from the phase-locked constraints
// on intensities.i2() x intensities.i2(). Throws DataIntegrityError when the
// gains admit no inner products at this truncation.
ClassArray phi_bounds(const GainTable& gains, const YieldBounds& yields, const IntensityConfig& intensities, double mu,
                      int pair_cutoff, const lp::SolverOptions& options = {});

// Worst-case cross-term interval with no phase-locked information.
ClassArray phi_worst_case(const YieldBounds& yields, double mu, int pair_cutoff);

}  // namespace crossterm
}  // namespace tfqkd
