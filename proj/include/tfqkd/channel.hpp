#pragma once

#include <iosfwd>
#include <map>
#include <utility>
#include <vector>

#include "tfqkd/intensity.hpp"
#include "tfqkd/numerics.hpp"

namespace tfqkd {

// Physical model inputs. Charlie sits at the midpoint of a symmetric link.
struct ChannelParams {
  double dark_count = 8e-8;   // per detector per trial
  double det_eff = 0.145;
  double loss_coeff = 0.2;    // dB/km
  double misalignment = 0.0;  // intensity fraction reaching the wrong port
  double ec_eff = 1.15;       // error-correction inefficiency f

  // Throws DomainError naming the offending field.
  void validate() const;
};

enum class Provenance { kModeled, kMeasured };

using IntensityPair = std::pair<double, double>;

// Observed or modeled gains keyed by mode and intensity pair.
struct GainTable {
  double mu = 0.0;
  double code_gain = 0.0;
  double code_error = 0.0;
  std::map<IntensityPair, double> d1;
  std::map<IntensityPair, double> d2;
  Provenance provenance = Provenance::kModeled;

  // Lookups throw DataIntegrityError when the pair is absent.
  double d1_gain(double w1, double w2) const;
  double d2_gain(double w1, double w2) const;

  // Intensities appearing in the d1 / d2 keys, sorted ascending.
  std::vector<double> d1_intensities() const;
  std::vector<double> d2_intensities() const;

  // Entry ranges and key coverage (d1 covers a square grid containing every
  // d2 intensity). Throws DataIntegrityError.
  void validate() const;
};

namespace channel {

// Per-arm transmittance including detector efficiency for total distance L.
double arm_transmittance(const ChannelParams& params, double distance_km);

struct CodeObservation {
  Probability gain;
  Probability error;
};

CodeObservation code_gain_and_error(const ChannelParams& params, double mu, double distance_km);

// Phase-randomized pair: depends only on the total arriving intensity.
Probability decoy1_gain(const ChannelParams& params, double w1, double w2, double distance_km);

// Phase-locked pair with zero phase difference.
Probability decoy2_gain(const ChannelParams& params, double w1, double w2, double distance_km);

// Click probability given Fock states |n>, |m>.
Probability fock_yield(const ChannelParams& params, int n, int m, double distance_km);

GainTable build_gain_table(const ChannelParams& params, const IntensityConfig& intensities, double distance_km);

// CSV with header mode,omega1,omega2,gain.
void write_gain_table_csv(std::ostream& out, const GainTable& table);
GainTable read_gain_table_csv(std::istream& in);

}  // namespace channel
}  // namespace tfqkd
