#pragma once

#include <vector>

namespace tfqkd {

// Code intensity mu, phase-randomized decoys i1 and phase-locked decoys i2.
// Both sets contain mu; i2 is a subset of i1; 0 is in i1; sorted ascending.
class IntensityConfig {
 public:
  // Full sets, validated as given (mu must already be a member of both).
  static IntensityConfig from_sets(double mu, std::vector<double> i1, std::vector<double> i2);

  // Decoy lists without mu; mu is inserted into both.
  static IntensityConfig with_decoys(double mu, std::vector<double> i1_decoys, std::vector<double> i2_decoys);

  // Same decoys with the code intensity replaced.
  IntensityConfig with_mu(double mu) const;

  // The decoy set restricted to i2 (mu and the phase-locked decoys), used
  // when the original protocol's single decoy mode is modeled.
  IntensityConfig i2_only() const;

  double mu() const noexcept { return mu_; }
  const std::vector<double>& i1() const noexcept { return i1_; }
  const std::vector<double>& i2() const noexcept { return i2_; }

 private:
  IntensityConfig(double mu, std::vector<double> i1, std::vector<double> i2);

  double mu_ = 0.0;
  std::vector<double> i1_;
  std::vector<double> i2_;
};

}  // namespace tfqkd
