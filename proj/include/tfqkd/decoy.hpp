#pragma once

#include <vector>

#include "tfqkd/channel.hpp"
#include "tfqkd/intensity.hpp"
#include "tfqkd/lp.hpp"

namespace tfqkd {

// Certified intervals [lower(n, m), upper(n, m)] for n, m <= cutoff.
class YieldBounds {
 public:
  YieldBounds() = default;
  explicit YieldBounds(int cutoff);

  int cutoff() const noexcept { return cutoff_; }
  double lower(int n, int m) const;
  double upper(int n, int m) const;

  // Beyond the cutoff nothing is known: [0, 1].
  double lower_or_zero(int n, int m) const;
  double upper_or_one(int n, int m) const;

  // Throws DomainError unless 0 <= lo <= hi <= 1.
  void set(int n, int m, double lo, double hi);

 private:
  std::size_t index(int n, int m) const;

  int cutoff_ = 0;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

namespace decoy {

// Brackets every Y_{n,m} with n, m <= cutoff using the phase-randomized gains
// on intensities.i1() x intensities.i1(). Throws DataIntegrityError naming the
// first intensity pair whose constraint makes the program infeasible.
YieldBounds bound_yields(const GainTable& gains, const IntensityConfig& intensities, int cutoff,
                         const lp::SolverOptions& options = {});

}  // namespace decoy
}  // namespace tfqkd
