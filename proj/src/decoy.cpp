#include "tfqkd/decoy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "tfqkd/error.hpp"
#include "tfqkd/numerics.hpp"

namespace tfqkd {
namespace {

constexpr const char* kModule = "decoy";

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool contains(const std::vector<double>& sorted, double v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

std::vector<double> sorted_distinct(std::vector<double> v, const char* name) {
  for (double w : v) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ConfigError(kModule, std::string(name) + " intensities must be finite and >= 0");
    }
  }
  std::sort(v.begin(), v.end());
  if (std::adjacent_find(v.begin(), v.end()) != v.end()) {
    throw ConfigError(kModule, std::string(name) + " intensities must be distinct");
  }
  return v;
}

std::vector<double> without(const std::vector<double>& v, double x) {
  std::vector<double> out;
  for (double w : v) {
    if (w != x) out.push_back(w);
  }
  return out;
}

}  // namespace

IntensityConfig::IntensityConfig(double mu, std::vector<double> i1, std::vector<double> i2)
    : mu_(mu), i1_(std::move(i1)), i2_(std::move(i2)) {}

IntensityConfig IntensityConfig::from_sets(double mu, std::vector<double> i1, std::vector<double> i2) {
  if (!std::isfinite(mu) || mu <= 0.0) throw ConfigError(kModule, "mu must be finite and > 0");
  i1 = sorted_distinct(std::move(i1), "i1");
  i2 = sorted_distinct(std::move(i2), "i2");
  if (!contains(i1, 0.0)) throw ConfigError(kModule, "i1 must contain the vacuum intensity 0");
  if (!contains(i2, mu)) throw ConfigError(kModule, "i2 must contain mu");
  for (double w : i2) {
    if (!contains(i1, w)) throw ConfigError(kModule, "i2 is not a subset of i1: " + fmt17(w) + " missing from i1");
  }
  return IntensityConfig(mu, std::move(i1), std::move(i2));
}

IntensityConfig IntensityConfig::with_decoys(double mu, std::vector<double> i1_decoys, std::vector<double> i2_decoys) {
  i1_decoys.push_back(mu);
  i2_decoys.push_back(mu);
  return from_sets(mu, std::move(i1_decoys), std::move(i2_decoys));
}

IntensityConfig IntensityConfig::with_mu(double mu) const {
  return with_decoys(mu, without(i1_, mu_), without(i2_, mu_));
}

IntensityConfig IntensityConfig::i2_only() const { return from_sets(mu_, i2_, i2_); }

YieldBounds::YieldBounds(int cutoff) : cutoff_(cutoff) {
  if (cutoff < 0) throw DomainError(kModule, "yield cutoff must be >= 0");
  const auto n = static_cast<std::size_t>(cutoff + 1) * static_cast<std::size_t>(cutoff + 1);
  lower_.assign(n, 0.0);
  upper_.assign(n, 1.0);
}

std::size_t YieldBounds::index(int n, int m) const {
  if (n < 0 || m < 0 || n > cutoff_ || m > cutoff_) {
    throw DomainError(kModule, "yield index (" + std::to_string(n) + ", " + std::to_string(m) + ") outside cutoff");
  }
  return static_cast<std::size_t>(n) * static_cast<std::size_t>(cutoff_ + 1) + static_cast<std::size_t>(m);
}

double YieldBounds::lower(int n, int m) const { return lower_[index(n, m)]; }
double YieldBounds::upper(int n, int m) const { return upper_[index(n, m)]; }

double YieldBounds::lower_or_zero(int n, int m) const {
  return (n <= cutoff_ && m <= cutoff_) ? lower(n, m) : 0.0;
}

double YieldBounds::upper_or_one(int n, int m) const {
  return (n <= cutoff_ && m <= cutoff_) ? upper(n, m) : 1.0;
}

void YieldBounds::set(int n, int m, double lo, double hi) {
  if (!(lo >= 0.0 && lo <= hi && hi <= 1.0)) {
    throw DomainError(kModule, "yield interval must satisfy 0 <= lo <= hi <= 1");
  }
  const auto i = index(n, m);
  lower_[i] = lo;
  upper_[i] = hi;
}

namespace decoy {
namespace {

struct YieldRow {
  double w1 = 0.0;
  double w2 = 0.0;
  double gain = 0.0;
  double tail = 0.0;              // upper bound on the Poisson mass beyond the cutoff
  std::vector<double> coeff;      // p_a^{w1} p_b^{w2}, flattened (a, b)
};

// Every term is non-negative, so p_a p_b Y_ab <= Q bounds each variable.
std::vector<double> variable_scales(const std::vector<YieldRow>& rows, std::size_t count, std::size_t nv) {
  std::vector<double> u(nv, 1.0);
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t j = 0; j < nv; ++j) {
      if (rows[r].coeff[j] > 0.0) u[j] = std::min(u[j], rows[r].gain / rows[r].coeff[j]);
    }
  }
  return u;
}

// Rows over scaled variables z = Y / u, with u an a-priori upper bound, each
// row divided by its gain so every coefficient is O(1). A two-sided row
// 1 - slack <= a.z <= 1 becomes a.z + r = 1 with a range variable r in
// [0, slack]; parallel inequality pairs would make the basis near-singular.
lp::LinearProgram scaled_program(const std::vector<YieldRow>& rows, std::size_t count, const std::vector<double>& u) {
  constexpr double kDrop = 1e-14;
  const std::size_t nv = u.size();
  std::vector<std::size_t> used;
  for (std::size_t r = 0; r < count; ++r) {
    if (rows[r].gain > 0.0) used.push_back(r);  // zero-gain rows only touch variables already fixed at 0
  }
  const std::size_t width = nv + used.size();
  lp::LinearProgram prog;
  prog.objective.assign(width, 0.0);
  prog.bounds.assign(width, lp::VariableBound{0.0, 1.0});
  for (std::size_t j = 0; j < nv; ++j) {
    if (u[j] == 0.0) prog.bounds[j].hi = 0.0;
  }
  for (std::size_t k = 0; k < used.size(); ++k) {
    const auto& row = rows[used[k]];
    std::vector<double> a(width, 0.0);
    double dropped = 0.0;
    for (std::size_t j = 0; j < nv; ++j) {
      const double c = row.coeff[j] * u[j] / row.gain;
      if (c < kDrop) {
        dropped += c;  // z_j <= 1 bounds what the omitted term could contribute
      } else {
        a[j] = c;
      }
    }
    a[nv + k] = 1.0;
    prog.bounds[nv + k] = {0.0, std::min(1.0, row.tail / row.gain + dropped)};
    prog.constraints.push_back({std::move(a), lp::Relation::kEqual, 1.0});
  }
  return prog;
}

}  // namespace

YieldBounds bound_yields(const GainTable& gains, const IntensityConfig& intensities, int cutoff,
                         const lp::SolverOptions& options) {
  if (cutoff < 3) throw DomainError(kModule, "yield cutoff must be >= 3");
  const int n1 = cutoff + 1;
  const std::size_t nv = static_cast<std::size_t>(n1) * static_cast<std::size_t>(n1);

  std::vector<YieldRow> rows;
  for (double w1 : intensities.i1()) {
    for (double w2 : intensities.i1()) {
      YieldRow row{w1, w2, gains.d1_gain(w1, w2), 0.0, std::vector<double>(nv)};
      if (!(row.gain >= 0.0 && row.gain <= 1.0)) {
        throw DataIntegrityError(kModule, "d1 gain outside [0, 1] at (" + fmt17(w1) + ", " + fmt17(w2) + ")");
      }
      row.tail = numerics::poisson_tail_upper(w1, cutoff) + numerics::poisson_tail_upper(w2, cutoff);
      for (int a = 0; a < n1; ++a) {
        const double pa = numerics::poisson_pmf(w1, a);
        for (int b = 0; b < n1; ++b) row.coeff[static_cast<std::size_t>(a * n1 + b)] = pa * numerics::poisson_pmf(w2, b);
      }
      rows.push_back(std::move(row));
    }
  }

  const auto u = variable_scales(rows, rows.size(), nv);
  lp::FeasibleRegion region(scaled_program(rows, rows.size(), u), options);
  if (!region.feasible()) {
    for (std::size_t k = 1; k <= rows.size(); ++k) {
      if (!lp::FeasibleRegion(scaled_program(rows, k, variable_scales(rows, k, nv)), options).feasible()) {
        throw DataIntegrityError(kModule, "decoy gains inconsistent with any channel at intensity pair (" +
                                              fmt17(rows[k - 1].w1) + ", " + fmt17(rows[k - 1].w2) + ")");
      }
    }
    throw DataIntegrityError(kModule, "decoy gains inconsistent with any channel");
  }

  YieldBounds out(cutoff);
  std::vector<double> objective(region.num_variables(), 0.0);
  for (std::size_t j = 0; j < nv; ++j) {
    const int n = static_cast<int>(j) / n1;
    const int m = static_cast<int>(j) % n1;
    if (u[j] == 0.0) {
      out.set(n, m, 0.0, 0.0);
      continue;
    }
    objective[j] = 1.0;
    const auto hi = region.maximize(objective);
    const auto lo = region.minimize(objective);
    objective[j] = 0.0;
    if (!hi.optimal() || !lo.optimal()) throw SolverError(kModule, "yield program did not reach an optimum");
    // Dual bounds hold for the exact region, whatever rounding did to the
    // primal optimum of this badly conditioned program.
    const double upper = std::clamp(hi.bound.value_or(*hi.value) * u[j], 0.0, 1.0);
    const double lower = std::clamp(lo.bound.value_or(*lo.value) * u[j], 0.0, upper);
    out.set(n, m, lower, upper);
  }
  return out;
}

}  // namespace decoy
}  // namespace tfqkd
