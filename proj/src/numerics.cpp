#include "tfqkd/numerics.hpp"

#include <cmath>
#include <sstream>

#include "tfqkd/error.hpp"

namespace tfqkd {

namespace {

[[noreturn]] void domain_fail(const char* what, double v) {
  std::ostringstream os;
  os << what << " (got " << v << ")";
  throw DomainError("numerics", os.str());
}

// Rounding inflation applied to one-sided tail bounds.
constexpr double kTailInflation = 1.0 + 1e-12;

}  // namespace

Probability::Probability(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) domain_fail("probability outside [0, 1]", value);
}

Bits::Bits(double value) : value_(value) {
  if (!(value >= 0.0) || !std::isfinite(value)) domain_fail("bits must be finite and >= 0", value);
}

namespace numerics {

Probability poisson_pmf(double mean, int n) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) domain_fail("poisson mean must be >= 0", mean);
  if (n < 0) domain_fail("photon number must be >= 0", n);
  if (mean == 0.0) return Probability(n == 0 ? 1.0 : 0.0);
  if (n <= 20) {
    double term = std::exp(-mean);
    for (int k = 1; k <= n; ++k) term *= mean / k;
    return Probability(term);
  }
  const double log_p = -mean + n * std::log(mean) - std::lgamma(n + 1.0);
  return Probability(std::exp(log_p));
}

double poisson_parity_mass(double mean, bool odd) {
  if (!(mean >= 0.0)) domain_fail("poisson mean must be >= 0", mean);
  // (1 -/+ e^{-2 mean}) / 2 without cancellation for small means.
  const double e2 = -std::expm1(-2.0 * mean);
  return odd ? 0.5 * e2 : 1.0 - 0.5 * e2;
}

SqrtMass poisson_sqrt_mass(double mean, int cutoff) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) domain_fail("poisson mean must be >= 0", mean);
  if (cutoff < 0) domain_fail("cutoff must be >= 0", cutoff);
  SqrtMass out;
  if (mean == 0.0) {
    out.partial = 1.0;
    return out;
  }
  for (int n = 0; n <= cutoff; ++n) out.partial += std::sqrt(poisson_pmf(mean, n).value());

  // Sum explicitly until the term ratio sqrt(mean / (n + 1)) drops to 1/2,
  // then majorize the remainder by a geometric series.
  int n = cutoff + 1;
  double tail = 0.0;
  while (mean / (n + 1.0) > 0.25) {
    tail += std::sqrt(poisson_pmf(mean, n).value());
    ++n;
  }
  const double ratio = std::sqrt(mean / (n + 1.0));
  tail += std::sqrt(poisson_pmf(mean, n).value()) / (1.0 - ratio);
  out.tail_upper = tail * kTailInflation;
  return out;
}

double poisson_tail_upper(double mean, int cutoff) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) domain_fail("poisson mean must be >= 0", mean);
  if (cutoff < 0) domain_fail("cutoff must be >= 0", cutoff);
  if (mean == 0.0) return 0.0;
  int n = cutoff + 1;
  double tail = 0.0;
  while (mean / (n + 1.0) > 0.5) {
    tail += poisson_pmf(mean, n).value();
    ++n;
  }
  const double ratio = mean / (n + 1.0);
  tail += poisson_pmf(mean, n).value() / (1.0 - ratio);
  return tail * kTailInflation;
}

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) domain_fail("binary entropy argument outside [0, 1]", p);
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double pair_entropy(double x, double y) {
  if (!(x >= 0.0)) domain_fail("pair entropy argument must be >= 0", x);
  if (!(y >= 0.0)) domain_fail("pair entropy argument must be >= 0", y);
  const double s = x + y;
  if (x == 0.0 || y == 0.0) return 0.0;
  // x log2(s/x) + y log2(s/y); both terms non-negative.
  return x * std::log2(s / x) + y * std::log2(s / y);
}

std::pair<double, double> pair_entropy_grad(double x, double y) {
  if (!(x > 0.0)) domain_fail("pair entropy gradient needs x > 0", x);
  if (!(y > 0.0)) domain_fail("pair entropy gradient needs y > 0", y);
  return {std::log2(1.0 + y / x), std::log2(1.0 + x / y)};
}

}  // namespace numerics
}  // namespace tfqkd
