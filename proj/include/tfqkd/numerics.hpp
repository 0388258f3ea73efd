#pragma once

#include <utility>

namespace tfqkd {

// A real number in [0, 1]. Construction validates; conversion back to double
// is implicit so probabilities compose naturally in formulas.
class Probability {
 public:
  constexpr Probability() = default;
  explicit Probability(double value);

  constexpr double value() const noexcept { return value_; }
  constexpr operator double() const noexcept { return value_; }

 private:
  double value_ = 0.0;
};

// Non-negative, finite information quantity in bits.
class Bits {
 public:
  constexpr Bits() = default;
  explicit Bits(double value);

  constexpr double value() const noexcept { return value_; }
  constexpr operator double() const noexcept { return value_; }

 private:
  double value_ = 0.0;
};

namespace numerics {

// e^{-mean} mean^n / n!. Exact 1 / 0 at mean == 0; log-domain beyond n = 20.
Probability poisson_pmf(double mean, int n);

// Probability that a Poisson(mean) variable is odd (or even).
double poisson_parity_mass(double mean, bool odd);

struct SqrtMass {
  double partial = 0.0;     // sum_{n <= cutoff} sqrt(p_n)
  double tail_upper = 0.0;  // rigorous bound on sum_{n > cutoff} sqrt(p_n)
};

SqrtMass poisson_sqrt_mass(double mean, int cutoff);

// Upper bound on sum_{n > cutoff} p_n (the Poisson tail) by the same
// geometric majorization; used where a one-sided safe tail is required.
double poisson_tail_upper(double mean, int cutoff);

double binary_entropy(double p);

// h(x, y) = -x log2 x - y log2 y + (x + y) log2 (x + y), with 0 log 0 = 0.
double pair_entropy(double x, double y);

// Gradient of pair_entropy at a strictly positive point.
std::pair<double, double> pair_entropy_grad(double x, double y);

}  // namespace numerics
}  // namespace tfqkd
