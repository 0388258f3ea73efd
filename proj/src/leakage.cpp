#include "tfqkd/leakage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tfqkd/error.hpp"

namespace tfqkd::leakage {
namespace {

constexpr const char* kModule = "leakage";

using Vec = std::array<double, 4>;

// Normalized objective; the pairs are (ee, oe) and (oo, eo).
double f_unit(const Vec& x) {
  return numerics::pair_entropy(std::max(0.0, x[0]), std::max(0.0, x[1])) +
         numerics::pair_entropy(std::max(0.0, x[2]), std::max(0.0, x[3]));
}

// Best split of block mass s between two coordinates with boxes [l, u].
double block_value(double s, double l0, double u0, double l1, double u1, double* first) {
  const double lo = std::max(l0, s - u1);
  const double hi = std::min(u0, s - l1);
  const double a = std::clamp(s / 2.0, lo, std::max(lo, hi));
  *first = a;
  return numerics::pair_entropy(std::max(0.0, a), std::max(0.0, s - a));
}

struct Split {
  double value = 0.0;
  Vec x{};
};

Split evaluate_split(double s, const Vec& l, const Vec& u) {
  Split out;
  double a = 0.0, b = 0.0;
  const double t = 1.0 - s;
  out.value = block_value(s, l[0], u[0], l[1], u[1], &a) + block_value(t, l[2], u[2], l[3], u[3], &b);
  out.x = {a, s - a, b, t - b};
  return out;
}

// Tangent-plane bound: max over the polytope of F(c) + grad F(c) . (x - c).
double tangent_bound(const Vec& c, const Vec& l, const Vec& u, const std::array<bool, 4>& fixed) {
  Vec g{};
  for (int blk = 0; blk < 2; ++blk) {
    const int i = 2 * blk, j = i + 1;
    if (c[i] > 0.0 && c[j] > 0.0) {
      const auto [gi, gj] = numerics::pair_entropy_grad(c[i], c[j]);
      g[i] = gi;
      g[j] = gj;
    }
    // A partner pinned at zero makes the block identically zero.
  }
  // Linear maximization over box and simplex: fill by descending gradient.
  Vec x = l;
  double budget = 1.0 - std::accumulate(l.begin(), l.end(), 0.0);
  std::array<int, 4> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return g[a] > g[b]; });
  for (int i : order) {
    if (fixed[i] || budget <= 0.0) continue;
    const double take = std::min(u[i] - l[i], budget);
    x[i] += take;
    budget -= take;
  }
  double lin = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (!fixed[i]) lin += g[i] * (x[i] - c[i]);
  }
  return f_unit(c) + lin;
}

}  // namespace

double objective(const std::array<double, 4>& x, double total) {
  if (!(total > 0.0)) throw DomainError(kModule, "total gain must be > 0");
  return f_unit({x[0] / total, x[1] / total, x[2] / total, x[3] / total});
}

XConstraints x_constraints_original(const YieldBounds& yields, double mu, double q_code) {
  if (!(q_code > 0.0 && q_code <= 1.0)) throw DomainError(kModule, "code gain must lie in (0, 1]");
  if (!std::isfinite(mu) || mu < 0.0) throw DomainError(kModule, "mu must be finite and >= 0");
  const int cutoff = yields.cutoff();
  const auto s = numerics::poisson_sqrt_mass(mu, cutoff);
  // Root mass of members with an index beyond the cutoff, where Y <= 1.
  const double beyond = s.tail_upper * (s.partial + s.tail_upper) + (s.partial + s.tail_upper) * s.tail_upper;
  XConstraints out;
  out.total = q_code;
  for (auto c : kParityClasses) {
    double root = 0.0;
    const int a0 = (c == ParityClass::kOe || c == ParityClass::kOo) ? 1 : 0;
    const int b0 = (c == ParityClass::kEo || c == ParityClass::kOo) ? 1 : 0;
    for (int n = a0; n <= cutoff; n += 2) {
      for (int m = b0; m <= cutoff; m += 2) {
        root += std::sqrt(numerics::poisson_pmf(mu, n) * numerics::poisson_pmf(mu, m) * yields.upper(n, m));
      }
    }
    root += beyond;
    at(out.x, c) = {0.0, std::min(q_code, root * root)};
  }
  return out;
}

XConstraints x_constraints_improved(const ClassIntervals& intervals, double q_code) {
  if (!(q_code > 0.0 && q_code <= 1.0)) throw DomainError(kModule, "code gain must lie in (0, 1]");
  XConstraints out;
  out.total = q_code;
  double sum_lo = 0.0, sum_hi = 0.0;
  for (auto c : kParityClasses) {
    const auto& om = at(intervals.omega, c);
    const auto& ph = at(intervals.phi, c);
    if (!(std::isfinite(om.lo) && std::isfinite(om.hi) && std::isfinite(ph.lo) && std::isfinite(ph.hi))) {
      throw DomainError(kModule, "class intervals must be finite");
    }
    const double lo = std::max(0.0, om.lo + ph.lo);
    const double hi = std::min(q_code, om.hi + ph.hi);
    if (lo > hi) {
      throw EstimationError(kModule, "empty interval for class " + std::string(parity_class_name(c)));
    }
    at(out.x, c) = {lo, hi};
    sum_lo += lo;
    sum_hi += hi;
  }
  if (sum_lo > q_code || sum_hi < q_code) {
    throw EstimationError(kModule, "class intervals are inconsistent with the code gain");
  }
  return out;
}

LeakageResult max_leakage(const XConstraints& constraints, double tolerance, ConstraintMode mode) {
  const double q = constraints.total;
  if (!(q > 0.0 && q <= 1.0)) throw DomainError(kModule, "total gain must lie in (0, 1]");
  if (!(tolerance > 0.0)) throw DomainError(kModule, "tolerance must be > 0");

  Vec l{}, u{};
  for (int i = 0; i < 4; ++i) {
    const auto& iv = constraints.x[static_cast<std::size_t>(i)];
    l[i] = std::max(0.0, iv.lo) / q;
    u[i] = std::min(q, iv.hi) / q;
    if (!(l[i] <= u[i])) throw EstimationError(kModule, "empty box for a parity class");
  }
  const double sum_l = std::accumulate(l.begin(), l.end(), 0.0);
  const double sum_u = std::accumulate(u.begin(), u.end(), 0.0);
  constexpr double kSlack = 1e-12;
  if (sum_l > 1.0 + kSlack || sum_u < 1.0 - kSlack) throw EstimationError(kModule, "leakage region is empty");

  LeakageResult out;
  out.constraint_mode = mode;
  auto finish = [&](const Vec& x, double bound, double gap, bool converged) {
    for (int i = 0; i < 4; ++i) out.witness[static_cast<std::size_t>(i)] = x[i] * q;
    out.upper_bound = Bits(std::clamp(bound, 0.0, 1.0));
    out.certificate_gap = gap;
    out.converged = converged;
    return out;
  };

  // A region squeezed to one point by the sum rule.
  if (sum_l >= 1.0 - kSlack) return finish(l, f_unit(l), 0.0, true);
  if (sum_u <= 1.0 + kSlack) return finish(u, f_unit(u), 0.0, true);

  // G(s) = max over splits with block mass s is concave; golden section.
  const double s_lo = std::max(l[0] + l[1], 1.0 - u[2] - u[3]);
  const double s_hi = std::min(u[0] + u[1], 1.0 - l[2] - l[3]);
  double a = s_lo, b = std::max(s_lo, s_hi);
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c1 = b - r * (b - a), c2 = a + r * (b - a);
  double g1 = evaluate_split(c1, l, u).value, g2 = evaluate_split(c2, l, u).value;
  for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
    if (g1 < g2) {
      a = c1;
      c1 = c2;
      g1 = g2;
      c2 = a + r * (b - a);
      g2 = evaluate_split(c2, l, u).value;
    } else {
      b = c2;
      c2 = c1;
      g2 = g1;
      c1 = b - r * (b - a);
      g1 = evaluate_split(c1, l, u).value;
    }
  }
  Split best = evaluate_split(s_lo, l, u);
  for (double s : {s_hi, a, b, 0.5 * (a + b)}) {
    const Split cand = evaluate_split(s, l, u);
    if (cand.value > best.value) best = cand;
  }
  const Vec xh = best.x;
  const double fx = f_unit(xh);

  std::array<bool, 4> fixed{};
  bool all_fixed = true;
  for (int i = 0; i < 4; ++i) {
    fixed[i] = u[i] - l[i] <= 0.0;
    all_fixed = all_fixed && fixed[i];
  }
  if (all_fixed) return finish(xh, fx, 0.0, true);

  // Anchor the tangent plane at interior points approaching the witness.
  double denom = 0.0;
  for (int i = 0; i < 4; ++i) denom += u[i] - l[i];
  const double t = (1.0 - sum_l) / denom;
  Vec center{};
  for (int i = 0; i < 4; ++i) center[i] = l[i] + t * (u[i] - l[i]);

  double bound = 1.0;
  for (double lambda = 1e-2; lambda >= 1e-14; lambda *= 0.1) {
    Vec xc{};
    for (int i = 0; i < 4; ++i) xc[i] = fixed[i] ? l[i] : (1.0 - lambda) * xh[i] + lambda * center[i];
    bound = std::min(bound, tangent_bound(xc, l, u, fixed));
    if (bound - fx <= tolerance * 1e-2) break;
  }
  bound = std::max(bound, fx);
  const double gap = std::min(bound, 1.0) - fx;
  return finish(xh, bound, std::max(0.0, gap), gap <= tolerance);
}

YieldBounds exact_yields(const ChannelParams& params, double distance_km, int cutoff) {
  YieldBounds y(cutoff);
  for (int n = 0; n <= cutoff; ++n) {
    for (int m = 0; m <= cutoff; ++m) {
      const double v = channel::fock_yield(params, n, m, distance_km);
      y.set(n, m, v, v);
    }
  }
  return y;
}

std::array<double, 4> exact_omegas(const ChannelParams& params, double mu, double distance_km) {
  std::array<double, 4> x{};
  std::array<double, kExactCutoff + 1> p{};
  for (int n = 0; n <= kExactCutoff; ++n) p[static_cast<std::size_t>(n)] = numerics::poisson_pmf(mu, n);
  for (int n = 0; n <= kExactCutoff; ++n) {
    for (int m = 0; m <= kExactCutoff; ++m) {
      x[static_cast<std::size_t>(parity_class_of(n, m))] +=
          p[static_cast<std::size_t>(n)] * p[static_cast<std::size_t>(m)] * channel::fock_yield(params, n, m, distance_km);
    }
  }
  return x;
}

Bits leakage_infinite(const ChannelParams& params, double mu, double distance_km) {
  const auto code = channel::code_gain_and_error(params, mu, distance_km);
  if (code.gain.value() == 0.0) return Bits(0.0);
  return Bits(std::clamp(objective(exact_omegas(params, mu, distance_km), code.gain), 0.0, 1.0));
}

}  // namespace tfqkd::leakage
