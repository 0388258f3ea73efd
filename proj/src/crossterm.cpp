#include "tfqkd/crossterm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "tfqkd/error.hpp"
#include "tfqkd/numerics.hpp"

namespace tfqkd {
namespace {

constexpr const char* kModule = "crossterm";

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int alice_parity(ParityClass c) { return (c == ParityClass::kOe || c == ParityClass::kOo) ? 1 : 0; }
int bob_parity(ParityClass c) { return (c == ParityClass::kEo || c == ParityClass::kOo) ? 1 : 0; }

double pmf(double w, int n) { return numerics::poisson_pmf(w, n); }

// sqrt(p_n^{w1} p_m^{w2} p_k^{w1} p_l^{w2})
double pair_coefficient(double w1, double w2, const PairIndex& p) {
  return std::sqrt(pmf(w1, p.first.first) * pmf(w2, p.first.second) * pmf(w1, p.second.first) *
                   pmf(w2, p.second.second));
}

double yield_box(const YieldBounds& yields, const PairIndex& p) {
  return 2.0 * std::sqrt(yields.upper_or_one(p.first.first, p.first.second) *
                         yields.upper_or_one(p.second.first, p.second.second));
}

}  // namespace

std::string_view parity_class_name(ParityClass c) {
  switch (c) {
    case ParityClass::kEe: return "ee";
    case ParityClass::kOe: return "oe";
    case ParityClass::kOo: return "oo";
    case ParityClass::kEo: return "eo";
  }
  return "??";
}

ParityClass parity_class_of(int n, int m) {
  if (n < 0 || m < 0) throw DomainError(kModule, "photon numbers must be >= 0");
  const bool a = n % 2 == 1, b = m % 2 == 1;
  if (!a && !b) return ParityClass::kEe;
  if (a && !b) return ParityClass::kOe;
  if (a && b) return ParityClass::kOo;
  return ParityClass::kEo;
}

namespace crossterm {

std::vector<PairIndex> enumerate_pairs(ParityClass parity, int pair_cutoff) {
  if (pair_cutoff < 0) throw DomainError(kModule, "pair cutoff must be >= 0");
  std::vector<PhotonPair> members;
  for (int n = alice_parity(parity); n <= pair_cutoff; n += 2) {
    for (int m = bob_parity(parity); m <= pair_cutoff; m += 2) members.emplace_back(n, m);
  }
  std::vector<PairIndex> out;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) out.push_back({members[i], members[j], parity});
  }
  return out;
}

Interval omega_bounds(const YieldBounds& yields, double mu, ParityClass parity) {
  if (!std::isfinite(mu) || mu < 0.0) throw DomainError(kModule, "mu must be finite and >= 0");
  const int cutoff = yields.cutoff();
  double lo = 0.0, hi = 0.0;
  for (int n = alice_parity(parity); n <= cutoff; n += 2) {
    const double pn = pmf(mu, n);
    for (int m = bob_parity(parity); m <= cutoff; m += 2) {
      const double w = pn * pmf(mu, m);
      lo += w * yields.lower(n, m);
      hi += w * yields.upper(n, m);
    }
  }
  // Members with either index beyond the cutoff, bounded by a union of tails.
  const double tail = numerics::poisson_tail_upper(mu, cutoff);
  const double beyond = tail * numerics::poisson_parity_mass(mu, bob_parity(parity) == 1) +
                        numerics::poisson_parity_mass(mu, alice_parity(parity) == 1) * tail;
  return {lo, std::min(1.0, hi + beyond)};
}

double class_tail_slack(double w1, double w2, int pair_cutoff, const YieldBounds& yields, ParityClass parity) {
  if (!(w1 >= 0.0 && w2 >= 0.0)) throw DomainError(kModule, "intensities must be >= 0");
  if (pair_cutoff < 0) throw DomainError(kModule, "pair cutoff must be >= 0");
  // Sum well past both cutoffs explicitly so the geometric remainder is tiny.
  const int explicit_cutoff = std::max(pair_cutoff, yields.cutoff()) + 24;
  double inside = 0.0, outside = 0.0;
  for (int n = alice_parity(parity); n <= explicit_cutoff; n += 2) {
    for (int m = bob_parity(parity); m <= explicit_cutoff; m += 2) {
      const double w = std::sqrt(pmf(w1, n) * pmf(w2, m) * yields.upper_or_one(n, m));
      (n <= pair_cutoff && m <= pair_cutoff ? inside : outside) += w;
    }
  }
  const auto s1 = numerics::poisson_sqrt_mass(w1, explicit_cutoff);
  const auto s2 = numerics::poisson_sqrt_mass(w2, explicit_cutoff);
  outside += s1.tail_upper * (s2.partial + s2.tail_upper) + (s1.partial + s1.tail_upper) * s2.tail_upper;
  // Omitted pairs: inside x outside plus outside x outside, each with |y| <= 2 w w'.
  return outside * (2.0 * inside + outside);
}

double pair_tail_slack(double w1, double w2, int pair_cutoff, const YieldBounds& yields) {
  double total = 0.0;
  for (auto c : kParityClasses) total += class_tail_slack(w1, w2, pair_cutoff, yields, c);
  return total;
}

double pair_tail_slack(double w1, double w2, int pair_cutoff) {
  return pair_tail_slack(w1, w2, pair_cutoff, YieldBounds(0));
}

ClassArray phi_worst_case(const YieldBounds& yields, double mu, int pair_cutoff) {
  ClassArray out{};
  for (auto c : kParityClasses) {
    double s = class_tail_slack(mu, mu, pair_cutoff, yields, c);
    for (const auto& p : enumerate_pairs(c, pair_cutoff)) s += pair_coefficient(mu, mu, p) * yield_box(yields, p);
    at(out, c) = {-s, s};
  }
  return out;
}

namespace {

struct PhiRow {
  double w1 = 0.0;
  double w2 = 0.0;
  std::vector<double> coeff;  // over active variables, already scaled
  double lo = 0.0;
  double hi = 0.0;
};

// Each two-sided row lo <= a.z <= hi becomes a.z - r = 0 with r in [lo, hi].
lp::LinearProgram phi_program(const std::vector<PhiRow>& rows, std::size_t count, std::size_t nv) {
  const std::size_t width = nv + count;
  lp::LinearProgram prog;
  prog.objective.assign(width, 0.0);
  prog.bounds.assign(width, lp::VariableBound{-1.0, 1.0});
  for (std::size_t r = 0; r < count; ++r) {
    std::vector<double> a(rows[r].coeff);
    a.resize(width, 0.0);
    a[nv + r] = -1.0;
    prog.bounds[nv + r] = {rows[r].lo, rows[r].hi};
    prog.constraints.push_back({std::move(a), lp::Relation::kEqual, 0.0});
  }
  return prog;
}

}  // namespace

ClassArray phi_bounds(const GainTable& gains, const YieldBounds& yields, const IntensityConfig& intensities, double mu,
                      int pair_cutoff, const lp::SolverOptions& options) {
  if (pair_cutoff < 1) throw DomainError(kModule, "pair cutoff must be >= 1");
  if (!std::isfinite(mu) || mu < 0.0) throw DomainError(kModule, "mu must be finite and >= 0");
  constexpr double kDrop = 1e-14;

  // Variables y_p = s_p z_p with z_p in [-1, 1]; pairs with s_p = 0 vanish.
  std::vector<PairIndex> pairs;
  std::vector<double> scale;
  for (auto c : kParityClasses) {
    for (const auto& p : enumerate_pairs(c, pair_cutoff)) {
      const double s = yield_box(yields, p);
      if (s > 0.0) {
        pairs.push_back(p);
        scale.push_back(s);
      }
    }
  }
  const std::size_t nv = pairs.size();

  std::vector<PhiRow> rows;
  for (double w1 : intensities.i2()) {
    for (double w2 : intensities.i2()) {
      const double q1 = gains.d1_gain(w1, w2);
      const double q2 = gains.d2_gain(w1, w2);
      const double d = q2 - q1;
      const double tau = pair_tail_slack(w1, w2, pair_cutoff, yields);
      std::vector<double> a(nv);
      double amax = 0.0;
      for (std::size_t j = 0; j < nv; ++j) {
        a[j] = pair_coefficient(w1, w2, pairs[j]) * scale[j];
        amax = std::max(amax, std::abs(a[j]));
      }
      const std::string where = "(" + fmt17(w1) + ", " + fmt17(w2) + ")";
      if (amax == 0.0) {
        if (std::abs(d) > tau + options.feasibility_tol * std::max(q1, q2)) {
          throw DataIntegrityError(kModule, "phase-locked gain differs from phase-randomized gain beyond slack at " + where);
        }
        continue;
      }
      double dropped = 0.0;
      for (auto& v : a) {
        v /= amax;
        if (std::abs(v) < kDrop) {
          dropped += std::abs(v);
          v = 0.0;
        }
      }
      rows.push_back({w1, w2, std::move(a), (d - tau) / amax - dropped, (d + tau) / amax + dropped});
    }
  }

  lp::FeasibleRegion region(phi_program(rows, rows.size(), nv), options);
  if (!region.feasible()) {
    for (std::size_t k = 1; k <= rows.size(); ++k) {
      if (!lp::FeasibleRegion(phi_program(rows, k, nv), options).feasible()) {
        throw DataIntegrityError(kModule, "phase-locked gains admit no cross terms at intensity pair (" +
                                              fmt17(rows[k - 1].w1) + ", " + fmt17(rows[k - 1].w2) + ")");
      }
    }
    throw DataIntegrityError(kModule, "phase-locked gains admit no cross terms");
  }

  ClassArray out{};
  for (auto c : kParityClasses) {
    std::vector<double> obj(region.num_variables(), 0.0);
    double omax = 0.0;
    for (std::size_t j = 0; j < nv; ++j) {
      if (pairs[j].parity != c) continue;
      obj[j] = pair_coefficient(mu, mu, pairs[j]) * scale[j];
      omax = std::max(omax, std::abs(obj[j]));
    }
    const double tail = class_tail_slack(mu, mu, pair_cutoff, yields, c);
    if (omax == 0.0) {
      at(out, c) = {-tail, tail};
      continue;
    }
    for (auto& v : obj) v /= omax;
    const auto hi = region.maximize(obj);
    const auto lo = region.minimize(obj);
    if (!hi.optimal() || !lo.optimal()) throw SolverError(kModule, "cross-term program did not reach an optimum");
    // Dual bounds hold for the exact region; see the yield program.
    at(out, c) = {lo.bound.value_or(*lo.value) * omax - tail, hi.bound.value_or(*hi.value) * omax + tail};
  }
  return out;
}

}  // namespace crossterm
}  // namespace tfqkd
