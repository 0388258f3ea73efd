#include "tfqkd/lp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <sstream>

#include "tfqkd/error.hpp"

namespace tfqkd::lp {

namespace {

constexpr const char* kModule = "lp";

// Pivot candidates below this fraction of the entering column are skipped
// while anything larger blocks.
constexpr double kPreferredPivot = 1e-9;
// A basis whose factor has a pivot below this fraction of its column is
// rejected as numerically singular.
constexpr double kSingularRatio = 1e-11;
constexpr int kDegenerateBeforeBland = 50;
constexpr double kRoundingUnits = 128 * std::numeric_limits<double>::epsilon();

double power_of_two_scale(double max_abs) {
  if (max_abs == 0.0 || !std::isfinite(max_abs)) return 1.0;
  int exponent = 0;
  std::frexp(max_abs, &exponent);
  return std::ldexp(1.0, -exponent);
}

void validate(const LinearProgram& program) {
  const std::size_t n = program.objective.size();
  if (!program.bounds.empty() && program.bounds.size() != n) {
    throw StructuralError(kModule, "bounds list width differs from objective width");
  }
  for (std::size_t i = 0; i < program.constraints.size(); ++i) {
    const auto& row = program.constraints[i];
    if (row.coefficients.size() != n) {
      std::ostringstream os;
      os << "constraint " << i << " has " << row.coefficients.size() << " coefficients, expected " << n;
      throw StructuralError(kModule, os.str());
    }
    for (double v : row.coefficients) {
      if (!std::isfinite(v)) throw StructuralError(kModule, "non-finite constraint coefficient");
    }
    if (!std::isfinite(row.rhs)) throw StructuralError(kModule, "non-finite right-hand side");
  }
  for (const auto& b : program.bounds) {
    if (std::isnan(b.lo) || std::isnan(b.hi) || b.lo > b.hi || b.lo == kInfinity || b.hi == -kInfinity) {
      throw StructuralError(kModule, "invalid variable bound");
    }
  }
  for (double v : program.objective) {
    if (!std::isfinite(v)) throw StructuralError(kModule, "non-finite objective coefficient");
  }
}

}  // namespace

struct FeasibleRegion::Impl {
  SolverOptions opt;
  std::size_t n = 0;  // structural columns
  std::size_t m = 0;  // rows
  std::size_t first_art = 0;
  std::size_t ncols = 0;
  std::vector<double> a;  // column-major scaled matrix including slack and artificial columns
  std::vector<double> b;
  std::vector<double> lo, hi;
  std::vector<double> x;
  std::vector<double> cost;
  std::vector<int> basis;
  std::vector<int> where;
  // Dense LU of the current basis with row permutation: P B = L U.
  std::vector<double> lu;
  std::vector<std::size_t> perm;
  bool is_feasible = false;
  int cap = 0;

  double col(std::size_t i, std::size_t j) const { return a[j * m + i]; }
  bool is_artificial(std::size_t j) const { return j >= first_art; }

  void build(const LinearProgram& program) {
    n = program.objective.size();
    m = program.constraints.size();
    std::size_t slacks = 0;
    for (const auto& row : program.constraints) {
      if (row.relation != Relation::kEqual) ++slacks;
    }
    first_art = n + slacks;
    ncols = first_art + m;
    a.assign(m * ncols, 0.0);
    b.assign(m, 0.0);
    lo.assign(ncols, 0.0);
    hi.assign(ncols, kInfinity);
    for (std::size_t j = 0; j < n && !program.bounds.empty(); ++j) {
      lo[j] = program.bounds[j].lo;
      hi[j] = program.bounds[j].hi;
    }

    std::size_t slack = n;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& row = program.constraints[i];
      double max_abs = 0.0;
      for (double v : row.coefficients) max_abs = std::max(max_abs, std::abs(v));
      const double s = power_of_two_scale(max_abs);
      for (std::size_t j = 0; j < n; ++j) a[j * m + i] = row.coefficients[j] * s;
      b[i] = row.rhs * s;
      if (row.relation == Relation::kLessEqual) a[slack++ * m + i] = 1.0;
      if (row.relation == Relation::kGreaterEqual) a[slack++ * m + i] = -1.0;
    }

    x.assign(ncols, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isfinite(lo[j])) x[j] = lo[j];
      else if (std::isfinite(hi[j])) x[j] = hi[j];
    }

    // Artificial columns start basic, signed so their values are >= 0.
    basis.assign(m, 0);
    where.assign(ncols, -1);
    for (std::size_t i = 0; i < m; ++i) {
      double residual = b[i];
      for (std::size_t j = 0; j < first_art; ++j) residual -= col(i, j) * x[j];
      const std::size_t art = first_art + i;
      a[art * m + i] = residual >= 0.0 ? 1.0 : -1.0;
      basis[i] = static_cast<int>(art);
      where[art] = static_cast<int>(i);
    }
    if (!factor(basis, lu, perm)) throw SolverError(kModule, "initial basis is singular");
    cap = opt.max_iterations > 0 ? opt.max_iterations : static_cast<int>(50 * (m + ncols) + 1000);
  }

  // LU with partial pivoting; false when the basis is numerically singular.
  bool factor(const std::vector<int>& cols, std::vector<double>& f, std::vector<std::size_t>& p) const {
    f.assign(m * m, 0.0);
    p.resize(m);
    std::vector<double> norm(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      p[i] = i;
      for (std::size_t k = 0; k < m; ++k) {
        f[i * m + k] = col(i, static_cast<std::size_t>(cols[k]));
        norm[k] = std::max(norm[k], std::abs(f[i * m + k]));
      }
    }
    for (std::size_t k = 0; k < m; ++k) {
      std::size_t piv = k;
      double best = std::abs(f[k * m + k]);
      for (std::size_t i = k + 1; i < m; ++i) {
        if (std::abs(f[i * m + k]) > best) {
          best = std::abs(f[i * m + k]);
          piv = i;
        }
      }
      if (!(best > kSingularRatio * norm[k])) return false;
      if (piv != k) {
        for (std::size_t c = 0; c < m; ++c) std::swap(f[k * m + c], f[piv * m + c]);
        std::swap(p[k], p[piv]);
      }
      const double inv = 1.0 / f[k * m + k];
      for (std::size_t i = k + 1; i < m; ++i) {
        const double l = f[i * m + k] * inv;
        f[i * m + k] = l;
        if (l == 0.0) continue;
        for (std::size_t c = k + 1; c < m; ++c) f[i * m + c] -= l * f[k * m + c];
      }
    }
    return true;
  }

  // Solve B v = r.
  std::vector<double> solve(const std::vector<double>& r) const {
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i) {
      double s = r[perm[i]];
      for (std::size_t k = 0; k < i; ++k) s -= lu[i * m + k] * v[k];
      v[i] = s;
    }
    for (std::size_t i = m; i-- > 0;) {
      double s = v[i];
      for (std::size_t k = i + 1; k < m; ++k) s -= lu[i * m + k] * v[k];
      v[i] = s / lu[i * m + i];
    }
    return v;
  }

  // Solve B^T y = c.
  std::vector<double> solve_transpose(const std::vector<double>& c) const {
    std::vector<double> w(m);
    for (std::size_t i = 0; i < m; ++i) {
      double s = c[i];
      for (std::size_t k = 0; k < i; ++k) s -= lu[k * m + i] * w[k];
      w[i] = s / lu[i * m + i];
    }
    for (std::size_t i = m; i-- > 0;) {
      double s = w[i];
      for (std::size_t k = i + 1; k < m; ++k) s -= lu[k * m + i] * w[k];
      w[i] = s;
    }
    std::vector<double> y(m);
    for (std::size_t i = 0; i < m; ++i) y[perm[i]] = w[i];
    return y;
  }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = col(i, j);
    return v;
  }

  double dot_column(const std::vector<double>& y, std::size_t j) const {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += y[i] * col(i, j);
    return s;
  }

  // Basic values from the nonbasic ones, recomputed from the original rows.
  void compute_primal() {
    std::vector<double> rhs(b);
    for (std::size_t j = 0; j < ncols; ++j) {
      if (where[j] >= 0 || x[j] == 0.0) continue;
      for (std::size_t i = 0; i < m; ++i) rhs[i] -= col(i, j) * x[j];
    }
    const auto v = solve(rhs);
    for (std::size_t i = 0; i < m; ++i) x[static_cast<std::size_t>(basis[i])] = v[i];
  }

  std::vector<double> duals() const {
    std::vector<double> cb(m);
    for (std::size_t i = 0; i < m; ++i) cb[i] = cost[static_cast<std::size_t>(basis[i])];
    return solve_transpose(cb);
  }

  // Swap column q into basis row r if the result stays well conditioned.
  bool try_basis_change(std::size_t r, std::size_t q) {
    std::vector<int> next(basis);
    next[r] = static_cast<int>(q);
    std::vector<double> f;
    std::vector<std::size_t> p;
    if (!factor(next, f, p)) return false;
    where[static_cast<std::size_t>(basis[r])] = -1;
    where[q] = static_cast<int>(r);
    basis = std::move(next);
    lu = std::move(f);
    perm = std::move(p);
    return true;
  }

  enum class Result { kOptimal, kUnbounded };

  Result run(double optimality_tol) {
    double cost_scale = 0.0;
    for (double c : cost) cost_scale = std::max(cost_scale, std::abs(c));
    if (cost_scale == 0.0) return Result::kOptimal;
    const double ptol = 1e-2 * opt.feasibility_tol;

    // Columns whose pivot would make the basis singular wait for the next
    // successful basis change.
    std::vector<char> taboo(ncols, 0);
    const int stall_limit = static_cast<int>(4 * (m + ncols)) + kDegenerateBeforeBland;
    int degenerate = 0;
    bool bland = false;
    double last = -kInfinity;
    for (int iter = 0; iter < cap; ++iter) {
      compute_primal();
      const auto y = duals();

      // Progress is judged on the objective itself; steps that move it by
      // rounding noise count as degenerate.
      double obj = 0.0;
      for (std::size_t j = 0; j < ncols; ++j) obj += cost[j] * x[j];
      if (obj - last <= 1e-13 * std::max(cost_scale, std::abs(obj))) {
        if (++degenerate > kDegenerateBeforeBland) bland = true;
        if (degenerate > stall_limit) return Result::kOptimal;
      } else {
        degenerate = 0;
        bland = false;
      }
      last = std::max(last, obj);

      const double dtol = optimality_tol * cost_scale;

      // Pricing: Dantzig, or smallest eligible index while in Bland mode.
      std::size_t q = ncols;
      double dir = 0.0;
      double best = 0.0;
      for (std::size_t j = 0; j < ncols; ++j) {
        if (where[j] >= 0 || lo[j] == hi[j] || taboo[j]) continue;
        const double* aj = &a[j * m];
        double yd = 0.0;
        for (std::size_t i = 0; i < m; ++i) yd += y[i] * aj[i];
        const double d = cost[j] - yd;
        if (std::abs(d) <= dtol) continue;
        // Reduced costs carry rounding error proportional to the terms summed.
        double mag = 0.0;
        for (std::size_t i = 0; i < m; ++i) mag += std::abs(y[i] * aj[i]);
        const double tol = dtol + kRoundingUnits * mag;
        double s = 0.0;
        if (d > tol && x[j] < hi[j]) s = 1.0;
        else if (d < -tol && x[j] > lo[j]) s = -1.0;
        if (s == 0.0) continue;
        if (bland) {
          q = j;
          dir = s;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          q = j;
          dir = s;
        }
      }
      if (q == ncols) return Result::kOptimal;

      const auto alpha = solve(column(q));
      double amax = 0.0;
      for (double v : alpha) amax = std::max(amax, std::abs(v));
      const double scale = std::max(1.0, amax);

      const double range = hi[q] - lo[q];
      std::size_t row = m;
      bool flip = false;
      bool blocked = false;
      for (double threshold : {kPreferredPivot * scale, opt.pivot_tol * scale}) {
        // Harris pass 1: relaxed step limit.
        double limit = range;
        for (std::size_t i = 0; i < m; ++i) {
          if (std::abs(alpha[i]) <= threshold) continue;
          const double rate = -dir * alpha[i];
          const auto j = static_cast<std::size_t>(basis[i]);
          double step = kInfinity;
          if (rate < 0.0 && std::isfinite(lo[j])) step = std::max(0.0, x[j] - lo[j] + ptol) / -rate;
          else if (rate > 0.0 && std::isfinite(hi[j])) step = std::max(0.0, hi[j] - x[j] + ptol) / rate;
          limit = std::min(limit, step);
        }
        if (!std::isfinite(limit)) continue;
        blocked = true;
        // Pass 2: largest pivot among rows blocking within the relaxed limit.
        double best_alpha = 0.0;
        double best_step = kInfinity;
        for (std::size_t i = 0; i < m; ++i) {
          if (std::abs(alpha[i]) <= threshold) continue;
          const double rate = -dir * alpha[i];
          const auto j = static_cast<std::size_t>(basis[i]);
          double step = kInfinity;
          if (rate < 0.0 && std::isfinite(lo[j])) step = std::max(0.0, x[j] - lo[j]) / -rate;
          else if (rate > 0.0 && std::isfinite(hi[j])) step = std::max(0.0, hi[j] - x[j]) / rate;
          if (step > limit) continue;
          const bool better = bland ? (row == m || basis[i] < basis[row]) : std::abs(alpha[i]) > best_alpha;
          if (better) {
            best_alpha = std::abs(alpha[i]);
            best_step = step;
            row = i;
          }
        }
        flip = std::isfinite(range) && range <= limit && (row == m || range <= best_step);
        break;
      }

      if (!flip && row == m) {
        if (blocked) throw SolverError(kModule, "numerical breakdown in the ratio test");
        return Result::kUnbounded;
      }

      if (flip) {
        x[q] = dir > 0.0 ? hi[q] : lo[q];
        std::fill(taboo.begin(), taboo.end(), 0);
        continue;
      }
      const auto leaving = static_cast<std::size_t>(basis[row]);
      const double rate = -dir * alpha[row];
      if (!try_basis_change(row, q)) {
        taboo[q] = 1;
        continue;
      }
      x[leaving] = rate < 0.0 ? lo[leaving] : hi[leaving];
      std::fill(taboo.begin(), taboo.end(), 0);
    }
    throw SolverError(kModule, "iteration cap reached");
  }

  void phase_one() {
    cost.assign(ncols, 0.0);
    for (std::size_t j = first_art; j < ncols; ++j) cost[j] = -1.0;
    run(1e-3 * opt.optimality_tol);
    compute_primal();
    double worst = 0.0;
    for (std::size_t j = first_art; j < ncols; ++j) worst = std::max(worst, x[j]);
    is_feasible = worst <= opt.feasibility_tol;
    if (!is_feasible) return;

    // Drive artificials out of the basis; redundant rows keep theirs at zero.
    for (std::size_t r = 0; r < m; ++r) {
      if (!is_artificial(static_cast<std::size_t>(basis[r]))) continue;
      std::vector<double> e(m, 0.0);
      e[r] = 1.0;
      const auto rho = solve_transpose(e);
      std::vector<std::pair<double, std::size_t>> candidates;
      for (std::size_t j = 0; j < first_art; ++j) {
        if (where[j] >= 0) continue;
        const double v = std::abs(dot_column(rho, j));
        if (v > kPreferredPivot) candidates.emplace_back(v, j);
      }
      std::sort(candidates.begin(), candidates.end(), std::greater<>());
      const auto art = static_cast<std::size_t>(basis[r]);
      for (const auto& [v, j] : candidates) {
        if (try_basis_change(r, j)) {
          x[art] = 0.0;
          break;
        }
      }
    }
    for (std::size_t j = first_art; j < ncols; ++j) {
      lo[j] = 0.0;
      hi[j] = 0.0;
      if (where[j] < 0) x[j] = 0.0;
    }
    compute_primal();
  }

  // Weak-duality bound max cost.x <= y.b + sum_j max over [lo, hi] of d_j x_j,
  // valid for any multipliers y; infinite when a needed bound is absent. The
  // margin covers rounding in the sums themselves.
  double dual_bound(const std::vector<double>& y) const {
    double bound = 0.0, mag = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      bound += y[i] * b[i];
      mag += std::abs(y[i] * b[i]);
    }
    for (std::size_t j = 0; j < ncols; ++j) {
      double yd = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        yd += y[i] * col(i, j);
        mag += std::abs(y[i] * col(i, j)) * std::max(std::abs(lo[j]), std::isfinite(hi[j]) ? std::abs(hi[j]) : 0.0);
      }
      const double d = cost[j] - yd;
      if (d == 0.0) continue;
      const double edge = d > 0.0 ? hi[j] : lo[j];
      if (!std::isfinite(edge)) return kInfinity;
      bound += d * edge;
      mag += std::abs(d * edge);
    }
    return bound + kRoundingUnits * mag;
  }

  LpOutcome optimize(std::span<const double> objective, double sign) {
    if (objective.size() != n) throw StructuralError(kModule, "objective width differs from region width");
    LpOutcome out;
    if (!is_feasible) {
      out.status = LpStatus::kInfeasible;
      return out;
    }
    cost.assign(ncols, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(objective[j])) throw StructuralError(kModule, "non-finite objective coefficient");
      cost[j] = sign * objective[j];
    }
    if (run(opt.optimality_tol) == Result::kUnbounded) {
      out.status = LpStatus::kUnbounded;
      return out;
    }
    compute_primal();
    out.status = LpStatus::kOptimal;
    out.point.resize(n);
    double value = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out.point[j] = std::clamp(x[j], lo[j], hi[j]);
      value += objective[j] * out.point[j];
    }
    out.value = value;
    const double bound = dual_bound(duals());
    if (std::isfinite(bound)) out.bound = sign * bound;
    return out;
  }
};

FeasibleRegion::FeasibleRegion(const LinearProgram& program, SolverOptions options)
    : impl_(std::make_unique<Impl>()) {
  validate(program);
  impl_->opt = options;
  impl_->build(program);
  impl_->phase_one();
}

FeasibleRegion::~FeasibleRegion() = default;
FeasibleRegion::FeasibleRegion(FeasibleRegion&&) noexcept = default;
FeasibleRegion& FeasibleRegion::operator=(FeasibleRegion&&) noexcept = default;

bool FeasibleRegion::feasible() const noexcept { return impl_->is_feasible; }
std::size_t FeasibleRegion::num_variables() const noexcept { return impl_->n; }

LpOutcome FeasibleRegion::maximize(std::span<const double> objective) { return impl_->optimize(objective, 1.0); }

LpOutcome FeasibleRegion::minimize(std::span<const double> objective) { return impl_->optimize(objective, -1.0); }

LpOutcome solve_lp(const LinearProgram& program, const SolverOptions& options) {
  FeasibleRegion region(program, options);
  return region.maximize(program.objective);
}

LpOutcome solve_lp_min(const LinearProgram& program, const SolverOptions& options) {
  FeasibleRegion region(program, options);
  return region.minimize(program.objective);
}

}  // namespace tfqkd::lp
