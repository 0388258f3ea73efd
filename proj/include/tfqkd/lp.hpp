#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace tfqkd::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Relation { kLessEqual, kEqual, kGreaterEqual };

struct Constraint {
  std::vector<double> coefficients;
  Relation relation = Relation::kLessEqual;
  double rhs = 0.0;
};

struct VariableBound {
  double lo = 0.0;
  double hi = kInfinity;
};

// Maximize objective . x subject to the rows and box bounds. An empty bounds
// list means every variable lies in [0, +inf).
struct LinearProgram {
  std::vector<double> objective;
  std::vector<Constraint> constraints;
  std::vector<VariableBound> bounds;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct LpOutcome {
  LpStatus status = LpStatus::kInfeasible;
  std::optional<double> value;  // present iff optimal
  std::vector<double> point;    // non-empty iff optimal
  // Weak-duality bound from the final multipliers: >= the true maximum, or
  // <= the true minimum, whatever rounding did to the primal point.
  std::optional<double> bound;

  bool optimal() const noexcept { return status == LpStatus::kOptimal; }
};

struct SolverOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-12;
  int max_iterations = 0;  // 0 selects a size-dependent cap
};

// A polytope that is made feasible once and then optimized over repeatedly.
// Each solve starts from the basis left by the previous one, so a batch of
// objectives over the same rows costs one phase 1 in total.
class FeasibleRegion {
 public:
  // The program's objective is ignored; rows and bounds define the region.
  explicit FeasibleRegion(const LinearProgram& program, SolverOptions options = {});
  ~FeasibleRegion();
  FeasibleRegion(FeasibleRegion&&) noexcept;
  FeasibleRegion& operator=(FeasibleRegion&&) noexcept;
  FeasibleRegion(const FeasibleRegion&) = delete;
  FeasibleRegion& operator=(const FeasibleRegion&) = delete;

  bool feasible() const noexcept;
  std::size_t num_variables() const noexcept;

  LpOutcome maximize(std::span<const double> objective);
  LpOutcome minimize(std::span<const double> objective);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Global maximum of a linear program.
LpOutcome solve_lp(const LinearProgram& program, const SolverOptions& options = {});

// Global minimum; the reported value is the true minimum, not its negation.
LpOutcome solve_lp_min(const LinearProgram& program, const SolverOptions& options = {});

}  // namespace tfqkd::lp
