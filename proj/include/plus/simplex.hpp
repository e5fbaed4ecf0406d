#pragma once

#include <string>
#include <vector>

namespace plus {

enum class Relation { LessEqual, GreaterEqual, Equal };

struct LinearConstraint {
  std::vector<double> coeffs;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
  std::string name;
};

/// Linear program over non-negative variables.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<LinearConstraint> constraints;

  std::size_t variables() const noexcept { return objective.size(); }
  void validate() const;
  /// Largest constraint violation of x (0 when feasible); negative x counts.
  double max_violation(const std::vector<double>& x) const;
};

enum class Sense { Maximize, Minimize };

struct LpSolution {
  std::vector<double> x;
  double objective = 0.0;
  int pivots = 0;
};

/// Two-phase dense-tableau simplex with Bland's rule. Throws InfeasibleError
/// or UnboundedError.
LpSolution solve_lp(const LinearProgram& lp, Sense sense = Sense::Maximize);

const char* relation_symbol(Relation r) noexcept;

}  // namespace plus
