#include "plus/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plus/errors.hpp"

namespace plus {

void LinearProgram::validate() const {
  if (objective.empty()) throw UsageError("linear program has no variables");
  if (constraints.empty()) throw UsageError("linear program needs at least one constraint");
  for (double c : objective) {
    if (!std::isfinite(c)) throw UsageError("non-finite objective coefficient");
  }
  for (const auto& row : constraints) {
    if (row.coeffs.size() != objective.size())
      throw UsageError("constraint '" + row.name + "' has " + std::to_string(row.coeffs.size()) +
                       " coefficients, expected " + std::to_string(objective.size()));
    for (double c : row.coeffs) {
      if (!std::isfinite(c)) throw UsageError("non-finite coefficient in constraint '" + row.name + "'");
    }
    if (!std::isfinite(row.rhs)) throw UsageError("non-finite rhs in constraint '" + row.name + "'");
  }
}

double LinearProgram::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (double v : x) worst = std::max(worst, -v);
  for (const auto& row : constraints) {
    double lhs = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) lhs += row.coeffs[j] * x[j];
    switch (row.relation) {
      case Relation::LessEqual: worst = std::max(worst, lhs - row.rhs); break;
      case Relation::GreaterEqual: worst = std::max(worst, row.rhs - lhs); break;
      case Relation::Equal: worst = std::max(worst, std::fabs(lhs - row.rhs)); break;
    }
  }
  return worst;
}

const char* relation_symbol(Relation r) noexcept {
  switch (r) {
    case Relation::LessEqual: return "<=";
    case Relation::GreaterEqual: return ">=";
    case Relation::Equal: return "=";
  }
  return "?";
}

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-10;

// Dense tableau for: minimize cost . z subject to A z = b, z >= 0, b >= 0,
// with an initial feasible basis. Row `m` holds reduced costs, column `cols`
// the right-hand side.
class Tableau {
public:
  Tableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), t_((rows + 1) * (cols + 1), 0.0), basis_(rows) {}

  double& at(std::size_t r, std::size_t c) { return t_[r * (n_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return t_[r * (n_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, n_); }
  std::vector<std::size_t>& basis() { return basis_; }
  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }

  /// Loads cost row and prices out the current basis.
  void set_cost(const std::vector<double>& cost) {
    for (std::size_t c = 0; c <= n_; ++c) at(m_, c) = c < n_ ? cost[c] : 0.0;
    for (std::size_t r = 0; r < m_; ++r) {
      const double cb = cost[basis_[r]];
      if (cb == 0.0) continue;
      for (std::size_t c = 0; c <= n_; ++c) at(m_, c) -= cb * at(r, c);
    }
  }

  void pivot(std::size_t pr, std::size_t pc) {
    const double inv = 1.0 / at(pr, pc);
    for (std::size_t c = 0; c <= n_; ++c) at(pr, c) *= inv;
    at(pr, pc) = 1.0;
    for (std::size_t r = 0; r <= m_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= n_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
    basis_[pr] = pc;
  }

  /// Bland's rule iterations over columns < active. Returns false if unbounded.
  bool optimize(std::size_t active, int& pivots) {
    for (;;) {
      std::size_t enter = active;
      for (std::size_t c = 0; c < active; ++c) {
        if (at(m_, c) < -kCostEps) {
          enter = c;
          break;
        }
      }
      if (enter == active) return true;
      std::size_t leave = m_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < m_; ++r) {
        const double a = at(r, enter);
        if (a <= kPivotEps) continue;
        const double ratio = rhs(r) / a;
        const double tol = 1e-12 * std::max(1.0, std::fabs(best));
        if (leave == m_ || ratio < best - tol || (std::fabs(ratio - best) <= tol && basis_[r] < basis_[leave])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave == m_) return false;
      pivot(leave, enter);
      ++pivots;
    }
  }

  void drop_row(std::size_t r) {
    // swap the row with the last constraint row, then shrink
    const std::size_t last = m_ - 1;
    if (r != last) {
      for (std::size_t c = 0; c <= n_; ++c) std::swap(at(r, c), at(last, c));
      std::swap(basis_[r], basis_[last]);
    }
    for (std::size_t c = 0; c <= n_; ++c) {
      at(last, c) = at(m_, c);
    }
    t_.resize(m_ * (n_ + 1));
    basis_.pop_back();
    --m_;
  }

private:
  std::size_t m_, n_;
  std::vector<double> t_;
  std::vector<std::size_t> basis_;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, Sense sense) {
  lp.validate();
  const std::size_t n = lp.variables();
  const std::size_t m = lp.constraints.size();

  // Normalize rows: non-negative rhs, unit max coefficient.
  struct Row {
    std::vector<double> a;
    Relation rel;
    double b;
  };
  std::vector<Row> rows;
  rows.reserve(m);
  for (const auto& c : lp.constraints) {
    Row r{c.coeffs, c.relation, c.rhs};
    double scale = 0.0;
    for (double v : r.a) scale = std::max(scale, std::fabs(v));
    if (scale == 0.0) {
      const bool ok = (r.rel == Relation::LessEqual && r.b >= 0) || (r.rel == Relation::GreaterEqual && r.b <= 0) ||
                      (r.rel == Relation::Equal && r.b == 0);
      if (!ok) throw InfeasibleError("constraint '" + c.name + "' has no variables and cannot hold");
      continue;
    }
    for (auto& v : r.a) v /= scale;
    r.b /= scale;
    if (r.b < 0) {
      for (auto& v : r.a) v = -v;
      r.b = -r.b;
      if (r.rel == Relation::LessEqual) r.rel = Relation::GreaterEqual;
      else if (r.rel == Relation::GreaterEqual) r.rel = Relation::LessEqual;
    }
    rows.push_back(std::move(r));
  }

  std::size_t slacks = 0, artificials = 0;
  for (const auto& r : rows) {
    if (r.rel != Relation::Equal) ++slacks;
    if (r.rel != Relation::LessEqual) ++artificials;
  }
  const std::size_t rcount = rows.size();
  const std::size_t real_cols = n + slacks;
  const std::size_t cols = real_cols + artificials;
  Tableau tab(rcount, cols);
  std::size_t s = n, a = real_cols;
  double rhs_scale = 1.0;
  for (std::size_t i = 0; i < rcount; ++i) {
    const auto& r = rows[i];
    for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = r.a[j];
    tab.rhs(i) = r.b;
    rhs_scale = std::max(rhs_scale, r.b);
    if (r.rel == Relation::LessEqual) {
      tab.at(i, s) = 1.0;
      tab.basis()[i] = s++;
    } else {
      if (r.rel == Relation::GreaterEqual) tab.at(i, s++) = -1.0;
      tab.at(i, a) = 1.0;
      tab.basis()[i] = a++;
    }
  }

  LpSolution sol;
  if (artificials > 0) {
    std::vector<double> phase1(cols, 0.0);
    for (std::size_t j = real_cols; j < cols; ++j) phase1[j] = 1.0;
    tab.set_cost(phase1);
    tab.optimize(cols, sol.pivots);
    const double infeasibility = -tab.at(tab.rows(), cols);
    if (infeasibility > 1e-9 * rhs_scale) {
      throw InfeasibleError("linear program is infeasible (phase-1 residual " + std::to_string(infeasibility) + ")");
    }
    // drive artificials out of the basis; drop redundant rows
    for (std::size_t r = 0; r < tab.rows();) {
      if (tab.basis()[r] < real_cols) {
        ++r;
        continue;
      }
      std::size_t pc = real_cols;
      for (std::size_t c = 0; c < real_cols; ++c) {
        if (std::fabs(tab.at(r, c)) > 1e-9) {
          pc = c;
          break;
        }
      }
      if (pc == real_cols) {
        tab.drop_row(r);
      } else {
        tab.pivot(r, pc);
        ++sol.pivots;
        ++r;
      }
    }
  }

  std::vector<double> cost(cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) cost[j] = sense == Sense::Maximize ? -lp.objective[j] : lp.objective[j];
  tab.set_cost(cost);
  if (!tab.optimize(real_cols, sol.pivots)) throw UnboundedError("linear program is unbounded");

  sol.x.assign(n, 0.0);
  for (std::size_t r = 0; r < tab.rows(); ++r) {
    const std::size_t b = tab.basis()[r];
    if (b < n) sol.x[b] = std::max(0.0, tab.rhs(r));
  }
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += lp.objective[j] * sol.x[j];
  return sol;
}

}  // namespace plus
