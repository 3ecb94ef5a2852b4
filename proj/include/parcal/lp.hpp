#pragma once

// Dense dictionary simplex for
//     maximize c^T x  subject to  A x <= b,  x >= 0,  b >= 0,
// with Bland's smallest-index rule in both the primal and the dual phase.
// Rows can be appended to a solved dictionary and re-optimized with the dual
// simplex, which is how the capacity estimators add violated constraints.

#include <cstddef>
#include <string>
#include <vector>

namespace parcal {

enum class LpStatus { Optimal, Unbounded, Infeasible, IterationLimit };

std::string lp_status_name(LpStatus s);

struct LpOptions {
  double pivot_tol = 1e-11;
  double optimality_tol = 1e-12;
  double feasibility_tol = 1e-12;
  std::size_t max_pivots = 2'000'000;
};

class DenseSimplex {
 public:
  /// Objective coefficients define the number of structural variables.
  explicit DenseSimplex(std::vector<double> objective, LpOptions opts = {});

  /// Appends a_row . x <= rhs.  Allowed before and after solve().
  void add_row(const std::vector<double>& a_row, double rhs);

  /// Primal simplex from the current dictionary when it is primal feasible,
  /// dual simplex when it is dual feasible; otherwise primal after restoring
  /// feasibility is not attempted (rows must then keep b >= 0).
  LpStatus solve();

  std::size_t variables() const { return nvars_; }
  std::size_t rows() const { return rows_.size(); }
  std::size_t pivots() const { return pivots_; }
  double objective() const;
  std::vector<double> solution() const;
  /// Slack of every row at the current basic solution.
  std::vector<double> slacks() const;

 private:
  struct Row {
    std::vector<double> coef;  // over nonbasic columns
    double rhs;
    std::size_t basic;         // variable id: [0, nvars) structural, then slacks
  };

  bool primal_feasible() const;
  bool dual_feasible() const;
  LpStatus primal();
  LpStatus dual();
  void pivot(std::size_t r, std::size_t c);

  std::size_t nvars_;
  LpOptions opts_;
  std::vector<std::size_t> nonbasic_;  // variable id per column
  std::vector<double> cost_;           // reduced costs per column
  double value_ = 0.0;
  std::vector<Row> rows_;
  std::vector<long> row_of_;           // variable id -> row or -1
  std::size_t pivots_ = 0;
};

}  // namespace parcal
