#include "parcal/lp.hpp"

#include <cmath>
#include <limits>

#include "parcal/error.hpp"

namespace parcal {

std::string lp_status_name(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::IterationLimit: return "iteration_limit";
  }
  return "?";
}

DenseSimplex::DenseSimplex(std::vector<double> objective, LpOptions opts)
    : nvars_(objective.size()), opts_(opts), cost_(std::move(objective)) {
  nonbasic_.resize(nvars_);
  for (std::size_t j = 0; j < nvars_; ++j) nonbasic_[j] = j;
  row_of_.assign(nvars_, -1);
}

void DenseSimplex::add_row(const std::vector<double>& a, double rhs) {
  if (a.size() != nvars_) throw ConfigError("constraint row has the wrong length");
  if (!std::isfinite(rhs)) throw ConfigError("non-finite right-hand side");
  Row row;
  row.coef.assign(nvars_, 0.0);
  row.rhs = rhs;
  row.basic = nvars_ + rows_.size();
  for (std::size_t j = 0; j < nvars_; ++j) {
    if (nonbasic_[j] < nvars_) row.coef[j] = a[nonbasic_[j]];
  }
  // Substitute the basic structural variables.
  for (std::size_t k = 0; k < nvars_; ++k) {
    if (a[k] == 0.0 || row_of_[k] < 0) continue;
    const Row& src = rows_[static_cast<std::size_t>(row_of_[k])];
    row.rhs -= a[k] * src.rhs;
    for (std::size_t j = 0; j < nvars_; ++j) row.coef[j] -= a[k] * src.coef[j];
  }
  row_of_.push_back(static_cast<long>(rows_.size()));
  rows_.push_back(std::move(row));
}

bool DenseSimplex::primal_feasible() const {
  for (const auto& r : rows_) {
    if (r.rhs < -opts_.feasibility_tol) return false;
  }
  return true;
}

bool DenseSimplex::dual_feasible() const {
  for (double d : cost_) {
    if (d > opts_.optimality_tol) return false;
  }
  return true;
}

void DenseSimplex::pivot(std::size_t r, std::size_t c) {
  Row& pr = rows_[r];
  const double a = pr.coef[c];
  const double inv = 1.0 / a;
  pr.rhs *= inv;
  for (std::size_t j = 0; j < nvars_; ++j) pr.coef[j] = (j == c) ? inv : pr.coef[j] * inv;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (i == r) continue;
    Row& row = rows_[i];
    const double f = row.coef[c];
    if (f == 0.0) continue;
    row.rhs -= f * pr.rhs;
    for (std::size_t j = 0; j < nvars_; ++j) {
      if (j == c) row.coef[j] = -f * inv;
      else row.coef[j] -= f * pr.coef[j];
    }
  }
  const double fc = cost_[c];
  value_ += fc * pr.rhs;
  for (std::size_t j = 0; j < nvars_; ++j) {
    if (j == c) cost_[j] = -fc * inv;
    else cost_[j] -= fc * pr.coef[j];
  }
  const std::size_t entering = nonbasic_[c];
  const std::size_t leaving = pr.basic;
  nonbasic_[c] = leaving;
  pr.basic = entering;
  row_of_[entering] = static_cast<long>(r);
  row_of_[leaving] = -1;
  ++pivots_;
}

LpStatus DenseSimplex::primal() {
  while (true) {
    if (pivots_ >= opts_.max_pivots) return LpStatus::IterationLimit;
    // Bland: entering variable of smallest id with positive reduced cost.
    std::size_t c = nvars_;
    for (std::size_t j = 0; j < nvars_; ++j) {
      if (cost_[j] > opts_.optimality_tol && (c == nvars_ || nonbasic_[j] < nonbasic_[c])) c = j;
    }
    if (c == nvars_) return LpStatus::Optimal;
    std::size_t r = rows_.size();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const double a = rows_[i].coef[c];
      if (a <= opts_.pivot_tol) continue;
      const double ratio = std::max(0.0, rows_[i].rhs) / a;
      if (ratio < best || (ratio == best && rows_[i].basic < rows_[r].basic)) {
        best = ratio;
        r = i;
      }
    }
    if (r == rows_.size()) return LpStatus::Unbounded;
    pivot(r, c);
  }
}

LpStatus DenseSimplex::dual() {
  while (true) {
    if (pivots_ >= opts_.max_pivots) return LpStatus::IterationLimit;
    std::size_t r = rows_.size();
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (rows_[i].rhs < -opts_.feasibility_tol && (r == rows_.size() || rows_[i].basic < rows_[r].basic)) r = i;
    }
    if (r == rows_.size()) return LpStatus::Optimal;
    std::size_t c = nvars_;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nvars_; ++j) {
      const double a = rows_[r].coef[j];
      if (a >= -opts_.pivot_tol) continue;
      const double ratio = std::min(0.0, cost_[j]) / a;
      if (ratio < best || (ratio == best && nonbasic_[j] < nonbasic_[c])) {
        best = ratio;
        c = j;
      }
    }
    if (c == nvars_) return LpStatus::Infeasible;
    pivot(r, c);
  }
}

LpStatus DenseSimplex::solve() {
  if (primal_feasible()) return primal();
  if (dual_feasible()) {
    const LpStatus s = dual();
    if (s != LpStatus::Optimal) return s;
    return primal();
  }
  throw ConfigError("dictionary is neither primal nor dual feasible");
}

double DenseSimplex::objective() const { return value_; }

std::vector<double> DenseSimplex::solution() const {
  std::vector<double> x(nvars_, 0.0);
  for (std::size_t k = 0; k < nvars_; ++k) {
    if (row_of_[k] >= 0) x[k] = std::max(0.0, rows_[static_cast<std::size_t>(row_of_[k])].rhs);
  }
  return x;
}

std::vector<double> DenseSimplex::slacks() const {
  std::vector<double> s(rows_.size(), 0.0);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const long r = row_of_[nvars_ + i];
    if (r >= 0) s[i] = rows_[static_cast<std::size_t>(r)].rhs;
  }
  return s;
}

}  // namespace parcal
