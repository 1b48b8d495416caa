#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kaczmarz/linear_system.hpp"
#include "kaczmarz/solver.hpp"

namespace kaczmarz {

// Greedy coordinate descent on the least-squares objective f(x) =
// 1/2 ||Ax - b||^2, the dual-side comparator for the greedy row rules:
// Gauss-Southwell picks the largest gradient entry, Gauss-Southwell-Lipschitz
// scales by the per-coordinate Lipschitz constant ||col_j||.
enum class CdRule { GaussSouthwell, GaussSouthwellLipschitz };

inline CdRule parse_cd_rule(const std::string& s) {
  if (s == "gs") return CdRule::GaussSouthwell;
  if (s == "gsl") return CdRule::GaussSouthwellLipschitz;
  throw std::invalid_argument("unknown cd rule '" + s + "'");
}

namespace detail {

inline std::vector<double> column_sq_norms(const SparseMatrix& A) {
  std::vector<double> s(A.cols(), 0.0);
  for (int j = 0; j < A.cols(); ++j)
    for (int k = 0; k < A.col_nnz(j); ++k)
      s[j] += A.col_vals(j)[k] * A.col_vals(j)[k];
  return s;
}

}  // namespace detail

// One greedy CD step on x (in place); returns the selected column.  The
// gradient is A^T (Ax - b); the update is exact minimization along the
// coordinate: x_j -= g_j / ||col_j||^2.  Ties break to the lowest index;
// zero columns are never selected.  A zero-gradient step leaves x unchanged.
inline int cd_select_and_step(const LinearSystem& sys, std::vector<double>& x,
                              CdRule rule) {
  if (!sys.all_equality())
    throw std::invalid_argument("coordinate descent requires equality rows");
  const SparseMatrix& A = sys.matrix();
  std::vector<double> r = residual_vector(sys, x);
  std::vector<double> csq = detail::column_sq_norms(A);
  int best = -1;
  double best_score = -1.0;
  for (int j = 0; j < A.cols(); ++j) {
    if (csq[j] == 0.0) continue;
    double g = 0.0;
    for (int k = 0; k < A.col_nnz(j); ++k)
      g += A.col_vals(j)[k] * r[A.col_rows(j)[k]];
    double score = rule == CdRule::GaussSouthwell
                       ? std::abs(g)
                       : std::abs(g) / std::sqrt(csq[j]);
    if (score > best_score) {
      best_score = score;
      best = j;
    }
  }
  if (best < 0) throw std::invalid_argument("matrix has no nonzero column");
  double g = 0.0;
  for (int k = 0; k < A.col_nnz(best); ++k)
    g += A.col_vals(best)[k] * r[A.col_rows(best)[k]];
  x[best] -= g / csq[best];
  return best;
}

// Fixed-iteration greedy CD run producing the same trace shape as solve(),
// so rule families can be compared per effective pass (iterations / n here,
// iterations / m for the row-action solver).
inline SolveResult cd_solve(const LinearSystem& sys, CdRule rule,
                            std::vector<double> x0, long long iterations) {
  if (!sys.all_equality())
    throw std::invalid_argument("coordinate descent requires equality rows");
  const SparseMatrix& A = sys.matrix();
  const int n = A.cols();
  if (x0.empty()) x0.assign(n, 0.0);
  if (static_cast<int>(x0.size()) != n)
    throw std::invalid_argument("x0 length != column count");

  SolveResult res;
  res.x = std::move(x0);
  std::vector<double>& x = res.x;
  std::vector<double> r = residual_vector(sys, x);
  std::vector<double> csq = detail::column_sq_norms(A);

  auto sq_error = [&]() {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
  };
  auto sq_dist = [&]() {
    if (!sys.has_reference())
      return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = x[j] - sys.reference()[j];
      s += d * d;
    }
    return s;
  };

  res.trace.has_dist = sys.has_reference();
  res.trace.initial_error = sq_error();
  res.trace.initial_sq_dist = sq_dist();

  const auto t0 = std::chrono::steady_clock::now();
  std::int64_t last_wall = 0;
  for (long long k = 0; k < iterations; ++k) {
    int best = -1;
    double best_score = -1.0;
    for (int j = 0; j < n; ++j) {
      if (csq[j] == 0.0) continue;
      double g = 0.0;
      for (int t = 0; t < A.col_nnz(j); ++t)
        g += A.col_vals(j)[t] * r[A.col_rows(j)[t]];
      double score = rule == CdRule::GaussSouthwell
                         ? std::abs(g)
                         : std::abs(g) / std::sqrt(csq[j]);
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    if (best < 0) throw std::invalid_argument("matrix has no nonzero column");
    double g = 0.0;
    for (int t = 0; t < A.col_nnz(best); ++t)
      g += A.col_vals(best)[t] * r[A.col_rows(best)[t]];
    const double dx = -g / csq[best];
    if (dx != 0.0) {
      x[best] += dx;
      for (int t = 0; t < A.col_nnz(best); ++t)
        r[A.col_rows(best)[t]] += A.col_vals(best)[t] * dx;
    }
    if (k % 100 == 0)
      last_wall = std::chrono::duration_cast<std::chrono::nanoseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    res.trace.records.push_back({best, sq_error(), sq_dist(), last_wall});
  }
  res.iterations = iterations;
  res.reason = TerminationReason::MaxIterations;
  return res;
}

}  // namespace kaczmarz
