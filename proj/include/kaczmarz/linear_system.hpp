#pragma once

#include <cmath>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kaczmarz/sparse_matrix.hpp"

namespace kaczmarz {

enum class ConstraintKind { Equality, LessEqual };

// Per-row Euclidean norms plus the aggregates every selection rule and rate
// constant keeps asking for.  Built once per system; rows are immutable.
struct RowNormCache {
  std::vector<double> norm;     // ||a_i||
  std::vector<double> sq_norm;  // ||a_i||^2
  double frobenius_sq = 0.0;    // sum of sq_norm
  double max_sq_norm = 0.0;     // max_i ||a_i||^2

  static RowNormCache build(const SparseMatrix& A) {
    RowNormCache c;
    c.norm.resize(A.rows());
    c.sq_norm.resize(A.rows());
    for (int i = 0; i < A.rows(); ++i) {
      double s = A.row_sq_norm(i);
      c.sq_norm[i] = s;
      c.norm[i] = std::sqrt(s);
      c.frobenius_sq += s;
      if (s > c.max_sq_norm) c.max_sq_norm = s;
    }
    return c;
  }
};

// A system of linear constraints a_i . x (=|<=) b_i.  All-zero rows are
// rejected: a zero row is either infeasible or vacuous and every projection
// would divide by ||a_i||^2 = 0.  An optional reference solution (checked for
// consistency on attach) enables distance-to-solution traces.
class LinearSystem {
 public:
  LinearSystem() = default;

  LinearSystem(SparseMatrix A, std::vector<double> b,
               std::vector<ConstraintKind> kinds = {},
               std::optional<std::vector<double>> reference = std::nullopt)
      : A_(std::move(A)), b_(std::move(b)), kinds_(std::move(kinds)) {
    const int m = A_.rows();
    if (static_cast<int>(b_.size()) != m)
      throw std::invalid_argument("rhs length != row count");
    if (kinds_.empty()) kinds_.assign(m, ConstraintKind::Equality);
    if (static_cast<int>(kinds_.size()) != m)
      throw std::invalid_argument("kinds length != row count");
    for (int i = 0; i < m; ++i)
      if (A_.row_nnz(i) == 0)
        throw std::invalid_argument("all-zero row " + std::to_string(i));
    norms_ = RowNormCache::build(A_);
    if (reference) attach_reference(std::move(*reference));
  }

  const SparseMatrix& matrix() const { return A_; }
  const std::vector<double>& rhs() const { return b_; }
  const std::vector<ConstraintKind>& kinds() const { return kinds_; }
  const RowNormCache& norms() const { return norms_; }
  int rows() const { return A_.rows(); }
  int cols() const { return A_.cols(); }

  bool all_equality() const {
    for (ConstraintKind k : kinds_)
      if (k != ConstraintKind::Equality) return false;
    return true;
  }

  double rhs_inf_norm() const {
    double v = 0.0;
    for (double bi : b_) v = std::max(v, std::abs(bi));
    return v;
  }

  bool has_reference() const { return reference_.has_value(); }
  const std::vector<double>& reference() const { return *reference_; }

  // Reference must satisfy every constraint to 1e-10 * (1 + ||b||_inf):
  // equality rows exactly, <= rows up to the same slack.
  void attach_reference(std::vector<double> ref) {
    if (static_cast<int>(ref.size()) != A_.cols())
      throw std::invalid_argument("reference length != column count");
    const double tol = 1e-10 * (1.0 + rhs_inf_norm());
    for (int i = 0; i < A_.rows(); ++i) {
      double r = A_.row_dot(i, ref) - b_[i];
      double violation =
          kinds_[i] == ConstraintKind::Equality ? std::abs(r) : std::max(r, 0.0);
      if (violation > tol)
        throw std::invalid_argument("reference violates row " +
                                    std::to_string(i));
    }
    reference_ = std::move(ref);
  }

 private:
  SparseMatrix A_;
  std::vector<double> b_;
  std::vector<ConstraintKind> kinds_;
  RowNormCache norms_;
  std::optional<std::vector<double>> reference_;
};

// r_i = a_i . x - b_i (signed, regardless of row kind).
inline std::vector<double> residual_vector(const LinearSystem& sys,
                                           const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != sys.cols())
    throw std::invalid_argument("x length != column count");
  std::vector<double> r(sys.rows());
  for (int i = 0; i < sys.rows(); ++i)
    r[i] = sys.matrix().row_dot(i, x) - sys.rhs()[i];
  return r;
}

// Violation magnitude of row i given its signed residual: equality rows count
// both signs, <= rows only the positive part.
inline double row_violation(ConstraintKind kind, double residual) {
  return kind == ConstraintKind::Equality ? std::abs(residual)
                                          : std::max(residual, 0.0);
}

// Matrix with every row scaled to unit Euclidean norm.
inline SparseMatrix normalized_matrix(const LinearSystem& sys) {
  std::vector<Triplet> t = sys.matrix().to_triplets();
  for (Triplet& e : t) e.value /= sys.norms().norm[e.row];
  return SparseMatrix(sys.rows(), sys.cols(), std::move(t));
}

// Equivalent system with unit rows (rhs rescaled accordingly).  The solution
// set, hence any attached reference, is unchanged.
inline LinearSystem normalized_system(const LinearSystem& sys) {
  std::vector<double> b = sys.rhs();
  for (int i = 0; i < sys.rows(); ++i) b[i] /= sys.norms().norm[i];
  std::optional<std::vector<double>> ref;
  if (sys.has_reference()) ref = sys.reference();
  return LinearSystem(normalized_matrix(sys), std::move(b), sys.kinds(),
                      std::move(ref));
}

// Consistent square embedding of the least-squares problem min ||Ax - b||:
//   [ A  -I ] [x]   [b]
//   [ 0  A^T] [y] = [0]
// whose solutions are exactly (x, Ax - b) with x a least-squares solution.
// Throws if A has a zero column (the A^T block would contain a zero row).
inline LinearSystem augment_least_squares(const LinearSystem& sys) {
  if (!sys.all_equality())
    throw std::invalid_argument("augmentation requires equality rows");
  const SparseMatrix& A = sys.matrix();
  const int m = A.rows(), n = A.cols();
  std::vector<Triplet> t;
  t.reserve(2 * A.nnz() + m);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < A.row_nnz(i); ++k)
      t.push_back({i, A.row_cols(i)[k], A.row_vals(i)[k]});
    t.push_back({i, n + i, -1.0});
  }
  for (int j = 0; j < n; ++j) {
    if (A.col_nnz(j) == 0)
      throw std::invalid_argument("zero column " + std::to_string(j));
    for (int k = 0; k < A.col_nnz(j); ++k)
      t.push_back({m + j, n + A.col_rows(j)[k], A.col_vals(j)[k]});
  }
  std::vector<double> rhs(m + n, 0.0);
  for (int i = 0; i < m; ++i) rhs[i] = sys.rhs()[i];
  return LinearSystem(SparseMatrix(m + n, n + m, std::move(t)), std::move(rhs));
}

}  // namespace kaczmarz
