#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace kaczmarz {

struct Triplet {
  int row;
  int col;
  double value;
};

// Sparse matrix in compressed row form with a mirrored compressed column
// index.  Row access drives projection steps; column access drives the
// residual bookkeeping, which needs "all rows touching coordinate j" in
// O(nnz(col j)).  Column indices within a row (and row indices within a
// column) are strictly increasing; explicit zeros are rejected at build time
// so the stored support is exactly the nonzero support.
class SparseMatrix {
 public:
  SparseMatrix() : m_(0), n_(0) {}

  SparseMatrix(int m, int n, std::vector<Triplet> triplets) : m_(m), n_(n) {
    if (m < 0 || n < 0) throw std::invalid_argument("negative dimension");
    for (const Triplet& t : triplets) {
      if (t.row < 0 || t.row >= m || t.col < 0 || t.col >= n)
        throw std::invalid_argument("triplet index out of range");
      if (t.value == 0.0)
        throw std::invalid_argument("explicit zero entry");
    }
    std::sort(triplets.begin(), triplets.end(),
              [](const Triplet& a, const Triplet& b) {
                return std::tie(a.row, a.col) < std::tie(b.row, b.col);
              });
    for (std::size_t k = 1; k < triplets.size(); ++k) {
      if (triplets[k].row == triplets[k - 1].row &&
          triplets[k].col == triplets[k - 1].col)
        throw std::invalid_argument("duplicate entry");
    }

    row_ptr_.assign(m + 1, 0);
    col_ptr_.assign(n + 1, 0);
    cols_.reserve(triplets.size());
    vals_.reserve(triplets.size());
    for (const Triplet& t : triplets) {
      ++row_ptr_[t.row + 1];
      ++col_ptr_[t.col + 1];
    }
    for (int i = 0; i < m; ++i) row_ptr_[i + 1] += row_ptr_[i];
    for (int j = 0; j < n; ++j) col_ptr_[j + 1] += col_ptr_[j];
    for (const Triplet& t : triplets) {
      cols_.push_back(t.col);
      vals_.push_back(t.value);
    }
    // Column mirror: counting pass over the row-sorted entries keeps row
    // indices within each column increasing.
    col_rows_.resize(triplets.size());
    col_vals_.resize(triplets.size());
    std::vector<int> fill(col_ptr_.begin(), col_ptr_.end() - 1);
    for (const Triplet& t : triplets) {
      int slot = fill[t.col]++;
      col_rows_[slot] = t.row;
      col_vals_[slot] = t.value;
    }
  }

  int rows() const { return m_; }
  int cols() const { return n_; }
  std::size_t nnz() const { return vals_.size(); }

  // Row i as parallel (column index, value) spans.
  int row_nnz(int i) const { return row_ptr_[i + 1] - row_ptr_[i]; }
  const int* row_cols(int i) const { return cols_.data() + row_ptr_[i]; }
  const double* row_vals(int i) const { return vals_.data() + row_ptr_[i]; }

  // Column j as parallel (row index, value) spans.
  int col_nnz(int j) const { return col_ptr_[j + 1] - col_ptr_[j]; }
  const int* col_rows(int j) const { return col_rows_.data() + col_ptr_[j]; }
  const double* col_vals(int j) const { return col_vals_.data() + col_ptr_[j]; }

  double row_dot(int i, const std::vector<double>& x) const {
    double s = 0.0;
    const int* c = row_cols(i);
    const double* v = row_vals(i);
    for (int k = 0; k < row_nnz(i); ++k) s += v[k] * x[c[k]];
    return s;
  }

  double row_sq_norm(int i) const {
    double s = 0.0;
    const double* v = row_vals(i);
    for (int k = 0; k < row_nnz(i); ++k) s += v[k] * v[k];
    return s;
  }

  std::vector<Triplet> to_triplets() const {
    std::vector<Triplet> out;
    out.reserve(nnz());
    for (int i = 0; i < m_; ++i)
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        out.push_back({i, cols_[k], vals_[k]});
    return out;
  }

 private:
  int m_, n_;
  std::vector<int> row_ptr_, cols_;
  std::vector<double> vals_;
  std::vector<int> col_ptr_, col_rows_;
  std::vector<double> col_vals_;
};

}  // namespace kaczmarz
