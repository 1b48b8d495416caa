#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kaczmarz/linear_system.hpp"

namespace kaczmarz {

// Addressable binary max-heap over per-row violation scores, the engine
// behind the greedy selection rules.  Keyed updates go through a position
// map, so changing one row's residual costs O(log m).  Score of row i:
//   Residual mode:  violation(r_i)
//   Distance mode:  violation(r_i) / ||a_i||
// where violation() is |r| for equality rows and max(r, 0) for <= rows.
// Ordering is (score, then lower index), making the top row the unique
// tie-broken argmax.
class ResidualHeap {
 public:
  enum class Score { Residual, Distance };

  ResidualHeap() = default;

  ResidualHeap(const LinearSystem& sys, std::vector<double> residuals,
               Score mode)
      : mode_(mode),
        kinds_(sys.kinds()),
        inv_norm_(sys.rows()),
        r_(std::move(residuals)) {
    const int m = sys.rows();
    if (static_cast<int>(r_.size()) != m)
      throw std::invalid_argument("residual length != row count");
    for (int i = 0; i < m; ++i) inv_norm_[i] = 1.0 / sys.norms().norm[i];
    score_.resize(m);
    for (int i = 0; i < m; ++i) score_[i] = compute_score(i);
    heap_.resize(m);
    pos_.resize(m);
    for (int i = 0; i < m; ++i) heap_[i] = i, pos_[i] = i;
    for (int k = m / 2 - 1; k >= 0; --k) sift_down(k);
  }

  int size() const { return static_cast<int>(heap_.size()); }
  int top() const { return heap_.at(0); }
  double top_score() const { return score_[heap_.at(0)]; }
  double residual(int i) const { return r_[i]; }
  const std::vector<double>& residuals() const { return r_; }

  void set_residual(int i, double r) {
    r_[i] = r;
    reposition(i);
  }

  void add_to_residual(int i, double delta) {
    r_[i] += delta;
    reposition(i);
  }

  // Drift control: replace every stored residual and re-heapify in O(m).
  void refresh(std::vector<double> residuals) {
    if (residuals.size() != r_.size())
      throw std::invalid_argument("residual length mismatch");
    r_ = std::move(residuals);
    for (int i = 0; i < size(); ++i) score_[i] = compute_score(i);
    for (int k = size() / 2 - 1; k >= 0; --k) sift_down(k);
  }

 private:
  double compute_score(int i) const {
    const double v = row_violation(kinds_[i], r_[i]);
    return mode_ == Score::Residual ? v : v * inv_norm_[i];
  }

  // Max-heap order with deterministic ties: higher score first, then lower
  // row index.
  bool before(int a, int b) const {
    return score_[a] != score_[b] ? score_[a] > score_[b] : a < b;
  }

  void reposition(int i) {
    score_[i] = compute_score(i);
    if (!sift_up(pos_[i])) sift_down(pos_[i]);
  }

  bool sift_up(int k) {
    bool moved = false;
    while (k > 0) {
      int parent = (k - 1) / 2;
      if (!before(heap_[k], heap_[parent])) break;
      swap_nodes(k, parent);
      k = parent;
      moved = true;
    }
    return moved;
  }

  void sift_down(int k) {
    const int m = size();
    for (;;) {
      int best = k, l = 2 * k + 1, r = 2 * k + 2;
      if (l < m && before(heap_[l], heap_[best])) best = l;
      if (r < m && before(heap_[r], heap_[best])) best = r;
      if (best == k) return;
      swap_nodes(k, best);
      k = best;
    }
  }

  void swap_nodes(int a, int b) {
    std::swap(heap_[a], heap_[b]);
    pos_[heap_[a]] = a;
    pos_[heap_[b]] = b;
  }

  Score mode_ = Score::Residual;
  std::vector<ConstraintKind> kinds_;
  std::vector<double> inv_norm_;
  std::vector<double> r_;      // signed residuals, indexed by row
  std::vector<double> score_;  // cached scores, indexed by row
  std::vector<int> heap_;      // row ids in heap order
  std::vector<int> pos_;       // row id -> heap slot
};

}  // namespace kaczmarz
