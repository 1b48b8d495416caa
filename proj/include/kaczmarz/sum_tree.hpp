#pragma once

#include <bit>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace kaczmarz {

// Complete binary tree over nonnegative leaf weights supporting O(log m)
// weight updates and O(log m) proportional sampling.  Leaves sit in a
// power-of-two block [base, base + capacity); node k has children 2k and
// 2k+1; node 1 is the root and holds the total weight.  A leaf with weight 0
// is never returned by sample(): the traversal keeps the invariant
// "remaining target < subtree total", which cannot reach a zero leaf.
class SumTree {
 public:
  explicit SumTree(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("empty tree");
    base_ = std::bit_ceil(n);
    node_.assign(2 * base_, 0.0);
  }

  static SumTree from_weights(const std::vector<double>& w) {
    SumTree t(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] < 0.0) throw std::invalid_argument("negative weight");
      t.node_[t.base_ + i] = w[i];
    }
    for (std::size_t k = t.base_ - 1; k >= 1; --k)
      t.node_[k] = t.node_[2 * k] + t.node_[2 * k + 1];
    return t;
  }

  std::size_t size() const { return n_; }
  double total() const { return node_[1]; }
  double get(std::size_t i) const { return node_[base_ + i]; }

  void set(std::size_t i, double w) {
    if (w < 0.0) throw std::invalid_argument("negative weight");
    std::size_t k = base_ + i;
    node_[k] = w;
    for (k /= 2; k >= 1; k /= 2) node_[k] = node_[2 * k] + node_[2 * k + 1];
  }

  // Index of the leaf owning u under the cumulative-sum partition of [0, 1):
  // the smallest i with u * total < (w_0 + ... + w_i), evaluated against the
  // tree's pairwise partial sums.  Requires total > 0 and u in [0, 1).
  std::size_t sample(double u) const {
    if (!(u >= 0.0 && u < 1.0)) throw std::invalid_argument("u outside [0,1)");
    if (!(total() > 0.0)) throw std::invalid_argument("total weight is zero");
    double target = u * total();
    if (target >= total())  // rounding at u near 1
      target = std::nextafter(total(), 0.0);
    std::size_t k = 1;
    while (k < base_) {
      k *= 2;
      if (target >= node_[k]) {
        target -= node_[k];
        ++k;
      }
    }
    return k - base_;
  }

 private:
  std::size_t n_, base_;
  std::vector<double> node_;
};

}  // namespace kaczmarz
