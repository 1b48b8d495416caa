#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "kaczmarz/linear_system.hpp"

namespace kaczmarz {

// Row-interaction graph: vertices are rows, an edge means projecting onto one
// row can disturb the other's residual.  Exact mode tests the actual inner
// product against a relative threshold; SupportOverlap only asks whether two
// rows share a column, which is cheaper and always a superset of Exact.
struct OrthogonalityGraph {
  enum class Mode { Exact, SupportOverlap };

  Mode mode = Mode::SupportOverlap;
  std::vector<std::vector<int>> adj;  // sorted, no self-loops
  int max_degree = 0;

  int size() const { return static_cast<int>(adj.size()); }
  const std::vector<int>& neighbors(int i) const { return adj[i]; }

  std::size_t edge_count() const {
    std::size_t s = 0;
    for (const auto& a : adj) s += a.size();
    return s / 2;
  }

  // One "i j" line per edge, i < j, sorted.
  void write_edge_list(std::ostream& os) const {
    for (int i = 0; i < size(); ++i)
      for (int j : adj[i])
        if (i < j) os << i << ' ' << j << '\n';
  }
};

namespace detail {

template <typename Accept>
OrthogonalityGraph build_graph(const LinearSystem& sys,
                               OrthogonalityGraph::Mode mode, Accept accept) {
  const SparseMatrix& A = sys.matrix();
  const int m = A.rows();
  OrthogonalityGraph g;
  g.mode = mode;
  g.adj.assign(m, {});
  // Scatter pass per row over column adjacency: touches exactly the rows
  // sharing support, so cost is sum over entries of the column fill.
  std::vector<double> dot(m, 0.0);
  std::vector<int> stamp(m, -1);
  std::vector<int> touched;
  for (int i = 0; i < m; ++i) {
    touched.clear();
    for (int k = 0; k < A.row_nnz(i); ++k) {
      const int j = A.row_cols(i)[k];
      const double v = A.row_vals(i)[k];
      for (int t = 0; t < A.col_nnz(j); ++t) {
        const int other = A.col_rows(j)[t];
        if (other <= i) continue;  // each unordered pair handled once
        if (stamp[other] != i) {
          stamp[other] = i;
          dot[other] = 0.0;
          touched.push_back(other);
        }
        dot[other] += v * A.col_vals(j)[t];
      }
    }
    for (int other : touched) {
      if (accept(i, other, dot[other])) {
        g.adj[i].push_back(other);
        g.adj[other].push_back(i);
      }
    }
  }
  for (auto& a : g.adj) {
    std::sort(a.begin(), a.end());
    g.max_degree = std::max(g.max_degree, static_cast<int>(a.size()));
  }
  return g;
}

}  // namespace detail

// Edge iff |a_i . a_j| > tau * ||a_i|| * ||a_j||.
inline OrthogonalityGraph build_exact_graph(const LinearSystem& sys,
                                            double tau = 1e-12) {
  if (tau < 0.0) throw std::invalid_argument("tau must be >= 0");
  const auto& norm = sys.norms().norm;
  return detail::build_graph(
      sys, OrthogonalityGraph::Mode::Exact,
      [&](int i, int j, double d) { return std::abs(d) > tau * norm[i] * norm[j]; });
}

// Edge iff the rows share at least one column of support.
inline OrthogonalityGraph build_support_graph(const LinearSystem& sys) {
  return detail::build_graph(sys, OrthogonalityGraph::Mode::SupportOverlap,
                             [](int, int, double) { return true; });
}

// Which rows may still have nonzero residual.  Selecting a row zeroes its
// residual (flag -> 0) and may disturb exactly its graph neighbors
// (flags -> 1).  With x0 = 0, rows with b_i = 0 start already satisfied.
class SelectableSet {
 public:
  SelectableSet() = default;

  static SelectableSet init(const LinearSystem& sys, bool x0_is_zero) {
    SelectableSet s;
    s.flags_.assign(sys.rows(), 1);
    s.count_ = sys.rows();
    if (x0_is_zero) {
      for (int i = 0; i < sys.rows(); ++i)
        if (sys.rhs()[i] == 0.0) {
          s.flags_[i] = 0;
          --s.count_;
        }
    }
    return s;
  }

  bool selectable(int i) const { return flags_[i] != 0; }
  int count() const { return count_; }
  int size() const { return static_cast<int>(flags_.size()); }

  void mark_selected(const OrthogonalityGraph& graph, int i) {
    if (flags_[i]) {
      flags_[i] = 0;
      --count_;
    }
    for (int j : graph.neighbors(i))
      if (!flags_[j]) {
        flags_[j] = 1;
        ++count_;
      }
  }

  // Clear row i's flag without touching neighbors (no-op selection: the row
  // was already satisfied, so nothing was disturbed).
  void deselect(int i) {
    if (flags_[i]) {
      flags_[i] = 0;
      --count_;
    }
  }

 private:
  std::vector<std::uint8_t> flags_;
  int count_ = 0;
};

struct StarBoundResult {
  int center = -1;
  std::vector<int> leaves;      // ascending
  double geometric_mean = 0.0;  // over the star's node weights
};

namespace detail {

// Canonical evaluation: product in ascending node order, then the |star|-th
// root.  Shared by the greedy search and the test-side enumerations so equal
// winners produce bit-equal values.
inline double star_geometric_mean(const std::vector<double>& w, int center,
                                  const std::vector<int>& leaves) {
  std::vector<int> nodes = leaves;
  nodes.push_back(center);
  std::sort(nodes.begin(), nodes.end());
  double prod = 1.0;
  for (int v : nodes) prod *= w[v];
  return std::pow(prod, 1.0 / static_cast<double>(nodes.size()));
}

}  // namespace detail

// Best star subgraph (a center plus a nonempty subset of its neighbors) by
// geometric mean of node weights.  For a fixed center and leaf count the
// optimal leaves are the heaviest ones, so scanning prefixes of the
// weight-sorted neighbor list visits an optimal subset of every size; this is
// exhaustive over subsets without enumerating them.
inline StarBoundResult star_bound(const OrthogonalityGraph& graph,
                                  const std::vector<double>& weights) {
  const int m = graph.size();
  if (static_cast<int>(weights.size()) != m)
    throw std::invalid_argument("weight count != node count");
  for (double w : weights)
    if (!(w > 0.0) || w > 1.0)
      throw std::invalid_argument("weights must lie in (0, 1]");
  if (graph.edge_count() == 0)
    throw std::invalid_argument("graph has no edges, no star exists");

  StarBoundResult best;
  for (int c = 0; c < m; ++c) {
    std::vector<int> nb = graph.neighbors(c);
    if (nb.empty()) continue;
    std::sort(nb.begin(), nb.end(), [&](int a, int b) {
      return weights[a] != weights[b] ? weights[a] > weights[b] : a < b;
    });
    double prod = weights[c];
    for (std::size_t k = 0; k < nb.size(); ++k) {
      prod *= weights[nb[k]];
      double gm = std::pow(prod, 1.0 / static_cast<double>(k + 2));
      if (gm > best.geometric_mean) {
        best.center = c;
        best.leaves.assign(nb.begin(), nb.begin() + k + 1);
        best.geometric_mean = gm;
      }
    }
  }
  std::sort(best.leaves.begin(), best.leaves.end());
  // Re-evaluate canonically so the reported value does not depend on the
  // multiplication order used during the scan.
  best.geometric_mean =
      detail::star_geometric_mean(weights, best.center, best.leaves);
  return best;
}

// Exhaustive worst-case product over feasible length-k selection sequences:
// once chosen, a node is disabled until one of its neighbors is chosen.  The
// reachable state is exactly the selectable bitmask, so dynamic programming
// over (step, mask) is exact.  Returns the maximum product of weights;
// 0 if no feasible sequence of length k exists.
inline double problem1_bruteforce(const OrthogonalityGraph& graph,
                                  const std::vector<double>& weights, int k) {
  const int m = graph.size();
  if (m > 12 || k > 30)
    throw std::invalid_argument("bruteforce limited to m <= 12, k <= 30");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (static_cast<int>(weights.size()) != m)
    throw std::invalid_argument("weight count != node count");
  for (double w : weights)
    if (!(w > 0.0) || w > 1.0)
      throw std::invalid_argument("weights must lie in (0, 1]");
  if (graph.edge_count() == 0)
    throw std::invalid_argument("graph has no edges");

  std::vector<std::uint32_t> adj_mask(m, 0);
  for (int i = 0; i < m; ++i)
    for (int j : graph.neighbors(i)) adj_mask[i] |= 1u << j;

  const std::uint32_t full = (1u << m) - 1;
  // value[mask] = best product achievable in the remaining steps starting
  // from selectable set `mask`; 0 marks "no feasible sequence".
  std::vector<double> value(full + 1, 1.0), next(full + 1);
  for (int step = 0; step < k; ++step) {
    for (std::uint32_t mask = 0; mask <= full; ++mask) {
      double best = 0.0;
      for (std::uint32_t rest = mask; rest;) {
        const int i = std::countr_zero(rest);
        rest &= rest - 1;
        const std::uint32_t after = (mask & ~(1u << i)) | adj_mask[i];
        best = std::max(best, weights[i] * value[after]);
      }
      next[mask] = best;
    }
    std::swap(value, next);
  }
  return value[full];
}

}  // namespace kaczmarz
