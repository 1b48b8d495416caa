#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "kaczmarz/linear_system.hpp"
#include "kaczmarz/orthogonality.hpp"
#include "kaczmarz/residual_heap.hpp"
#include "kaczmarz/rng.hpp"
#include "kaczmarz/selection.hpp"
#include "kaczmarz/sum_tree.hpp"

namespace kaczmarz {

// Orthogonal projection of x onto the hyperplane of row i.
inline std::vector<double> kaczmarz_step(const LinearSystem& sys,
                                         const std::vector<double>& x, int i) {
  std::vector<double> out = x;
  const SparseMatrix& A = sys.matrix();
  const double r = A.row_dot(i, x) - sys.rhs()[i];
  const double scale = r / sys.norms().sq_norm[i];
  for (int k = 0; k < A.row_nnz(i); ++k)
    out[A.row_cols(i)[k]] -= scale * A.row_vals(i)[k];
  return out;
}

// Kind-aware projection: <= rows only move when violated (project onto the
// boundary); equality rows always project.  Satisfied rows leave x unchanged.
inline std::vector<double> kaczmarz_inequality_step(const LinearSystem& sys,
                                                    const std::vector<double>& x,
                                                    int i) {
  std::vector<double> out = x;
  const SparseMatrix& A = sys.matrix();
  const double r = A.row_dot(i, x) - sys.rhs()[i];
  const double beta = sys.kinds()[i] == ConstraintKind::Equality
                          ? r
                          : std::max(r, 0.0);
  if (beta == 0.0) return out;
  const double scale = beta / sys.norms().sq_norm[i];
  for (int k = 0; k < A.row_nnz(i); ++k)
    out[A.row_cols(i)[k]] -= scale * A.row_vals(i)[k];
  return out;
}

// Defect of the exact per-step identity
//   ||x' - x*||^2 = ||x - x*||^2 - (a_i . x - b_i)^2 / ||a_i||^2
// for the projection x -> x' onto row i, with x* any exact solution.
inline double step_identity_check(const LinearSystem& sys,
                                  const std::vector<double>& x_before, int i,
                                  const std::vector<double>& x_star) {
  std::vector<double> x_after = kaczmarz_step(sys, x_before, i);
  auto sq_dist = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      double d = v[j] - x_star[j];
      s += d * d;
    }
    return s;
  };
  const double r = sys.matrix().row_dot(i, x_before) - sys.rhs()[i];
  const double rhs = sq_dist(x_before) - r * r / sys.norms().sq_norm[i];
  return std::abs(sq_dist(x_after) - rhs);
}

struct FeasibilityGap {
  double gap_inf = 0.0;  // || positive-part residual ||_inf, kind-aware
  // Exact distance to the feasible set, available for separable systems
  // (every row touches a single coordinate: halfspaces/boxes/pinned values).
  std::optional<double> exact_distance;
};

inline FeasibilityGap feasibility_gap(const LinearSystem& sys,
                                      const std::vector<double>& x) {
  FeasibilityGap out;
  std::vector<double> r = residual_vector(sys, x);
  for (int i = 0; i < sys.rows(); ++i)
    out.gap_inf = std::max(out.gap_inf, row_violation(sys.kinds()[i], r[i]));

  bool separable = true;
  for (int i = 0; i < sys.rows() && separable; ++i)
    if (sys.matrix().row_nnz(i) != 1) separable = false;
  if (!separable) return out;

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> lo(sys.cols(), -inf), hi(sys.cols(), inf);
  for (int i = 0; i < sys.rows(); ++i) {
    const int j = sys.matrix().row_cols(i)[0];
    const double a = sys.matrix().row_vals(i)[0];
    const double v = sys.rhs()[i] / a;
    if (sys.kinds()[i] == ConstraintKind::Equality) {
      lo[j] = std::max(lo[j], v);
      hi[j] = std::min(hi[j], v);
    } else if (a > 0.0) {
      hi[j] = std::min(hi[j], v);
    } else {
      lo[j] = std::max(lo[j], v);
    }
  }
  double sq = 0.0;
  for (int j = 0; j < sys.cols(); ++j) {
    if (lo[j] > hi[j]) return out;  // empty feasible set: no projection
    double d = 0.0;
    if (x[j] < lo[j]) d = lo[j] - x[j];
    else if (x[j] > hi[j]) d = x[j] - hi[j];
    sq += d * d;
  }
  out.exact_distance = std::sqrt(sq);
  return out;
}

struct StoppingCriteria {
  long long max_iterations = -1;   // < 0: unbounded
  double residual_inf_tol = -1.0;  // < 0: disabled; kind-aware gap threshold
  long long wall_budget_ns = -1;   // < 0: disabled; checked at block boundaries

  void validate() const {
    if (max_iterations < 0 && residual_inf_tol < 0.0 && wall_budget_ns < 0)
      throw std::invalid_argument("no stopping criterion enabled");
  }
};

enum class TerminationReason {
  MaxIterations,
  ResidualTolerance,
  WallBudget,
  SelectableEmpty,  // adaptive rules: every row certified satisfied
};

struct TraceRecord {
  int row;
  double sq_error;  // see ConvergenceTrace::error_is_gap
  double sq_dist;   // NaN when the system has no reference solution
  std::int64_t wall_ns;
};

// Per-iteration history of one run.  sq_error is ||Ax - b||^2 for pure
// equality systems; when any <= row is present it is the feasibility gap
// ||e(Ax - b)||_inf instead (error_is_gap = true).  Normalized columns in the
// CSV divide by the value at x0.  wall_ns is a cumulative clock sampled once
// per block of iterations to keep timer overhead negligible.
struct ConvergenceTrace {
  std::vector<TraceRecord> records;
  double initial_error = 0.0;
  double initial_sq_dist = std::numeric_limits<double>::quiet_NaN();
  bool has_dist = false;
  bool error_is_gap = false;
  // Optional per-step rate-bound factors (adaptive validation); parallel to
  // records when present.
  std::vector<double> bound_factors;

  void write_csv(std::ostream& os) const {
    os << "iter,row,sq_error,sq_error_norm,sq_dist,sq_dist_norm,wall_ns\n";
    auto normed = [](double v, double v0) {
      return v0 > 0.0 ? v / v0 : v;
    };
    os.precision(17);
    for (std::size_t k = 0; k < records.size(); ++k) {
      const TraceRecord& t = records[k];
      os << (k + 1) << ',' << t.row << ',' << t.sq_error << ','
         << normed(t.sq_error, initial_error) << ',' << t.sq_dist << ','
         << normed(t.sq_dist, initial_sq_dist) << ',' << t.wall_ns << '\n';
    }
  }
};

struct SolveOptions {
  enum class UpdatePath { Auto, Sparse, Graph };

  // Residual maintenance: Sparse walks column adjacency of the changed
  // coordinates; Graph recomputes the selected row's neighbors and zeroes the
  // selected row exactly.  Auto picks Graph when a graph is supplied.
  UpdatePath update_path = UpdatePath::Auto;
  int refresh_period = 0;  // full residual recompute every p steps; 0 -> m
  int wall_block = 100;    // clock sampling stride
  // When set, called before every step with the current selectable set;
  // the returned factor lands in ConvergenceTrace::bound_factors.
  std::function<double(const SelectableSet&)> bound_factor_hook;
};

struct SolveResult {
  std::vector<double> x;
  ConvergenceTrace trace;
  TerminationReason reason = TerminationReason::MaxIterations;
  long long iterations = 0;
};

inline SolveResult solve(const LinearSystem& sys, const RuleConfig& rule,
                         std::vector<double> x0, const StoppingCriteria& stop,
                         const OrthogonalityGraph* graph = nullptr,
                         const SolveOptions& options = {}) {
  rule.validate();
  stop.validate();
  const int m = sys.rows(), n = sys.cols();
  if (x0.empty()) x0.assign(n, 0.0);
  if (static_cast<int>(x0.size()) != n)
    throw std::invalid_argument("x0 length != column count");
  if (rule.adaptive() && graph == nullptr)
    throw std::invalid_argument("adaptive rules require an orthogonality graph");
  if (options.wall_block < 1)
    throw std::invalid_argument("wall_block must be >= 1");
  bool x0_zero = true;
  for (double v : x0) x0_zero &= v == 0.0;

  const bool use_graph_updates =
      options.update_path == SolveOptions::UpdatePath::Graph ||
      (options.update_path == SolveOptions::UpdatePath::Auto && graph != nullptr);
  if (use_graph_updates && graph == nullptr)
    throw std::invalid_argument("graph update path requires a graph");
  const int refresh = options.refresh_period > 0 ? options.refresh_period : m;

  SolveResult res;
  res.x = std::move(x0);
  std::vector<double>& x = res.x;
  std::vector<double> r = residual_vector(sys, x);
  const std::vector<double>& sq_norm = sys.norms().sq_norm;

  const bool pure_equality = sys.all_equality();
  auto error_metric = [&]() {
    if (pure_equality) {
      double s = 0.0;
      for (double v : r) s += v * v;
      return s;
    }
    double g = 0.0;
    for (int i = 0; i < m; ++i)
      g = std::max(g, row_violation(sys.kinds()[i], r[i]));
    return g;
  };
  auto gap_inf = [&]() {
    double g = 0.0;
    for (int i = 0; i < m; ++i)
      g = std::max(g, row_violation(sys.kinds()[i], r[i]));
    return g;
  };
  auto sq_dist = [&]() {
    if (!sys.has_reference())
      return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    const std::vector<double>& ref = sys.reference();
    for (int j = 0; j < n; ++j) {
      double d = x[j] - ref[j];
      s += d * d;
    }
    return s;
  };

  ConvergenceTrace& trace = res.trace;
  trace.error_is_gap = !pure_equality;
  trace.has_dist = sys.has_reference();
  trace.initial_error = error_metric();
  trace.initial_sq_dist = sq_dist();
  if (stop.max_iterations >= 0)
    trace.records.reserve(static_cast<std::size_t>(
        std::min<long long>(stop.max_iterations, 1 << 20)));

  // Rule state.
  Rng rng(rule.seed);
  ResidualHeap heap_r, heap_d;
  const bool need_heap_r = rule.kind == RuleKind::MaxResidual ||
                           rule.kind == RuleKind::Hybrid ||
                           rule.kind == RuleKind::ApproxMultiplicative ||
                           rule.kind == RuleKind::ApproxAdditive;
  const bool need_heap_d =
      rule.kind == RuleKind::MaxDistance || rule.kind == RuleKind::Hybrid;
  if (need_heap_r) heap_r = ResidualHeap(sys, r, ResidualHeap::Score::Residual);
  if (need_heap_d) heap_d = ResidualHeap(sys, r, ResidualHeap::Score::Distance);

  std::optional<SumTree> tree;
  SelectableSet selectable;
  if (rule.kind == RuleKind::NonUniform) {
    tree = SumTree::from_weights(sq_norm);
  } else if (rule.adaptive()) {
    selectable = SelectableSet::init(sys, x0_zero);
    std::vector<double> w(m);
    for (int i = 0; i < m; ++i)
      w[i] = selectable.selectable(i)
                 ? (rule.kind == RuleKind::AdaptiveUniform ? 1.0 : sq_norm[i])
                 : 0.0;
    tree = SumTree::from_weights(w);
  }
  std::vector<int> perm;
  int perm_pos = 0;
  if (rule.kind == RuleKind::Cyclic || rule.kind == RuleKind::RandomPermutation) {
    perm.resize(m);
    for (int i = 0; i < m; ++i) perm[i] = i;
    if (rule.kind == RuleKind::RandomPermutation) rng.shuffle(perm);
  }

  const auto t0 = std::chrono::steady_clock::now();
  std::int64_t last_wall = 0;
  auto sample_clock = [&]() {
    last_wall = std::chrono::duration_cast<std::chrono::nanoseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  };

  // Scratch for sparse residual updates: per-row accumulated change.
  std::vector<double> acc(m, 0.0);
  std::vector<char> in_acc(m, 0);
  std::vector<int> acc_rows;

  long long k = 0;
  res.reason = TerminationReason::MaxIterations;
  for (;; ++k) {
    if (stop.max_iterations >= 0 && k >= stop.max_iterations) {
      res.reason = TerminationReason::MaxIterations;
      break;
    }
    if (stop.residual_inf_tol >= 0.0 && gap_inf() <= stop.residual_inf_tol) {
      res.reason = TerminationReason::ResidualTolerance;
      break;
    }
    if (stop.wall_budget_ns >= 0 && k % options.wall_block == 0) {
      sample_clock();
      if (last_wall > stop.wall_budget_ns) {
        res.reason = TerminationReason::WallBudget;
        break;
      }
    }
    if (rule.adaptive() && selectable.count() == 0) {
      res.reason = TerminationReason::SelectableEmpty;
      break;
    }

    if (options.bound_factor_hook)
      trace.bound_factors.push_back(options.bound_factor_hook(selectable));

    // --- select ---
    int i;
    switch (rule.kind) {
      case RuleKind::Cyclic:
        i = perm[perm_pos];
        perm_pos = (perm_pos + 1) % m;
        break;
      case RuleKind::RandomPermutation:
        if (perm_pos == m) {
          rng.shuffle(perm);
          perm_pos = 0;
        }
        i = perm[perm_pos++];
        break;
      case RuleKind::Uniform:
        i = static_cast<int>(rng.below(m));
        break;
      case RuleKind::NonUniform:
      case RuleKind::AdaptiveUniform:
      case RuleKind::AdaptiveNonUniform:
        i = static_cast<int>(tree->sample(rng.uniform01()));
        break;
      case RuleKind::MaxResidual:
        i = heap_r.top();
        break;
      case RuleKind::MaxDistance:
        i = heap_d.top();
        break;
      case RuleKind::Hybrid:
        i = (k % 2 == 0) ? heap_r.top() : heap_d.top();
        break;
      case RuleKind::ApproxMultiplicative:
      case RuleKind::ApproxAdditive: {
        std::vector<int> q = approx_qualifying_rows(sys, heap_r.residuals(),
                                                    rule.kind, rule.epsilon);
        i = q[static_cast<std::size_t>(rng.below(q.size()))];
        break;
      }
    }

    // --- project ---
    const double beta = sys.kinds()[i] == ConstraintKind::Equality
                            ? r[i]
                            : std::max(r[i], 0.0);
    const bool moved = beta != 0.0;
    if (moved) {
      const SparseMatrix& A = sys.matrix();
      const double scale = beta / sq_norm[i];
      if (use_graph_updates) {
        for (int t = 0; t < A.row_nnz(i); ++t)
          x[A.row_cols(i)[t]] -= scale * A.row_vals(i)[t];
        for (int nb : graph->neighbors(i)) {
          const double rn = A.row_dot(nb, x) - sys.rhs()[nb];
          r[nb] = rn;
          if (need_heap_r) heap_r.set_residual(nb, rn);
          if (need_heap_d) heap_d.set_residual(nb, rn);
        }
        r[i] = 0.0;  // projection lands on the hyperplane/boundary exactly
        if (need_heap_r) heap_r.set_residual(i, 0.0);
        if (need_heap_d) heap_d.set_residual(i, 0.0);
      } else {
        acc_rows.clear();
        for (int t = 0; t < A.row_nnz(i); ++t) {
          const int j = A.row_cols(i)[t];
          const double dx = -scale * A.row_vals(i)[t];
          x[j] += dx;
          for (int c = 0; c < A.col_nnz(j); ++c) {
            const int row = A.col_rows(j)[c];
            if (!in_acc[row]) {
              in_acc[row] = 1;
              acc[row] = 0.0;
              acc_rows.push_back(row);
            }
            acc[row] += A.col_vals(j)[c] * dx;
          }
        }
        for (int row : acc_rows) {
          in_acc[row] = 0;
          r[row] += acc[row];
          if (need_heap_r) heap_r.add_to_residual(row, acc[row]);
          if (need_heap_d) heap_d.add_to_residual(row, acc[row]);
        }
      }
    }

    // --- adaptive bookkeeping ---
    if (rule.adaptive()) {
      if (moved) {
        // Row i is now satisfied; its neighbors may have been disturbed.
        selectable.mark_selected(*graph, i);
        tree->set(i, 0.0);
        for (int nb : graph->neighbors(i))
          tree->set(nb, rule.kind == RuleKind::AdaptiveUniform ? 1.0
                                                               : sq_norm[nb]);
      } else {
        // Nothing moved, so no neighbor can have been disturbed.
        selectable.deselect(i);
        tree->set(i, 0.0);
      }
    }

    // --- periodic exact refresh ---
    if ((k + 1) % refresh == 0) {
      r = residual_vector(sys, x);
      if (need_heap_r) heap_r.refresh(r);
      if (need_heap_d) heap_d.refresh(r);
    }

    // --- trace ---
    if (k % options.wall_block == 0) sample_clock();
    trace.records.push_back({i, error_metric(), sq_dist(), last_wall});
  }
  res.iterations = k;
  sample_clock();
  return res;
}

}  // namespace kaczmarz
