#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kaczmarz/linear_system.hpp"
#include "kaczmarz/orthogonality.hpp"
#include "kaczmarz/selection.hpp"
#include "kaczmarz/solver.hpp"
#include "kaczmarz/spectral.hpp"

namespace kaczmarz {

// Positive diagonal spectrum; every rate constant has a closed form in the
// diagonal case, which doubles as the exact oracle for those formulas.
struct DiagonalSpectrum {
  std::vector<double> lambda;  // |diagonal|, all > 0

  explicit DiagonalSpectrum(std::vector<double> l) : lambda(std::move(l)) {
    if (lambda.empty()) throw std::invalid_argument("empty spectrum");
    for (double v : lambda)
      if (!(v > 0.0)) throw std::invalid_argument("diagonal must be nonzero");
  }

  int m() const { return static_cast<int>(lambda.size()); }
  double min() const { return *std::min_element(lambda.begin(), lambda.end()); }
  double max() const { return *std::max_element(lambda.begin(), lambda.end()); }
  double frobenius_sq() const {
    double s = 0.0;
    for (double v : lambda) s += v * v;
    return s;
  }
  // sigma(A, infinity)^2 = 1 / sum_i lambda_i^-2
  double sigma_inf_sq() const {
    double s = 0.0;
    for (double v : lambda) s += 1.0 / (v * v);
    return 1.0 / s;
  }
};

// Expected (random rules) or guaranteed (greedy rules) one-step contraction
// factors for the squared distance to the solution, together with the
// spectral quantities they are built from.  When the infinity-norm constants
// are not computable (row-space dimension > 3, non-diagonal), the provable
// lower bound sigma_two / sqrt(m) is substituted and flagged; factors built
// from a substituted constant are still valid upper bounds, only looser.
struct RateBound {
  int m = 0;
  int rank = 0;
  double sigma2 = 0.0;      // smallest nonzero singular value of A
  double sigma2_bar = 0.0;  // same for the row-normalized matrix
  double sigma_inf = 0.0;
  double sigma_inf_bar = 0.0;
  bool sigma_inf_substituted = false;      // sigma2/sqrt(m) used instead
  bool sigma_inf_bar_substituted = false;  // sigma2_bar/sqrt(m) used instead
  double frobenius_sq = 0.0;
  double max_sq_norm = 0.0;
  std::vector<double> sq_norms;

  double uniform_loose = 1.0;       // 1 - sigma2^2 / (m max_i ||a_i||^2)
  double uniform_tight = 1.0;       // 1 - sigma2_bar^2 / m
  double nonuniform = 1.0;          // 1 - sigma2^2 / ||A||_F^2
  double max_residual_loose = 1.0;  // 1 - sigma_inf^2 / max_i ||a_i||^2
  double max_distance = 1.0;        // 1 - sigma_inf_bar^2

  // Per-row tightening of the max-residual factor for the selected row.
  double max_residual_row_factor(int i) const {
    return 1.0 - sigma_inf * sigma_inf / sq_norms[i];
  }

  // Consistency of the factor family (partial-order and sandwich relations).
  // Relations involving a substituted constant that are no longer provable
  // are skipped.  Empty result means all applicable checks hold.
  std::vector<std::string> ordering_violations(double rel_tol = 1e-9) const {
    std::vector<std::string> out;
    auto expect_le = [&](double a, double b, const std::string& what) {
      if (a > b + rel_tol * (1.0 + std::abs(b))) out.push_back(what);
    };
    expect_le(uniform_tight, uniform_loose, "uniform_tight <= uniform_loose");
    expect_le(nonuniform, uniform_loose, "nonuniform <= uniform_loose");
    expect_le(max_residual_loose, uniform_loose,
              "max_residual_loose <= uniform_loose");
    expect_le(max_distance, uniform_tight, "max_distance <= uniform_tight");
    if (!sigma_inf_bar_substituted) {
      expect_le(max_distance, nonuniform, "max_distance <= nonuniform");
      if (!sigma_inf_substituted)
        expect_le(max_distance, max_residual_loose,
                  "max_distance <= max_residual_loose");
    }
    const double rm = std::sqrt(static_cast<double>(m));
    if (!sigma_inf_substituted) {
      expect_le(sigma2 / rm, sigma_inf, "sigma2/sqrt(m) <= sigma_inf");
      expect_le(sigma_inf, sigma2, "sigma_inf <= sigma2");
    }
    if (!sigma_inf_bar_substituted) {
      expect_le(sigma2_bar / rm, sigma_inf_bar,
                "sigma2_bar/sqrt(m) <= sigma_inf_bar");
      expect_le(sigma2 / std::sqrt(frobenius_sq), sigma_inf_bar,
                "sigma2/||A||_F <= sigma_inf_bar");
      if (!sigma_inf_substituted)
        expect_le(sigma_inf / std::sqrt(max_sq_norm), sigma_inf_bar,
                  "sigma_inf/max_norm <= sigma_inf_bar");
      expect_le(sigma_inf_bar, sigma2_bar, "sigma_inf_bar <= sigma2_bar");
    }
    return out;
  }
};

namespace detail {

inline void fill_factors(RateBound& rb) {
  rb.uniform_loose = 1.0 - rb.sigma2 * rb.sigma2 / (rb.m * rb.max_sq_norm);
  rb.uniform_tight = 1.0 - rb.sigma2_bar * rb.sigma2_bar / rb.m;
  rb.nonuniform = 1.0 - rb.sigma2 * rb.sigma2 / rb.frobenius_sq;
  rb.max_residual_loose = 1.0 - rb.sigma_inf * rb.sigma_inf / rb.max_sq_norm;
  rb.max_distance = 1.0 - rb.sigma_inf_bar * rb.sigma_inf_bar;
}

}  // namespace detail

inline RateBound bounds_diagonal(const DiagonalSpectrum& d) {
  RateBound rb;
  rb.m = d.m();
  rb.rank = d.m();
  rb.sigma2 = d.min();
  rb.sigma2_bar = 1.0;
  rb.sigma_inf = std::sqrt(d.sigma_inf_sq());
  rb.sigma_inf_bar = 1.0 / std::sqrt(static_cast<double>(d.m()));
  rb.frobenius_sq = d.frobenius_sq();
  rb.max_sq_norm = d.max() * d.max();
  rb.sq_norms.resize(d.m());
  for (int i = 0; i < d.m(); ++i) rb.sq_norms[i] = d.lambda[i] * d.lambda[i];
  detail::fill_factors(rb);
  return rb;
}

inline RateBound bounds_general(const LinearSystem& sys) {
  RateBound rb;
  rb.m = sys.rows();
  rb.sq_norms = sys.norms().sq_norm;
  rb.frobenius_sq = sys.norms().frobenius_sq;
  rb.max_sq_norm = sys.norms().max_sq_norm;

  Eigen::MatrixXd Ad = to_dense(sys.matrix());
  DenseSvd sa = dense_svd(Ad);
  rb.rank = sa.rank;
  rb.sigma2 = sa.sigma(sa.rank - 1);
  SparseMatrix Abar = normalized_matrix(sys);
  DenseSvd sb = dense_svd(to_dense(Abar));
  rb.sigma2_bar = sb.sigma(sb.rank - 1);

  const double rm = std::sqrt(static_cast<double>(rb.m));
  const bool diag = diagonal_entries(sys.matrix()).has_value();
  if (diag || rb.rank <= 3) {
    rb.sigma_inf = sigma_infinity(sys.matrix());
    rb.sigma_inf_bar = sigma_infinity(Abar);
  } else {
    rb.sigma_inf = rb.sigma2 / rm;
    rb.sigma_inf_substituted = true;
    rb.sigma_inf_bar = rb.sigma2_bar / rm;
    rb.sigma_inf_bar_substituted = true;
  }
  detail::fill_factors(rb);
  return rb;
}

// Per-step contraction factor for the adaptive rules, as a hook for
// solve().  With x* unique, the error delta = x - x* is orthogonal to every
// satisfied (unselectable) row, so the operative constant is the smallest
// singular value of A restricted to null(unselectable rows).  That restricted
// value is >= sigma_two(A), which makes the adaptive factor provably <= its
// non-adaptive counterpart as soon as any row is unselectable.
inline std::function<double(const SelectableSet&)> make_adaptive_factor_hook(
    const LinearSystem& sys, RuleKind kind) {
  if (kind != RuleKind::AdaptiveUniform && kind != RuleKind::AdaptiveNonUniform)
    throw std::invalid_argument("hook applies to adaptive rules");
  Eigen::MatrixXd A = to_dense(sys.matrix());
  DenseSvd sa = dense_svd(A);
  if (sa.rank < sys.cols())
    throw std::invalid_argument(
        "adaptive factors require full column rank (unique solution)");
  Eigen::MatrixXd Abar = A;
  for (int i = 0; i < A.rows(); ++i) Abar.row(i) /= sys.norms().norm[i];
  std::vector<double> sq_norm = sys.norms().sq_norm;
  const bool uniform = kind == RuleKind::AdaptiveUniform;

  return [A, Abar, sq_norm, uniform](const SelectableSet& sel) -> double {
    const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
    const int m_k = sel.count();
    if (m_k == 0) return 0.0;
    std::vector<int> unsel;
    for (int i = 0; i < m; ++i)
      if (!sel.selectable(i)) unsel.push_back(i);

    Eigen::MatrixXd B;  // orthonormal basis of null(unselectable rows)
    if (unsel.empty()) {
      B = Eigen::MatrixXd::Identity(n, n);
    } else {
      Eigen::MatrixXd U(unsel.size(), n);
      for (std::size_t t = 0; t < unsel.size(); ++t) U.row(t) = A.row(unsel[t]);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(U, Eigen::ComputeFullV);
      const double tol = std::max<int>(U.rows(), n) *
                         std::numeric_limits<double>::epsilon() *
                         (svd.singularValues().size() ? svd.singularValues()(0)
                                                      : 0.0);
      int r = 0;
      for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > tol) ++r;
      if (r == n) return 0.0;  // delta is pinned to 0: step is free
      B = svd.matrixV().rightCols(n - r);
    }
    const Eigen::MatrixXd M = (uniform ? Abar : A) * B;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (uniform) return 1.0 - smin * smin / m_k;
    double fk = 0.0;
    for (int i = 0; i < m; ++i)
      if (sel.selectable(i)) fk += sq_norm[i];
    return 1.0 - smin * smin / fk;
  };
}

// -------- trace validation --------

struct ValidationReport {
  std::string label;
  bool deterministic = true;
  double bound = std::numeric_limits<double>::quiet_NaN();  // constant case
  double worst_ratio = 0.0;
  double mean_ratio = 0.0;
  long long steps_checked = 0;
  long long violations = 0;
  // statistical mode
  long long runs = 0;
  double mean_excess = 0.0;
  double se = 0.0;
  bool passed = true;
};

namespace detail {

// Steps usable for ratio checks: stop once the squared distance hits the
// noise floor, where ratios are pure rounding.
inline double dist_floor(const ConvergenceTrace& t) {
  return std::max(1e-300, 1e-20 * t.initial_sq_dist);
}

}  // namespace detail

// Greedy rules: every per-step ratio d_k^2/d_{k-1}^2 must respect the bound.
// bound_at(k, row) supplies the per-step factor (constant for most rules,
// row-dependent for the tight max-residual form, state-dependent for
// adaptive validation runs).
inline ValidationReport validate_trace_deterministic(
    const ConvergenceTrace& trace,
    const std::function<double(std::size_t, int)>& bound_at,
    const std::string& label, double slack = 1e-9) {
  if (!trace.has_dist)
    throw std::invalid_argument("validation requires a distance trace");
  ValidationReport rep;
  rep.label = label;
  const double floor = detail::dist_floor(trace);
  double prev = trace.initial_sq_dist;
  double ratio_sum = 0.0;
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const double cur = trace.records[k].sq_dist;
    if (!(prev > floor)) break;
    const double ratio = cur / prev;
    const double b = bound_at(k, trace.records[k].row);
    ++rep.steps_checked;
    ratio_sum += ratio;
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    if (ratio > b + slack) ++rep.violations;
    prev = cur;
  }
  rep.mean_ratio = rep.steps_checked ? ratio_sum / rep.steps_checked : 0.0;
  rep.passed = rep.violations == 0;
  return rep;
}

// Randomized rules hold in conditional expectation, so single steps may
// exceed the factor; the test statistic is the per-run mean excess
// (ratio - bound), averaged over independent runs, compared against
// 3 standard errors.  Feed one trace per seed.
class StatisticalValidator {
 public:
  explicit StatisticalValidator(std::string label) : label_(std::move(label)) {}

  void add_run(const ConvergenceTrace& trace,
               const std::function<double(std::size_t, int)>& bound_at) {
    const double floor = detail::dist_floor(trace);
    double prev = trace.initial_sq_dist;
    double excess_sum = 0.0, ratio_sum = 0.0;
    long long steps = 0;
    for (std::size_t k = 0; k < trace.records.size(); ++k) {
      const double cur = trace.records[k].sq_dist;
      if (!(prev > floor)) break;
      const double ratio = cur / prev;
      excess_sum += ratio - bound_at(k, trace.records[k].row);
      ratio_sum += ratio;
      ++steps;
      prev = cur;
    }
    if (steps > 0) {
      run_means_.push_back(excess_sum / steps);
      ratio_means_.push_back(ratio_sum / steps);
    }
  }

  ValidationReport finalize(double sigmas = 3.0) const {
    ValidationReport rep;
    rep.label = label_;
    rep.deterministic = false;
    rep.runs = static_cast<long long>(run_means_.size());
    if (rep.runs == 0) {
      rep.passed = false;
      return rep;
    }
    double s = 0.0;
    for (double v : run_means_) s += v;
    rep.mean_excess = s / rep.runs;
    double var = 0.0;
    for (double v : run_means_) var += (v - rep.mean_excess) * (v - rep.mean_excess);
    var = rep.runs > 1 ? var / (rep.runs - 1) : 0.0;
    rep.se = std::sqrt(var / rep.runs);
    double rsum = 0.0;
    for (double v : ratio_means_) rsum += v;
    rep.mean_ratio = rsum / rep.runs;
    rep.passed = rep.mean_excess <= sigmas * rep.se + 1e-12;
    return rep;
  }

 private:
  std::string label_;
  std::vector<double> run_means_;
  std::vector<double> ratio_means_;
};

// -------- multi-step bound --------

struct MultiStepReport {
  double realized_geometric_mean = 0.0;  // over the rows the trace selected
  double star_geometric_mean = 0.0;      // best-star worst case
  long long steps = 0;
};

// Per-row factors w_i = 1 - sigma_inf^2 / ||a_i||^2 turn a greedy trace into
// a realized product; its per-step geometric mean is compared against the
// best star subgraph's, which bounds the worst case up to a transient.
// Pass the sigma_inf value to use (oracle value or provable lower bound).
inline MultiStepReport multi_step_bound_check(const LinearSystem& sys,
                                              const ConvergenceTrace& trace,
                                              const OrthogonalityGraph& graph,
                                              double sigma_inf_value) {
  const int m = sys.rows();
  std::vector<double> w(m);
  for (int i = 0; i < m; ++i) {
    w[i] = 1.0 - sigma_inf_value * sigma_inf_value / sys.norms().sq_norm[i];
    if (!(w[i] > 0.0))
      throw std::invalid_argument(
          "row factor vanishes; system admits finite termination");
  }
  MultiStepReport rep;
  rep.star_geometric_mean = star_bound(graph, w).geometric_mean;
  double log_sum = 0.0;
  for (const TraceRecord& t : trace.records) log_sum += std::log(w[t.row]);
  rep.steps = static_cast<long long>(trace.records.size());
  rep.realized_geometric_mean =
      rep.steps ? std::exp(log_sum / rep.steps) : 1.0;
  return rep;
}

}  // namespace kaczmarz
