#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "kaczmarz/orthogonality.hpp"
#include "kaczmarz/rates.hpp"
#include "kaczmarz/rng.hpp"
#include "kaczmarz/solver.hpp"

using namespace kaczmarz;

namespace {

SparseMatrix from_rows(const std::vector<std::vector<double>>& rows) {
  std::vector<Triplet> t;
  for (int i = 0; i < static_cast<int>(rows.size()); ++i)
    for (int j = 0; j < static_cast<int>(rows[i].size()); ++j)
      if (rows[i][j] != 0.0) t.push_back({i, j, rows[i][j]});
  return SparseMatrix(static_cast<int>(rows.size()),
                      static_cast<int>(rows[0].size()), std::move(t));
}

LinearSystem diagonal_system(const std::vector<double>& lambda) {
  const int m = static_cast<int>(lambda.size());
  std::vector<Triplet> t;
  for (int i = 0; i < m; ++i) t.push_back({i, i, lambda[i]});
  std::vector<double> z(m), b(m);
  Rng rng(77);
  for (double& v : z) v = rng.normal();
  for (int i = 0; i < m; ++i) b[i] = lambda[i] * z[i];
  LinearSystem sys(SparseMatrix(m, m, std::move(t)), b);
  sys.attach_reference(z);
  return sys;
}

LinearSystem random_full_rank(int m, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Triplet> t;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) t.push_back({i, j, rng.normal()});
  SparseMatrix A(m, n, std::move(t));
  std::vector<double> z(n), b(m);
  for (double& v : z) v = rng.normal();
  for (int i = 0; i < m; ++i) b[i] = A.row_dot(i, z);
  LinearSystem sys(std::move(A), b);
  sys.attach_reference(z);
  return sys;
}

}  // namespace

TEST_CASE("contraction factors on small diagonal spectra") {
  RateBound id = bounds_diagonal(DiagonalSpectrum({1, 1, 1, 1}));
  REQUIRE(id.uniform_tight == Catch::Approx(0.75).epsilon(1e-12));
  REQUIRE(id.max_distance == Catch::Approx(0.75).epsilon(1e-12));
  REQUIRE(id.uniform_loose == Catch::Approx(0.75).epsilon(1e-12));
  REQUIRE(id.nonuniform == Catch::Approx(0.75).epsilon(1e-12));
  REQUIRE(id.max_residual_loose == Catch::Approx(0.75).epsilon(1e-12));

  RateBound d12 = bounds_diagonal(DiagonalSpectrum({1, 2}));
  REQUIRE(d12.uniform_loose == Catch::Approx(0.875).epsilon(1e-12));
  REQUIRE(d12.uniform_tight == Catch::Approx(0.5).epsilon(1e-12));
  REQUIRE(d12.nonuniform == Catch::Approx(0.8).epsilon(1e-12));
  REQUIRE(d12.max_residual_loose == Catch::Approx(0.8).epsilon(1e-12));
  REQUIRE(d12.max_distance == Catch::Approx(0.5).epsilon(1e-12));
  REQUIRE(d12.max_residual_row_factor(0) == Catch::Approx(0.2).epsilon(1e-12));
  REQUIRE(d12.max_residual_row_factor(1) == Catch::Approx(0.8).epsilon(1e-12));
  REQUIRE(d12.ordering_violations().empty());
}

TEST_CASE("one small singular value separates greedy from uniform") {
  RateBound rb = bounds_diagonal(DiagonalSpectrum({1, 1, 1, 1, 0.1}));
  REQUIRE(rb.uniform_loose == Catch::Approx(1.0 - 0.01 / 5).epsilon(1e-12));
  REQUIRE(rb.uniform_tight == Catch::Approx(0.8).epsilon(1e-12));
  REQUIRE(rb.nonuniform == Catch::Approx(1.0 - 0.01 / 4.01).epsilon(1e-12));
  REQUIRE(rb.max_residual_loose ==
          Catch::Approx(1.0 - 1.0 / 104.0).epsilon(1e-12));
  REQUIRE(rb.max_distance == Catch::Approx(0.8).epsilon(1e-12));
  // greedy distance beats every uniform-style guarantee here
  REQUIRE(rb.max_distance < rb.nonuniform);
  REQUIRE(rb.max_distance < rb.uniform_loose);
  REQUIRE(rb.ordering_violations().empty());
}

TEST_CASE("diagonal closed forms agree with the general path") {
  const std::vector<double> lambda = {0.3, 1.0, 2.5, 7.0};
  RateBound a = bounds_diagonal(DiagonalSpectrum(lambda));
  RateBound b = bounds_general(diagonal_system(lambda));
  REQUIRE(b.sigma2 == Catch::Approx(a.sigma2).epsilon(1e-10));
  REQUIRE(b.sigma2_bar == Catch::Approx(a.sigma2_bar).epsilon(1e-10));
  REQUIRE(b.sigma_inf == Catch::Approx(a.sigma_inf).epsilon(1e-10));
  REQUIRE(b.sigma_inf_bar == Catch::Approx(a.sigma_inf_bar).epsilon(1e-10));
  REQUIRE(b.uniform_loose == Catch::Approx(a.uniform_loose).epsilon(1e-10));
  REQUIRE(b.uniform_tight == Catch::Approx(a.uniform_tight).epsilon(1e-10));
  REQUIRE(b.nonuniform == Catch::Approx(a.nonuniform).epsilon(1e-10));
  REQUIRE(b.max_residual_loose ==
          Catch::Approx(a.max_residual_loose).epsilon(1e-10));
  REQUIRE(b.max_distance == Catch::Approx(a.max_distance).epsilon(1e-10));
  REQUIRE_FALSE(b.sigma_inf_substituted);
}

TEST_CASE("spectrum constructor rejects bad input") {
  REQUIRE_THROWS_AS(DiagonalSpectrum({}), std::invalid_argument);
  REQUIRE_THROWS_AS(DiagonalSpectrum({1, 0}), std::invalid_argument);
  REQUIRE_THROWS_AS(DiagonalSpectrum({1, -2}), std::invalid_argument);
}

TEST_CASE("norm sandwiches hold on exactly solvable instances") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const int n = 2 + static_cast<int>(seed % 2);  // rank <= 3: exact oracle
    RateBound rb = bounds_general(random_full_rank(8, n, 1000 + seed));
    REQUIRE_FALSE(rb.sigma_inf_substituted);
    REQUIRE_FALSE(rb.sigma_inf_bar_substituted);
    const double rm = std::sqrt(static_cast<double>(rb.m));
    REQUIRE(rb.sigma2 / rm <= rb.sigma_inf + 1e-9);
    REQUIRE(rb.sigma_inf <= rb.sigma2 + 1e-9);
    REQUIRE(rb.sigma_inf_bar <= rb.sigma2_bar + 1e-9);
    REQUIRE(rb.sigma2_bar / rm <= rb.sigma_inf_bar + 1e-9);
    REQUIRE(rb.sigma2 / std::sqrt(rb.frobenius_sq) <= rb.sigma_inf_bar + 1e-9);
    REQUIRE(rb.sigma_inf / std::sqrt(rb.max_sq_norm) <=
            rb.sigma_inf_bar + 1e-9);
    REQUIRE(rb.ordering_violations().empty());
  }
}

TEST_CASE("wide systems fall back to the provable substitute") {
  RateBound rb = bounds_general(random_full_rank(30, 8, 4));
  REQUIRE(rb.rank == 8);
  REQUIRE(rb.sigma_inf_substituted);
  REQUIRE(rb.sigma_inf_bar_substituted);
  REQUIRE(rb.sigma_inf ==
          Catch::Approx(rb.sigma2 / std::sqrt(30.0)).epsilon(1e-12));
  REQUIRE(rb.ordering_violations().empty());
  for (double f : {rb.uniform_loose, rb.uniform_tight, rb.nonuniform,
                   rb.max_residual_loose, rb.max_distance}) {
    REQUIRE(f > 0.0);
    REQUIRE(f < 1.0);
  }
}

TEST_CASE("greedy distance traces satisfy their per-step guarantee") {
  for (auto& sys : {diagonal_system({1, 2, 5}), random_full_rank(20, 3, 11)}) {
    RateBound rb = bounds_general(sys);
    StoppingCriteria stop;
    stop.max_iterations = 300;
    SolveResult res = solve(sys, parse_rule("md"), {}, stop);
    ValidationReport rep = validate_trace_deterministic(
        res.trace, [&](std::size_t, int) { return rb.max_distance; }, "md");
    REQUIRE(rep.passed);
    REQUIRE(rep.violations == 0);
    REQUIRE(rep.worst_ratio <= rb.max_distance + 1e-9);
    REQUIRE(rep.steps_checked > 0);

    // per-row residual guarantee for the max-residual rule
    SolveResult mr = solve(sys, parse_rule("mr"), {}, stop);
    ValidationReport rep2 = validate_trace_deterministic(
        mr.trace,
        [&](std::size_t, int row) { return rb.max_residual_row_factor(row); },
        "mr");
    REQUIRE(rep2.passed);
    REQUIRE(rep2.violations == 0);
  }
}

TEST_CASE("a corrupted trace is flagged") {
  LinearSystem sys = diagonal_system({1, 2, 5});
  RateBound rb = bounds_general(sys);
  StoppingCriteria stop;
  stop.max_iterations = 50;
  SolveResult res = solve(sys, parse_rule("md"), {}, stop);
  ConvergenceTrace bad = res.trace;
  // push one step's squared distance above what the guarantee allows
  // (early in the trace: a diagonal system hits the distance floor fast)
  const double prev = bad.records[0].sq_dist;
  bad.records[1].sq_dist = prev * std::min(0.999, rb.max_distance + 0.1);
  ValidationReport rep = validate_trace_deterministic(
      bad, [&](std::size_t, int) { return rb.max_distance; }, "md");
  REQUIRE_FALSE(rep.passed);
  REQUIRE(rep.violations >= 1);
  REQUIRE(rep.worst_ratio > rb.max_distance);
}

TEST_CASE("adaptive restricted factors dominate the fixed constant") {
  LinearSystem sys = random_full_rank(8, 4, 21);
  RateBound rb = bounds_general(sys);
  const OrthogonalityGraph g = build_exact_graph(sys);
  SolveOptions opt;
  opt.bound_factor_hook = make_adaptive_factor_hook(sys, RuleKind::AdaptiveUniform);
  RuleConfig rule = parse_rule("adaptive-uniform");
  StoppingCriteria stop;
  stop.max_iterations = 120;

  StatisticalValidator restricted("adaptive-uniform:restricted");
  StatisticalValidator fixed("adaptive-uniform:non-adaptive");
  bool any_strict = false;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    rule.seed = seed;
    SolveResult res = solve(sys, rule, {}, stop, &g, opt);
    REQUIRE(res.trace.bound_factors.size() == res.trace.records.size());
    for (double f : res.trace.bound_factors) {
      REQUIRE(f <= rb.uniform_tight + 1e-9);
      any_strict |= f < rb.uniform_tight - 1e-9;
    }
    const std::vector<double> factors = res.trace.bound_factors;
    restricted.add_run(res.trace, [factors](std::size_t k, int) {
      return factors[k];
    });
    fixed.add_run(res.trace,
                  [&](std::size_t, int) { return rb.uniform_tight; });
  }
  REQUIRE(any_strict);  // certified rows really sharpen the constant
  REQUIRE(restricted.finalize().passed);
  REQUIRE(fixed.finalize().passed);
}

TEST_CASE("adaptive factor hook guards") {
  LinearSystem sys = random_full_rank(6, 3, 5);
  REQUIRE_THROWS_AS(make_adaptive_factor_hook(sys, RuleKind::Uniform),
                    std::invalid_argument);
  // rank-deficient columns: the restricted constant needs a unique solution
  LinearSystem thin(from_rows({{1, 2}, {2, 4}, {3, 6}}), {0, 0, 0});
  REQUIRE_THROWS_AS(
      make_adaptive_factor_hook(thin, RuleKind::AdaptiveUniform),
      std::invalid_argument);
}

TEST_CASE("statistical validation accepts true bounds and rejects false ones") {
  LinearSystem sys = diagonal_system({1, 2});
  RateBound rb = bounds_general(sys);
  StoppingCriteria stop;
  stop.max_iterations = 200;
  StatisticalValidator good("uniform:loose");
  StatisticalValidator wrong("uniform:too-strong");
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    RuleConfig rule = parse_rule("uniform");
    rule.seed = seed;
    SolveResult res = solve(sys, rule, {}, stop);
    good.add_run(res.trace,
                 [&](std::size_t, int) { return rb.uniform_loose; });
    // traces on a 2x2 system are short, so the run means scatter widely;
    // the false bound has to sit well below the true mean ratio
    wrong.add_run(res.trace, [](std::size_t, int) { return 0.05; });
  }
  ValidationReport ok = good.finalize();
  REQUIRE(ok.passed);
  REQUIRE(ok.runs == 40);
  REQUIRE(ok.mean_ratio <= rb.uniform_loose);
  ValidationReport bad = wrong.finalize();
  REQUIRE_FALSE(bad.passed);
  REQUIRE(bad.mean_excess > 0.0);
}

TEST_CASE("multi-step factors on an equal-norm cycle") {
  // three overlapping rows with equal norms: every star has the same mean
  LinearSystem sys(from_rows({{1, 1, 0}, {0, 1, 1}, {1, 0, 1}}), {2, 2, 2});
  std::vector<double> ref = {1, 1, 1};
  sys.attach_reference(ref);
  const OrthogonalityGraph g = build_exact_graph(sys);
  RateBound rb = bounds_general(sys);
  const double w = 1.0 - rb.sigma_inf * rb.sigma_inf / 2.0;
  StoppingCriteria stop;
  stop.max_iterations = 50;
  SolveResult res = solve(sys, parse_rule("mr"), {}, stop);
  MultiStepReport rep = multi_step_bound_check(sys, res.trace, g, rb.sigma_inf);
  REQUIRE(rep.steps == 50);
  REQUIRE(rep.realized_geometric_mean == Catch::Approx(w).epsilon(1e-12));
  REQUIRE(rep.star_geometric_mean == Catch::Approx(w).epsilon(1e-12));
  REQUIRE(rep.realized_geometric_mean >= rep.star_geometric_mean - 1e-9);

  // a sigma value at or above a row norm would force finite termination
  REQUIRE_THROWS_AS(multi_step_bound_check(sys, res.trace, g, 1.5),
                    std::invalid_argument);
}
