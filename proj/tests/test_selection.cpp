#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "kaczmarz/coordinate_descent.hpp"
#include "kaczmarz/residual_heap.hpp"
#include "kaczmarz/rng.hpp"
#include "kaczmarz/selection.hpp"
#include "kaczmarz/sum_tree.hpp"

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

}  // namespace

TEST_CASE("heap peeks the max score in both modes") {
  LinearSystem id2(from_rows({{1, 0}, {0, 1}}), {1, 2});
  ResidualHeap h(id2, {-1, -2}, ResidualHeap::Score::Residual);
  REQUIRE(h.top() == 1);
  REQUIRE(h.top_score() == 2.0);

  LinearSystem scaled(from_rows({{1, 0}, {0, 2}}), {0, 0});
  ResidualHeap d(scaled, {2, 2}, ResidualHeap::Score::Distance);
  REQUIRE(d.top() == 0);  // 2/1 beats 2/2

  ResidualHeap z(id2, {0, 0}, ResidualHeap::Score::Residual);
  REQUIRE(z.top_score() == 0.0);
}

TEST_CASE("heap ties break to the lowest row index") {
  LinearSystem sys(from_rows({{1, 0}, {0, 1}, {1, 1}}), {0, 0, 0});
  ResidualHeap h(sys, {3, 3, 1}, ResidualHeap::Score::Residual);
  REQUIRE(h.top() == 0);
  h.set_residual(0, -3.0);  // same magnitude, still a tie
  REQUIRE(h.top() == 0);
  h.set_residual(0, 0.5);
  REQUIRE(h.top() == 1);
}

TEST_CASE("heap updates match a full scan under random operations") {
  Rng rng(44);
  const int m = 40;
  std::vector<std::vector<double>> rows(m, std::vector<double>(m, 0.0));
  for (int i = 0; i < m; ++i) rows[i][i] = 1.0 + rng.uniform01();
  LinearSystem sys(from_rows(rows), std::vector<double>(m, 0.0));
  std::vector<double> r(m);
  for (double& v : r) v = rng.normal();
  ResidualHeap hr(sys, r, ResidualHeap::Score::Residual);
  ResidualHeap hd(sys, r, ResidualHeap::Score::Distance);
  for (int step = 0; step < 3000; ++step) {
    const int i = static_cast<int>(rng.below(m));
    if (rng.uniform01() < 0.5) {
      const double v = rng.normal();
      r[i] = v;
      hr.set_residual(i, v);
      hd.set_residual(i, v);
    } else {
      const double dv = rng.normal();
      r[i] += dv;
      hr.add_to_residual(i, dv);
      hd.add_to_residual(i, dv);
    }
    REQUIRE(hr.top() == max_residual_select(sys, r));
    REQUIRE(hd.top() == max_distance_select(sys, r));
    REQUIRE(hr.residual(i) == r[i]);
  }
  // refresh restores exactly the supplied residuals
  hr.refresh(r);
  REQUIRE(hr.top() == max_residual_select(sys, r));
}

TEST_CASE("sum tree worked examples") {
  SumTree t = SumTree::from_weights({1, 3});
  REQUIRE(t.total() == 4.0);
  REQUIRE(t.sample(0.2) == 0);  // target 0.8 in [0,1)
  REQUIRE(t.sample(0.5) == 1);  // target 2.0 in [1,4)
  SumTree z = SumTree::from_weights({0, 5});
  REQUIRE(z.sample(0.0) == 1);
  REQUIRE(z.sample(0.999) == 1);
}

TEST_CASE("sum tree interval boundaries are exact for integer weights") {
  std::vector<double> w = {2, 0, 5, 1, 0, 8};
  SumTree t = SumTree::from_weights(w);
  const double total = 16.0;
  REQUIRE(t.total() == total);
  // the preimage of each row under u*total is exactly its cumulative slot
  std::vector<double> cum(w.size() + 1, 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) cum[i + 1] = cum[i] + w[i];
  for (int target = 0; target < 16; ++target) {
    const double u = target / total;
    const std::size_t got = t.sample(u);
    std::size_t want = 0;
    while (!(target < cum[want + 1])) ++want;
    REQUIRE(got == want);
    REQUIRE(w[got] > 0.0);
  }
}

TEST_CASE("sum tree updates reproduce a fresh build") {
  Rng rng(9);
  std::vector<double> w(37, 0.0);
  SumTree inc(37);
  for (int round = 0; round < 200; ++round) {
    const std::size_t i = rng.below(37);
    const double v = std::floor(10.0 * rng.uniform01());
    w[i] = v;
    inc.set(i, v);
  }
  SumTree fresh = SumTree::from_weights(w);
  REQUIRE(inc.total() == fresh.total());
  for (std::size_t i = 0; i < w.size(); ++i) REQUIRE(inc.get(i) == w[i]);
  if (inc.total() > 0.0)
    for (double u : {0.0, 0.123, 0.5, 0.77, 0.999})
      REQUIRE(inc.sample(u) == fresh.sample(u));
}

TEST_CASE("sum tree never returns a zero-weight row") {
  Rng rng(31);
  std::vector<double> w(16);
  for (double& v : w) v = rng.uniform01() < 0.4 ? 0.0 : rng.uniform01();
  if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; }))
    w[3] = 0.5;
  SumTree t = SumTree::from_weights(w);
  for (int s = 0; s < 5000; ++s) REQUIRE(w[t.sample(rng.uniform01())] > 0.0);
}

TEST_CASE("sum tree rejects bad inputs") {
  SumTree t = SumTree::from_weights({1, 1});
  REQUIRE_THROWS_AS(t.sample(1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(t.sample(-0.1), std::invalid_argument);
  REQUIRE_THROWS_AS(SumTree::from_weights({1, -1}), std::invalid_argument);
  SumTree zero = SumTree::from_weights({0, 0});
  REQUIRE_THROWS_AS(zero.sample(0.5), std::invalid_argument);
}

TEST_CASE("rule parsing round-trips and validates") {
  for (const std::string& name :
       {"cyclic", "rp", "uniform", "nonuniform", "adaptive-uniform",
        "adaptive-nonuniform", "mr", "md", "hybrid"}) {
    RuleConfig c = parse_rule(name);
    REQUIRE(to_string(c.kind) == name);
  }
  REQUIRE(parse_rule("u").kind == RuleKind::Uniform);
  REQUIRE(parse_rule("nu").kind == RuleKind::NonUniform);
  REQUIRE(parse_rule("au").kind == RuleKind::AdaptiveUniform);
  REQUIRE(parse_rule("anu").kind == RuleKind::AdaptiveNonUniform);
  RuleConfig am = parse_rule("approx-mult:0.4");
  REQUIRE(am.kind == RuleKind::ApproxMultiplicative);
  REQUIRE(am.epsilon == 0.4);
  RuleConfig aa = parse_rule("approx-add:2.5");
  REQUIRE(aa.kind == RuleKind::ApproxAdditive);
  REQUIRE(aa.epsilon == 2.5);
  REQUIRE_THROWS_AS(parse_rule("nope"), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_rule("approx-mult:1.5"), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_rule("approx-add:-1"), std::invalid_argument);
}

TEST_CASE("reference selectors and tie-breaks") {
  LinearSystem sys(from_rows({{1, 0}, {0, 2}, {1, 1}}), {0, 0, 0});
  REQUIRE(max_residual_select(sys, {0.5, -2, 1}) == 1);
  LinearSystem two(from_rows({{1, 0}, {0, 2}}), {0, 0});
  REQUIRE(max_residual_select(two, {2, 2}) == 0);
  REQUIRE(max_distance_select(two, {2, 2}) == 0);
}

TEST_CASE("approximate rules qualify exactly the advertised rows") {
  LinearSystem sys(from_rows({{1, 0}, {0, 1}, {1, 1}}), {0, 0, 0});
  std::vector<int> q = approx_qualifying_rows(
      sys, {1, 2, 3}, RuleKind::ApproxMultiplicative, 0.4);
  REQUIRE(q == std::vector<int>{1, 2});  // |r| >= 0.6 * 3 = 1.8
  std::vector<int> qa = approx_qualifying_rows(
      sys, {1, 2, 3}, RuleKind::ApproxAdditive, 6.0);
  REQUIRE(qa == std::vector<int>{1, 2});  // r^2 >= 9 - 6 = 3
  std::vector<int> all = approx_qualifying_rows(
      sys, {1, 2, 3}, RuleKind::ApproxAdditive, 100.0);
  REQUIRE(all == std::vector<int>{0, 1, 2});
  // epsilon 0 reduces both forms to the exact argmax set
  std::vector<int> exact = approx_qualifying_rows(
      sys, {1, 2, 3}, RuleKind::ApproxMultiplicative, 0.0);
  REQUIRE(exact == std::vector<int>{2});
}

TEST_CASE("coordinate descent worked examples") {
  LinearSystem id2(from_rows({{1, 0}, {0, 1}}), {1, 2});
  std::vector<double> x = {0, 0};
  int j = cd_select_and_step(id2, x, CdRule::GaussSouthwell);
  REQUIRE(j == 1);
  REQUIRE(x == std::vector<double>{0, 2});
  // gradient of the chosen coordinate is now exactly zero
  std::vector<double> r = residual_vector(id2, x);
  REQUIRE(r[1] == 0.0);

  // equal column norms: GSL coincides with GS
  LinearSystem sys(from_rows({{1, 0}, {0, 1}, {1, -1}}), {3, 1, 0});
  std::vector<double> a = {0, 0}, b = {0, 0};
  REQUIRE(cd_select_and_step(sys, a, CdRule::GaussSouthwell) ==
          cd_select_and_step(sys, b, CdRule::GaussSouthwellLipschitz));
  REQUIRE(a == b);
}

TEST_CASE("coordinate descent rule parsing and guards") {
  REQUIRE(parse_cd_rule("gs") == CdRule::GaussSouthwell);
  REQUIRE(parse_cd_rule("gsl") == CdRule::GaussSouthwellLipschitz);
  REQUIRE_THROWS_AS(parse_cd_rule("x"), std::invalid_argument);
  LinearSystem le(from_rows({{1, 0}}), {1}, {ConstraintKind::LessEqual});
  std::vector<double> x = {0, 0};
  REQUIRE_THROWS_AS(cd_select_and_step(le, x, CdRule::GaussSouthwell),
                    std::invalid_argument);
}
