#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <set>
#include <vector>

#include "kaczmarz/problems.hpp"

using namespace kaczmarz;

namespace {

std::vector<int> row_support(const SparseMatrix& A, int i) {
  std::vector<int> out(A.row_cols(i), A.row_cols(i) + A.row_nnz(i));
  return out;
}

bool identical_systems(const LinearSystem& a, const LinearSystem& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  const std::vector<Triplet> ta = a.matrix().to_triplets();
  const std::vector<Triplet> tb = b.matrix().to_triplets();
  if (ta.size() != tb.size()) return false;
  for (std::size_t k = 0; k < ta.size(); ++k)
    if (ta[k].row != tb[k].row || ta[k].col != tb[k].col ||
        ta[k].value != tb[k].value)
      return false;
  return a.rhs() == b.rhs() && a.reference() == b.reference();
}

}  // namespace

TEST_CASE("lattice stencil has the advertised support") {
  LinearSystem s2 = gen_lattice(2, 1);
  REQUIRE(s2.rows() == 4);
  REQUIRE(s2.cols() == 4);
  REQUIRE(row_support(s2.matrix(), 0) == std::vector<int>{0, 1, 2});
  REQUIRE(row_support(s2.matrix(), 1) == std::vector<int>{0, 1, 3});
  REQUIRE(row_support(s2.matrix(), 2) == std::vector<int>{0, 2, 3});
  REQUIRE(row_support(s2.matrix(), 3) == std::vector<int>{1, 2, 3});

  LinearSystem s3 = gen_lattice(3, 1);
  REQUIRE(s3.rows() == 9);
  // corner, edge-of-row (no wraparound), and interior points
  REQUIRE(row_support(s3.matrix(), 0) == std::vector<int>{0, 1, 3});
  REQUIRE(row_support(s3.matrix(), 2) == std::vector<int>{1, 2, 5});
  REQUIRE(row_support(s3.matrix(), 4) == std::vector<int>{1, 3, 4, 5, 7});
  for (int i = 0; i < 9; ++i) REQUIRE(s3.matrix().row_nnz(i) <= 5);
}

TEST_CASE("planted references solve their systems exactly") {
  for (const LinearSystem& sys :
       {gen_lattice(4, 9), gen_random_consistent(12, 5, 0.5, 3),
        gen_diagonal({1, 2, 0.5}, 11), gen_overdetermined(40, 10, 2)}) {
    REQUIRE(sys.has_reference());
    std::vector<double> r = residual_vector(sys, sys.reference());
    for (double v : r) REQUIRE(v == 0.0);  // rhs was built by the same dots
  }
}

TEST_CASE("generators are bitwise deterministic in the seed") {
  REQUIRE(identical_systems(gen_lattice(3, 7), gen_lattice(3, 7)));
  REQUIRE_FALSE(identical_systems(gen_lattice(3, 7), gen_lattice(3, 8)));
  REQUIRE(identical_systems(gen_overdetermined(50, 20, 5),
                            gen_overdetermined(50, 20, 5)));
  REQUIRE(identical_systems(
      gen_two_moons_label_prop(40, 6, 3, 0.05, 3),
      gen_two_moons_label_prop(40, 6, 3, 0.05, 3)));
}

TEST_CASE("overdetermined generator matches its sparsity model") {
  const int m = 200, n = 150;
  LinearSystem sys = gen_overdetermined(m, n, 5);
  long long nnz = 0;
  int scaled = 0;
  for (int i = 0; i < m; ++i) {
    REQUIRE(sys.matrix().row_nnz(i) >= 1);  // empty rows are redrawn
    nnz += sys.matrix().row_nnz(i);
    double mx = 0.0;
    for (int k = 0; k < sys.matrix().row_nnz(i); ++k)
      mx = std::max(mx, std::abs(sys.matrix().row_vals(i)[k]));
    if (mx > 10.0) ++scaled;  // unscaled values live in (0,1)
  }
  const double p = std::log(static_cast<double>(m)) / (2.0 * m);
  const double q = 1.0 - std::pow(1.0 - p, n);  // row nonempty probability
  const double expected_row_nnz = n * p / q;
  REQUIRE(static_cast<double>(nnz) / m ==
          Catch::Approx(expected_row_nnz).epsilon(0.25));
  // roughly one row in eleven is rescaled
  REQUIRE(scaled >= 2);
  REQUIRE(scaled <= 40);

  REQUIRE_THROWS_AS(gen_overdetermined(10, 10, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(gen_overdetermined(20, 10, 1, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(gen_overdetermined(20, 10, 1, 0.1, 0.0),
                    std::invalid_argument);
}

TEST_CASE("random consistent generator honors the density knob") {
  LinearSystem full = gen_random_consistent(6, 4, 1.0, 2);
  REQUIRE(full.matrix().nnz() == 24);
  LinearSystem sys = gen_random_consistent(100, 30, 0.3, 4);
  for (int i = 0; i < 100; ++i) REQUIRE(sys.matrix().row_nnz(i) >= 1);
  const double frac =
      static_cast<double>(sys.matrix().nnz()) / (100.0 * 30.0);
  REQUIRE(frac == Catch::Approx(0.3).margin(0.05));
  REQUIRE_THROWS_AS(gen_random_consistent(5, 5, 0.0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(gen_random_consistent(5, 5, 1.5, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(gen_random_consistent(0, 5, 0.5, 1), std::invalid_argument);
}

TEST_CASE("diagonal generator plants b = lambda * z") {
  LinearSystem sys = gen_diagonal({1, 2, 0.5}, 6);
  REQUIRE(sys.rows() == 3);
  const std::vector<double> lambda = {1, 2, 0.5};
  for (int i = 0; i < 3; ++i) {
    REQUIRE(sys.matrix().row_nnz(i) == 1);
    REQUIRE(sys.matrix().row_cols(i)[0] == i);
    REQUIRE(sys.matrix().row_vals(i)[0] == lambda[i]);
    REQUIRE(sys.rhs()[i] == lambda[i] * sys.reference()[i]);
  }
  REQUIRE_THROWS_AS(gen_diagonal({1, 0}, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(gen_diagonal({}, 1), std::invalid_argument);
}

TEST_CASE("label propagation worked example on a three-node path") {
  // path 0 - 1 - 2, node 2 labeled with value 1
  std::vector<std::vector<std::pair<int, double>>> adj = {
      {{1, 1.0}}, {{0, 1.0}, {2, 1.0}}, {{1, 1.0}}};
  LinearSystem sys = label_prop_system(adj, {0, 0, 1}, {0, 0, 1});
  REQUIRE(sys.rows() == 2);
  REQUIRE(row_support(sys.matrix(), 0) == std::vector<int>{0, 1});
  REQUIRE(sys.matrix().row_vals(0)[0] == 1.0);   // degree of node 0
  REQUIRE(sys.matrix().row_vals(0)[1] == -1.0);
  REQUIRE(sys.matrix().row_vals(1)[0] == -1.0);
  REQUIRE(sys.matrix().row_vals(1)[1] == 2.0);   // degree of node 1
  REQUIRE(sys.rhs() == std::vector<double>{0, 1});
  // harmonic solution: both unlabeled nodes settle at the anchor value
  REQUIRE(sys.reference()[0] == Catch::Approx(1.0).epsilon(1e-12));
  REQUIRE(sys.reference()[1] == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("label propagation rejects degenerate inputs") {
  std::vector<std::vector<std::pair<int, double>>> adj = {
      {{1, 1.0}}, {{0, 1.0}}, {}};
  // all labeled: nothing to solve
  REQUIRE_THROWS_AS(label_prop_system(adj, {1, 1, 1}, {1, 1, 1}),
                    std::invalid_argument);
  // node 2 is unlabeled and unreachable from any anchor
  REQUIRE_THROWS_AS(label_prop_system(adj, {1, 0, 0}, {1, 0, 0}),
                    std::invalid_argument);
  // size mismatch
  REQUIRE_THROWS_AS(label_prop_system(adj, {1, 0}, {1, 0, 0}),
                    std::invalid_argument);
}

TEST_CASE("two-moons instances are anchored, dominant, and solvable") {
  int regen = -1;
  LinearSystem sys = gen_two_moons_label_prop(40, 6, 3, 0.05, 3, &regen);
  REQUIRE(regen >= 0);
  REQUIRE(sys.rows() == 34);  // samples minus labeled
  REQUIRE(sys.cols() == 34);
  REQUIRE(sys.all_equality());
  REQUIRE(sys.has_reference());
  // each diagonal equals the node degree, so it covers the off-diagonal mass
  for (int i = 0; i < sys.rows(); ++i) {
    double diag = 0.0, off = 0.0;
    for (int k = 0; k < sys.matrix().row_nnz(i); ++k) {
      const double v = sys.matrix().row_vals(i)[k];
      if (sys.matrix().row_cols(i)[k] == i)
        diag = v;
      else
        off += std::abs(v);
    }
    REQUIRE(diag >= off);
  }
  double bmax = 0.0;
  for (double v : sys.rhs()) bmax = std::max(bmax, std::abs(v));
  std::vector<double> r = residual_vector(sys, sys.reference());
  for (double v : r) REQUIRE(std::abs(v) <= 1e-9 * (1.0 + bmax));

  REQUIRE_THROWS_AS(gen_two_moons_label_prop(3, 2, 2, 0.1, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(gen_two_moons_label_prop(40, 1, 2, 0.1, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(gen_two_moons_label_prop(40, 40, 2, 0.1, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(gen_two_moons_label_prop(40, 6, 0, 0.1, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(gen_two_moons_label_prop(40, 6, 3, -0.1, 1),
                    std::invalid_argument);
}

TEST_CASE("problem specs parse, print, and dispatch") {
  GeneratorSpec lat = GeneratorSpec::parse("lattice:side=7,seed=3");
  REQUIRE(lat.kind == GeneratorSpec::Kind::Lattice);
  REQUIRE(lat.side == 7);
  REQUIRE(lat.seed == 3);
  REQUIRE(lat.to_string() == "lattice:side=7,seed=3");

  GeneratorSpec diag = GeneratorSpec::parse("diag:lambda=1+2+0.5,seed=9");
  REQUIRE(diag.lambda == std::vector<double>{1, 2, 0.5});
  GeneratorSpec diag2 = GeneratorSpec::parse(diag.to_string());
  REQUIRE(diag2.lambda == diag.lambda);
  REQUIRE(diag2.seed == 9);
  LinearSystem built = diag.generate();
  REQUIRE(built.rows() == 3);
  REQUIRE(built.matrix().row_vals(2)[0] == 0.5);

  GeneratorSpec od =
      GeneratorSpec::parse("overdet:m=60,n=20,scale_prob=0.2,seed=4");
  REQUIRE(od.m == 60);
  REQUIRE(od.n == 20);
  REQUIRE(od.scale_prob == 0.2);
  REQUIRE(GeneratorSpec::parse(od.to_string()).scale_prob == 0.2);

  GeneratorSpec moons =
      GeneratorSpec::parse("moons:samples=40,labeled=6,k=3,noise=0.05");
  REQUIRE(moons.samples == 40);
  REQUIRE(moons.noise == 0.05);
  REQUIRE(moons.seed == 1);  // default

  GeneratorSpec rnd = GeneratorSpec::parse("random:m=10,n=4,density=0.5");
  REQUIRE(rnd.generate().rows() == 10);

  // bare kind keeps defaults
  REQUIRE(GeneratorSpec::parse("lattice").side == 50);

  REQUIRE_THROWS_AS(GeneratorSpec::parse("mystery:side=2"),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(GeneratorSpec::parse("lattice:girth=2"),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(GeneratorSpec::parse("lattice:side"),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(GeneratorSpec::parse("diag:lambda="),
                    std::invalid_argument);
}
