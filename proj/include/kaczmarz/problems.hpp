#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kaczmarz/linear_system.hpp"
#include "kaczmarz/rng.hpp"
#include "kaczmarz/sparse_matrix.hpp"

namespace kaczmarz {

// Seeded problem generators.  Determinism contract: the consumption order of
// the random stream is part of the definition — matrix entries in row-major
// scan order first, then the planted solution z — so a (kind, parameters,
// seed) triple yields a bitwise-identical system everywhere.

namespace detail {

// b = A z evaluated with the same row-major dot as residuals use, so the
// planted reference has residual exactly 0.0, not merely small.
inline LinearSystem planted_system(SparseMatrix A, std::vector<double> z) {
  const int m = A.rows();
  std::vector<double> b(m);
  for (int i = 0; i < m; ++i) b[i] = A.row_dot(i, z);
  LinearSystem sys(std::move(A), std::move(b));
  sys.attach_reference(std::move(z));
  return sys;
}

inline std::vector<double> standard_normal(Rng& rng, int n) {
  std::vector<double> z(n);
  for (double& v : z) v = rng.normal();
  return z;
}

}  // namespace detail

// Square side^2 x side^2 system on a 2-D grid: each point couples to itself,
// its left/right neighbours within the same grid row, and the points one grid
// row above/below.  Values i.i.d. standard normal, pattern symmetric in
// support.  Horizontal links are skipped across the grid-row boundary.
inline LinearSystem gen_lattice(int side, std::uint64_t seed) {
  if (side < 2) throw std::invalid_argument("lattice side must be >= 2");
  const int n = side * side;
  Rng rng(seed);
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(n) * 5);
  for (int p = 0; p < n; ++p) {
    // ascending-column scan; each present entry draws its own value
    if (p - side >= 0) t.push_back({p, p - side, rng.normal()});
    if (p % side != 0) t.push_back({p, p - 1, rng.normal()});
    t.push_back({p, p, rng.normal()});
    if ((p + 1) % side != 0) t.push_back({p, p + 1, rng.normal()});
    if (p + side < n) t.push_back({p, p + side, rng.normal()});
  }
  return detail::planted_system(SparseMatrix(n, n, std::move(t)),
                                detail::standard_normal(rng, n));
}

// Overdetermined sparse system: every entry present independently with
// probability log(m)/(2m) and Uniform(0,1) value; empty rows are redrawn.
// Each row is scaled by `scale_factor` with probability `scale_prob`, which
// spreads the row norms over four orders of magnitude.
inline LinearSystem gen_overdetermined(int m, int n, std::uint64_t seed,
                                       double scale_prob = 1.0 / 11.0,
                                       double scale_factor = 1e4) {
  if (m <= n) throw std::invalid_argument("overdetermined requires m > n");
  if (!(scale_prob >= 0.0 && scale_prob < 1.0) || !(scale_factor > 0.0))
    throw std::invalid_argument("bad scaling parameters");
  const double p_entry = std::log(static_cast<double>(m)) / (2.0 * m);
  Rng rng(seed);
  std::vector<Triplet> t;
  std::vector<Triplet> row;
  for (int i = 0; i < m; ++i) {
    do {
      row.clear();
      for (int j = 0; j < n; ++j)
        if (rng.uniform01() < p_entry) row.push_back({i, j, rng.uniform01()});
    } while (row.empty());
    if (rng.uniform01() < scale_prob)
      for (Triplet& e : row) e.value *= scale_factor;
    t.insert(t.end(), row.begin(), row.end());
  }
  return detail::planted_system(SparseMatrix(m, n, std::move(t)),
                                detail::standard_normal(rng, n));
}

// Dense-ish consistent system with Gaussian values: entry present with
// probability `density`, empty rows redrawn.
inline LinearSystem gen_random_consistent(int m, int n, double density,
                                          std::uint64_t seed) {
  if (m < 1 || n < 1) throw std::invalid_argument("bad dimensions");
  if (!(density > 0.0 && density <= 1.0))
    throw std::invalid_argument("density must lie in (0,1]");
  Rng rng(seed);
  std::vector<Triplet> t;
  std::vector<Triplet> row;
  for (int i = 0; i < m; ++i) {
    do {
      row.clear();
      for (int j = 0; j < n; ++j)
        if (rng.uniform01() < density) row.push_back({i, j, rng.normal()});
    } while (row.empty());
    t.insert(t.end(), row.begin(), row.end());
  }
  return detail::planted_system(SparseMatrix(m, n, std::move(t)),
                                detail::standard_normal(rng, n));
}

// diag(lambda) with a standard-normal planted solution.
inline LinearSystem gen_diagonal(const std::vector<double>& lambda,
                                 std::uint64_t seed) {
  if (lambda.empty()) throw std::invalid_argument("empty diagonal");
  const int n = static_cast<int>(lambda.size());
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) {
    if (!(lambda[i] > 0.0))
      throw std::invalid_argument("diagonal entries must be positive");
    t.push_back({i, i, lambda[i]});
  }
  Rng rng(seed);
  return detail::planted_system(SparseMatrix(n, n, std::move(t)),
                                detail::standard_normal(rng, n));
}

// -------- label propagation on a similarity graph --------

// Harmonic label-propagation system over the unlabeled nodes of a weighted
// graph: row k has diagonal sum_j w_kj (degree over all nodes) and -w_ki for
// unlabeled neighbours i; the right-hand side collects w_ki * y_i over
// labeled neighbours.  `labeled[v]` marks anchors with known label y[v].
// Throws if some unlabeled node has no path to a labeled one (singular).
inline LinearSystem label_prop_system(
    const std::vector<std::vector<std::pair<int, double>>>& adj,
    const std::vector<char>& labeled, const std::vector<double>& y) {
  const int N = static_cast<int>(adj.size());
  if (static_cast<int>(labeled.size()) != N ||
      static_cast<int>(y.size()) != N)
    throw std::invalid_argument("size mismatch");

  // anchoring check: BFS from all labeled nodes
  std::vector<char> reached(labeled.begin(), labeled.end());
  std::queue<int> q;
  for (int v = 0; v < N; ++v)
    if (labeled[v]) q.push(v);
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (auto [u, w] : adj[v])
      if (w != 0.0 && !reached[u]) {
        reached[u] = 1;
        q.push(u);
      }
  }
  std::vector<int> index(N, -1);
  std::vector<int> unlabeled;
  for (int v = 0; v < N; ++v)
    if (!labeled[v]) {
      if (!reached[v])
        throw std::invalid_argument(
            "unlabeled component with no labeled neighbour");
      index[v] = static_cast<int>(unlabeled.size());
      unlabeled.push_back(v);
    }
  const int m = static_cast<int>(unlabeled.size());
  if (m == 0) throw std::invalid_argument("all nodes labeled: empty system");

  std::vector<Triplet> t;
  std::vector<double> b(m, 0.0);
  for (int k = 0; k < m; ++k) {
    const int v = unlabeled[k];
    double degree = 0.0;
    std::vector<Triplet> off;
    for (auto [u, w] : adj[v]) {
      if (w == 0.0) continue;
      degree += w;
      if (labeled[u])
        b[k] += w * y[u];
      else
        off.push_back({k, index[u], -w});
    }
    off.push_back({k, k, degree});
    std::sort(off.begin(), off.end(),
              [](const Triplet& a, const Triplet& c) { return a.col < c.col; });
    t.insert(t.end(), off.begin(), off.end());
  }
  LinearSystem sys(SparseMatrix(m, m, std::move(t)), std::move(b));

  // Reference = direct solve; the anchored system is positive definite.
  // A couple of refinement passes push the residual to the attach tolerance.
  Eigen::MatrixXd Ad = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int kk = 0; kk < sys.matrix().row_nnz(i); ++kk)
      Ad(i, sys.matrix().row_cols(i)[kk]) = sys.matrix().row_vals(i)[kk];
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Ad);
  Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(sys.rhs().data(), m);
  Eigen::VectorXd x = ldlt.solve(bv);
  for (int pass = 0; pass < 3; ++pass) x += ldlt.solve(bv - Ad * x);
  sys.attach_reference(std::vector<double>(x.data(), x.data() + m));
  return sys;
}

namespace detail {

struct MoonsInstance {
  std::vector<std::vector<std::pair<int, double>>> adj;
  std::vector<char> labeled;
  std::vector<double> y;
};

inline MoonsInstance make_two_moons(int samples, int labeled_count,
                                    int k_neighbors, double noise, Rng& rng) {
  const int na = (samples + 1) / 2, nb = samples - na;
  constexpr double pi = 3.14159265358979323846;
  std::vector<double> px(samples), py(samples);
  std::vector<double> y(samples);
  // first moon: upper half circle; second: reflected and shifted by (1, 0.5)
  for (int i = 0; i < na; ++i) {
    const double t = na > 1 ? pi * i / (na - 1) : 0.0;
    px[i] = std::cos(t);
    py[i] = std::sin(t);
    y[i] = 1.0;
  }
  for (int i = 0; i < nb; ++i) {
    const double t = nb > 1 ? pi * i / (nb - 1) : 0.0;
    px[na + i] = 1.0 - std::cos(t);
    py[na + i] = 0.5 - std::sin(t);
    y[na + i] = -1.0;
  }
  for (int i = 0; i < samples; ++i) {
    px[i] += noise * rng.normal();
    py[i] += noise * rng.normal();
  }

  // one guaranteed anchor per moon, remainder uniform over the rest
  std::vector<char> labeled(samples, 0);
  labeled[rng.below(na)] = 1;
  labeled[na + rng.below(nb)] = 1;
  std::vector<int> rest;
  for (int i = 0; i < samples; ++i)
    if (!labeled[i]) rest.push_back(i);
  rng.shuffle(rest);
  for (int i = 0; i < labeled_count - 2; ++i) labeled[rest[i]] = 1;

  // k nearest neighbours by Euclidean distance, ties by index, union-symmetrized
  const int k = std::min(k_neighbors, samples - 1);
  std::vector<std::vector<char>> edge(samples, std::vector<char>(samples, 0));
  std::vector<std::pair<double, int>> cand(samples);
  for (int i = 0; i < samples; ++i) {
    for (int j = 0; j < samples; ++j) {
      const double dx = px[i] - px[j], dy = py[i] - py[j];
      cand[j] = {dx * dx + dy * dy, j};
    }
    cand[i].first = std::numeric_limits<double>::infinity();
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int s = 0; s < k; ++s) {
      edge[i][cand[s].second] = 1;
      edge[cand[s].second][i] = 1;
    }
  }
  MoonsInstance inst;
  inst.adj.resize(samples);
  for (int i = 0; i < samples; ++i)
    for (int j = 0; j < samples; ++j)
      if (edge[i][j]) inst.adj[i].push_back({j, 1.0});
  inst.labeled = std::move(labeled);
  inst.y = std::move(y);
  return inst;
}

}  // namespace detail

// Two interleaved half-circle clusters with Gaussian noise, a random labeled
// subset (at least one anchor per moon), unit-weight k-NN similarity graph,
// and the harmonic label-propagation system over the unlabeled nodes.  Seeds
// that leave an unlabeled component unanchored are skipped deterministically;
// `regenerations` (optional) reports how many were.
inline LinearSystem gen_two_moons_label_prop(int samples, int labeled, int k,
                                             double noise, std::uint64_t seed,
                                             int* regenerations = nullptr) {
  if (samples < 4) throw std::invalid_argument("need at least 4 samples");
  if (labeled < 2 || labeled >= samples)
    throw std::invalid_argument("need 2 <= labeled < samples");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!(noise >= 0.0)) throw std::invalid_argument("noise must be >= 0");
  for (int attempt = 0; attempt < 64; ++attempt) {
    Rng rng(seed + 0x9E3779B97F4A7C15ULL * attempt);
    detail::MoonsInstance inst =
        detail::make_two_moons(samples, labeled, k, noise, rng);
    try {
      LinearSystem sys = label_prop_system(inst.adj, inst.labeled, inst.y);
      if (regenerations) *regenerations = attempt;
      return sys;
    } catch (const std::invalid_argument&) {
      continue;  // unanchored component: advance the seed sequence
    }
  }
  throw std::runtime_error("two-moons generation failed for 64 seed offsets");
}

// -------- textual problem specs --------

// Compact one-line description, e.g. "lattice:side=50,seed=7" or
// "diag:lambda=1+2+0.5".  Same syntax in config files and on the CLI.
struct GeneratorSpec {
  enum class Kind { Lattice, Overdetermined, TwoMoons, Diagonal, Random };
  Kind kind = Kind::Diagonal;
  std::uint64_t seed = 1;
  int side = 50;                              // lattice
  int m = 2500, n = 1000;                     // overdet / random
  double scale_prob = 1.0 / 11.0;             // overdet
  double scale_factor = 1e4;                  // overdet
  int samples = 2000, labeled = 100, k = 5;   // moons
  double noise = 0.1;                         // moons
  std::vector<double> lambda = {1.0, 2.0};    // diag
  double density = 0.1;                       // random

  static GeneratorSpec parse(const std::string& text) {
    GeneratorSpec s;
    const std::size_t colon = text.find(':');
    const std::string head = text.substr(0, colon);
    if (head == "lattice")
      s.kind = Kind::Lattice;
    else if (head == "overdet")
      s.kind = Kind::Overdetermined;
    else if (head == "moons")
      s.kind = Kind::TwoMoons;
    else if (head == "diag")
      s.kind = Kind::Diagonal;
    else if (head == "random")
      s.kind = Kind::Random;
    else
      throw std::invalid_argument("unknown problem kind '" + head + "'");
    if (colon == std::string::npos) return s;

    std::stringstream rest(text.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      if (item.empty()) continue;
      const std::size_t eq = item.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("expected key=value, got '" + item + "'");
      const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
      if (key == "seed")
        s.seed = std::stoull(val);
      else if (key == "side")
        s.side = std::stoi(val);
      else if (key == "m")
        s.m = std::stoi(val);
      else if (key == "n")
        s.n = std::stoi(val);
      else if (key == "scale_prob")
        s.scale_prob = std::stod(val);
      else if (key == "scale_factor")
        s.scale_factor = std::stod(val);
      else if (key == "samples")
        s.samples = std::stoi(val);
      else if (key == "labeled")
        s.labeled = std::stoi(val);
      else if (key == "k")
        s.k = std::stoi(val);
      else if (key == "noise")
        s.noise = std::stod(val);
      else if (key == "density")
        s.density = std::stod(val);
      else if (key == "lambda") {
        s.lambda.clear();
        std::stringstream ls(val);
        std::string num;
        while (std::getline(ls, num, '+'))
          if (!num.empty()) s.lambda.push_back(std::stod(num));
        if (s.lambda.empty())
          throw std::invalid_argument("empty lambda list");
      } else {
        throw std::invalid_argument("unknown problem key '" + key + "'");
      }
    }
    return s;
  }

  std::string to_string() const {
    std::ostringstream o;
    o.precision(17);
    switch (kind) {
      case Kind::Lattice:
        o << "lattice:side=" << side;
        break;
      case Kind::Overdetermined:
        o << "overdet:m=" << m << ",n=" << n << ",scale_prob=" << scale_prob
          << ",scale_factor=" << scale_factor;
        break;
      case Kind::TwoMoons:
        o << "moons:samples=" << samples << ",labeled=" << labeled
          << ",k=" << k << ",noise=" << noise;
        break;
      case Kind::Diagonal:
        o << "diag:lambda=";
        for (std::size_t i = 0; i < lambda.size(); ++i)
          o << (i ? "+" : "") << lambda[i];
        break;
      case Kind::Random:
        o << "random:m=" << m << ",n=" << n << ",density=" << density;
        break;
    }
    o << ",seed=" << seed;
    return o.str();
  }

  LinearSystem generate(int* regenerations = nullptr) const {
    if (regenerations) *regenerations = 0;
    switch (kind) {
      case Kind::Lattice:
        return gen_lattice(side, seed);
      case Kind::Overdetermined:
        return gen_overdetermined(m, n, seed, scale_prob, scale_factor);
      case Kind::TwoMoons:
        return gen_two_moons_label_prop(samples, labeled, k, noise, seed,
                                        regenerations);
      case Kind::Diagonal:
        return gen_diagonal(lambda, seed);
      case Kind::Random:
        return gen_random_consistent(m, n, density, seed);
    }
    throw std::logic_error("unreachable");
  }
};

}  // namespace kaczmarz
