#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "kaczmarz/linear_system.hpp"
#include "kaczmarz/sparse_matrix.hpp"

namespace kaczmarz {

// Dense conversion guarded to desk scale; the spectral helpers below are all
// dense-SVD based and meant for instances small enough to factor exactly.
inline Eigen::MatrixXd to_dense(const SparseMatrix& A) {
  if (static_cast<long long>(A.rows()) * A.cols() > 10'000'000LL)
    throw std::invalid_argument("matrix too large for dense spectral work");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(A.rows(), A.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int k = 0; k < A.row_nnz(i); ++k)
      M(i, A.row_cols(i)[k]) = A.row_vals(i)[k];
  return M;
}

struct DenseSvd {
  Eigen::VectorXd sigma;  // descending
  Eigen::MatrixXd V;      // full right singular vectors (n x n)
  int rank = 0;
  double tol = 0.0;  // rank cutoff: max(m,n) * eps * sigma_max
};

inline DenseSvd dense_svd(const Eigen::MatrixXd& M) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  DenseSvd out;
  out.sigma = svd.singularValues();
  out.V = svd.matrixV();
  const double smax = out.sigma.size() > 0 ? out.sigma(0) : 0.0;
  out.tol = std::max(M.rows(), M.cols()) *
            std::numeric_limits<double>::epsilon() * smax;
  for (int i = 0; i < out.sigma.size(); ++i)
    if (out.sigma(i) > out.tol) ++out.rank;
  return out;
}

// Smallest nonzero singular value.  Zero matrices have none.
inline double sigma_two(const SparseMatrix& A) {
  DenseSvd s = dense_svd(to_dense(A));
  if (s.rank == 0) throw std::invalid_argument("zero matrix has no sigma_two");
  return s.sigma(s.rank - 1);
}

inline double sigma_two(const LinearSystem& sys) {
  return sigma_two(sys.matrix());
}

// |diagonal| of a square matrix whose nonzeros all sit on the diagonal;
// nullopt otherwise.  Rows must be nonempty (guaranteed within LinearSystem).
inline std::optional<std::vector<double>> diagonal_entries(
    const SparseMatrix& A) {
  if (A.rows() != A.cols()) return std::nullopt;
  std::vector<double> d(A.rows(), 0.0);
  for (int i = 0; i < A.rows(); ++i) {
    for (int k = 0; k < A.row_nnz(i); ++k)
      if (A.row_cols(i)[k] != i) return std::nullopt;
    if (A.row_nnz(i) == 1) d[i] = std::abs(A.row_vals(i)[0]);
  }
  for (double v : d)
    if (v == 0.0) return std::nullopt;
  return d;
}

namespace detail {

// min over the unit circle in a 2-dim row-space slice: f(t) = max_i |alpha_i
// cos t + beta_i sin t|.  Each |curve| is an amplitude-scaled |cos(t - phase)|,
// so the envelope minimum sits at a pairwise crossing (g_i = +-g_j), at a
// curve zero, or at a curve peak; all are enumerable in closed form.
inline double min_envelope_circle(const Eigen::VectorXd& alpha,
                                  const Eigen::VectorXd& beta) {
  const int m = static_cast<int>(alpha.size());
  std::vector<double> cand;
  cand.reserve(static_cast<std::size_t>(m) * (m + 1));
  for (int i = 0; i < m; ++i) {
    cand.push_back(std::atan2(-alpha(i), beta(i)));  // zero of g_i
    cand.push_back(std::atan2(beta(i), alpha(i)));   // peak of |g_i|
    for (int j = i + 1; j < m; ++j) {
      cand.push_back(std::atan2(-(alpha(i) - alpha(j)), beta(i) - beta(j)));
      cand.push_back(std::atan2(-(alpha(i) + alpha(j)), beta(i) + beta(j)));
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (double t : cand) {
    const double c = std::cos(t), s = std::sin(t);
    double f = 0.0;
    for (int i = 0; i < m; ++i)
      f = std::max(f, std::abs(alpha(i) * c + beta(i) * s));
    best = std::min(best, f);
  }
  return best;
}

// min over the unit sphere of max-norm image: coarse spherical Fibonacci
// sweep, then shrinking tangent-grid refinement around the best directions.
inline double min_maxnorm_sphere(const Eigen::MatrixXd& G) {
  auto eval = [&](const Eigen::Vector3d& w) {
    return (G * w).cwiseAbs().maxCoeff();
  };
  const int N = 40000;
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<std::pair<double, Eigen::Vector3d>> seeds;
  for (int k = 0; k < N; ++k) {
    // Hemisphere suffices: f(w) = f(-w).
    const double z = (k + 0.5) / N;
    const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * M_PI * std::fmod(k / golden, 1.0);
    Eigen::Vector3d w(rxy * std::cos(phi), rxy * std::sin(phi), z);
    seeds.emplace_back(eval(w), w);
  }
  std::partial_sort(seeds.begin(), seeds.begin() + 8, seeds.end(),
                    [](const auto& a, const auto& b) { return a.first < b.first; });
  double best = seeds[0].first;
  for (int s = 0; s < 8; ++s) {
    Eigen::Vector3d w = seeds[s].second;
    double fw = seeds[s].first;
    double h = 0.2;
    while (h > 1e-13) {
      Eigen::Vector3d t1 = w.unitOrthogonal();
      Eigen::Vector3d t2 = w.cross(t1);
      bool improved = false;
      for (int i = -6; i <= 6; ++i) {
        for (int j = -6; j <= 6; ++j) {
          if (i == 0 && j == 0) continue;
          Eigen::Vector3d c =
              (w + (h / 6.0) * (i * t1 + j * t2)).normalized();
          double fc = eval(c);
          if (fc < fw) {
            fw = fc;
            w = c;
            improved = true;
          }
        }
      }
      if (!improved) h *= 0.35;
    }
    best = std::min(best, fw);
  }
  return best;
}

}  // namespace detail

// sigma(A, infinity) = min { ||A w||_inf : w in row(A), ||w|| = 1 }, the
// contraction constant behind the greedy selection rules.  Closed form for
// diagonal matrices (any size): sigma^2 = 1 / sum_i a_ii^-2.  Otherwise the
// minimization runs in an explicit row-space basis and is limited to row-space
// dimension <= 3; larger instances should fall back to the provable lower
// bound sigma_two / sqrt(m).
inline double sigma_infinity(const SparseMatrix& A) {
  if (auto d = diagonal_entries(A)) {
    double s = 0.0;
    for (double v : *d) s += 1.0 / (v * v);
    return std::sqrt(1.0 / s);
  }
  Eigen::MatrixXd M = to_dense(A);
  DenseSvd svd = dense_svd(M);
  if (svd.rank == 0) throw std::invalid_argument("zero matrix");
  if (svd.rank > 3)
    throw std::invalid_argument(
        "sigma_infinity oracle limited to row-space dimension <= 3");
  Eigen::MatrixXd B = svd.V.leftCols(svd.rank);  // row-space basis
  Eigen::MatrixXd G = M * B;                     // m x rank
  if (svd.rank == 1) return G.col(0).cwiseAbs().maxCoeff();
  if (svd.rank == 2) return detail::min_envelope_circle(G.col(0), G.col(1));
  return detail::min_maxnorm_sphere(G);
}

inline double sigma_infinity(const LinearSystem& sys) {
  return sigma_infinity(sys.matrix());
}

}  // namespace kaczmarz
