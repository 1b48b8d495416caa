#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kaczmarz/linear_system.hpp"
#include "kaczmarz/sparse_matrix.hpp"

namespace kaczmarz {

// Plain-text interchange: Matrix Market coordinate files for matrices,
// one-value-per-line text for vectors, key=value lines for configs.
// Values are printed with 17 significant digits so write/read round-trips
// reproduce doubles exactly.

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f.precision(17);
  return f;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read '" + path + "'");
  return f;
}

}  // namespace detail

inline void write_matrix_market(const SparseMatrix& A,
                                const std::string& path) {
  std::ofstream f = detail::open_out(path);
  f << "%%MatrixMarket matrix coordinate real general\n";
  f << A.rows() << ' ' << A.cols() << ' ' << A.nnz() << '\n';
  for (int i = 0; i < A.rows(); ++i)
    for (int k = 0; k < A.row_nnz(i); ++k)
      f << i + 1 << ' ' << A.row_cols(i)[k] + 1 << ' ' << A.row_vals(i)[k]
        << '\n';
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

inline SparseMatrix read_matrix_market(const std::string& path) {
  std::ifstream f = detail::open_in(path);
  std::string line;
  if (!std::getline(f, line) ||
      line.rfind("%%MatrixMarket", 0) != 0 ||
      line.find(" coordinate ") == std::string::npos ||
      line.find(" real ") == std::string::npos ||
      line.find(" general") == std::string::npos)
    throw std::runtime_error(path + ": expected coordinate real general");
  while (std::getline(f, line))
    if (!line.empty() && line[0] != '%') break;
  int m = 0, n = 0;
  long long nnz = 0;
  {
    std::istringstream s(line);
    if (!(s >> m >> n >> nnz))
      throw std::runtime_error(path + ": bad size line");
  }
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(nnz));
  for (long long e = 0; e < nnz; ++e) {
    int i = 0, j = 0;
    double v = 0.0;
    if (!(f >> i >> j >> v))
      throw std::runtime_error(path + ": truncated entry list");
    t.push_back({i - 1, j - 1, v});
  }
  return SparseMatrix(m, n, std::move(t));
}

inline void write_vector(const std::vector<double>& v,
                         const std::string& path) {
  std::ofstream f = detail::open_out(path);
  for (double x : v) f << x << '\n';
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

inline std::vector<double> read_vector(const std::string& path) {
  std::ifstream f = detail::open_in(path);
  std::vector<double> v;
  std::string line;
  while (std::getline(f, line)) {
    std::size_t p = line.find_first_not_of(" \t\r");
    if (p == std::string::npos || line[p] == '%' || line[p] == '#') continue;
    v.push_back(std::stod(line.substr(p)));
  }
  return v;
}

inline void write_kinds(const std::vector<ConstraintKind>& kinds,
                        const std::string& path) {
  std::ofstream f = detail::open_out(path);
  for (ConstraintKind k : kinds)
    f << (k == ConstraintKind::Equality ? "eq" : "le") << '\n';
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

inline std::vector<ConstraintKind> read_kinds(const std::string& path) {
  std::ifstream f = detail::open_in(path);
  std::vector<ConstraintKind> kinds;
  std::string tok;
  while (f >> tok) {
    if (tok == "eq")
      kinds.push_back(ConstraintKind::Equality);
    else if (tok == "le")
      kinds.push_back(ConstraintKind::LessEqual);
    else
      throw std::runtime_error(path + ": kind must be 'eq' or 'le'");
  }
  return kinds;
}

// key=value lines; blank lines and #-comments ignored; later keys win.
inline std::map<std::string, std::string> read_config(
    const std::string& path) {
  std::ifstream f = detail::open_in(path);
  std::map<std::string, std::string> cfg;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(f, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key=value");
    cfg[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return cfg;
}

}  // namespace kaczmarz
