#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kaczmarz/linear_system.hpp"

namespace kaczmarz {

enum class RuleKind {
  Cyclic,
  RandomPermutation,
  Uniform,
  NonUniform,            // P(i) proportional to ||a_i||^2
  AdaptiveUniform,       // uniform over the selectable set
  AdaptiveNonUniform,    // ||a_i||^2-weighted over the selectable set
  MaxResidual,
  MaxDistance,
  Hybrid,                // MaxResidual on even iterations, MaxDistance on odd
  ApproxMultiplicative,  // any row with |r_i| >= (1 - eps) max |r|
  ApproxAdditive,        // any row with r_i^2 >= max r^2 - eps
};

struct RuleConfig {
  RuleKind kind = RuleKind::Cyclic;
  std::uint64_t seed = 0;
  double epsilon = 0.0;  // approximate rules only

  void validate() const {
    if (kind == RuleKind::ApproxMultiplicative &&
        !(epsilon >= 0.0 && epsilon < 1.0))
      throw std::invalid_argument("multiplicative epsilon must be in [0, 1)");
    if (kind == RuleKind::ApproxAdditive && !(epsilon >= 0.0))
      throw std::invalid_argument("additive epsilon must be >= 0");
  }

  bool randomized() const {
    switch (kind) {
      case RuleKind::Cyclic:
      case RuleKind::MaxResidual:
      case RuleKind::MaxDistance:
      case RuleKind::Hybrid:
        return false;
      default:
        return true;
    }
  }

  bool adaptive() const {
    return kind == RuleKind::AdaptiveUniform ||
           kind == RuleKind::AdaptiveNonUniform;
  }

  bool greedy() const {
    return kind == RuleKind::MaxResidual || kind == RuleKind::MaxDistance ||
           kind == RuleKind::Hybrid || kind == RuleKind::ApproxMultiplicative ||
           kind == RuleKind::ApproxAdditive;
  }
};

inline std::string to_string(RuleKind k) {
  switch (k) {
    case RuleKind::Cyclic: return "cyclic";
    case RuleKind::RandomPermutation: return "rp";
    case RuleKind::Uniform: return "uniform";
    case RuleKind::NonUniform: return "nonuniform";
    case RuleKind::AdaptiveUniform: return "adaptive-uniform";
    case RuleKind::AdaptiveNonUniform: return "adaptive-nonuniform";
    case RuleKind::MaxResidual: return "mr";
    case RuleKind::MaxDistance: return "md";
    case RuleKind::Hybrid: return "hybrid";
    case RuleKind::ApproxMultiplicative: return "approx-mult";
    case RuleKind::ApproxAdditive: return "approx-add";
  }
  return "?";
}

inline std::string to_string(const RuleConfig& c) {
  std::string s = to_string(c.kind);
  if (c.kind == RuleKind::ApproxMultiplicative ||
      c.kind == RuleKind::ApproxAdditive)
    s += ":" + std::to_string(c.epsilon);
  return s;
}

// Accepts "mr", "md", "cyclic", "rp", "uniform"/"u", "nonuniform"/"nu",
// "adaptive-uniform"/"au", "adaptive-nonuniform"/"anu", "hybrid",
// "approx-mult:EPS", "approx-add:EPS".
inline RuleConfig parse_rule(const std::string& text) {
  RuleConfig c;
  std::string name = text;
  if (auto p = text.find(':'); p != std::string::npos) {
    name = text.substr(0, p);
    try {
      c.epsilon = std::stod(text.substr(p + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad epsilon in rule '" + text + "'");
    }
  }
  if (name == "cyclic" || name == "c") c.kind = RuleKind::Cyclic;
  else if (name == "rp") c.kind = RuleKind::RandomPermutation;
  else if (name == "uniform" || name == "u") c.kind = RuleKind::Uniform;
  else if (name == "nonuniform" || name == "nu") c.kind = RuleKind::NonUniform;
  else if (name == "adaptive-uniform" || name == "au")
    c.kind = RuleKind::AdaptiveUniform;
  else if (name == "adaptive-nonuniform" || name == "anu")
    c.kind = RuleKind::AdaptiveNonUniform;
  else if (name == "mr") c.kind = RuleKind::MaxResidual;
  else if (name == "md") c.kind = RuleKind::MaxDistance;
  else if (name == "hybrid") c.kind = RuleKind::Hybrid;
  else if (name == "approx-mult") c.kind = RuleKind::ApproxMultiplicative;
  else if (name == "approx-add") c.kind = RuleKind::ApproxAdditive;
  else throw std::invalid_argument("unknown rule '" + text + "'");
  c.validate();
  return c;
}

// Linear-scan reference selectors.  The solver uses heap-backed equivalents;
// these O(m) forms define the rule semantics (ties -> lowest index) and serve
// as oracles for the heap path.

inline int max_residual_select(const LinearSystem& sys,
                               const std::vector<double>& r) {
  int best = 0;
  double best_v = -1.0;
  for (int i = 0; i < sys.rows(); ++i) {
    double v = row_violation(sys.kinds()[i], r[i]);
    if (v > best_v) best_v = v, best = i;
  }
  return best;
}

inline int max_distance_select(const LinearSystem& sys,
                               const std::vector<double>& r) {
  int best = 0;
  double best_v = -1.0;
  for (int i = 0; i < sys.rows(); ++i) {
    double v = row_violation(sys.kinds()[i], r[i]) / sys.norms().norm[i];
    if (v > best_v) best_v = v, best = i;
  }
  return best;
}

// Rows allowed by the approximate variants of the max-residual rule.
inline std::vector<int> approx_qualifying_rows(const LinearSystem& sys,
                                               const std::vector<double>& r,
                                               RuleKind kind, double eps) {
  double max_v = 0.0;
  for (int i = 0; i < sys.rows(); ++i)
    max_v = std::max(max_v, row_violation(sys.kinds()[i], r[i]));
  std::vector<int> out;
  for (int i = 0; i < sys.rows(); ++i) {
    double v = row_violation(sys.kinds()[i], r[i]);
    bool ok = kind == RuleKind::ApproxMultiplicative
                  ? v >= (1.0 - eps) * max_v
                  : v * v >= max_v * max_v - eps;
    if (ok) out.push_back(i);
  }
  return out;
}

}  // namespace kaczmarz
