#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kaczmarz/coordinate_descent.hpp"
#include "kaczmarz/io.hpp"
#include "kaczmarz/orthogonality.hpp"
#include "kaczmarz/problems.hpp"
#include "kaczmarz/rates.hpp"
#include "kaczmarz/selection.hpp"
#include "kaczmarz/solver.hpp"

namespace kaczmarz {

// Command-line front end.  Exit codes: 0 success, 1 usage error,
// 2 validation failure, 3 I/O error.

// A problem is either a generator spec ("lattice:side=10,seed=3") or a file
// bundle ("files:matrix=a.mtx,rhs=b.txt[,ref=x.txt][,kinds=k.txt]").
struct ProblemSource {
  bool from_files = false;
  GeneratorSpec spec;
  std::string matrix_path, rhs_path, ref_path, kinds_path;
  std::string text;

  static ProblemSource parse(const std::string& s) {
    ProblemSource src;
    src.text = s;
    if (s.rfind("files:", 0) == 0) {
      src.from_files = true;
      std::stringstream rest(s.substr(6));
      std::string item;
      while (std::getline(rest, item, ',')) {
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos)
          throw std::invalid_argument("expected key=value in '" + item + "'");
        const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
        if (key == "matrix")
          src.matrix_path = val;
        else if (key == "rhs")
          src.rhs_path = val;
        else if (key == "ref")
          src.ref_path = val;
        else if (key == "kinds")
          src.kinds_path = val;
        else
          throw std::invalid_argument("unknown files key '" + key + "'");
      }
      if (src.matrix_path.empty() || src.rhs_path.empty())
        throw std::invalid_argument("files problem needs matrix= and rhs=");
      return src;
    }
    src.spec = GeneratorSpec::parse(s);
    return src;
  }

  LinearSystem load(int* regenerations = nullptr) const {
    if (!from_files) return spec.generate(regenerations);
    SparseMatrix A = read_matrix_market(matrix_path);
    std::vector<double> b = read_vector(rhs_path);
    std::vector<ConstraintKind> kinds;
    if (!kinds_path.empty()) kinds = read_kinds(kinds_path);
    LinearSystem sys(std::move(A), std::move(b), std::move(kinds));
    if (!ref_path.empty()) sys.attach_reference(read_vector(ref_path));
    return sys;
  }
};

namespace cli_detail {

inline int pool_width(int jobs) {
  unsigned hw = std::thread::hardware_concurrency();
  int w = hw ? static_cast<int>(hw) : 4;
  if (const char* e = std::getenv("KACZ_THREADS"))
    w = std::min(w, std::max(1, std::atoi(e)));
  return std::max(1, std::min(w, jobs));
}

// Fixed-width pool over [0, jobs); first captured exception is rethrown.
inline void run_pool(int jobs, const std::function<void(int)>& fn) {
  const int width = pool_width(jobs);
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errs(jobs);
  std::vector<std::thread> pool;
  for (int t = 0; t < width; ++t)
    pool.emplace_back([&] {
      for (int j = next.fetch_add(1); j < jobs; j = next.fetch_add(1)) {
        try {
          fn(j);
        } catch (...) {
          errs[j] = std::current_exception();
        }
      }
    });
  for (std::thread& t : pool) t.join();
  for (std::exception_ptr& e : errs)
    if (e) std::rethrow_exception(e);
}

inline std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' &&
        c != '.')
      c = '-';
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline nlohmann::json json_number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

struct CellResult {
  double final_error_norm = std::numeric_limits<double>::quiet_NaN();
  double final_dist_norm = std::numeric_limits<double>::quiet_NaN();
  std::string trace_file;
  SolveResult result;
};

inline void fill_finals(CellResult& cell) {
  const ConvergenceTrace& tr = cell.result.trace;
  auto normed = [](double v, double v0) { return v0 > 0.0 ? v / v0 : v; };
  if (tr.records.empty()) {
    cell.final_error_norm = tr.initial_error > 0.0 ? 1.0 : 0.0;
    cell.final_dist_norm =
        tr.has_dist ? (tr.initial_sq_dist > 0.0 ? 1.0 : 0.0)
                    : std::numeric_limits<double>::quiet_NaN();
    return;
  }
  const TraceRecord& last = tr.records.back();
  cell.final_error_norm = normed(last.sq_error, tr.initial_error);
  cell.final_dist_norm = tr.has_dist ? normed(last.sq_dist, tr.initial_sq_dist)
                                     : std::numeric_limits<double>::quiet_NaN();
}

// Trace CSV with an extra effective-pass column (iterations / denom); used
// by compare-cd so Kaczmarz (denom = m) and coordinate descent (denom = n)
// land on a shared x-axis.
inline void write_csv_with_passes(const ConvergenceTrace& tr, double denom,
                                  std::ostream& os) {
  os << "iter,row,sq_error,sq_error_norm,sq_dist,sq_dist_norm,wall_ns,"
        "effective_pass\n";
  auto normed = [](double v, double v0) { return v0 > 0.0 ? v / v0 : v; };
  os.precision(17);
  for (std::size_t k = 0; k < tr.records.size(); ++k) {
    const TraceRecord& t = tr.records[k];
    os << (k + 1) << ',' << t.row << ',' << t.sq_error << ','
       << normed(t.sq_error, tr.initial_error) << ',' << t.sq_dist << ','
       << normed(t.sq_dist, tr.initial_sq_dist) << ',' << t.wall_ns << ','
       << (k + 1) / denom << '\n';
  }
}

struct Options {
  std::string problem;
  std::vector<std::string> rules = {
      "cyclic", "rp",  "uniform", "nonuniform", "adaptive-uniform",
      "adaptive-nonuniform", "mr", "md"};
  long long iters = 1000;
  std::vector<std::uint64_t> seeds = {1};
  std::string graph = "exact";
  std::string out = ".";
  std::string config;
};

inline void merge_config(Options& o, const CLI::App* sub) {
  if (o.config.empty()) return;
  auto cfg = read_config(o.config);
  auto flag_given = [&](const char* f) { return sub->count(f) > 0; };
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(item);
    return out;
  };
  if (cfg.count("problem") && !flag_given("--problem"))
    o.problem = cfg.at("problem");
  if (cfg.count("iters") && !flag_given("--iters"))
    o.iters = std::stoll(cfg.at("iters"));
  if (cfg.count("graph") && !flag_given("--graph")) o.graph = cfg.at("graph");
  if (cfg.count("out") && !flag_given("--out")) o.out = cfg.at("out");
  if (cfg.count("rules") && !flag_given("--rule"))
    o.rules = split(cfg.at("rules"));
  if (cfg.count("seeds") && !flag_given("--seed")) {
    o.seeds.clear();
    for (const std::string& s : split(cfg.at("seeds")))
      o.seeds.push_back(std::stoull(s));
  }
  if (o.rules.empty()) throw std::invalid_argument("config: empty rules list");
  if (o.seeds.empty()) throw std::invalid_argument("config: empty seeds list");
  if (o.iters < 1) throw std::invalid_argument("config: iters must be >= 1");
}

struct LoadedProblem {
  LinearSystem sys;
  std::optional<OrthogonalityGraph> graph;
  int regenerations = 0;
};

inline LoadedProblem load_problem(const Options& o) {
  if (o.problem.empty())
    throw std::invalid_argument("--problem is required (or set in --config)");
  LoadedProblem lp{ProblemSource::parse(o.problem).load(nullptr),
                   std::nullopt, 0};
  if (o.graph == "exact")
    lp.graph = build_exact_graph(lp.sys);
  else if (o.graph == "support")
    lp.graph = build_support_graph(lp.sys);
  else if (o.graph != "none")
    throw std::invalid_argument("graph must be exact, support, or none");
  return lp;
}

inline std::vector<RuleConfig> parse_rules(const Options& o, bool has_graph) {
  std::vector<RuleConfig> rules;
  for (const std::string& r : o.rules) {
    RuleConfig rc = parse_rule(r);
    rc.validate();
    if (rc.adaptive() && !has_graph)
      throw std::invalid_argument("rule '" + r +
                                  "' needs --graph exact or support");
    rules.push_back(rc);
  }
  return rules;
}

// -------- subcommand bodies --------

inline int cmd_generate(const Options& o) {
  if (o.problem.empty())
    throw std::invalid_argument("--problem is required (or set in --config)");
  ProblemSource src = ProblemSource::parse(o.problem);
  int regen = 0;
  LinearSystem sys = src.load(&regen);
  std::filesystem::create_directories(o.out);
  const std::string base = o.out + "/";
  write_matrix_market(sys.matrix(), base + "matrix.mtx");
  write_vector(sys.rhs(), base + "rhs.txt");
  if (sys.has_reference())
    write_vector(sys.reference(), base + "reference.txt");
  if (!sys.all_equality()) write_kinds(sys.kinds(), base + "kinds.txt");
  std::ofstream spec = detail::open_out(base + "problem.txt");
  spec << src.text << '\n';
  if (regen > 0)
    std::cout << "note: skipped " << regen
              << " seed offsets (unanchored component)\n";
  std::cout << "wrote " << sys.rows() << "x" << sys.cols() << " system to "
            << o.out << '\n';
  return 0;
}

struct BenchOutput {
  std::vector<CellResult> cells;  // rules-major: cell = ri * seeds + si
  nlohmann::json summary;
};

inline BenchOutput run_bench_cells(const Options& o, const LinearSystem& sys,
                                   const OrthogonalityGraph* graph,
                                   const std::vector<RuleConfig>& rules,
                                   bool keep_results,
                                   bool adaptive_factor_hooks) {
  std::filesystem::create_directories(o.out);
  const int nr = static_cast<int>(rules.size());
  const int ns = static_cast<int>(o.seeds.size());
  BenchOutput out;
  out.cells.resize(static_cast<std::size_t>(nr) * ns);

  run_pool(nr * ns, [&](int j) {
    const int ri = j / ns, si = j % ns;
    RuleConfig rc = rules[ri];
    rc.seed = o.seeds[si];
    StoppingCriteria stop;
    stop.max_iterations = o.iters;
    SolveOptions opts;
    if (adaptive_factor_hooks && rc.adaptive() && sys.cols() <= 64 &&
        sys.rows() <= 256) {
      try {
        opts.bound_factor_hook = make_adaptive_factor_hook(sys, rc.kind);
      } catch (const std::invalid_argument&) {
        // rank-deficient: fall back to the non-adaptive constant
      }
    }
    CellResult& cell = out.cells[j];
    cell.result = solve(sys, rc, {}, stop, graph, opts);
    fill_finals(cell);
    cell.trace_file = o.out + "/trace_" + sanitize(to_string(rc)) + "_s" +
                      std::to_string(o.seeds[si]) + ".csv";
    std::ofstream f = detail::open_out(cell.trace_file);
    cell.result.trace.write_csv(f);
    if (!f) throw std::runtime_error("write failed for " + cell.trace_file);
    if (!keep_results) cell.result = SolveResult{};  // free trace memory
  });

  nlohmann::json rules_json;
  for (int ri = 0; ri < nr; ++ri) {
    std::vector<double> errs, dists;
    nlohmann::json per_seed, files;
    for (int si = 0; si < ns; ++si) {
      const CellResult& cell = out.cells[ri * ns + si];
      errs.push_back(cell.final_error_norm);
      if (std::isfinite(cell.final_dist_norm))
        dists.push_back(cell.final_dist_norm);
      per_seed.push_back({{"seed", o.seeds[si]},
                          {"final_sq_error_norm",
                           json_number(cell.final_error_norm)},
                          {"final_sq_dist_norm",
                           json_number(cell.final_dist_norm)}});
      files.push_back(cell.trace_file);
    }
    rules_json[to_string(rules[ri])] = {
        {"final_sq_error_norm_median", json_number(median(errs))},
        {"final_sq_dist_norm_median", json_number(median(dists))},
        {"per_seed", per_seed},
        {"trace_files", files}};
  }
  out.summary = {{"problem", o.problem},
                 {"iterations", o.iters},
                 {"graph", o.graph},
                 {"seeds", o.seeds},
                 {"rules", rules_json}};
  return out;
}

inline int cmd_bench(const Options& o) {
  LoadedProblem lp = load_problem(o);
  const OrthogonalityGraph* graph = lp.graph ? &*lp.graph : nullptr;
  std::vector<RuleConfig> rules = parse_rules(o, graph != nullptr);
  BenchOutput bo = run_bench_cells(o, lp.sys, graph, rules, false, false);
  std::ofstream f = detail::open_out(o.out + "/summary.json");
  f << bo.summary.dump(2) << '\n';
  std::cout << "wrote " << bo.cells.size() << " traces and summary.json to "
            << o.out << '\n';
  return 0;
}

// Per-rule bound checks for cmd_validate.  Deterministic (greedy) rules get
// hard per-step reports; randomized rules get the 3-standard-error mean test
// across the seed list.  Rules without a one-step factor are skipped.
inline std::vector<ValidationReport> validate_rule(
    const RateBound& rb, const RuleConfig& rc,
    const std::vector<const ConvergenceTrace*>& traces) {
  std::vector<ValidationReport> out;
  auto constant = [](double b) {
    return [b](std::size_t, int) { return b; };
  };
  auto merge_deterministic = [&](const std::string& label,
                                 const std::function<double(std::size_t, int)>&
                                     bound_at,
                                 double bound_value) {
    ValidationReport total;
    total.label = label;
    total.bound = bound_value;
    double ratio_weighted = 0.0;
    for (const ConvergenceTrace* tr : traces) {
      ValidationReport r = validate_trace_deterministic(*tr, bound_at, label);
      total.steps_checked += r.steps_checked;
      total.violations += r.violations;
      total.worst_ratio = std::max(total.worst_ratio, r.worst_ratio);
      ratio_weighted += r.mean_ratio * r.steps_checked;
      ++total.runs;
    }
    total.mean_ratio =
        total.steps_checked ? ratio_weighted / total.steps_checked : 0.0;
    total.passed = total.violations == 0;
    out.push_back(total);
  };
  auto statistical = [&](const std::string& label,
                         const std::function<
                             std::function<double(std::size_t, int)>(
                                 const ConvergenceTrace*)>& make_bound,
                         double bound_value) {
    StatisticalValidator sv(label);
    for (const ConvergenceTrace* tr : traces) sv.add_run(*tr, make_bound(tr));
    ValidationReport r = sv.finalize();
    r.bound = bound_value;
    out.push_back(r);
  };
  const double s_inf_sq = rb.sigma_inf * rb.sigma_inf;

  switch (rc.kind) {
    case RuleKind::Cyclic:
    case RuleKind::RandomPermutation:
      break;  // no one-step factor to check
    case RuleKind::Uniform:
      statistical("uniform:loose",
                  [&](const ConvergenceTrace*) {
                    return constant(rb.uniform_loose);
                  },
                  rb.uniform_loose);
      statistical("uniform:tight",
                  [&](const ConvergenceTrace*) {
                    return constant(rb.uniform_tight);
                  },
                  rb.uniform_tight);
      break;
    case RuleKind::NonUniform:
      statistical("nonuniform",
                  [&](const ConvergenceTrace*) { return constant(rb.nonuniform); },
                  rb.nonuniform);
      break;
    case RuleKind::AdaptiveUniform:
    case RuleKind::AdaptiveNonUniform: {
      const bool uni = rc.kind == RuleKind::AdaptiveUniform;
      const std::string name = uni ? "adaptive-uniform" : "adaptive-nonuniform";
      const double fallback = uni ? rb.uniform_tight : rb.nonuniform;
      statistical(name + ":non-adaptive",
                  [&](const ConvergenceTrace*) { return constant(fallback); },
                  fallback);
      bool hooks = true;
      for (const ConvergenceTrace* tr : traces)
        hooks &= tr->bound_factors.size() == tr->records.size() &&
                 !tr->records.empty();
      if (hooks)
        statistical(name + ":restricted",
                    [&](const ConvergenceTrace* tr) {
                      return [tr](std::size_t k, int) {
                        return tr->bound_factors[k];
                      };
                    },
                    std::numeric_limits<double>::quiet_NaN());
      break;
    }
    case RuleKind::MaxResidual:
      merge_deterministic("mr:loose", constant(rb.max_residual_loose),
                          rb.max_residual_loose);
      merge_deterministic(
          "mr:tight",
          [&](std::size_t, int row) { return rb.max_residual_row_factor(row); },
          std::numeric_limits<double>::quiet_NaN());
      break;
    case RuleKind::MaxDistance:
      merge_deterministic("md", constant(rb.max_distance), rb.max_distance);
      break;
    case RuleKind::Hybrid:
      merge_deterministic(
          "hybrid",
          [&](std::size_t k, int row) {
            return k % 2 == 0 ? rb.max_residual_row_factor(row)
                              : rb.max_distance;
          },
          std::numeric_limits<double>::quiet_NaN());
      break;
    case RuleKind::ApproxMultiplicative: {
      const double c = (1.0 - rc.epsilon) * (1.0 - rc.epsilon);
      merge_deterministic(
          "approx-mult",
          [&, c](std::size_t, int row) {
            return 1.0 - c * s_inf_sq / rb.sq_norms[row];
          },
          std::numeric_limits<double>::quiet_NaN());
      break;
    }
    case RuleKind::ApproxAdditive: {
      const double eps = rc.epsilon;
      ValidationReport total;
      total.label = "approx-add";
      double ratio_weighted = 0.0;
      for (const ConvergenceTrace* tr : traces) {
        auto bound_at = [&, tr](std::size_t k, int row) {
          const double dprev =
              k == 0 ? tr->initial_sq_dist : tr->records[k - 1].sq_dist;
          const double gain = std::max(0.0, s_inf_sq * dprev - eps);
          return 1.0 - gain / (rb.sq_norms[row] * dprev);
        };
        ValidationReport r =
            validate_trace_deterministic(*tr, bound_at, total.label);
        total.steps_checked += r.steps_checked;
        total.violations += r.violations;
        total.worst_ratio = std::max(total.worst_ratio, r.worst_ratio);
        ratio_weighted += r.mean_ratio * r.steps_checked;
        ++total.runs;
      }
      total.mean_ratio =
          total.steps_checked ? ratio_weighted / total.steps_checked : 0.0;
      total.passed = total.violations == 0;
      out.push_back(total);
      break;
    }
  }
  return out;
}

inline nlohmann::json report_json(const ValidationReport& r) {
  return {{"label", r.label},
          {"deterministic", r.deterministic},
          {"bound", json_number(r.bound)},
          {"worst_ratio", json_number(r.worst_ratio)},
          {"mean_ratio", json_number(r.mean_ratio)},
          {"steps_checked", r.steps_checked},
          {"violations", r.violations},
          {"runs", r.runs},
          {"mean_excess", json_number(r.mean_excess)},
          {"se", json_number(r.se)},
          {"passed", r.passed}};
}

inline int cmd_validate(const Options& o) {
  LoadedProblem lp = load_problem(o);
  if (!lp.sys.has_reference())
    throw std::invalid_argument(
        "validate needs a reference solution (generated problems have one; "
        "file problems need ref=)");
  const OrthogonalityGraph* graph = lp.graph ? &*lp.graph : nullptr;
  std::vector<RuleConfig> rules = parse_rules(o, graph != nullptr);
  RateBound rb = bounds_general(lp.sys);
  BenchOutput bo = run_bench_cells(o, lp.sys, graph, rules, true, true);

  const int ns = static_cast<int>(o.seeds.size());
  nlohmann::json reports = nlohmann::json::array();
  bool deterministic_failure = false;
  for (std::size_t ri = 0; ri < rules.size(); ++ri) {
    std::vector<const ConvergenceTrace*> traces;
    for (int si = 0; si < ns; ++si)
      traces.push_back(&bo.cells[ri * ns + si].result.trace);
    std::vector<ValidationReport> rs = validate_rule(rb, rules[ri], traces);
    if (rs.empty()) {
      reports.push_back({{"label", to_string(rules[ri])},
                         {"skipped", true},
                         {"note", "no one-step factor for this rule"}});
      continue;
    }
    for (const ValidationReport& r : rs) {
      reports.push_back(report_json(r));
      if (r.deterministic && !r.passed) deterministic_failure = true;
    }
  }

  nlohmann::json doc = {
      {"problem", o.problem},
      {"iterations", o.iters},
      {"seeds", o.seeds},
      {"constants",
       {{"uniform_loose", rb.uniform_loose},
        {"uniform_tight", rb.uniform_tight},
        {"nonuniform", rb.nonuniform},
        {"max_residual_loose", rb.max_residual_loose},
        {"max_distance", rb.max_distance},
        {"sigma_inf_substituted", rb.sigma_inf_substituted},
        {"sigma_inf_bar_substituted", rb.sigma_inf_bar_substituted}}},
      {"reports", reports}};
  std::ofstream f = detail::open_out(o.out + "/validation.json");
  f << doc.dump(2) << '\n';
  std::cout << "wrote validation.json to " << o.out << '\n';
  if (deterministic_failure) {
    std::cerr << "validation failure: a per-step bound was violated\n";
    return 2;
  }
  return 0;
}

inline int cmd_compare_cd(const Options& o) {
  LoadedProblem lp = load_problem(o);
  if (!lp.sys.all_equality())
    throw std::invalid_argument("compare-cd requires an equality system");
  const OrthogonalityGraph* graph = lp.graph ? &*lp.graph : nullptr;
  std::vector<RuleConfig> rules = parse_rules(o, graph != nullptr);
  std::filesystem::create_directories(o.out);
  const double m = lp.sys.rows(), n = lp.sys.cols();

  const int nr = static_cast<int>(rules.size());
  const int ns = static_cast<int>(o.seeds.size());
  std::vector<CellResult> kcells(static_cast<std::size_t>(nr) * ns);
  std::vector<CellResult> cdcells(2);
  run_pool(nr * ns + 2, [&](int j) {
    if (j < nr * ns) {
      const int ri = j / ns, si = j % ns;
      RuleConfig rc = rules[ri];
      rc.seed = o.seeds[si];
      StoppingCriteria stop;
      stop.max_iterations = o.iters;
      CellResult& cell = kcells[j];
      cell.result = solve(lp.sys, rc, {}, stop, graph);
      fill_finals(cell);
      cell.trace_file = o.out + "/trace_" + sanitize(to_string(rc)) + "_s" +
                        std::to_string(o.seeds[si]) + ".csv";
      std::ofstream f = detail::open_out(cell.trace_file);
      write_csv_with_passes(cell.result.trace, m, f);
      cell.result = SolveResult{};
    } else {
      const CdRule rule = j == nr * ns ? CdRule::GaussSouthwell
                                       : CdRule::GaussSouthwellLipschitz;
      CellResult& cell = cdcells[j - nr * ns];
      cell.result = cd_solve(lp.sys, rule, {}, o.iters);
      fill_finals(cell);
      cell.trace_file = o.out + (j == nr * ns ? "/trace_cd-gs.csv"
                                              : "/trace_cd-gsl.csv");
      std::ofstream f = detail::open_out(cell.trace_file);
      write_csv_with_passes(cell.result.trace, n, f);
      cell.result = SolveResult{};
    }
  });

  nlohmann::json kj, cj;
  for (int ri = 0; ri < nr; ++ri) {
    std::vector<double> errs;
    for (int si = 0; si < ns; ++si)
      errs.push_back(kcells[ri * ns + si].final_error_norm);
    kj[to_string(rules[ri])] = {
        {"final_sq_error_norm_median", json_number(median(errs))},
        {"effective_passes", o.iters / m}};
  }
  cj["gs"] = {{"final_sq_error_norm", json_number(cdcells[0].final_error_norm)},
              {"effective_passes", o.iters / n}};
  cj["gsl"] = {{"final_sq_error_norm",
                json_number(cdcells[1].final_error_norm)},
               {"effective_passes", o.iters / n}};
  nlohmann::json doc = {{"problem", o.problem},
                        {"iterations", o.iters},
                        {"kaczmarz", kj},
                        {"coordinate_descent", cj}};
  std::ofstream f = detail::open_out(o.out + "/summary.json");
  f << doc.dump(2) << '\n';
  std::cout << "wrote " << (nr * ns + 2) << " traces and summary.json to "
            << o.out << '\n';
  return 0;
}

}  // namespace cli_detail

// argv-style arguments without the program name, natural order.
inline int run_cli(std::vector<std::string> args) {
  using cli_detail::Options;
  CLI::App app{"Kaczmarz selection-rule benchmark and bound validator"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--problem", o.problem,
                    "generator spec (e.g. lattice:side=10,seed=3; "
                    "diag:lambda=1+2; overdet:m=200,n=50; "
                    "moons:samples=400,labeled=40; random:m=40,n=20) or "
                    "files:matrix=...,rhs=...[,ref=...][,kinds=...]");
    sub->add_option("--config", o.config,
                    "key=value config file (flags win over file values)");
    sub->add_option("--out", o.out, "output directory");
  };
  auto add_run = [&](CLI::App* sub) {
    add_common(sub);
    sub->add_option("--rule", o.rules,
                    "selection rule, repeatable (cyclic, rp, uniform, "
                    "nonuniform, adaptive-uniform, adaptive-nonuniform, mr, "
                    "md, hybrid, approx-mult:EPS, approx-add:EPS)");
    sub->add_option("--iters", o.iters, "iteration budget per run")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seeds, "rule RNG seed, repeatable");
    sub->add_option("--graph", o.graph,
                    "orthogonality graph: exact, support, or none")
        ->check(CLI::IsMember({"exact", "support", "none"}));
  };

  CLI::App* gen = app.add_subcommand(
      "generate", "write matrix/rhs/reference files for a problem spec");
  add_common(gen);
  CLI::App* bench = app.add_subcommand(
      "bench", "run selection rules, write per-iteration traces + summary");
  add_run(bench);
  CLI::App* val = app.add_subcommand(
      "validate", "check per-step contraction against the rate constants");
  add_run(val);
  CLI::App* cd = app.add_subcommand(
      "compare-cd", "benchmark against greedy coordinate descent");
  add_run(cd);

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    cli_detail::merge_config(o, sub);
    if (sub == gen) return cli_detail::cmd_generate(o);
    if (sub == bench) return cli_detail::cmd_bench(o);
    if (sub == val) return cli_detail::cmd_validate(o);
    return cli_detail::cmd_compare_cd(o);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const std::runtime_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace kaczmarz
