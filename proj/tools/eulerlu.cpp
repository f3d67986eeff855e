#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <unistd.h>

#include "eulerlu/checks.hpp"
#include "eulerlu/eulerlu.hpp"
#include "eulerlu/graph_io.hpp"
#include "eulerlu/io_json.hpp"

using namespace eulerlu;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumerical = 4;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidSpec:
      return kExitUsage;
    case ErrorKind::NegativeWeight:
    case ErrorKind::IndexOutOfRange:
    case ErrorKind::ParseError:
    case ErrorKind::NonFinite:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::TooLarge:
    case ErrorKind::IsolatedVertex:
    case ErrorKind::NotEulerian:
    case ErrorKind::BudgetExceeded:
      return kExitValidation;
    default:
      return kExitNumerical;
  }
}

void print_error(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
}

// Writes through a sibling temporary and renames, so a failure never leaves
// a truncated output behind. "-" means stdout.
void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::ParseError, "cannot write '" + path + "'");
    out << content;
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      fail(ErrorKind::ParseError, "write failed for '" + path + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::ParseError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Eigen::VectorXd read_vector(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<double> v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double x = 0.0;
    std::string rest;
    if (!(ls >> x) || (ls >> rest)) {
      fail(ErrorKind::ParseError, path + ":" + std::to_string(lineno) + ": expected one number");
    }
    v.push_back(x);
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

std::string format_vector(const Eigen::VectorXd& x) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (Index i = 0; i < x.size(); ++i) out << x(i) << '\n';
  return out.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct Common {
  double eps = 0.25;
  double delta = 0.0;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  std::string sparsifier = "exact";
  std::string mode = "sampled";
  Index samples = 0;
  Index max_samples = 64;
  std::size_t target_nnz = 0;
  Index dense_cutoff = 16;
  std::string json_out;

  void seed_from_env() {
    if (const char* s = std::getenv("EULERLU_SEED")) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(s, &end, 10);
      if (end == s || *end != '\0') fail(ErrorKind::InvalidSpec, "EULERLU_SEED must be an unsigned integer");
      seed = v;
    }
  }

  LuConfig lu_config() const {
    if (!(eps > 0.0 && eps < 0.5)) fail(ErrorKind::InvalidSpec, "--eps must lie in (0, 0.5)");
    if (delta != 0.0 && !(delta > 0.0 && delta < 1.0)) fail(ErrorKind::InvalidSpec, "--delta must lie in (0, 1)");
    if (!(alpha > 0.0)) fail(ErrorKind::InvalidSpec, "--alpha must be positive");
    LuConfig c;
    c.eps = eps;
    c.delta = delta;
    c.alpha = alpha;
    c.mode = parse_elimination_mode(mode);
    c.sparsifier = parse_sparsifier_mode(sparsifier);
    c.samples = samples;
    c.max_samples = max_samples;
    c.target_nnz = target_nnz;
    c.dense_cutoff = dense_cutoff;
    return c;
  }
};

void add_seed(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "random seed (EULERLU_SEED overrides)");
}

void add_lu_options(CLI::App* app, Common& c) {
  app->add_option("--eps", c.eps, "accuracy parameter in (0, 0.5)");
  app->add_option("--delta", c.delta, "failure probability in (0, 1); default 1/n^2");
  app->add_option("--alpha", c.alpha, "RCDD parameter");
  app->add_option("--sparsifier", c.sparsifier, "exact | sampler")->check(CLI::IsMember({"exact", "sampler"}));
  app->add_option("--mode", c.mode, "exact | sampled")->check(CLI::IsMember({"exact", "sampled"}));
  app->add_option("--samples", c.samples, "samples per elimination; 0 derives it")->check(CLI::NonNegativeNumber);
  app->add_option("--max-samples", c.max_samples, "cap on derived sample count")->check(CLI::PositiveNumber);
  app->add_option("--target-nnz", c.target_nnz, "sparsifier threshold T; 0 derives it");
  app->add_option("--dense-cutoff", c.dense_cutoff, "vertex count of the exact finish")->check(CLI::NonNegativeNumber);
  add_seed(app, c);
}

// ---- gen -------------------------------------------------------------------

struct GenArgs {
  std::string kind = "permutation-sum";
  Index n = 0;
  Index permutations = 8;
  double weight_min = 1.0, weight_max = 1.0;
  std::string format = "edgelist";
  std::string output = "-";
};

int run_gen(const GenArgs& a, Common& c) {
  GraphSpec s;
  s.kind = parse_generator_kind(a.kind);
  if (s.kind == GeneratorKind::File) fail(ErrorKind::InvalidSpec, "gen cannot use kind 'file'");
  s.n = a.n;
  s.permutations = a.permutations;
  s.weight_min = a.weight_min;
  s.weight_max = a.weight_max;
  s.seed = c.seed;
  const DirectedLaplacian lap = generate(s);
  std::ostringstream out;
  if (a.format == "mtx") {
    write_matrix_market(out, lap);
  } else {
    write_edge_list(out, lap);
  }
  write_output(a.output, out.str());
  if (!c.json_out.empty()) {
    write_output(c.json_out, dump(json{{"n", lap.size()}, {"edges", lap.edge_count()}, {"nnz", lap.nnz()},
                                       {"kind", a.kind}, {"seed", c.seed}}));
  }
  return kExitOk;
}

// ---- factor ----------------------------------------------------------------

struct FactorArgs {
  std::string input;
  std::string output = "-";
};

int run_factor(const FactorArgs& a, Common& c) {
  const LuConfig cfg = c.lu_config();
  const DirectedLaplacian lap = load_laplacian(a.input);
  Rng rng(c.seed);
  const LuResult r = eulerian_lu(lap, cfg, rng);
  const json f = factorization_to_json(r.factors, cfg, c.seed, r.stats);
  // Build both documents before touching either file.
  const std::string body = dump(f);
  std::string stats;
  if (!c.json_out.empty()) stats = dump(f["stats"]);
  write_output(a.output, body);
  if (!c.json_out.empty()) write_output(c.json_out, stats);
  return kExitOk;
}

// ---- solve -----------------------------------------------------------------

struct SolveArgs {
  std::string input;
  std::string rhs;
  std::string factorization;
  std::string output = "-";
  double tol = 1e-8;
  Index max_iters = 200;
};

int run_solve(const SolveArgs& a, Common& c) {
  const LuConfig lu = c.lu_config();
  if (!(a.tol > 0.0)) fail(ErrorKind::InvalidSpec, "--tol must be positive");
  const DirectedLaplacian lap = load_laplacian(a.input);
  const Eigen::VectorXd b = read_vector(a.rhs);
  if (b.size() != lap.size()) {
    fail(ErrorKind::DimensionMismatch,
         "right-hand side has " + std::to_string(b.size()) + " entries, graph has " + std::to_string(lap.size()));
  }
  SolveConfig cfg;
  cfg.lu = lu;
  cfg.richardson.max_iters = a.max_iters;
  SolveResult r;
  if (!a.factorization.empty()) {
    const LUFactorization f = factorization_from_json(json::parse(read_file(a.factorization)));
    if (f.n != lap.size()) fail(ErrorKind::DimensionMismatch, "factorization size does not match the graph");
    r = solve_with_factorization(lap, f, b, a.tol, cfg);
  } else {
    Rng rng(c.seed);
    r = solve_eulerian(lap, b, a.tol, cfg, rng);
  }
  if (r.report.projected_rhs) std::cerr << "warning: projected right-hand side onto the complement of 1\n";
  const std::string x = format_vector(r.x);
  std::string rep;
  if (!c.json_out.empty()) rep = dump(solve_report_to_json(r.report));
  write_output(a.output, x);
  if (!c.json_out.empty()) write_output(c.json_out, rep);
  return kExitOk;
}

// ---- check -----------------------------------------------------------------

struct CheckArgs {
  std::string suite = "all";
  std::string input;
  int trials = 100;
  Index n = 64;
};

int run_check(const CheckArgs& a, Common& c) {
  const LuConfig lu = c.lu_config();
  json out = json::array();
  auto want = [&](const char* s) { return a.suite == "all" || a.suite == s; };
  if (want("appendix")) out.push_back(checks::appendix_suite(a.trials, 12, c.seed));
  if (want("sve")) out.push_back(checks::sve_suite(a.trials * 100, c.seed));
  if (want("rcdd")) out.push_back(checks::rcdd_suite({50, 200}, a.trials, c.alpha, c.seed));
  if (want("schur")) out.push_back(checks::schur_suite(a.trials / 2 > 0 ? a.trials / 2 : 1, 10, 60, c.alpha, c.seed));
  if (want("factor")) {
    const DirectedLaplacian lap =
        a.input.empty() ? checks::random_eulerian_graph(a.n, 8, c.seed) : load_laplacian(a.input);
    if (lap.size() > 2048) fail(ErrorKind::TooLarge, "factor diagnostics are dense; n must be at most 2048");
    out.push_back(checks::factor_suite(lap, lu, c.seed));
  }
  bool pass = true;
  for (const json& s : out) pass = pass && s["pass"].get<bool>();
  const json doc{{"pass", pass}, {"seed", c.seed}, {"suites", out}};
  const std::string text = dump(doc);
  std::cout << text;
  if (!c.json_out.empty()) write_output(c.json_out, text);
  return pass ? kExitOk : kExitValidation;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  std::vector<Index> sizes{1024, 2048, 4096};
  Index permutations = 10;
  double target_per_vertex = 0.0;
  std::string output = "-";
  bool solve = true;
};

/// Least-squares slope of log(y) against log(x).
double fitted_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t k = x.size();
  if (k < 2) return NAN;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < k; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

int run_bench(const BenchArgs& a, Common& c) {
  LuConfig base = c.lu_config();
  std::ostringstream csv;
  csv << "n,m,build_seconds,nnz_factors,max_nnz,phases,iterations,solve_seconds\n";
  std::vector<double> ms, secs;
  json rows = json::array();
  for (Index n : a.sizes) {
    const DirectedLaplacian lap = checks::random_eulerian_graph(n, a.permutations, c.seed + static_cast<std::uint64_t>(n));
    LuConfig cfg = base;
    if (a.target_per_vertex > 0.0) cfg.target_nnz = static_cast<std::size_t>(a.target_per_vertex * static_cast<double>(n));
    Rng rng(c.seed);
    const auto t0 = std::chrono::steady_clock::now();
    const LuResult r = eulerian_lu(lap, cfg, rng);
    const double build = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Index iters = 0;
    double solve_s = 0.0;
    if (a.solve) {
      Rng vr(c.seed + 1);
      Eigen::VectorXd b(n);
      for (Index i = 0; i < n; ++i) b(i) = vr.uniform(-1.0, 1.0);
      SolveConfig sc;
      sc.throw_on_failure = false;
      const auto t1 = std::chrono::steady_clock::now();
      const SolveResult s = solve_with_factorization(lap, r.factors, b, 1e-8, sc);
      solve_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
      iters = s.report.iterations;
    }
    csv << n << ',' << lap.edge_count() << ',' << build << ',' << r.factors.nnz() << ',' << r.stats.max_nnz << ','
        << r.stats.phases << ',' << iters << ',' << solve_s << '\n';
    ms.push_back(static_cast<double>(lap.edge_count()));
    secs.push_back(std::max(build, 1e-6));
    rows.push_back(json{{"n", n}, {"m", lap.edge_count()}, {"build_seconds", build}, {"nnz_factors", r.factors.nnz()},
                        {"phases", r.stats.phases}, {"iterations", iters}});
  }
  const double slope = fitted_exponent(ms, secs);
  write_output(a.output, csv.str());
  std::cerr << "fitted build-time exponent in m: " << slope << '\n';
  if (!c.json_out.empty()) write_output(c.json_out, dump(json{{"rows", rows}, {"exponent", slope}}));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate LU factorization and solver for Eulerian directed Laplacians"};
  app.require_subcommand(1);
  Common common;

  GenArgs gen;
  CLI::App* g = app.add_subcommand("gen", "generate an Eulerian graph as an edge list");
  g->add_option("--kind", gen.kind, "cycle | permutation-sum | grid-circulation")
      ->check(CLI::IsMember({"cycle", "permutation-sum", "grid-circulation"}));
  g->add_option("--n", gen.n, "vertex count")->required();
  g->add_option("--permutations", gen.permutations, "permutation cycles (permutation-sum)");
  g->add_option("--weight-min", gen.weight_min, "lower weight bound");
  g->add_option("--weight-max", gen.weight_max, "upper weight bound");
  g->add_option("--format", gen.format, "edgelist | mtx")->check(CLI::IsMember({"edgelist", "mtx"}));
  g->add_option("-o,--output", gen.output, "output path, - for stdout");
  g->add_option("--json-out", common.json_out, "summary JSON path");
  add_seed(g, common);

  FactorArgs fac;
  CLI::App* f = app.add_subcommand("factor", "build an approximate LU factorization");
  f->add_option("input", fac.input, "edge list or Matrix Market file")->required();
  f->add_option("-o,--output", fac.output, "factorization JSON path, - for stdout");
  f->add_option("--json-out", common.json_out, "statistics JSON path");
  add_lu_options(f, common);

  SolveArgs sol;
  CLI::App* s = app.add_subcommand("solve", "solve L x = b");
  s->add_option("input", sol.input, "edge list or Matrix Market file")->required();
  s->add_option("--rhs", sol.rhs, "right-hand side, one value per line")->required();
  s->add_option("--factorization", sol.factorization, "factorization JSON from 'factor'");
  s->add_option("-o,--output", sol.output, "solution path, - for stdout");
  s->add_option("--tol", sol.tol, "target relative error");
  s->add_option("--max-iters", sol.max_iters, "Richardson iteration cap")->check(CLI::PositiveNumber);
  s->add_option("--json-out", common.json_out, "solve report JSON path");
  add_lu_options(s, common);

  CheckArgs chk;
  CLI::App* k = app.add_subcommand("check", "run verification suites");
  k->add_option("--suite", chk.suite, "appendix | sve | rcdd | schur | factor | all")
      ->check(CLI::IsMember({"appendix", "sve", "rcdd", "schur", "factor", "all"}));
  k->add_option("--input", chk.input, "graph for the factor suite");
  k->add_option("--trials", chk.trials, "trials per property")->check(CLI::PositiveNumber);
  k->add_option("--n", chk.n, "generated graph size for the factor suite")->check(CLI::Range(2, 2048));
  k->add_option("--json-out", common.json_out, "report JSON path");
  add_lu_options(k, common);

  BenchArgs ben;
  CLI::App* b = app.add_subcommand("bench", "time factorization over a sweep of sizes");
  b->add_option("--sizes", ben.sizes, "vertex counts")->delimiter(',');
  b->add_option("--permutations", ben.permutations, "permutation cycles per graph");
  b->add_option("--target-per-vertex", ben.target_per_vertex, "set T = this times n");
  b->add_flag("!--no-solve", ben.solve, "skip the solve column");
  b->add_option("-o,--output", ben.output, "CSV path, - for stdout");
  b->add_option("--json-out", common.json_out, "summary JSON path");
  add_lu_options(b, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("Usage", e.what(), kExitUsage);
    return kExitUsage;
  }

  try {
    common.seed_from_env();
    if (g->parsed()) return run_gen(gen, common);
    if (f->parsed()) return run_factor(fac, common);
    if (s->parsed()) return run_solve(sol, common);
    if (k->parsed()) return run_check(chk, common);
    return run_bench(ben, common);
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    print_error(to_string(e.kind()), e.what(), code);
    return code;
  } catch (const json::exception& e) {
    print_error("ParseError", e.what(), kExitValidation);
    return kExitValidation;
  } catch (const std::exception& e) {
    print_error("Internal", e.what(), kExitNumerical);
    return kExitNumerical;
  }
}
