#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "eulerlu/dense.hpp"
#include "eulerlu/eulerian_lu.hpp"
#include "eulerlu/generators.hpp"
#include "eulerlu/io_json.hpp"
#include "eulerlu/matrix_facts.hpp"
#include "eulerlu/rcdd.hpp"
#include "eulerlu/vertex_elim.hpp"

// Verification suites shared by the command line tool. Each returns a JSON
// object with a boolean "pass" and the measured quantities.
namespace eulerlu::checks {

inline json appendix_suite(int trials, Index n_max, std::uint64_t seed) {
  const dense::FactReport rep = dense::verify_matrix_facts(trials, n_max, seed);
  json facts = json::array();
  for (const dense::FactResult& f : rep.facts) {
    facts.push_back(json{{"name", f.name}, {"trials", f.trials}, {"failures", f.failures}, {"worst", f.worst},
                         {"pass", f.pass()}});
  }
  return json{{"suite", "appendix"}, {"pass", rep.all_pass()}, {"facts", facts}};
}

/// Random star with in and out supports of size 1..max_support drawn from
/// [0, n) and weights rescaled so both sides carry the same mass.
inline EliminationStar random_star(Index n, Index max_support, Rng& rng) {
  auto side = [&](std::vector<Entry>& out) {
    const Index k = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(max_support)));
    std::vector<Index> idx(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < k; ++i) std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(n - i))]);
    for (Index i = 0; i < k; ++i) out.push_back({idx[static_cast<std::size_t>(i)], rng.uniform(0.1, 3.0)});
    std::sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) { return a.index < b.index; });
  };
  EliminationStar s;
  side(s.in_weights);
  side(s.out_weights);
  const double scale = s.in_total() / s.out_total();
  for (Entry& e : s.out_weights) e.value *= scale;
  s.pivot = s.in_total();
  return s;
}

/// Degree preservation, sparsity and the local error bound of single vertex
/// elimination on random stars.
inline json sve_suite(int samples, std::uint64_t seed) {
  Rng rng(seed);
  const Index n = 12;
  int degree_failures = 0, nnz_failures = 0, bound_failures = 0;
  double worst_norm = 0.0, worst_defect = 0.0;
  for (int t = 0; t < samples; ++t) {
    const EliminationStar star = random_star(n, 8, rng);
    const SparseBipartiteSample a = single_vertex_elim(star, rng);
    std::vector<double> rows(static_cast<std::size_t>(n), 0.0), cols(static_cast<std::size_t>(n), 0.0);
    for (const Edge& e : a) {
      rows[static_cast<std::size_t>(e.src)] += e.weight;
      cols[static_cast<std::size_t>(e.dst)] += e.weight;
    }
    double defect = 0.0;
    for (const Entry& e : star.in_weights) rows[static_cast<std::size_t>(e.index)] -= e.value;
    for (const Entry& e : star.out_weights) cols[static_cast<std::size_t>(e.index)] -= e.value;
    for (Index i = 0; i < n; ++i) {
      defect = std::max({defect, std::abs(rows[static_cast<std::size_t>(i)]), std::abs(cols[static_cast<std::size_t>(i)])});
    }
    worst_defect = std::max(worst_defect, defect / star.pivot);
    if (defect > 1e-12 * star.pivot) ++degree_failures;
    if (a.size() > star.in_weights.size() + star.out_weights.size()) ++nnz_failures;
    const dense::LocalUndirectification loc = star_local_undirectification(star, n);
    const double norm = elimination_error_norm(star, a, loc.u_local);
    worst_norm = std::max(worst_norm, norm);
    if (norm > 4.0 + 1e-9) ++bound_failures;
  }
  const bool pass = degree_failures == 0 && nnz_failures == 0 && bound_failures == 0;
  return json{{"suite", "sve"},
              {"pass", pass},
              {"samples", samples},
              {"degree_failures", degree_failures},
              {"worst_degree_defect", worst_defect},
              {"nnz_failures", nnz_failures},
              {"bound_failures", bound_failures},
              {"worst_local_error_norm", worst_norm}};
}

inline DirectedLaplacian random_eulerian_graph(Index n, Index permutations, std::uint64_t seed) {
  GraphSpec s;
  s.kind = GeneratorKind::PermutationSum;
  s.n = n;
  s.permutations = permutations;
  s.weight_min = 0.1;
  s.weight_max = 5.0;
  s.seed = seed;
  return generate(s);
}

inline json rcdd_suite(const std::vector<Index>& sizes, int seeds, double alpha, std::uint64_t seed) {
  json per_size = json::array();
  bool pass = true;
  for (Index n : sizes) {
    int failures = 0;
    double attempts = 0.0;
    Index smallest = n;
    for (int s = 0; s < seeds; ++s) {
      const DirectedLaplacian l = random_eulerian_graph(n, 4, seed + static_cast<std::uint64_t>(s) * 7919);
      Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(s + 1)));
      RcddParams p;
      p.alpha = alpha;
      const RcddResult r = find_rcdd_block(l, p, rng);
      attempts += r.attempts;
      smallest = std::min<Index>(smallest, static_cast<Index>(r.vertices.size()));
      if (!is_alpha_rcdd(l, r.vertices, alpha) ||
          static_cast<double>(r.vertices.size()) < static_cast<double>(n) / (16.0 * (1.0 + alpha))) {
        ++failures;
      }
    }
    const double mean = attempts / std::max(1, seeds);
    const bool ok = failures == 0 && mean <= 3.0;
    pass = pass && ok;
    per_size.push_back(json{{"n", n}, {"failures", failures}, {"mean_attempts", mean}, {"smallest_block", smallest},
                            {"required", rcdd_min_size(n, alpha)}, {"pass", ok}});
  }
  return json{{"suite", "rcdd"}, {"pass", pass}, {"alpha", alpha}, {"sizes", per_size}};
}

/// lambda_max(U_L^{+/2} U_{Sc(L, F')} U_L^{+/2}) over RCDD blocks F and
/// random subsets F' of them, against 3 + 2 / alpha.
inline json schur_suite(int graphs, int subsets, Index n_max, double alpha, std::uint64_t seed) {
  Rng rng(seed);
  const double bound = 3.0 + 2.0 / alpha;
  double worst = 0.0;
  int violations = 0, evaluated = 0;
  for (int g = 0; g < graphs; ++g) {
    const Index n = 10 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(std::max<Index>(1, n_max - 9))));
    const DirectedLaplacian l = random_eulerian_graph(n, 1 + static_cast<Index>(rng.below(5)), rng.next_u64());
    const dense::DenseMatrix ld = l.to_dense();
    const dense::DenseMatrix h = dense::pinv_sqrt(dense::sym(ld));
    RcddParams p;
    p.alpha = alpha;
    const RcddResult f = find_rcdd_block(l, p, rng);
    for (int s = 0; s <= subsets; ++s) {
      std::vector<Index> sub;
      for (Index v : f.vertices) if (s == 0 || rng.below(2)) sub.push_back(v);
      if (sub.empty()) sub.push_back(f.vertices[rng.below(f.vertices.size())]);
      const dense::DenseMatrix sc = dense::schur_complement(ld, sub);
      const double lam = dense::max_eigenvalue(h * dense::sym(sc) * h);
      worst = std::max(worst, lam);
      ++evaluated;
      if (lam > bound + 1e-8) ++violations;
    }
  }
  return json{{"suite", "schur"}, {"pass", violations == 0}, {"bound", bound}, {"worst", worst},
              {"evaluated", evaluated}, {"violations", violations}};
}

/// Builds the factorization of `lap` and reports the dense diagnostics.
inline json factor_suite(const DirectedLaplacian& lap, LuConfig cfg, std::uint64_t seed) {
  cfg.record_snapshots = true;
  Rng rng(seed);
  const LuResult r = eulerian_lu(lap, cfg, rng);
  const dense::DenseMatrix ld = lap.to_dense();
  const dense::DenseMatrix f = build_F_from_snapshots(r.snapshots);
  const dense::DiagnosticsReport d = dense::diagnose_factorization(ld, dense_product(r.factors), f);
  const double quality = approx_pinv_quality(ld, r.factors, f);
  const double bound = d.gamma > 0.0 ? std::sqrt(d.eps_f * d.eps_f / d.gamma) : INFINITY;
  return json{{"suite", "factor"},
              {"pass", d.eps_f <= 1.0 && quality <= bound + 1e-6},
              {"n", lap.size()},
              {"eps_f", d.eps_f},
              {"gamma", d.gamma},
              {"eps_u", d.eps_u},
              {"f_over_u_min", d.f_over_u_min},
              {"f_over_u_max", d.f_over_u_max},
              {"approx_pinv_quality", quality},
              {"approx_pinv_bound", bound},
              {"nnz", r.factors.nnz()},
              {"stats", stats_to_json(r.stats)}};
}

}  // namespace eulerlu::checks
