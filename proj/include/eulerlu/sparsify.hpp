#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "eulerlu/dense.hpp"
#include "eulerlu/laplacian.hpp"
#include "eulerlu/vertex_elim.hpp"

namespace eulerlu {

enum class SparsifierMode { Passthrough, Sampler };

inline SparsifierMode parse_sparsifier_mode(const std::string& s) {
  if (s == "exact" || s == "passthrough") return SparsifierMode::Passthrough;
  if (s == "sampler") return SparsifierMode::Sampler;
  fail(ErrorKind::InvalidSpec, "unknown sparsifier '" + s + "'");
}

inline const char* to_string(SparsifierMode m) {
  return m == SparsifierMode::Passthrough ? "exact" : "sampler";
}

struct SparsifierConfig {
  SparsifierMode mode = SparsifierMode::Passthrough;
  double eps = 0.25;
  double delta = 1e-3;
  /// Target nnz of the output (off-diagonals plus diagonal).
  std::size_t target_nnz = 0;
  /// Row-sum tolerance, relative to the largest diagonal, for the Eulerian
  /// precondition.
  double eulerian_tol = 1e-10;
};

struct SparsifyStats {
  std::size_t input_edges = 0;
  std::size_t kept_edges = 0;
  std::size_t repair_edges = 0;
  std::size_t detours = 0;
  double rho = 0.0;
  bool identity = false;
};

inline void check_sparsifier_config(const SparsifierConfig& cfg) {
  if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) fail(ErrorKind::InvalidSpec, "sparsifier eps must lie in (0, 1)");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) fail(ErrorKind::InvalidSpec, "sparsifier delta must lie in (0, 1)");
}

namespace detail {

inline std::size_t diagonal_nnz(const DirectedLaplacian& lap) {
  std::size_t d = 0;
  for (double x : lap.diagonal()) if (x != 0.0) ++d;
  return d;
}

// Self pair (u, u, w) from the repair step: take mass from edges a -> b away
// from u and send it through u instead (a -> u -> b), which adds w to both
// degrees of u and leaves a and b unchanged.
inline bool detour(std::vector<Edge>& edges, Index u, double w, Rng& rng, std::size_t& detours) {
  const double floor = 1e-15 * w;
  std::size_t scanned = 0;
  std::size_t k = edges.size();
  while (w > floor) {
    std::size_t pick = edges.size();
    for (int tries = 0; tries < 64 && pick == edges.size(); ++tries) {
      const std::size_t c = static_cast<std::size_t>(rng.below(k));
      const Edge& e = edges[c];
      if (e.weight > 0.0 && e.src != u && e.dst != u) pick = c;
    }
    while (pick == edges.size() && scanned < k) {
      const Edge& e = edges[scanned];
      if (e.weight > 0.0 && e.src != u && e.dst != u) pick = scanned;
      ++scanned;
    }
    if (pick == edges.size()) return false;
    const Edge e = edges[pick];
    const double x = std::min(w, e.weight);
    edges[pick].weight = e.weight - x;
    edges.push_back({e.src, u, x});
    edges.push_back({u, e.dst, x});
    w -= x;
    ++detours;
  }
  return true;
}

}  // namespace detail

/// Eulerian sparsification with identical in- and out-degrees.
/// Passthrough returns L unchanged when it fits the budget. The sampler keeps
/// edge u -> v with probability p = min(1, rho w (1/out(u) + 1/in(v))) at its
/// own weight, and re-pairs the dropped out-mass with the dropped in-mass
/// through single_vertex_elim.
inline DirectedLaplacian sparsify_eulerian(const DirectedLaplacian& lap, const SparsifierConfig& cfg, Rng& rng,
                                           SparsifyStats* stats = nullptr) {
  check_sparsifier_config(cfg);
  if (!validate(lap, true, false, cfg.eulerian_tol).ok) fail(ErrorKind::NotEulerian, "sparsify_eulerian input");
  SparsifyStats local;
  local.input_edges = lap.edge_count();
  auto finish = [&](DirectedLaplacian out) {
    if (stats) *stats = local;
    return out;
  };

  if (cfg.mode == SparsifierMode::Passthrough) {
    if (cfg.target_nnz > 0 && lap.nnz() > cfg.target_nnz) {
      fail(ErrorKind::BudgetExceeded, "nnz " + std::to_string(lap.nnz()) + " exceeds T = " +
                                          std::to_string(cfg.target_nnz));
    }
    local.identity = true;
    local.kept_edges = lap.edge_count();
    return finish(lap);
  }

  const std::size_t diag = detail::diagonal_nnz(lap);
  const std::size_t budget = cfg.target_nnz > diag ? cfg.target_nnz - diag : 0;
  if (cfg.target_nnz == 0 || lap.edge_count() <= budget) {
    local.identity = true;
    local.kept_edges = lap.edge_count();
    return finish(lap);
  }

  const std::vector<Edge> edges = lap.edges();
  const Index n = lap.size();
  std::vector<double> score(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    score[i] = e.weight * (1.0 / lap.diag(e.src) + 1.0 / lap.diag(e.dst));
  }
  auto expected = [&](double rho) {
    double s = 0.0;
    for (double x : score) s += std::min(1.0, rho * x);
    return s;
  };
  double lo = 0.0, hi = 1.0;
  const double target = static_cast<double>(std::max<std::size_t>(budget, static_cast<std::size_t>(n)));
  while (expected(hi) < target && hi < 1e300) hi *= 2.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (expected(mid) < target ? lo : hi) = mid;
  }
  local.rho = hi;

  std::vector<Edge> kept;
  std::vector<double> out_deficit(static_cast<std::size_t>(n), 0.0);
  std::vector<double> in_deficit(static_cast<std::size_t>(n), 0.0);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double p = std::min(1.0, hi * score[i]);
    if (p >= 1.0 || rng.uniform() < p) {
      kept.push_back(edges[i]);
    } else {
      out_deficit[static_cast<std::size_t>(edges[i].src)] += edges[i].weight;
      in_deficit[static_cast<std::size_t>(edges[i].dst)] += edges[i].weight;
    }
  }
  local.kept_edges = kept.size();

  EliminationStar hub;
  for (Index v = 0; v < n; ++v) {
    if (out_deficit[static_cast<std::size_t>(v)] > 0.0) hub.in_weights.push_back({v, out_deficit[static_cast<std::size_t>(v)]});
    if (in_deficit[static_cast<std::size_t>(v)] > 0.0) hub.out_weights.push_back({v, in_deficit[static_cast<std::size_t>(v)]});
  }
  hub.pivot = hub.in_total();
  const SparseBipartiteSample repair = single_vertex_elim(hub, rng);
  std::vector<std::pair<Index, double>> self_pairs;
  for (const Edge& e : repair) {
    if (e.src == e.dst) {
      self_pairs.emplace_back(e.src, e.weight);
    } else {
      kept.push_back(e);
      ++local.repair_edges;
    }
  }
  for (const auto& [u, w] : self_pairs) {
    if (!detail::detour(kept, u, w, rng, local.detours)) {
      // Every remaining edge touches u; the input itself is the only safe answer.
      local = SparsifyStats{};
      local.input_edges = lap.edge_count();
      local.kept_edges = lap.edge_count();
      local.identity = true;
      return finish(lap);
    }
  }
  std::erase_if(kept, [](const Edge& e) { return !(e.weight > 0.0); });
  return finish(DirectedLaplacian::from_edges(n, kept));
}

/// Asymmetric approximation error of the sparsifier output.
inline double measure_sparsifier(const DirectedLaplacian& lap, const DirectedLaplacian& approx) {
  if (lap.size() != approx.size()) fail(ErrorKind::DimensionMismatch, "measure_sparsifier");
  return dense::asym_approx_error(lap.to_dense(), approx.to_dense());
}

/// Largest |deg_L(v) - deg_M(v)| over in- and out-degrees, relative to the
/// largest degree of L.
inline double degree_mismatch(const DirectedLaplacian& a, const DirectedLaplacian& b) {
  if (a.size() != b.size()) fail(ErrorKind::DimensionMismatch, "degree_mismatch");
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(a.size());
  const Eigen::VectorXd in_a = a.multiply(ones), in_b = b.multiply(ones);  // diag - in-degree
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.diag(i) - b.diag(i)));
    worst = std::max(worst, std::abs((a.diag(i) - in_a(i)) - (b.diag(i) - in_b(i))));
  }
  return worst / std::max(1.0, a.max_diag());
}

}  // namespace eulerlu
