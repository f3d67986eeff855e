#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "eulerlu/lu.hpp"
#include "eulerlu/rcdd.hpp"
#include "eulerlu/sparsify.hpp"
#include "eulerlu/vertex_elim.hpp"
#include "eulerlu/work_graph.hpp"

namespace eulerlu {

enum class EliminationMode { Exact, Sampled };

inline EliminationMode parse_elimination_mode(const std::string& s) {
  if (s == "exact") return EliminationMode::Exact;
  if (s == "sampled") return EliminationMode::Sampled;
  fail(ErrorKind::InvalidSpec, "unknown elimination mode '" + s + "'");
}

inline const char* to_string(EliminationMode m) { return m == EliminationMode::Exact ? "exact" : "sampled"; }

struct StepInfo {
  Index phase = 0;
  Index step = 0;  // global elimination index
  Index vertex = 0;
  double pivot = 0.0;
  Index samples = 0;
  bool exact_fallback = false;
  bool resparsified = false;
  bool dense_finish = false;
};

using StepObserver = std::function<void(const StepInfo&, const WorkGraph&)>;

struct LuConfig {
  double eps = 0.25;
  /// Failure budget; 0 means 1 / n^2.
  double delta = 0.0;
  double alpha = 0.1;
  EliminationMode mode = EliminationMode::Sampled;
  SparsifierMode sparsifier = SparsifierMode::Passthrough;
  /// Samples averaged per elimination. 0 derives it from the phase targets
  /// as ceil(c_p log^2(1/delta_phase) / eps_phase^2), clamped to max_samples.
  Index samples = 0;
  double c_p = 1.0;
  Index max_samples = 64;
  /// nnz threshold T; 0 means max(8 n ceil(log(1/delta) / eps^2), nnz of the
  /// initial sparsifier output).
  std::size_t target_nnz = 0;
  /// Remaining vertex count at which elimination switches to exact.
  Index dense_cutoff = 16;
  /// Phase cap; 0 means ceil(32 (1 + alpha) ln n) + 32.
  Index max_phases = 0;
  /// Relative tolerance of the Eulerian checks on intermediate matrices.
  double validation_tol = 1e-12;
  /// Keep a copy of every phase input for the F diagnostics.
  bool record_snapshots = false;
  StepObserver observer;
};

struct PhaseStats {
  Index remaining = 0;
  Index pool = 0;
  Index eliminated = 0;
  int rcdd_attempts = 0;
  std::size_t nnz_in = 0;
  std::size_t resparsifications = 0;
};

struct LuStats {
  Index n = 0;
  Index phases = 0;
  Index samples = 0;
  std::size_t target_nnz = 0;
  double eps_phase = 0.0;
  double delta = 0.0;
  double delta_phase = 0.0;
  std::size_t nnz_input = 0;
  std::size_t nnz_after_sparsify = 0;
  std::size_t max_nnz = 0;
  std::size_t resparsifications = 0;
  Index exact_fallbacks = 0;
  Index dense_finish_vertices = 0;
  double max_balance_defect = 0.0;
  double seconds = 0.0;
  std::vector<PhaseStats> phase_stats;
};

struct LuResult {
  LUFactorization factors;
  LuStats stats;
  /// Phase inputs S^{(i_p)} over the full index set, eliminated vertices
  /// isolated (only with record_snapshots).
  std::vector<DirectedLaplacian> snapshots;
};

/// Resolved numeric parameters for an n-vertex build.
struct LuParameters {
  double delta = 0.0;
  double eps_phase = 0.0;
  double delta_phase = 0.0;
  Index samples = 1;
  Index max_phases = 0;
};

inline LuParameters resolve_parameters(const LuConfig& cfg, Index n) {
  if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) fail(ErrorKind::InvalidSpec, "eps must lie in (0, 1)");
  if (!(cfg.alpha > 0.0)) fail(ErrorKind::InvalidSpec, "alpha must be positive");
  if (cfg.delta != 0.0 && !(cfg.delta > 0.0 && cfg.delta < 1.0)) fail(ErrorKind::InvalidSpec, "delta must lie in (0, 1)");
  if (cfg.dense_cutoff < 1) fail(ErrorKind::InvalidSpec, "dense cutoff must be positive");
  LuParameters p;
  const double nn = static_cast<double>(std::max<Index>(n, 2));
  p.delta = cfg.delta > 0.0 ? cfg.delta : 1.0 / (nn * nn);
  p.eps_phase = cfg.eps / std::ceil(std::log2(nn));
  p.delta_phase = p.delta / nn;
  if (cfg.samples > 0) {
    p.samples = cfg.samples;
  } else {
    const double l = std::log(1.0 / p.delta_phase);
    const double raw = std::ceil(cfg.c_p * l * l / (p.eps_phase * p.eps_phase));
    p.samples = static_cast<Index>(std::clamp(raw, 1.0, static_cast<double>(std::max<Index>(1, cfg.max_samples))));
  }
  p.max_phases = cfg.max_phases > 0 ? cfg.max_phases
                                    : static_cast<Index>(std::ceil(32.0 * (1.0 + cfg.alpha) * std::log(nn))) + 32;
  return p;
}

/// Uniform over pool vertices whose neighbour count is at most twice the
/// average over live vertices: 64 rejection rounds, then a scan. If no pool
/// vertex qualifies the one with fewest neighbours is returned.
inline Index select_low_degree_vertex(const std::vector<Index>& pool, const WorkGraph& g, Rng& rng) {
  if (pool.empty()) fail(ErrorKind::EmptyPool, "no candidate vertices left");
  const double limit = 2.0 * g.average_neighbour_count();
  auto eligible = [&](Index v) { return static_cast<double>(g.neighbour_count(v)) <= limit; };
  for (int t = 0; t < 64; ++t) {
    const Index v = pool[rng.below(pool.size())];
    if (eligible(v)) return v;
  }
  std::vector<Index> ok;
  for (Index v : pool) if (eligible(v)) ok.push_back(v);
  if (!ok.empty()) return ok[rng.below(ok.size())];
  return *std::min_element(pool.begin(), pool.end(), [&](Index a, Index b) {
    return g.neighbour_count(a) != g.neighbour_count(b) ? g.neighbour_count(a) < g.neighbour_count(b) : a < b;
  });
}

namespace detail {

struct Builder {
  const LuConfig& cfg;
  LuParameters params;
  Rng& rng;
  WorkGraph work;
  LuResult result;
  std::size_t target = 0;
  Index step = 0;

  Builder(const LuConfig& c, Rng& r) : cfg(c), rng(r) {}

  SparsifierConfig sparsifier_config(double eps, double delta) const {
    SparsifierConfig sc;
    sc.mode = cfg.sparsifier;
    sc.eps = std::clamp(eps, 1e-12, 0.999);
    sc.delta = std::clamp(delta, 1e-300, 0.999);
    sc.target_nnz = target;
    sc.eulerian_tol = std::max(cfg.validation_tol, 1e-12);
    return sc;
  }

  void check_eulerian(const DirectedLaplacian& lap, bool strongly_connected, const char* where) {
    const ValidationReport rep = validate(lap, true, false, cfg.validation_tol);
    if (!rep.ok) {
      fail(ErrorKind::NotEulerian, std::string(where) + ": row-sum defect " + std::to_string(rep.row_sum_defect));
    }
    if (strongly_connected) {
      // only the live part has to be strongly connected
      const std::vector<Index> alive = work.alive_vertices();
      if (alive.size() > 1 && !live_part_strongly_connected(lap, alive)) {
        fail(ErrorKind::InvariantViolation, std::string(where) + ": remaining graph is not strongly connected");
      }
    }
  }

  static bool live_part_strongly_connected(const DirectedLaplacian& lap, const std::vector<Index>& alive) {
    for (int pass = 0; pass < 2; ++pass) {
      std::vector<char> seen(static_cast<std::size_t>(lap.size()), 0);
      std::vector<Index> stack{alive.front()};
      seen[static_cast<std::size_t>(alive.front())] = 1;
      std::size_t count = 1;
      while (!stack.empty()) {
        const Index u = stack.back();
        stack.pop_back();
        for (const Entry& e : pass == 0 ? lap.col(u) : lap.row(u)) {
          if (!seen[static_cast<std::size_t>(e.index)]) {
            seen[static_cast<std::size_t>(e.index)] = 1;
            ++count;
            stack.push_back(e.index);
          }
        }
      }
      if (count != alive.size()) return false;
    }
    return true;
  }

  void record_balance(const std::vector<Index>& touched) {
    const double defect = work.balance_defect(touched) / std::max(1.0, work.max_degree());
    result.stats.max_balance_defect = std::max(result.stats.max_balance_defect, defect);
    if (defect > std::max(cfg.validation_tol, 1e-12) * 10.0) {
      fail(ErrorKind::NotEulerian, "in/out degree mismatch " + std::to_string(defect) + " after elimination");
    }
  }

  void snapshot(const DirectedLaplacian& lap) {
    if (cfg.record_snapshots) result.snapshots.push_back(lap);
  }

  // Records the factor entries of v, removes its star and adds the exact
  // biclique or the average of `samples` sparse biclique samples.
  StepInfo eliminate(Index v, Index phase, Index samples, bool exact) {
    const EliminationStar star = work.star(v);
    const double d = star.pivot;
    StepInfo info;
    info.phase = phase;
    info.step = step++;
    info.vertex = v;
    info.pivot = d;
    if (!(d > 0.0)) fail(ErrorKind::ZeroInteriorPivot, "vertex " + std::to_string(v) + " has zero degree");

    std::vector<Entry> column{{v, d}};
    for (const Entry& e : star.out_weights) column.push_back({e.index, -e.value});
    std::vector<Entry> row{{v, 1.0}};
    for (const Entry& e : star.in_weights) row.push_back({e.index, -e.value / d});
    result.factors.append(v, d, std::move(column), std::move(row));

    std::vector<Index> touched;
    for (const Entry& e : star.in_weights) touched.push_back(e.index);
    for (const Entry& e : star.out_weights) touched.push_back(e.index);
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

    std::vector<Edge> update;
    if (!exact) {
      std::unordered_map<Index, double> pos;  // pair key -> index in update
      const double scale = 1.0 / static_cast<double>(samples);
      for (Index t = 0; t < samples; ++t) {
        Rng sub = rng.split();
        for (const Edge& e : single_vertex_elim(star, sub)) {
          const Index key = e.src * work.size() + e.dst;
          auto [it, inserted] = pos.try_emplace(key, static_cast<Index>(update.size()));
          if (inserted) update.push_back({e.src, e.dst, 0.0});
          update[static_cast<std::size_t>(it->second)].weight += e.weight * scale;
        }
      }
      // A sampled update can pair all of a neighbour's traffic with itself
      // and cut it off; the exact biclique never does on a connected graph.
      std::unordered_map<Index, double> gained;
      for (const Edge& e : update) if (e.src != e.dst) gained[e.src] += e.weight;
      for (Index u : touched) {
        const double rest = work.out_degree(u) - work.weight(u, v) + gained[u];
        if (!(rest > 1e-12 * d)) {
          exact = true;
          info.exact_fallback = true;
          ++result.stats.exact_fallbacks;
          break;
        }
      }
    }
    if (exact) {
      update = exact_biclique(star);
      info.samples = 0;
    } else {
      info.samples = samples;
    }
    work.remove_vertex(v);
    for (const Edge& e : update) work.add_weight(e.src, e.dst, e.weight);
    record_balance(touched);
    return info;
  }

  void maybe_resparsify(StepInfo& info, PhaseStats& ps) {
    if (work.nnz() < 2 * target) return;
    const DirectedLaplacian current = work.to_laplacian();
    const double eps_s = params.eps_phase / static_cast<double>(params.samples);
    const double delta_s = params.delta_phase / static_cast<double>(params.samples);
    try {
      work.load(sparsify_eulerian(current, sparsifier_config(eps_s, delta_s), rng));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::BudgetExceeded) throw;
      fail(ErrorKind::SparsifierFailure, e.what());
    }
    check_eulerian(work.to_laplacian(), false, "after resparsification");
    info.resparsified = true;
    ++ps.resparsifications;
    ++result.stats.resparsifications;
  }

  void single_phase(Index phase) {
    PhaseStats ps;
    ps.remaining = work.alive_count();
    DirectedLaplacian s0 = work.to_laplacian();
    const double eps_s = params.eps_phase / static_cast<double>(params.samples);
    const double delta_s = params.delta_phase / static_cast<double>(params.samples);
    if (cfg.sparsifier == SparsifierMode::Sampler && s0.nnz() >= target) {
      s0 = sparsify_eulerian(s0, sparsifier_config(eps_s, delta_s), rng);
      work.load(s0);
    }
    check_eulerian(s0, true, "phase input");
    snapshot(s0);
    ps.nnz_in = s0.nnz();

    RcddParams rp;
    rp.alpha = cfg.alpha;
    rp.max_attempts = attempts_for_delta(std::clamp(params.delta_phase, 1e-300, 0.5));
    const std::vector<Index> alive = work.alive_vertices();
    RcddResult block;
    try {
      block = find_rcdd_block(s0, rp, rng, alive);
    } catch (const Error& e) {
      fail(ErrorKind::RcddFailure, e.what());
    }
    ps.rcdd_attempts = block.attempts;
    ps.pool = static_cast<Index>(block.vertices.size());
    std::vector<Index> pool = block.vertices;
    const Index kmax = std::max<Index>(1, static_cast<Index>(pool.size()) / 2);
    const bool exact = cfg.mode == EliminationMode::Exact;
    for (Index k = 0; k < kmax; ++k) {
      const Index v = select_low_degree_vertex(pool, work, rng);
      pool.erase(std::find(pool.begin(), pool.end(), v));
      StepInfo info = eliminate(v, phase, params.samples, exact);
      maybe_resparsify(info, ps);
      result.stats.max_nnz = std::max(result.stats.max_nnz, work.nnz());
      if (cfg.observer) cfg.observer(info, work);
    }
    ps.eliminated = kmax;
    result.stats.phase_stats.push_back(ps);
  }

  void dense_finish(Index phase) {
    const DirectedLaplacian s = work.to_laplacian();
    check_eulerian(s, true, "dense finish input");
    snapshot(s);
    PhaseStats ps;
    ps.remaining = work.alive_count();
    ps.nnz_in = s.nnz();
    const std::vector<Index> alive = work.alive_vertices();
    result.stats.dense_finish_vertices = static_cast<Index>(alive.size());
    for (std::size_t i = 0; i + 1 < alive.size(); ++i) {
      StepInfo info = eliminate(alive[i], phase, 0, true);
      info.dense_finish = true;
      if (cfg.observer) cfg.observer(info, work);
    }
    // What is left is the 1 x 1 zero block of an Eulerian Laplacian.
    const Index last = alive.back();
    result.factors.append(last, 0.0, {}, {{last, 1.0}});
    work.remove_vertex(last);
    StepInfo info;
    info.phase = phase;
    info.step = step++;
    info.vertex = last;
    info.dense_finish = true;
    if (cfg.observer) cfg.observer(info, work);
    ps.eliminated = static_cast<Index>(alive.size());
    result.stats.phase_stats.push_back(ps);
  }
};

}  // namespace detail

/// Approximate LU factorization of an Eulerian Laplacian: an initial
/// sparsification, then phases that each eliminate half of a random 0.1-RCDD
/// block, and an exact finish once at most dense_cutoff vertices remain.
inline LuResult eulerian_lu(const DirectedLaplacian& lap, const LuConfig& cfg, Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  const Index n = lap.size();
  if (n < 2) fail(ErrorKind::InvalidSpec, "eulerian_lu needs n >= 2");
  const ValidationReport rep = validate(lap, true, true, cfg.validation_tol);
  if (!rep.eulerian) fail(ErrorKind::NotEulerian, "input is not an Eulerian Laplacian");
  if (!rep.strongly_connected) fail(ErrorKind::InvalidSpec, "input graph is not strongly connected");

  detail::Builder b(cfg, rng);
  b.params = resolve_parameters(cfg, n);
  LuStats& st = b.result.stats;
  st.n = n;
  st.samples = cfg.mode == EliminationMode::Exact ? 0 : b.params.samples;
  st.eps_phase = b.params.eps_phase;
  st.delta = b.params.delta;
  st.delta_phase = b.params.delta_phase;
  st.nnz_input = lap.nnz();

  // Initial global sparsification at the per-phase accuracy.
  const double l = std::log(1.0 / b.params.delta);
  const auto formula = static_cast<std::size_t>(8.0 * static_cast<double>(n) * std::ceil(l / (cfg.eps * cfg.eps)));
  b.target = cfg.target_nnz > 0 ? cfg.target_nnz : formula;
  DirectedLaplacian start = sparsify_eulerian(lap, b.sparsifier_config(b.params.eps_phase, b.params.delta / 2.0), rng);
  st.nnz_after_sparsify = start.nnz();
  if (cfg.target_nnz == 0) b.target = std::max(b.target, start.nnz());
  st.target_nnz = b.target;
  st.max_nnz = start.nnz();
  b.work.load(start);
  b.result.factors.n = n;

  Index phase = 0;
  while (b.work.alive_count() > cfg.dense_cutoff) {
    if (phase >= b.params.max_phases) {
      fail(ErrorKind::NonConvergentPhases, "phase cap " + std::to_string(b.params.max_phases) + " reached with " +
                                               std::to_string(b.work.alive_count()) + " vertices left");
    }
    b.single_phase(phase++);
  }
  b.dense_finish(phase++);
  st.phases = phase;
  st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return std::move(b.result);
}

/// F = sum_p U_{S^{(i_p)}} / p_max over the recorded phase inputs.
inline dense::DenseMatrix build_F_from_snapshots(const std::vector<DirectedLaplacian>& snapshots) {
  if (snapshots.empty()) fail(ErrorKind::DimensionMismatch, "no snapshots recorded");
  std::vector<std::pair<double, dense::DenseMatrix>> parts;
  const double theta = 1.0 / static_cast<double>(snapshots.size());
  for (const DirectedLaplacian& s : snapshots) parts.emplace_back(theta, dense::sym(s.to_dense()));
  return dense::build_F(parts);
}

}  // namespace eulerlu
