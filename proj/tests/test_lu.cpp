#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "eulerlu/eulerian_lu.hpp"
#include "eulerlu/generators.hpp"
#include "eulerlu/io_json.hpp"
#include "eulerlu/matrix_facts.hpp"

using namespace eulerlu;
using dense::DenseMatrix;

namespace {

DirectedLaplacian cycle(Index n) {
  GraphSpec s;
  s.kind = GeneratorKind::Cycle;
  s.n = n;
  return generate(s);
}

DirectedLaplacian random_graph(Index n, std::uint64_t seed, Index perms = 4) {
  GraphSpec s;
  s.n = n;
  s.permutations = perms;
  s.weight_min = 0.5;
  s.weight_max = 2.0;
  s.seed = seed;
  return generate(s);
}

LuConfig exact_config() {
  LuConfig c;
  c.mode = EliminationMode::Exact;
  return c;
}

double max_abs(const DenseMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

ErrorKind kind_of(auto fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InvariantViolation;
}

}  // namespace

TEST(EulerianLu, EightCycleClosedForm) {
  Rng rng(1);
  const DirectedLaplacian l = cycle(8);
  const LuResult r = eulerian_lu(l, exact_config(), rng);
  ASSERT_EQ(r.factors.steps(), 8u);
  for (std::size_t i = 0; i + 1 < 8; ++i) EXPECT_EQ(r.factors.pivots[i], 1.0);
  EXPECT_EQ(r.factors.pivots.back(), 0.0);
  EXPECT_LE(max_abs(dense_product(r.factors) - l.to_dense()), 1e-12);
}

TEST(EulerianLu, TwoCycle) {
  Rng rng(1);
  const LuResult r = eulerian_lu(cycle(2), exact_config(), rng);
  ASSERT_EQ(r.factors.steps(), 2u);
  EXPECT_EQ(r.factors.pivots[0], 1.0);
  EXPECT_EQ(r.factors.pivots[1], 0.0);
  DenseMatrix lower(2, 2);
  lower << 1, 0, -1, 0;
  EXPECT_EQ(permute(dense_lower(r.factors), r.factors.order), lower);
  EXPECT_LE(max_abs(dense_product(r.factors) - cycle(2).to_dense()), 1e-15);
}

TEST(EulerianLu, InputErrors) {
  Rng rng(0);
  EXPECT_EQ(kind_of([&] { eulerian_lu(from_edge_list(1, std::vector<Edge>{}), LuConfig{}, rng); }),
            ErrorKind::InvalidSpec);
  const std::vector<Edge> path{{0, 1, 1.0}, {1, 2, 1.0}};
  EXPECT_EQ(kind_of([&] { eulerian_lu(from_edge_list(3, path), LuConfig{}, rng); }), ErrorKind::NotEulerian);
  const std::vector<Edge> two{{0, 1, 1.0}, {1, 0, 1.0}, {2, 3, 1.0}, {3, 2, 1.0}};
  EXPECT_EQ(kind_of([&] { eulerian_lu(from_edge_list(4, two), LuConfig{}, rng); }), ErrorKind::InvalidSpec);
  LuConfig bad;
  bad.eps = 1.5;
  EXPECT_EQ(kind_of([&] { eulerian_lu(cycle(4), bad, rng); }), ErrorKind::InvalidSpec);
}

TEST(EulerianLu, PhaseCap) {
  Rng rng(0);
  LuConfig c;
  c.max_phases = 1;
  EXPECT_EQ(kind_of([&] { eulerian_lu(random_graph(200, 1), c, rng); }), ErrorKind::NonConvergentPhases);
}

TEST(EulerianLu, ResolvedParameters) {
  LuConfig c;
  c.eps = 0.25;
  c.delta = 1e-4;
  const LuParameters p = resolve_parameters(c, 256);
  EXPECT_DOUBLE_EQ(p.eps_phase, 0.25 / 8.0);
  EXPECT_DOUBLE_EQ(p.delta_phase, 1e-4 / 256.0);
  EXPECT_EQ(p.samples, c.max_samples);
  c.samples = 3;
  EXPECT_EQ(resolve_parameters(c, 256).samples, 3);
  c.samples = 0;
  c.c_p = 1e-9;
  EXPECT_EQ(resolve_parameters(c, 256).samples, 1);
  EXPECT_DOUBLE_EQ(resolve_parameters(LuConfig{}, 100).delta, 1e-4);
}

// Every intermediate matrix equals the dense Schur complement onto the
// vertices not yet eliminated.
TEST(EulerianLu, ExactModeMatchesDenseSchurAtEveryStep) {
  for (Index n : {8, 32, 64}) {
    const DirectedLaplacian l = random_graph(n, static_cast<std::uint64_t>(n));
    const DenseMatrix ld = l.to_dense();
    std::vector<Index> eliminated;
    double worst = 0.0;
    LuConfig c = exact_config();
    c.observer = [&](const StepInfo& info, const WorkGraph& g) {
      eliminated.push_back(info.vertex);
      if (g.alive_count() == 0) return;
      const DenseMatrix want = dense::schur_complement(ld, eliminated);
      worst = std::max(worst, max_abs(g.to_laplacian().to_dense() - want) / l.max_diag());
    };
    Rng rng(static_cast<std::uint64_t>(n) + 5);
    const LuResult r = eulerian_lu(l, c, rng);
    EXPECT_LE(worst, 1e-10) << "n = " << n;
    EXPECT_EQ(eliminated.size(), static_cast<std::size_t>(n));
    EXPECT_LE(max_abs(dense_product(r.factors) - ld) / l.max_diag(), 1e-10);
    if (n > c.dense_cutoff) { EXPECT_GT(r.stats.phases, 1); }
  }
}

TEST(EulerianLu, TriangularUnderPermutation) {
  for (EliminationMode mode : {EliminationMode::Exact, EliminationMode::Sampled}) {
    LuConfig c;
    c.mode = mode;
    c.max_samples = 4;
    Rng rng(3);
    const LuResult r = eulerian_lu(random_graph(100, 2), c, rng);
    const DenseMatrix lo = permute(dense_lower(r.factors), r.factors.order);
    const DenseMatrix up = permute(dense_upper(r.factors), r.factors.order);
    for (Index i = 0; i < 100; ++i) {
      for (Index j = i + 1; j < 100; ++j) {
        EXPECT_EQ(lo(i, j), 0.0);
        EXPECT_EQ(up(j, i), 0.0);
      }
      EXPECT_EQ(up(i, i), 1.0);
    }
    std::vector<Index> sorted = r.factors.order;
    std::sort(sorted.begin(), sorted.end());
    for (Index i = 0; i < 100; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
  }
}

TEST(ApplyProduct, Examples) {
  Rng rng(2);
  const DirectedLaplacian l3 = cycle(3);
  const LuResult r = eulerian_lu(l3, exact_config(), rng);
  const Eigen::VectorXd e0 = Eigen::VectorXd::Unit(3, 0);
  EXPECT_LE((apply_product(r.factors, e0) - l3.multiply(e0)).norm(), 1e-12);
  EXPECT_LE(apply_product(r.factors, Eigen::VectorXd::Ones(3)).norm(), 1e-10);

  LUFactorization empty;
  empty.n = 4;
  EXPECT_EQ(apply_product(empty, Eigen::VectorXd::Ones(4)), Eigen::VectorXd::Zero(4));
  EXPECT_THROW(apply_product(empty, Eigen::VectorXd::Ones(3)), Error);

  const DirectedLaplacian l = random_graph(40, 8);
  Rng rng2(8);
  const LuResult big = eulerian_lu(l, exact_config(), rng2);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(40, -1.0, 3.0);
  EXPECT_LE((apply_product(big.factors, x) - dense_lower(big.factors) * (dense_upper(big.factors) * x)).norm(),
            1e-10);
}

TEST(ApplyInverse, Examples) {
  Rng rng(2);
  const DirectedLaplacian l3 = cycle(3);
  const LuResult r = eulerian_lu(l3, exact_config(), rng);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(3);
  b(0) = 1.0;
  b(1) = -1.0;
  EXPECT_LE((apply_inverse(r.factors, b) - dense::pinv(l3.to_dense()) * b).norm(), 1e-10);

  InverseInfo info;
  const Eigen::VectorXd zero = apply_inverse(r.factors, Eigen::VectorXd::Ones(3), &info);
  EXPECT_TRUE(info.projected);
  EXPECT_LE(zero.norm(), 1e-12);
}

TEST(ApplyInverse, RoundTripOnExactFactors) {
  const DirectedLaplacian l = random_graph(60, 4);
  Rng rng(4);
  const LuResult r = eulerian_lu(l, exact_config(), rng);
  Rng vec(1);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd x(60);
    for (Index i = 0; i < 60; ++i) x(i) = vec.uniform(-1.0, 1.0);
    project_out_ones(x);
    EXPECT_LE((apply_inverse(r.factors, apply_product(r.factors, x)) - x).norm(), 1e-10 * x.norm());
    InverseInfo info;
    apply_inverse(r.factors, l.multiply(x), &info);
    EXPECT_FALSE(info.projected);
  }
  EXPECT_LE(max_abs(dense_inverse(r.factors) - dense::pinv(l.to_dense())), 1e-9);
}

TEST(ApplyInverse, RejectsBrokenFactors) {
  Rng rng(2);
  LuResult r = eulerian_lu(cycle(5), exact_config(), rng);
  r.factors.pivots[1] = 0.0;
  EXPECT_EQ(kind_of([&] { apply_inverse(r.factors, Eigen::VectorXd::Zero(5)); }), ErrorKind::ZeroInteriorPivot);
  LUFactorization partial;
  partial.n = 3;
  EXPECT_EQ(kind_of([&] { apply_inverse(partial, Eigen::VectorXd::Zero(3)); }), ErrorKind::DimensionMismatch);
}

TEST(Json, RoundTrip) {
  LuConfig c;
  c.max_samples = 4;
  Rng rng(12);
  const LuResult r = eulerian_lu(random_graph(50, 12), c, rng);
  const json j = factorization_to_json(r.factors, c, 12, r.stats);
  const LUFactorization back = factorization_from_json(json::parse(j.dump()));
  EXPECT_EQ(back.order, r.factors.order);
  EXPECT_EQ(back.pivots, r.factors.pivots);
  ASSERT_EQ(back.columns.size(), r.factors.columns.size());
  for (std::size_t i = 0; i < back.columns.size(); ++i) {
    ASSERT_EQ(back.columns[i].size(), r.factors.columns[i].size());
    for (std::size_t k = 0; k < back.columns[i].size(); ++k) {
      EXPECT_EQ(back.columns[i][k].index, r.factors.columns[i][k].index);
      EXPECT_EQ(back.columns[i][k].value, r.factors.columns[i][k].value);
    }
  }
  EXPECT_EQ(back.nnz(), r.factors.nnz());
  EXPECT_EQ(j["stats"]["nnz_lower"], r.factors.nnz_lower());
  EXPECT_FALSE(j["stats"].contains("seconds"));
  const LuConfig c2 = config_from_json(j["config"]);
  EXPECT_EQ(c2.max_samples, 4);
  EXPECT_EQ(c2.mode, EliminationMode::Sampled);

  EXPECT_THROW(factorization_from_json(json::parse(R"({"n": 2})")), Error);
  json broken = j;
  broken["permutation"][0] = 99;
  EXPECT_THROW(factorization_from_json(broken), Error);
}

TEST(Json, DeterministicUnderSeed) {
  LuConfig c;
  c.max_samples = 4;
  const DirectedLaplacian l = random_graph(80, 3);
  Rng a(5), b(5);
  const LuResult ra = eulerian_lu(l, c, a);
  const LuResult rb = eulerian_lu(l, c, b);
  EXPECT_EQ(factorization_to_json(ra.factors, c, 5, ra.stats).dump(),
            factorization_to_json(rb.factors, c, 5, rb.stats).dump());
}

// The averaged update equals the incremental form
// S <- S - (1/P) (exact clique - A_t) applied P times on top of the exact
// elimination, under the same random stream.
TEST(Telescoping, AveragedUpdateEqualsIncrementalForm) {
  const DirectedLaplacian l = random_graph(30, 6, 5);
  const Index p = 7;
  for (Index v : {0, 11, 29}) {
    LuConfig c;
    Rng rng(40 + static_cast<std::uint64_t>(v));
    detail::Builder b(c, rng);
    b.work.load(l);
    b.result.factors.n = l.size();
    const StepInfo info = b.eliminate(v, 0, p, false);
    ASSERT_FALSE(info.exact_fallback);
    const DenseMatrix averaged = b.work.to_laplacian().to_dense();

    Rng same(40 + static_cast<std::uint64_t>(v));
    const EliminationStar star = make_star(l, v);
    DenseMatrix s = l.to_dense();
    // remove the star of v; only the out-degrees of its in-neighbours change
    s.row(v).setZero();
    s.col(v).setZero();
    for (const Entry& e : star.in_weights) s(e.index, e.index) -= e.value;
    auto add = [&](DenseMatrix& m, const Edge& e, double scale) {
      if (e.src == e.dst) return;
      m(e.dst, e.src) -= scale * e.weight;
      m(e.src, e.src) += scale * e.weight;
    };
    for (const Edge& e : exact_biclique(star)) add(s, e, 1.0);
    for (Index t = 0; t < p; ++t) {
      Rng sub = same.split();
      for (const Edge& e : exact_biclique(star)) add(s, e, -1.0 / static_cast<double>(p));
      for (const Edge& e : single_vertex_elim(star, sub)) add(s, e, 1.0 / static_cast<double>(p));
    }
    EXPECT_LE(max_abs(s - averaged) / l.max_diag(), 1e-12) << "v = " << v;
  }
}

TEST(SchurBlowup, RcddSubsetsStayBelowBound) {
  Rng rng(77);
  double worst = 0.0;
  for (int g = 0; g < 10; ++g) {
    const Index n = 20 + static_cast<Index>(rng.below(40));
    const DirectedLaplacian l = random_graph(n, rng.next_u64(), 1 + static_cast<Index>(rng.below(4)));
    const DenseMatrix ld = l.to_dense();
    const DenseMatrix h = dense::pinv_sqrt(dense::sym(ld));
    const RcddResult f = find_rcdd_block(l, RcddParams{}, rng);
    for (int s = 0; s < 5; ++s) {
      std::vector<Index> sub;
      for (Index v : f.vertices) if (s == 0 || rng.below(2)) sub.push_back(v);
      if (sub.empty()) sub.push_back(f.vertices.front());
      const DenseMatrix sc = dense::schur_complement(ld, sub);
      worst = std::max(worst, dense::max_eigenvalue(h * dense::sym(sc) * h));
    }
  }
  EXPECT_LE(worst, 3.0 + 2.0 / 0.1 + 1e-8);
}

TEST(SelectLowDegree, SkipsHub) {
  // Vertex 0 talks to everyone; the rest sit on a cycle.
  const Index n = 32;
  std::vector<Edge> e;
  for (Index i = 1; i < n; ++i) {
    e.push_back({i, i % (n - 1) + 1, 1.0});
    e.push_back({0, i, 1.0});
    e.push_back({i, 0, 1.0});
  }
  const WorkGraph g(from_edge_list(n, e));
  ASSERT_GT(static_cast<double>(g.neighbour_count(0)), 2.0 * g.average_neighbour_count());
  std::vector<Index> pool;
  for (Index i = 0; i < 10; ++i) pool.push_back(i);
  Rng rng(5);
  for (int t = 0; t < 5000; ++t) EXPECT_NE(select_low_degree_vertex(pool, g, rng), 0);
  EXPECT_THROW(select_low_degree_vertex({}, g, rng), Error);
  // Only the hub left: fall back to it.
  EXPECT_EQ(select_low_degree_vertex({0}, g, rng), 0);
}

TEST(SelectLowDegree, UniformOverEligibleChiSquare) {
  const DirectedLaplacian l = random_graph(32, 9, 3);
  WorkGraph g(l);
  // Make a few vertices ineligible by piling neighbours onto them.
  for (Index hub : {3, 17}) {
    for (Index i = 0; i < 32; ++i) {
      if (i == hub) continue;
      g.add_weight(hub, i, 0.01);
      g.add_weight(i, hub, 0.01);
    }
  }
  std::vector<Index> pool;
  for (Index i = 0; i < 32; ++i) pool.push_back(i);
  const double limit = 2.0 * g.average_neighbour_count();
  std::vector<Index> eligible;
  for (Index v : pool) if (static_cast<double>(g.neighbour_count(v)) <= limit) eligible.push_back(v);
  ASSERT_LT(eligible.size(), pool.size());

  std::map<Index, int> counts;
  Rng rng(123);
  const int draws = 100000;
  for (int t = 0; t < draws; ++t) ++counts[select_low_degree_vertex(pool, g, rng)];
  double chi2 = 0.0;
  const double expected = static_cast<double>(draws) / static_cast<double>(eligible.size());
  for (Index v : eligible) {
    const double o = counts[v];
    chi2 += (o - expected) * (o - expected) / expected;
  }
  EXPECT_EQ(counts.size(), eligible.size());
  // Upper 0.1% quantile via Wilson-Hilferty.
  const double k = static_cast<double>(eligible.size() - 1);
  const double z = 3.090;
  const double crit = k * std::pow(1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k)), 3);
  EXPECT_LT(chi2, crit);
}

TEST(SampledMode, IntermediateMatricesStayEulerian) {
  const DirectedLaplacian l = random_graph(128, 21, 8);
  LuConfig c;
  c.eps = 0.25;
  c.delta = 1e-3;
  c.max_samples = 8;
  int checked = 0;
  c.observer = [&](const StepInfo&, const WorkGraph& g) {
    const ValidationReport rep = validate(g.to_laplacian(), true, false, 1e-10);
    EXPECT_TRUE(rep.ok);
    ++checked;
  };
  Rng rng(21);
  const LuResult r = eulerian_lu(l, c, rng);
  EXPECT_EQ(checked, 128);
  EXPECT_LE(r.stats.max_balance_defect, 1e-10);
  const DenseMatrix ld = l.to_dense();
  const double err = dense::asym_approx_error(ld, dense_product(r.factors));
  EXPECT_TRUE(std::isfinite(err));
  RecordProperty("phase_error_u", std::to_string(err));
}

TEST(SampledMode, DiagnosticsWithinBudget) {
  for (Index n : {64, 256}) {
    const DirectedLaplacian l = random_graph(n, 5 + static_cast<std::uint64_t>(n), 8);
    LuConfig c;
    c.eps = 0.25;
    c.record_snapshots = true;
    Rng rng(static_cast<std::uint64_t>(n));
    const LuResult r = eulerian_lu(l, c, rng);
    const DenseMatrix f = build_F_from_snapshots(r.snapshots);
    const dense::DiagnosticsReport d = dense::diagnose_factorization(l.to_dense(), dense_product(r.factors), f);
    EXPECT_LE(d.eps_f, 1.0) << "n = " << n;
    EXPECT_GT(d.gamma, 0.0);
    EXPECT_EQ(r.snapshots.size(), static_cast<std::size_t>(r.stats.phases));
    const double logd = std::log(1.0 / r.stats.delta);
    EXPECT_LE(static_cast<double>(r.factors.nnz()), 50.0 * static_cast<double>(n) * 16.0 * logd * logd);
    EXPECT_GE(r.stats.phase_stats.front().eliminated,
              std::max<Index>(1, rcdd_min_size(n, 0.1) / 2));
  }
}

TEST(SampledMode, SamplerSparsifierKeepsDegreesAndFinishes) {
  const DirectedLaplacian l = random_graph(300, 2, 10);
  LuConfig c;
  c.sparsifier = SparsifierMode::Sampler;
  c.target_nnz = 8 * 300;
  c.max_samples = 8;
  Rng rng(2);
  const LuResult r = eulerian_lu(l, c, rng);
  EXPECT_EQ(r.factors.steps(), 300u);
  EXPECT_LE(r.stats.nnz_after_sparsify, l.nnz());
  EXPECT_LE(r.stats.max_nnz, 4 * c.target_nnz);
  check_pivots(r.factors);
}
