#include <cmath>

#include <gtest/gtest.h>

#include "eulerlu/generators.hpp"
#include "eulerlu/sparsify.hpp"

using namespace eulerlu;

namespace {

DirectedLaplacian cycle(Index n, double w = 1.0) {
  GraphSpec s;
  s.kind = GeneratorKind::Cycle;
  s.n = n;
  s.weight_min = s.weight_max = w;
  return generate(s);
}

DirectedLaplacian dense_random(Index n, Index perms, std::uint64_t seed) {
  GraphSpec s;
  s.n = n;
  s.permutations = perms;
  s.weight_min = 0.2;
  s.weight_max = 3.0;
  s.seed = seed;
  return generate(s);
}

ErrorKind kind_of(auto fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InvariantViolation;
}

// Degrees recomputed from the edge list, independent of the Laplacian storage.
void degrees(const DirectedLaplacian& l, std::vector<double>& in, std::vector<double>& out) {
  in.assign(static_cast<std::size_t>(l.size()), 0.0);
  out.assign(static_cast<std::size_t>(l.size()), 0.0);
  for (const Edge& e : l.edges()) {
    out[static_cast<std::size_t>(e.src)] += e.weight;
    in[static_cast<std::size_t>(e.dst)] += e.weight;
  }
}

}  // namespace

TEST(Passthrough, IdentityWithinBudget) {
  const DirectedLaplacian l = dense_random(30, 3, 1);
  SparsifierConfig cfg;
  cfg.target_nnz = l.nnz();
  Rng rng(0);
  SparsifyStats st;
  const DirectedLaplacian out = sparsify_eulerian(l, cfg, rng, &st);
  EXPECT_EQ(out.edges(), l.edges());
  EXPECT_TRUE(st.identity);
  EXPECT_EQ(measure_sparsifier(l, out), 0.0);
}

TEST(Passthrough, BudgetExceeded) {
  const DirectedLaplacian l = dense_random(30, 3, 1);
  SparsifierConfig cfg;
  cfg.target_nnz = l.nnz() - 1;
  Rng rng(0);
  EXPECT_EQ(kind_of([&] { sparsify_eulerian(l, cfg, rng); }), ErrorKind::BudgetExceeded);
}

TEST(Sparsify, RejectsNonEulerianAndBadConfig) {
  const std::vector<Edge> e{{0, 1, 1.0}, {1, 2, 1.0}};
  const DirectedLaplacian path = from_edge_list(3, e);
  Rng rng(0);
  EXPECT_EQ(kind_of([&] { sparsify_eulerian(path, SparsifierConfig{}, rng); }), ErrorKind::NotEulerian);
  SparsifierConfig bad;
  bad.eps = 1.0;
  EXPECT_EQ(kind_of([&] { sparsify_eulerian(cycle(3), bad, rng); }), ErrorKind::InvalidSpec);
  EXPECT_EQ(parse_sparsifier_mode("exact"), SparsifierMode::Passthrough);
  EXPECT_EQ(parse_sparsifier_mode("sampler"), SparsifierMode::Sampler);
  EXPECT_THROW(parse_sparsifier_mode("magic"), Error);
}

TEST(Sampler, CycleKeepsEveryEdge) {
  const DirectedLaplacian l = cycle(40);
  SparsifierConfig cfg;
  cfg.mode = SparsifierMode::Sampler;
  cfg.target_nnz = 10;  // below anything achievable
  Rng rng(4);
  const DirectedLaplacian out = sparsify_eulerian(l, cfg, rng);
  EXPECT_EQ(out.edges(), l.edges());
}

TEST(Sampler, DegreesPreservedOnDenseGraph) {
  // n = 128 with about 4096 edges, budget T = 1024.
  const DirectedLaplacian l = dense_random(128, 32, 7);
  ASSERT_GT(l.edge_count(), 3500u);
  SparsifierConfig cfg;
  cfg.mode = SparsifierMode::Sampler;
  cfg.target_nnz = 1024;
  Rng rng(11);
  SparsifyStats st;
  const DirectedLaplacian out = sparsify_eulerian(l, cfg, rng, &st);
  EXPECT_FALSE(st.identity);
  EXPECT_LT(out.edge_count(), l.edge_count());
  EXPECT_LE(out.nnz(), l.nnz() + 2 * static_cast<std::size_t>(l.size()));

  std::vector<double> in_a, out_a, in_b, out_b;
  degrees(l, in_a, out_a);
  degrees(out, in_b, out_b);
  for (std::size_t i = 0; i < in_a.size(); ++i) {
    EXPECT_NEAR(in_a[i], in_b[i], 1e-9 * in_a[i]);
    EXPECT_NEAR(out_a[i], out_b[i], 1e-9 * out_a[i]);
  }
  EXPECT_LE(degree_mismatch(l, out), 1e-9);
  const ValidationReport r = validate(out, true, false, 1e-9);
  EXPECT_TRUE(r.ok);
  const double err = measure_sparsifier(l, out);
  EXPECT_TRUE(std::isfinite(err));
  RecordProperty("asym_error", std::to_string(err));
}

TEST(Sampler, InvariantsOverSeeds) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Index n = 20 + static_cast<Index>(seed * 3);
    const DirectedLaplacian l = dense_random(n, 6 + static_cast<Index>(seed % 5), seed);
    SparsifierConfig cfg;
    cfg.mode = SparsifierMode::Sampler;
    cfg.target_nnz = static_cast<std::size_t>(3 * n);
    Rng rng(seed * 31 + 1);
    const DirectedLaplacian out = sparsify_eulerian(l, cfg, rng);
    EXPECT_LE(degree_mismatch(l, out), 1e-9) << "seed " << seed;
    EXPECT_LE(out.nnz(), l.nnz() + 2 * static_cast<std::size_t>(n)) << "seed " << seed;
    for (const Edge& e : out.edges()) {
      EXPECT_GT(e.weight, 0.0);
      EXPECT_NE(e.src, e.dst);
    }
  }
}

TEST(Sampler, SmallBudgetShrinksEdges) {
  const DirectedLaplacian l = dense_random(64, 16, 3);
  SparsifierConfig cfg;
  cfg.mode = SparsifierMode::Sampler;
  cfg.target_nnz = 4 * 64;
  Rng rng(3);
  SparsifyStats st;
  const DirectedLaplacian out = sparsify_eulerian(l, cfg, rng, &st);
  EXPECT_GT(st.rho, 0.0);
  EXPECT_LT(st.kept_edges, st.input_edges);
  EXPECT_TRUE(std::isfinite(measure_sparsifier(l, out)));
}

TEST(Sampler, DeterministicUnderSeed) {
  const DirectedLaplacian l = dense_random(50, 10, 2);
  SparsifierConfig cfg;
  cfg.mode = SparsifierMode::Sampler;
  cfg.target_nnz = 200;
  Rng a(5), b(5);
  EXPECT_EQ(sparsify_eulerian(l, cfg, a).edges(), sparsify_eulerian(l, cfg, b).edges());
}

TEST(Measure, Examples) {
  const DirectedLaplacian l = dense_random(12, 3, 9);
  EXPECT_LE(measure_sparsifier(l, l), 1e-12);
  // For symmetric inputs a 5% scaling measures as 0.05.
  std::vector<Edge> sym_edges;
  for (const Edge& e : l.edges()) {
    sym_edges.push_back(e);
    sym_edges.push_back({e.dst, e.src, e.weight});
  }
  const DirectedLaplacian s = from_edge_list(12, sym_edges);
  std::vector<Edge> scaled = s.edges();
  for (Edge& e : scaled) e.weight *= 1.05;
  EXPECT_NEAR(measure_sparsifier(s, from_edge_list(12, scaled)), 0.05, 1e-10);
  EXPECT_THROW(measure_sparsifier(s, cycle(3)), Error);
}
