#include <cmath>

#include <gtest/gtest.h>

#include "eulerlu/generators.hpp"
#include "eulerlu/io_json.hpp"
#include "eulerlu/solver.hpp"

using namespace eulerlu;
using dense::DenseMatrix;

namespace {

DirectedLaplacian cycle(Index n) {
  GraphSpec s;
  s.kind = GeneratorKind::Cycle;
  s.n = n;
  return generate(s);
}

DirectedLaplacian random_graph(Index n, std::uint64_t seed, Index perms = 8) {
  GraphSpec s;
  s.n = n;
  s.permutations = perms;
  s.weight_min = 0.5;
  s.weight_max = 2.0;
  s.seed = seed;
  return generate(s);
}

LUFactorization exact_factors(const DirectedLaplacian& l) {
  LuConfig c;
  c.mode = EliminationMode::Exact;
  Rng rng(1);
  return eulerian_lu(l, c, rng).factors;
}

Eigen::VectorXd random_rhs(Index n, Rng& rng) {
  Eigen::VectorXd b(n);
  for (Index i = 0; i < n; ++i) b(i) = rng.uniform(-1.0, 1.0);
  project_out_ones(b);
  return b;
}

}  // namespace

TEST(Richardson, ExactPreconditionerOneIteration) {
  const DirectedLaplacian l = random_graph(20, 3);
  const DenseMatrix ld = l.to_dense();
  const DenseMatrix zp = dense::pinv(ld);
  Rng rng(1);
  const Eigen::VectorXd b = random_rhs(20, rng);
  SolveReport rep;
  RichardsonOptions opt;
  opt.tol = 1e-12;
  const Eigen::VectorXd x = richardson([&](const Eigen::VectorXd& v) { return Eigen::VectorXd(ld * v); },
                                       [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(zp * v); }, b, opt, &rep);
  EXPECT_EQ(rep.iterations, 1);
  EXPECT_TRUE(rep.converged);
  EXPECT_LE((x - zp * b).norm(), 1e-12);
  EXPECT_EQ(rep.certificate, "l2-residual");
}

TEST(Richardson, ZeroPreconditionerStaysAtZero) {
  const DirectedLaplacian l = cycle(5);
  Rng rng(2);
  const Eigen::VectorXd b = random_rhs(5, rng);
  SolveReport rep;
  RichardsonOptions opt;
  opt.max_iters = 7;
  const Eigen::VectorXd x = richardson([&](const Eigen::VectorXd& v) { return l.multiply(v); },
                                       [](const Eigen::VectorXd& v) { return Eigen::VectorXd::Zero(v.size()).eval(); },
                                       b, opt, &rep);
  EXPECT_EQ(x.norm(), 0.0);
  EXPECT_EQ(rep.iterations, 7);
  EXPECT_FALSE(rep.converged);
  for (double r : rep.residual_l2) EXPECT_EQ(r, 1.0);
}

TEST(Richardson, ZeroRhs) {
  const DirectedLaplacian l = cycle(4);
  SolveReport rep;
  const Eigen::VectorXd x = richardson([&](const Eigen::VectorXd& v) { return l.multiply(v); },
                                       [&](const Eigen::VectorXd& v) { return v; }, Eigen::VectorXd::Zero(4),
                                       RichardsonOptions{}, &rep);
  EXPECT_EQ(x.norm(), 0.0);
  EXPECT_EQ(rep.iterations, 0);
  EXPECT_TRUE(rep.converged);
}

TEST(Richardson, DivergenceDetected) {
  const DirectedLaplacian l = cycle(6);
  Rng rng(3);
  const Eigen::VectorXd b = random_rhs(6, rng);
  RichardsonOptions opt;
  opt.eta = 50.0;
  EXPECT_THROW(richardson([&](const Eigen::VectorXd& v) { return l.multiply(v); },
                          [&](const Eigen::VectorXd& v) { return v; }, b, opt),
               Error);
}

TEST(Solve, ThreeCycleExactFactorsOneIteration) {
  const DirectedLaplacian l = cycle(3);
  const LUFactorization f = exact_factors(l);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(3);
  b(0) = 1.0;
  b(1) = -1.0;
  SolveConfig cfg;
  cfg.richardson.max_iters = 1;
  const SolveResult r = solve_with_factorization(l, f, b, 1e-10, cfg);
  EXPECT_LE((r.x - dense::pinv(l.to_dense()) * b).norm(), 1e-10);
  EXPECT_LE(r.report.iterations, 1);
  EXPECT_EQ(r.report.certificate, "dense-U_L");
}

TEST(Solve, FourCycleApproximateBuild) {
  const DirectedLaplacian l = cycle(4);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(4);
  b(0) = 1.0;
  b(2) = -1.0;
  SolveConfig cfg;
  cfg.lu.eps = 0.25;
  Rng rng(4);
  const SolveResult r = solve_eulerian(l, b, 1e-8, cfg, rng);
  EXPECT_LE((r.x - dense::pinv(l.to_dense()) * b).norm(), 1e-8);
  EXPECT_LE(r.report.iterations, 50);
}

TEST(Solve, ZeroAndConstantRhs) {
  const DirectedLaplacian l = random_graph(30, 2);
  const LUFactorization f = exact_factors(l);
  const SolveResult zero = solve_with_factorization(l, f, Eigen::VectorXd::Zero(30), 1e-8, SolveConfig{});
  EXPECT_EQ(zero.x.norm(), 0.0);
  EXPECT_EQ(zero.report.iterations, 0);
  EXPECT_FALSE(zero.report.projected_rhs);
  const SolveResult ones = solve_with_factorization(l, f, Eigen::VectorXd::Ones(30), 1e-8, SolveConfig{});
  EXPECT_TRUE(ones.report.projected_rhs);
  EXPECT_LE(ones.x.norm(), 1e-12);
  const json j = solve_report_to_json(ones.report);
  EXPECT_TRUE(j["projected_rhs"].get<bool>());
}

TEST(Solve, NotConvergedRaises) {
  const DirectedLaplacian l = random_graph(64, 6);
  LuConfig c;
  c.samples = 1;
  Rng rng(6);
  const LUFactorization f = eulerian_lu(l, c, rng).factors;
  Rng vr(1);
  const Eigen::VectorXd b = random_rhs(64, vr);
  SolveConfig cfg;
  cfg.richardson.max_iters = 1;
  EXPECT_THROW(solve_with_factorization(l, f, b, 1e-12, cfg), Error);
  cfg.throw_on_failure = false;
  EXPECT_FALSE(solve_with_factorization(l, f, b, 1e-12, cfg).report.converged);
  EXPECT_THROW(solve_with_factorization(l, f, Eigen::VectorXd::Zero(3), 1e-8, cfg), Error);
}

class ApproximateFactors : public ::testing::Test {
 protected:
  void SetUp() override {
    l = random_graph(64, 11);
    LuConfig c;
    c.eps = 0.25;
    c.record_snapshots = true;
    Rng rng(11);
    built = eulerian_lu(l, c, rng);
    f = build_F_from_snapshots(built.snapshots);
  }
  DirectedLaplacian l;
  LuResult built;
  DenseMatrix f;
};

TEST_F(ApproximateFactors, LinearInRhs) {
  Rng rng(5);
  const Eigen::VectorXd b1 = random_rhs(64, rng), b2 = random_rhs(64, rng);
  SolveConfig cfg;
  cfg.throw_on_failure = false;
  cfg.richardson.max_iters = 6;
  cfg.richardson.tol = 0.0;
  // tol 0 and a fixed count make the iteration counts equal.
  auto run = [&](const Eigen::VectorXd& b) {
    SolveReport rep;
    RichardsonOptions opt = cfg.richardson;
    const Eigen::VectorXd x = richardson([&](const Eigen::VectorXd& v) { return l.multiply(v); },
                                         [&](const Eigen::VectorXd& v) { return apply_inverse(built.factors, v); },
                                         b, opt, &rep);
    EXPECT_EQ(rep.iterations, 6);
    return x;
  };
  const Eigen::VectorXd lhs = run(b1) + run(b2);
  EXPECT_LE((lhs - run(b1 + b2)).norm(), 1e-9 * (1.0 + lhs.norm()));
}

TEST_F(ApproximateFactors, SolutionOrthogonalToOnesAndAccurate) {
  Rng rng(9);
  const Eigen::VectorXd b = random_rhs(64, rng);
  const SolveResult r = solve_with_factorization(l, built.factors, b, 1e-8, SolveConfig{});
  EXPECT_LE(std::abs(r.x.sum()), 1e-10 * (1.0 + r.x.norm()));
  EXPECT_TRUE(r.report.converged);
  EXPECT_LE(r.report.final_relative_error, 1e-8);
  EXPECT_LE(r.report.median_contraction, 0.9);
  EXPECT_EQ(r.report.error_u.size(), r.report.residual_l2.size());
}

TEST_F(ApproximateFactors, PinvQualityWithinDiagnosticBound) {
  const dense::DiagnosticsReport d = dense::diagnose_factorization(l.to_dense(), dense_product(built.factors), f);
  ASSERT_GT(d.gamma, 0.0);
  const double q = approx_pinv_quality(l.to_dense(), built.factors, f);
  EXPECT_LE(q, std::sqrt(d.eps_f * d.eps_f / d.gamma) + 1e-6);
  const double q_u = approx_pinv_quality(l.to_dense(), built.factors, dense::sym(l.to_dense()));
  EXPECT_TRUE(std::isfinite(q_u));
}

TEST_F(ApproximateFactors, ErrorContractsAtMeasuredRate) {
  const DenseMatrix ld = l.to_dense();
  const double q = approx_pinv_quality(ld, built.factors, f);
  ASSERT_LT(q, 1.0);
  // In the F norm e_{k+1} = (I - Z L) e_k, so ||e_k||_F <= q^k ||e_0||_F.
  const DenseMatrix fh = dense::psd_sqrt(f);
  const DenseMatrix lp = dense::pinv(ld);
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd b = random_rhs(64, rng);
    const Eigen::VectorXd xs = lp * b;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(64);
    double prev = (fh * (x - xs)).norm();
    for (int k = 0; k < 5 && prev > 1e-13; ++k) {
      x += apply_inverse(built.factors, b - l.multiply(x));
      const double cur = (fh * (x - xs)).norm();
      EXPECT_LE(cur, (q + 1e-6) * prev + 1e-13);
      prev = cur;
    }
  }
}

TEST(ApproxPinvQuality, ExactFactorsGiveZero) {
  const DirectedLaplacian l = random_graph(30, 4);
  const DenseMatrix ld = l.to_dense();
  EXPECT_LE(approx_pinv_quality(ld, exact_factors(l), dense::sym(ld)), 1e-9);
}

TEST(Median, Basics) {
  EXPECT_EQ(median({}), 0.0);
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
}
