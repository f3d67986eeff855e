#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "eulerlu/dense.hpp"
#include "eulerlu/generators.hpp"

namespace eulerlu::dense {

// Random instance families for the matrix identities.

/// Random strongly connected Eulerian Laplacian with random cycle weights.
inline DenseMatrix random_eulerian(Index n, Rng& rng, Index permutations = 3) {
  GraphSpec spec;
  spec.kind = GeneratorKind::PermutationSum;
  spec.n = n;
  spec.permutations = permutations;
  spec.weight_min = 0.2;
  spec.weight_max = 2.0;
  spec.seed = rng.next_u64();
  return generate(spec).to_dense();
}

/// N = Q (S + K) Q with S symmetric strictly diagonally dominant, K
/// antisymmetric and Q = I - k k^T projecting out a random unit vector k.
/// Then ker(N) = ker(N^T) = ker(U_N) = span(k) and U_N >= 0.
inline DenseMatrix random_kernel_matrix(Index n, Rng& rng, DenseVector* kernel = nullptr) {
  DenseMatrix s = DenseMatrix::Zero(n, n);
  DenseMatrix k = DenseMatrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      s(i, j) = s(j, i) = rng.uniform(-1.0, 1.0);
      k(i, j) = rng.uniform(-1.0, 1.0);
      k(j, i) = -k(i, j);
    }
  }
  for (Index i = 0; i < n; ++i) s(i, i) = s.row(i).cwiseAbs().sum() + rng.uniform(0.1, 1.0);
  DenseVector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.uniform(0.5, 1.5) * (rng.below(2) ? 1.0 : -1.0);
  v.normalize();
  const DenseMatrix q = DenseMatrix::Identity(n, n) - v * v.transpose();
  if (kernel) *kernel = v;
  return q * (s + k) * q;
}

/// Random nonempty proper subset of [0, n), size in [1, n - 1].
inline std::vector<Index> random_proper_subset(Index n, Rng& rng) {
  std::vector<Index> all(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  for (Index i = n - 1; i > 0; --i) std::swap(all[static_cast<std::size_t>(i)], all[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  const Index k = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - 1)));
  all.resize(static_cast<std::size_t>(k));
  std::sort(all.begin(), all.end());
  return all;
}

inline std::vector<Index> complement(Index n, const std::vector<Index>& set) {
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  for (Index v : set) in[static_cast<std::size_t>(v)] = 1;
  std::vector<Index> out;
  for (Index i = 0; i < n; ++i) if (!in[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

inline DenseMatrix submatrix(const DenseMatrix& m, const std::vector<Index>& idx) {
  DenseMatrix s(static_cast<Index>(idx.size()), static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) s(static_cast<Index>(i), static_cast<Index>(j)) = m(idx[i], idx[j]);
  return s;
}

inline double relative_difference(const DenseMatrix& a, const DenseMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

struct FactResult {
  std::string name;
  int trials = 0;
  int failures = 0;
  /// For order facts the most negative lambda_min(B - A) / tolerance seen
  /// (>= -1 means pass); for identities the largest relative difference.
  double worst = 0.0;
  bool pass() const { return trials > 0 && failures == 0; }
};

struct FactReport {
  std::vector<FactResult> facts;
  bool all_pass() const {
    return std::all_of(facts.begin(), facts.end(), [](const FactResult& f) { return f.pass(); });
  }
};

inline constexpr double kFactTolerance = 1e-9;
inline constexpr double kRobustEps = 0.1;

/// Evaluates the matrix facts used by the analysis on `trials` random
/// instances each, with 3 <= n <= n_max.
inline FactReport verify_matrix_facts(int trials, Index n_max, std::uint64_t seed) {
  if (n_max < 3) fail(ErrorKind::InvalidSpec, "verify_matrix_facts needs n_max >= 3");
  Rng rng(seed);
  FactReport report;
  auto draw_n = [&] { return 3 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n_max - 2))); };

  auto order_fact = [&](const std::string& name, auto make) {
    FactResult r{name};
    r.worst = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
      auto [lhs, rhs] = make(draw_n());
      const PsdComparisonResult cmp = psd_leq(lhs, rhs, kFactTolerance);
      ++r.trials;
      if (!cmp.pass) ++r.failures;
      r.worst = std::min(r.worst, cmp.min_eigenvalue / cmp.tolerance);
    }
    report.facts.push_back(r);
  };
  auto equality_fact = [&](const std::string& name, auto make) {
    FactResult r{name};
    for (int t = 0; t < trials; ++t) {
      auto [lhs, rhs] = make(draw_n());
      const double diff = relative_difference(lhs, rhs);
      ++r.trials;
      if (!(diff <= kFactTolerance)) ++r.failures;
      r.worst = std::max(r.worst, diff);
    }
    report.facts.push_back(r);
  };

  order_fact("U_N <= N^T U_N^+ N", [&](Index n) {
    const DenseMatrix nm = random_kernel_matrix(n, rng);
    const DenseMatrix u = sym(nm);
    return std::pair{u, DenseMatrix(nm.transpose() * pinv(u) * nm)};
  });

  order_fact("Sc(P, I) <= P", [&](Index n) {
    DenseMatrix p;
    if (rng.below(2)) {
      p = sym(random_eulerian(n, rng));  // singular PSD
    } else {
      DenseMatrix b(n, n);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) b(i, j) = rng.uniform(-1.0, 1.0);
      p = b * b.transpose() + 1e-2 * DenseMatrix::Identity(n, n);
    }
    const std::vector<Index> elim = random_proper_subset(n, rng);
    return std::pair{schur_complement(p, elim), p};
  });

  // Stated form. Fails when the entries of a are spread out, e.g. a = (1, 100).

  order_fact("U^+ <= D^-1 for U = D - a a^T / 1^T a", [&](Index n) {
    DenseVector a(n);
    for (Index i = 0; i < n; ++i) a(i) = rng.uniform(0.05, 3.0);
    const DenseMatrix d = a.asDiagonal();
    const DenseMatrix u = d - a * a.transpose() / a.sum();
    return std::pair{pinv(u), DenseMatrix(a.cwiseInverse().asDiagonal())};
  });

  // What does hold: U D^-1 x = x for x orthogonal to 1, so U^+ = P D^-1 P.
  equality_fact("U^+ = P D^-1 P, P = I - 11^T/n", [&](Index n) {
    DenseVector a(n);
    for (Index i = 0; i < n; ++i) a(i) = rng.uniform(0.05, 3.0);
    const DenseMatrix d = a.asDiagonal();
    const DenseMatrix u = d - a * a.transpose() / a.sum();
    const DenseMatrix p = DenseMatrix::Identity(n, n) - DenseMatrix::Constant(n, n, 1.0 / static_cast<double>(n));
    return std::pair{pinv(u), DenseMatrix(p * a.cwiseInverse().asDiagonal() * p)};
  });

  order_fact("L^T D^-1 L <= 2 U_L", [&](Index n) {
    const DenseMatrix l = random_eulerian(n, rng);
    const DenseVector dinv = l.diagonal().cwiseInverse();
    return std::pair{DenseMatrix(l.transpose() * dinv.asDiagonal() * l), DenseMatrix(2.0 * sym(l))};
  });

  equality_fact("Sc(M, C) = (M^+[C])^+", [&](Index n) {
    const DenseMatrix m = rng.below(2) ? random_eulerian(n, rng) : random_kernel_matrix(n, rng);
    const std::vector<Index> elim = random_proper_subset(n, rng);
    const std::vector<Index> kept = complement(n, elim);
    const DenseMatrix sc = submatrix(schur_complement(m, elim), kept);
    return std::pair{sc, pinv(projected_restriction(m, kept))};
  });

  equality_fact("Sc(Sc(M, C1), C) = Sc(M, C)", [&](Index n) {
    const DenseMatrix m = rng.below(2) ? random_eulerian(n, rng) : random_kernel_matrix(n, rng);
    std::vector<Index> elim = random_proper_subset(n, rng);
    if (elim.size() < 2) elim = random_proper_subset(n, rng);
    // First stage eliminates a nonempty prefix of a shuffled copy of elim.
    std::vector<Index> shuffled = elim;
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    const std::size_t k1 = 1 + rng.below(shuffled.size());
    std::vector<Index> first(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(k1));
    std::sort(first.begin(), first.end());
    std::vector<Index> rest;
    std::set_difference(elim.begin(), elim.end(), first.begin(), first.end(),
                        std::back_inserter(rest));
    const DenseMatrix two_stage = schur_complement(schur_complement(m, first), rest);
    return std::pair{two_stage, schur_complement(m, elim)};
  });

  order_fact("U_Sc(N~, F) <= ((1+e)/(1-e))^2 U_Sc(N, F)", [&](Index n) {
    DenseVector k;
    const DenseMatrix nm = random_kernel_matrix(n, rng, &k);
    const DenseMatrix proj = DenseMatrix::Identity(n, n) - k * k.transpose();
    DenseMatrix w(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) w(i, j) = rng.uniform(-1.0, 1.0);
    w = proj * w * proj;
    w *= kRobustEps / spectral_norm(w);
    const DenseMatrix root = psd_sqrt(sym(nm));
    const DenseMatrix perturbed = nm + root * w * root;
    const std::vector<Index> elim = random_proper_subset(n, rng);
    const double c = std::pow((1.0 + kRobustEps) / (1.0 - kRobustEps), 2);
    return std::pair{sym(schur_complement(perturbed, elim)), DenseMatrix(c * sym(schur_complement(nm, elim)))};
  });

  return report;
}

}  // namespace eulerlu::dense
