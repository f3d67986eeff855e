#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "eulerlu/laplacian.hpp"

namespace eulerlu {

struct RcddParams {
  double alpha = 0.1;
  int max_attempts = 64 * 14;  // 64 log(1/delta) at delta = 1e-6
};

inline int attempts_for_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorKind::InvalidSpec, "delta must lie in (0, 1)");
  return std::max(1, static_cast<int>(std::ceil(64.0 * std::log(1.0 / delta))));
}

struct RcddResult {
  std::vector<Index> vertices;  // sorted
  int attempts = 0;
};

namespace detail {

// Row and column intra-set sums of vertex i, compared against L_ii / (1 + alpha).
inline bool rcdd_member(const DirectedLaplacian& lap, Index i, const std::vector<char>& in_set,
                        double alpha) {
  const double bound = std::abs(lap.diag(i)) / (1.0 + alpha);
  double row = 0.0;
  for (const Entry& e : lap.row(i)) if (in_set[static_cast<std::size_t>(e.index)]) row += std::abs(e.value);
  if (row > bound) return false;
  double col = 0.0;
  for (const Entry& e : lap.col(i)) if (in_set[static_cast<std::size_t>(e.index)]) col += std::abs(e.value);
  return col <= bound;
}

}  // namespace detail

inline bool is_alpha_rcdd(const DirectedLaplacian& lap, std::span<const Index> set, double alpha) {
  std::vector<char> in_set(static_cast<std::size_t>(lap.size()), 0);
  for (Index v : set) {
    if (v < 0 || v >= lap.size()) fail(ErrorKind::IndexOutOfRange, "is_alpha_rcdd vertex");
    in_set[static_cast<std::size_t>(v)] = 1;
  }
  return std::all_of(set.begin(), set.end(),
                     [&](Index i) { return detail::rcdd_member(lap, i, in_set, alpha); });
}

inline Index rcdd_sample_size(Index n, double alpha) {
  return std::max<Index>(1, static_cast<Index>(std::floor(static_cast<double>(n) / (8.0 * (1.0 + alpha)))));
}

inline Index rcdd_min_size(Index n, double alpha) {
  return static_cast<Index>(std::ceil(static_cast<double>(n) / (16.0 * (1.0 + alpha))));
}

/// Randomised block search over `active` (all vertices when empty): sample
/// k vertices without replacement, drop every sampled vertex that violates
/// the row or column bound inside the sample, retry while the survivors
/// are fewer than n / (16 (1 + alpha)).
inline RcddResult find_rcdd_block(const DirectedLaplacian& lap, const RcddParams& params, Rng& rng,
                                  std::span<const Index> active = {}) {
  if (!(params.alpha > 0.0)) fail(ErrorKind::InvalidSpec, "alpha must be positive");
  std::vector<Index> pool(active.begin(), active.end());
  if (pool.empty()) {
    pool.resize(static_cast<std::size_t>(lap.size()));
    std::iota(pool.begin(), pool.end(), Index{0});
  }
  const Index n = static_cast<Index>(pool.size());
  if (n < 2) fail(ErrorKind::InvalidSpec, "find_rcdd_block needs at least two vertices");
  const Index k = std::min(n, rcdd_sample_size(n, params.alpha));
  const Index need = rcdd_min_size(n, params.alpha);
  std::vector<char> in_set(static_cast<std::size_t>(lap.size()), 0);
  RcddResult result;
  for (int attempt = 1; attempt <= params.max_attempts; ++attempt) {
    // Partial Fisher-Yates: the first k slots become a uniform k-subset.
    for (Index i = 0; i < k; ++i) {
      const Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    for (Index i = 0; i < k; ++i) in_set[static_cast<std::size_t>(pool[static_cast<std::size_t>(i)])] = 1;
    std::vector<Index> kept;
    for (Index i = 0; i < k; ++i) {
      const Index v = pool[static_cast<std::size_t>(i)];
      if (detail::rcdd_member(lap, v, in_set, params.alpha)) kept.push_back(v);
    }
    for (Index i = 0; i < k; ++i) in_set[static_cast<std::size_t>(pool[static_cast<std::size_t>(i)])] = 0;
    if (static_cast<Index>(kept.size()) >= need && !kept.empty()) {
      std::sort(kept.begin(), kept.end());
      result.vertices = std::move(kept);
      result.attempts = attempt;
      return result;
    }
  }
  fail(ErrorKind::AttemptsExhausted,
       "no RCDD block after " + std::to_string(params.max_attempts) + " attempts");
}

}  // namespace eulerlu
