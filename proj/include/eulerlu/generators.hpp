#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "eulerlu/graph_io.hpp"
#include "eulerlu/laplacian.hpp"

namespace eulerlu {

enum class GeneratorKind { Cycle, PermutationSum, GridCirculation, File };

struct GraphSpec {
  GeneratorKind kind = GeneratorKind::PermutationSum;
  Index n = 0;
  /// Number of permutations for PermutationSum (the Hamiltonian cycle
  /// counts as one of them).
  Index permutations = 8;
  /// Cycle weights are drawn uniformly from [weight_min, weight_max].
  double weight_min = 1.0;
  double weight_max = 1.0;
  std::uint64_t seed = 0;
  std::string path;
};

inline GeneratorKind parse_generator_kind(const std::string& s) {
  if (s == "cycle") return GeneratorKind::Cycle;
  if (s == "permutation-sum") return GeneratorKind::PermutationSum;
  if (s == "grid-circulation") return GeneratorKind::GridCirculation;
  if (s == "file") return GeneratorKind::File;
  fail(ErrorKind::InvalidSpec, "unknown generator kind '" + s + "'");
}

namespace detail {

inline void add_cycle(std::vector<Edge>& edges, const std::vector<Index>& order, double w) {
  for (std::size_t i = 0; i < order.size(); ++i) {
    edges.push_back({order[i], order[(i + 1) % order.size()], w});
  }
}

inline std::vector<Index> random_permutation(Index n, Rng& rng) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    std::swap(p[static_cast<std::size_t>(i)],
              p[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  }
  return p;
}

}  // namespace detail

// Every generator emits a union of weighted directed cycles, which is
// Eulerian by construction; strong connectivity comes from a spanning cycle
// (or, for the torus, from the two opposite orientations on each grid edge).
inline DirectedLaplacian generate(const GraphSpec& spec) {
  if (spec.kind == GeneratorKind::File) {
    if (spec.path.empty()) fail(ErrorKind::InvalidSpec, "file generator needs a path");
    DirectedLaplacian lap = load_laplacian(spec.path);
    if (!validate(lap, true, true).ok) {
      fail(ErrorKind::InvalidSpec, "'" + spec.path + "' is not a strongly connected Eulerian graph");
    }
    return lap;
  }
  if (spec.n < 2) fail(ErrorKind::InvalidSpec, "n must be at least 2");
  if (!(spec.weight_min > 0.0) || spec.weight_max < spec.weight_min) {
    fail(ErrorKind::InvalidSpec, "weights must satisfy 0 < weight_min <= weight_max");
  }
  Rng rng(spec.seed);
  auto draw_weight = [&] { return rng.uniform(spec.weight_min, spec.weight_max); };
  std::vector<Edge> edges;
  const Index n = spec.n;

  switch (spec.kind) {
    case GeneratorKind::Cycle: {
      std::vector<Index> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), Index{0});
      detail::add_cycle(edges, order, spec.weight_min);
      break;
    }
    case GeneratorKind::PermutationSum: {
      if (spec.permutations < 1) fail(ErrorKind::InvalidSpec, "permutations must be >= 1");
      detail::add_cycle(edges, detail::random_permutation(n, rng), draw_weight());
      for (Index p = 1; p < spec.permutations; ++p) {
        // Each cycle of a random permutation gets its own weight.
        const std::vector<Index> perm = detail::random_permutation(n, rng);
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        for (Index start = 0; start < n; ++start) {
          if (seen[static_cast<std::size_t>(start)]) continue;
          std::vector<Index> cyc;
          for (Index v = start; !seen[static_cast<std::size_t>(v)]; v = perm[static_cast<std::size_t>(v)]) {
            seen[static_cast<std::size_t>(v)] = 1;
            cyc.push_back(v);
          }
          if (cyc.size() > 1) detail::add_cycle(edges, cyc, draw_weight());
        }
      }
      break;
    }
    case GeneratorKind::GridCirculation: {
      Index rows = static_cast<Index>(std::sqrt(static_cast<double>(n)));
      while (rows > 1 && n % rows != 0) --rows;
      const Index cols = n / rows;
      if (rows < 3 || cols < 3) {
        fail(ErrorKind::InvalidSpec, "grid-circulation needs n = rows * cols with rows, cols >= 3");
      }
      auto id = [&](Index r, Index c) { return ((r + rows) % rows) * cols + (c + cols) % cols; };
      // Clockwise circulation around every face of the torus.
      for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
          detail::add_cycle(edges, {id(r, c), id(r, c + 1), id(r + 1, c + 1), id(r + 1, c)},
                            draw_weight());
        }
      }
      break;
    }
    case GeneratorKind::File:
      break;
  }
  DirectedLaplacian lap = DirectedLaplacian::from_edges(n, edges);
  const ValidationReport rep = validate(lap, true, true);
  if (!rep.ok) fail(ErrorKind::InvariantViolation, "generated graph failed validation");
  return lap;
}

}  // namespace eulerlu
