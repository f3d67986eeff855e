#pragma once

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <vector>

#include "eulerlu/laplacian.hpp"
#include "eulerlu/vertex_elim.hpp"

namespace eulerlu {

// Mutable weighted digraph used while eliminating. Vertices keep their
// global indices; eliminated vertices stay as isolated, dead slots.
class WorkGraph {
 public:
  WorkGraph() = default;

  explicit WorkGraph(const DirectedLaplacian& lap) { load(lap); }

  void load(const DirectedLaplacian& lap) {
    const std::size_t n = static_cast<std::size_t>(lap.size());
    const std::vector<char> alive = alive_.size() == n ? alive_ : std::vector<char>(n, 1);
    out_.assign(n, {});
    in_.assign(n, {});
    outdeg_.assign(n, 0.0);
    indeg_.assign(n, 0.0);
    nbrs_.assign(n, 0);
    alive_ = alive;
    alive_count_ = static_cast<Index>(std::count(alive_.begin(), alive_.end(), 1));
    nbr_total_ = 0;
    edges_ = 0;
    for (const Edge& e : lap.edges()) add_weight(e.src, e.dst, e.weight);
  }

  Index size() const { return static_cast<Index>(out_.size()); }
  Index alive_count() const { return alive_count_; }
  bool alive(Index v) const { return alive_[static_cast<std::size_t>(v)] != 0; }

  std::vector<Index> alive_vertices() const {
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(alive_count_));
    for (Index v = 0; v < size(); ++v) if (alive(v)) out.push_back(v);
    return out;
  }

  double out_degree(Index v) const { return outdeg_[static_cast<std::size_t>(v)]; }
  double in_degree(Index v) const { return indeg_[static_cast<std::size_t>(v)]; }

  /// Number of distinct in- or out-neighbours.
  Index neighbour_count(Index v) const { return nbrs_[static_cast<std::size_t>(v)]; }

  double average_neighbour_count() const {
    return alive_count_ > 0 ? static_cast<double>(nbr_total_) / static_cast<double>(alive_count_) : 0.0;
  }

  std::size_t edge_count() const { return edges_; }

  /// Off-diagonal entries plus nonzero diagonal entries of the Laplacian.
  std::size_t nnz() const {
    std::size_t d = 0;
    for (double x : outdeg_) if (x != 0.0) ++d;
    return edges_ + d;
  }

  double weight(Index a, Index b) const {
    const auto& m = out_[static_cast<std::size_t>(a)];
    auto it = m.find(b);
    return it == m.end() ? 0.0 : it->second;
  }

  /// Adds w to edge a -> b. Self loops are ignored: they would add the
  /// same amount to both L(a, a) and the off-diagonal, which cancel.
  void add_weight(Index a, Index b, double w) {
    if (a == b || w == 0.0) return;
    auto& ma = out_[static_cast<std::size_t>(a)];
    auto [it, inserted] = ma.try_emplace(b, 0.0);
    if (inserted) {
      ++edges_;
      if (!has_edge(b, a)) link(a, b, +1);
    }
    it->second += w;
    in_[static_cast<std::size_t>(b)][a] = it->second;
    outdeg_[static_cast<std::size_t>(a)] += w;
    indeg_[static_cast<std::size_t>(b)] += w;
  }

  /// Star of v with entries sorted by vertex.
  EliminationStar star(Index v) const {
    EliminationStar s;
    for (const auto& [u, w] : in_[static_cast<std::size_t>(v)]) s.in_weights.push_back({u, w});
    for (const auto& [u, w] : out_[static_cast<std::size_t>(v)]) s.out_weights.push_back({u, w});
    auto by_index = [](const Entry& x, const Entry& y) { return x.index < y.index; };
    std::sort(s.in_weights.begin(), s.in_weights.end(), by_index);
    std::sort(s.out_weights.begin(), s.out_weights.end(), by_index);
    s.pivot = outdeg_[static_cast<std::size_t>(v)];
    return s;
  }

  /// Deletes every edge at v and marks it dead.
  void remove_vertex(Index v) {
    const std::size_t sv = static_cast<std::size_t>(v);
    for (const auto& [u, w] : out_[sv]) {
      in_[static_cast<std::size_t>(u)].erase(v);
      indeg_[static_cast<std::size_t>(u)] -= w;
      --edges_;
    }
    for (const auto& [u, w] : in_[sv]) {
      out_[static_cast<std::size_t>(u)].erase(v);
      outdeg_[static_cast<std::size_t>(u)] -= w;
      --edges_;
    }
    std::vector<Index> touched;
    for (const auto& [u, w] : out_[sv]) touched.push_back(u);
    for (const auto& [u, w] : in_[sv]) touched.push_back(u);
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (Index u : touched) {
      --nbrs_[static_cast<std::size_t>(u)];
      nbr_total_ -= 2;
    }
    out_[sv].clear();
    in_[sv].clear();
    outdeg_[sv] = indeg_[sv] = 0.0;
    nbrs_[sv] = 0;
    if (alive_[sv]) {
      alive_[sv] = 0;
      --alive_count_;
    }
  }

  /// Edges in (src, dst) order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edges_);
    for (Index a = 0; a < size(); ++a) {
      const std::size_t first = out.size();
      for (const auto& [b, w] : out_[static_cast<std::size_t>(a)]) out.push_back({a, b, w});
      std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
                [](const Edge& x, const Edge& y) { return x.dst < y.dst; });
    }
    return out;
  }

  DirectedLaplacian to_laplacian() const {
    const std::vector<Edge> e = edges();
    return DirectedLaplacian::from_edges(size(), e);
  }

  /// Largest |out - in| over the given vertices, relative to the largest degree.
  double balance_defect(const std::vector<Index>& vertices) const {
    double worst = 0.0;
    for (Index v : vertices) {
      worst = std::max(worst, std::abs(outdeg_[static_cast<std::size_t>(v)] - indeg_[static_cast<std::size_t>(v)]));
    }
    return worst;
  }

  double max_degree() const {
    double m = 0.0;
    for (double d : outdeg_) m = std::max(m, d);
    return m;
  }

 private:
  bool has_edge(Index a, Index b) const { return out_[static_cast<std::size_t>(a)].count(b) != 0; }

  void link(Index a, Index b, int delta) {
    nbrs_[static_cast<std::size_t>(a)] += delta;
    nbrs_[static_cast<std::size_t>(b)] += delta;
    nbr_total_ += 2 * delta;
  }

  std::vector<std::unordered_map<Index, double>> out_;
  std::vector<std::unordered_map<Index, double>> in_;
  std::vector<double> outdeg_;
  std::vector<double> indeg_;
  std::vector<Index> nbrs_;
  std::vector<char> alive_;
  Index alive_count_ = 0;
  Index nbr_total_ = 0;
  std::size_t edges_ = 0;
};

}  // namespace eulerlu
