#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "eulerlu/common.hpp"

namespace eulerlu {

/// Directed edge src -> dst. In the Laplacian it lands at L(dst, src) = -weight
/// and adds weight to the out-degree L(src, src).
struct Edge {
  Index src = 0;
  Index dst = 0;
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// One stored off-diagonal entry of a row or column.
struct Entry {
  Index index = 0;
  double value = 0.0;
};

struct BuildStats {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_merged = 0;
};

// Directed Laplacian L = D - A^T with columns summing to zero. Off-diagonals
// are kept twice, once grouped by row and once by column, so the pivot row and
// pivot column of any vertex are both available in O(deg). Immutable after
// construction.
class DirectedLaplacian {
 public:
  DirectedLaplacian() = default;

  /// Builds L from weighted edges. Parallel edges are summed, self-loops are
  /// dropped and counted in `stats`.
  static DirectedLaplacian from_edges(Index n, std::span<const Edge> edges,
                                      BuildStats* stats = nullptr) {
    if (n < 0) fail(ErrorKind::InvalidSpec, "negative vertex count");
    BuildStats local;
    std::vector<Edge> kept;
    kept.reserve(edges.size());
    for (const Edge& e : edges) {
      if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) {
        fail(ErrorKind::IndexOutOfRange,
             "edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                 ") outside [0, " + std::to_string(n) + ")");
      }
      if (!std::isfinite(e.weight)) fail(ErrorKind::NonFinite, "edge weight");
      if (e.weight < 0.0) {
        fail(ErrorKind::NegativeWeight,
             "edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                 ") has weight " + std::to_string(e.weight));
      }
      if (e.src == e.dst) {
        ++local.self_loops_dropped;
        continue;
      }
      if (e.weight == 0.0) continue;
      kept.push_back(e);
    }
    std::sort(kept.begin(), kept.end(), [](const Edge& a, const Edge& b) {
      return a.dst != b.dst ? a.dst < b.dst : a.src < b.src;
    });

    DirectedLaplacian lap;
    lap.n_ = n;
    lap.diag_.assign(static_cast<std::size_t>(n), 0.0);
    lap.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
    // Row dst holds the in-edges of dst: L(dst, src) = -w(src, dst).
    for (std::size_t k = 0; k < kept.size();) {
      Edge merged = kept[k];
      std::size_t j = k + 1;
      while (j < kept.size() && kept[j].src == merged.src &&
             kept[j].dst == merged.dst) {
        merged.weight += kept[j].weight;
        ++local.duplicates_merged;
        ++j;
      }
      lap.row_entries_.push_back({merged.src, -merged.weight});
      ++lap.row_ptr_[static_cast<std::size_t>(merged.dst) + 1];
      lap.diag_[static_cast<std::size_t>(merged.src)] += merged.weight;
      k = j;
    }
    std::partial_sum(lap.row_ptr_.begin(), lap.row_ptr_.end(),
                     lap.row_ptr_.begin());
    lap.build_columns();
    if (stats) *stats = local;
    return lap;
  }

  Index size() const { return n_; }

  /// Number of stored off-diagonal entries, i.e. distinct directed edges.
  std::size_t edge_count() const { return row_entries_.size(); }

  /// Stored entries including the nonzero diagonal.
  std::size_t nnz() const {
    return row_entries_.size() +
           static_cast<std::size_t>(std::count_if(
               diag_.begin(), diag_.end(), [](double d) { return d != 0.0; }));
  }

  double diag(Index i) const { return diag_[static_cast<std::size_t>(i)]; }
  std::span<const double> diagonal() const { return diag_; }

  double max_diag() const {
    double m = 0.0;
    for (double d : diag_) m = std::max(m, std::abs(d));
    return m;
  }

  /// Off-diagonal entries L(i, j), j != i, sorted by j. These are the in-edges
  /// of i with negated weights.
  std::span<const Entry> row(Index i) const {
    const auto b = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i)]);
    const auto e = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i) + 1]);
    return {row_entries_.data() + b, e - b};
  }

  /// Off-diagonal entries L(i, j), i != j, sorted by i. These are the
  /// out-edges of j with negated weights.
  std::span<const Entry> col(Index j) const {
    const auto b = static_cast<std::size_t>(col_ptr_[static_cast<std::size_t>(j)]);
    const auto e = static_cast<std::size_t>(col_ptr_[static_cast<std::size_t>(j) + 1]);
    return {col_entries_.data() + b, e - b};
  }

  double operator()(Index i, Index j) const {
    if (i == j) return diag(i);
    auto r = row(i);
    auto it = std::lower_bound(r.begin(), r.end(), j,
                               [](const Entry& e, Index k) { return e.index < k; });
    return (it != r.end() && it->index == j) ? it->value : 0.0;
  }

  /// Edge list sorted by (src, dst).
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count());
    for (Index j = 0; j < n_; ++j) {
      for (const Entry& e : col(j)) out.push_back({j, e.index, -e.value});
    }
    return out;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
    for (Index i = 0; i < n_; ++i) {
      m(i, i) = diag(i);
      for (const Entry& e : row(i)) m(i, e.index) = e.value;
    }
    return m;
  }

  Eigen::SparseMatrix<double> to_sparse() const {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(nnz());
    for (Index i = 0; i < n_; ++i) {
      if (diag(i) != 0.0) trips.emplace_back(i, i, diag(i));
      for (const Entry& e : row(i)) trips.emplace_back(i, e.index, e.value);
    }
    Eigen::SparseMatrix<double> m(n_, n_);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
  }

  /// y = L x
  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const {
    if (x.size() != n_) fail(ErrorKind::DimensionMismatch, "multiply");
    Eigen::VectorXd y(n_);
    for (Index i = 0; i < n_; ++i) {
      double acc = diag(i) * x[i];
      for (const Entry& e : row(i)) acc += e.value * x[e.index];
      y[i] = acc;
    }
    return y;
  }

  /// y = L^T x
  Eigen::VectorXd multiply_transpose(const Eigen::VectorXd& x) const {
    if (x.size() != n_) fail(ErrorKind::DimensionMismatch, "multiply_transpose");
    Eigen::VectorXd y(n_);
    for (Index j = 0; j < n_; ++j) {
      double acc = diag(j) * x[j];
      for (const Entry& e : col(j)) acc += e.value * x[e.index];
      y[j] = acc;
    }
    return y;
  }

 private:
  void build_columns() {
    col_ptr_.assign(static_cast<std::size_t>(n_) + 1, 0);
    for (const Entry& e : row_entries_) ++col_ptr_[static_cast<std::size_t>(e.index) + 1];
    std::partial_sum(col_ptr_.begin(), col_ptr_.end(), col_ptr_.begin());
    col_entries_.resize(row_entries_.size());
    std::vector<Index> fill(col_ptr_.begin(), col_ptr_.end() - 1);
    for (Index i = 0; i < n_; ++i) {
      for (const Entry& e : row(i)) {
        col_entries_[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.index)]++)] = {i, e.value};
      }
    }
  }

  Index n_ = 0;
  std::vector<double> diag_;
  std::vector<Index> row_ptr_{0};
  std::vector<Entry> row_entries_;
  std::vector<Index> col_ptr_{0};
  std::vector<Entry> col_entries_;
};

inline DirectedLaplacian from_edge_list(Index n, std::span<const Edge> edges,
                                        BuildStats* stats = nullptr) {
  return DirectedLaplacian::from_edges(n, edges, stats);
}

struct ValidationReport {
  double column_sum_defect = 0.0;  // max_i |sum_j L(j, i)|
  double row_sum_defect = 0.0;     // max_i |sum_j L(i, j)|
  std::size_t sign_violations = 0;
  bool eulerian = false;
  bool strongly_connected = false;
  bool directed_laplacian = false;
  /// All requested properties hold.
  bool ok = false;
};

namespace detail {

inline bool reaches_all(Index n, const DirectedLaplacian& lap, bool forward) {
  if (n == 0) return true;
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<Index> stack{0};
  seen[0] = 1;
  Index count = 1;
  while (!stack.empty()) {
    const Index u = stack.back();
    stack.pop_back();
    // Out-neighbours of u live in column u; in-neighbours in row u.
    for (const Entry& e : forward ? lap.col(u) : lap.row(u)) {
      if (!seen[static_cast<std::size_t>(e.index)]) {
        seen[static_cast<std::size_t>(e.index)] = 1;
        ++count;
        stack.push_back(e.index);
      }
    }
  }
  return count == n;
}

}  // namespace detail

inline bool is_strongly_connected(const DirectedLaplacian& lap) {
  return detail::reaches_all(lap.size(), lap, true) &&
         detail::reaches_all(lap.size(), lap, false);
}

/// Structural report. Sums are compared against tol * max_i L(i, i).
inline ValidationReport validate(const DirectedLaplacian& lap,
                                 bool require_eulerian = true,
                                 bool require_strongly_connected = false,
                                 double rel_tol = 1e-12) {
  ValidationReport rep;
  const Index n = lap.size();
  const double scale = lap.max_diag();
  const double tol = rel_tol * (scale > 0.0 ? scale : 1.0);
  for (Index i = 0; i < n; ++i) {
    if (lap.diag(i) < 0.0) ++rep.sign_violations;
    double rs = lap.diag(i);
    for (const Entry& e : lap.row(i)) {
      if (e.value > 0.0) ++rep.sign_violations;
      rs += e.value;
    }
    double cs = lap.diag(i);
    for (const Entry& e : lap.col(i)) cs += e.value;
    rep.row_sum_defect = std::max(rep.row_sum_defect, std::abs(rs));
    rep.column_sum_defect = std::max(rep.column_sum_defect, std::abs(cs));
  }
  rep.directed_laplacian = rep.sign_violations == 0 && rep.column_sum_defect <= tol;
  rep.eulerian = rep.directed_laplacian && rep.row_sum_defect <= tol;
  rep.strongly_connected = is_strongly_connected(lap);
  rep.ok = rep.directed_laplacian && (!require_eulerian || rep.eulerian) &&
           (!require_strongly_connected || rep.strongly_connected);
  return rep;
}

/// U_L = (L + L^T) / 2.
inline Eigen::SparseMatrix<double> undirectification(const DirectedLaplacian& lap) {
  Eigen::SparseMatrix<double> m = lap.to_sparse();
  Eigen::SparseMatrix<double> mt = m.transpose();
  Eigen::SparseMatrix<double> u = 0.5 * (m + mt);
  u.prune(0.0);
  return u;
}

}  // namespace eulerlu
