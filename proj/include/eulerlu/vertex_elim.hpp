#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "eulerlu/dense.hpp"
#include "eulerlu/laplacian.hpp"
#include "eulerlu/weighted_sampler.hpp"

namespace eulerlu {

/// Star of a pivot v: in_weights holds (u, w(u -> v)), out_weights holds
/// (u, w(v -> u)), pivot is L(v, v).
struct EliminationStar {
  std::vector<Entry> in_weights;
  std::vector<Entry> out_weights;
  double pivot = 0.0;

  double in_total() const {
    double s = 0.0;
    for (const Entry& e : in_weights) s += e.value;
    return s;
  }
  double out_total() const {
    double s = 0.0;
    for (const Entry& e : out_weights) s += e.value;
    return s;
  }
};

/// Triples (src, dst, weight) meaning a new edge src -> dst. Rows of the
/// sample are indexed by the in side, columns by the out side, so row sums
/// reproduce the in-weights and column sums the out-weights.
using SparseBipartiteSample = std::vector<Edge>;

inline EliminationStar make_star(const DirectedLaplacian& lap, Index v) {
  EliminationStar star;
  for (const Entry& e : lap.row(v)) star.in_weights.push_back({e.index, -e.value});
  for (const Entry& e : lap.col(v)) star.out_weights.push_back({e.index, -e.value});
  star.pivot = lap.diag(v);
  return star;
}

struct SveOptions {
  /// Leftover mass at termination below tol * d is dropped, above it is an
  /// error. Entries that fall below a hundredth of this are zeroed en route.
  double residual_tol = 1e-12;
};

// Iterative form of the recursive pairing: take the smallest live entry on
// either side, pair it with a partner on the other side drawn proportionally
// to weight, emit the pair and subtract its mass from both sides.
inline SparseBipartiteSample single_vertex_elim(const EliminationStar& star, Rng& rng,
                                                const SveOptions& opt = {}) {
  SparseBipartiteSample out;
  const std::size_t nl = star.in_weights.size();
  const std::size_t nr = star.out_weights.size();
  std::vector<double> lw(nl), rw(nr);
  double ls = 0.0, rs = 0.0;
  for (std::size_t i = 0; i < nl; ++i) {
    lw[i] = star.in_weights[i].value;
    if (!(lw[i] >= 0.0) || !std::isfinite(lw[i])) fail(ErrorKind::InvariantViolation, "negative in-weight");
    ls += lw[i];
  }
  for (std::size_t j = 0; j < nr; ++j) {
    rw[j] = star.out_weights[j].value;
    if (!(rw[j] >= 0.0) || !std::isfinite(rw[j])) fail(ErrorKind::InvariantViolation, "negative out-weight");
    rs += rw[j];
  }
  const double scale = std::max({ls, rs, star.pivot});
  if (scale == 0.0) return out;
  const double tol = opt.residual_tol * scale;
  if (std::abs(ls - rs) > tol) {
    fail(ErrorKind::InvariantViolation, "in and out mass differ: " + std::to_string(ls) + " vs " +
                                            std::to_string(rs));
  }
  const double crumb = 1e-2 * tol;

  WeightedSampler lsamp(lw), rsamp(rw);
  // (value, side, local index); side 0 = in, 1 = out, so ties favour the in
  // side and then the lower position. Positions follow the input order,
  // which make_star keeps sorted by vertex.
  using Key = std::tuple<double, int, std::size_t>;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> heap;
  for (std::size_t i = 0; i < nl; ++i) if (lw[i] > 0.0) heap.emplace(lw[i], 0, i);
  for (std::size_t j = 0; j < nr; ++j) if (rw[j] > 0.0) heap.emplace(rw[j], 1, j);
  out.reserve(nl + nr);

  while (!heap.empty()) {
    const auto [value, side, i] = heap.top();
    heap.pop();
    WeightedSampler& own = side == 0 ? lsamp : rsamp;
    WeightedSampler& other = side == 0 ? rsamp : lsamp;
    if (own.weight(i) != value || value == 0.0) continue;  // stale
    if (!(other.total() > crumb)) {
      heap.emplace(value, side, i);
      break;
    }
    const std::size_t j = other.sample(rng);
    const double mass = value;
    own.set(i, 0.0);
    const double left = other.weight(j) - mass;
    other.set(j, left > crumb ? left : 0.0);
    if (left > crumb) heap.emplace(left, 1 - side, j);
    if (side == 0) {
      out.push_back({star.in_weights[i].index, star.out_weights[j].index, mass});
    } else {
      out.push_back({star.in_weights[j].index, star.out_weights[i].index, mass});
    }
  }
  const double leftover = std::max(lsamp.total(), rsamp.total());
  double live = 0.0;
  for (std::size_t i = 0; i < nl; ++i) live += lsamp.weight(i);
  for (std::size_t j = 0; j < nr; ++j) live += rsamp.weight(j);
  if (std::max(leftover, live) > tol) {
    fail(ErrorKind::InvariantViolation, "unpaired mass " + std::to_string(live) + " left at termination");
  }
  return out;
}

/// Exact biclique l r^T / s as triples (self pairs included).
inline SparseBipartiteSample exact_biclique(const EliminationStar& star) {
  SparseBipartiteSample out;
  const double s = star.in_total();
  if (s == 0.0) return out;
  for (const Entry& a : star.in_weights)
    for (const Entry& b : star.out_weights)
      if (a.value > 0.0 && b.value > 0.0) out.push_back({a.index, b.index, a.value * b.value / s});
  return out;
}

/// Dense error X = l r^T / s - A over an n-vertex index space.
inline dense::DenseMatrix elimination_error_matrix(const EliminationStar& star,
                                                   const SparseBipartiteSample& sample, Index n) {
  dense::DenseMatrix x = dense::DenseMatrix::Zero(n, n);
  const double s = star.in_total();
  if (s > 0.0) {
    for (const Entry& a : star.in_weights)
      for (const Entry& b : star.out_weights) x(a.index, b.index) += a.value * b.value / s;
  }
  for (const Edge& e : sample) x(e.src, e.dst) -= e.weight;
  return x;
}

/// U_local and D_local built from the star alone: a = (l + r) / 2,
/// D_local = diag(a), U_local = D_local - a a^T / d.
inline dense::LocalUndirectification star_local_undirectification(const EliminationStar& star, Index n) {
  dense::DenseVector a = dense::DenseVector::Zero(n);
  for (const Entry& e : star.in_weights) a(e.index) += 0.5 * e.value;
  for (const Entry& e : star.out_weights) a(e.index) += 0.5 * e.value;
  const double d = star.pivot > 0.0 ? star.pivot : a.sum();
  if (!(d > 0.0)) fail(ErrorKind::IsolatedVertex, "empty star");
  dense::LocalUndirectification out;
  out.d_local = a.asDiagonal();
  out.u_local = out.d_local - (a * a.transpose()) / d;
  return out;
}

/// ||N^{dagger/2} X N^{dagger/2}||_2 for the sample error X, where N is the
/// supplied PSD normaliser (U_local or D_local).
inline double elimination_error_norm(const EliminationStar& star, const SparseBipartiteSample& sample,
                                     const dense::DenseMatrix& normaliser, double kernel_tol = 1e-9) {
  const Index n = normaliser.rows();
  dense::guard_size(n, "elimination_error_norm");
  const dense::DenseMatrix x = elimination_error_matrix(star, sample, n);
  const double scale = std::max(1.0, star.in_total());
  const double row_defect = (x * dense::DenseVector::Ones(n)).cwiseAbs().maxCoeff();
  const double col_defect = (x.transpose() * dense::DenseVector::Ones(n)).cwiseAbs().maxCoeff();
  if (std::max(row_defect, col_defect) > kernel_tol * scale) {
    fail(ErrorKind::KernelMismatch, "X 1 != 0 or X^T 1 != 0 (defect " +
                                        std::to_string(std::max(row_defect, col_defect)) + ")");
  }
  const dense::DenseMatrix h = dense::pinv_sqrt(normaliser);
  return dense::spectral_norm(h * x * h);
}

}  // namespace eulerlu
