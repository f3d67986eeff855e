#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "eulerlu/dense.hpp"
#include "eulerlu/laplacian.hpp"

namespace eulerlu {

// Sparse LU factors stored as one (pivot, column, row) record per eliminated
// vertex. Step i eliminates order[i]; column i is the pivot column of the
// current Schur approximation (diagonal included, equal to the pivot) and row
// i is the pivot row divided by the pivot (unit diagonal). The last record is
// the 1 x 1 zero block left over by an Eulerian Laplacian: pivot 0, empty
// column, row e_v. Then L ~ sum_i c_i r_i.
struct LUFactorization {
  Index n = 0;
  std::vector<Index> order;
  std::vector<double> pivots;
  std::vector<std::vector<Entry>> columns;
  std::vector<std::vector<Entry>> rows;

  std::size_t steps() const { return order.size(); }

  std::size_t nnz_lower() const {
    std::size_t s = 0;
    for (const auto& c : columns) s += c.size();
    return s;
  }
  std::size_t nnz_upper() const {
    std::size_t s = 0;
    for (const auto& r : rows) s += r.size();
    return s;
  }
  std::size_t nnz() const { return nnz_lower() + nnz_upper(); }

  /// Position of each vertex in the elimination order (-1 if absent).
  std::vector<Index> positions() const {
    std::vector<Index> pos(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < order.size(); ++i) pos[static_cast<std::size_t>(order[i])] = static_cast<Index>(i);
    return pos;
  }

  void append(Index v, double pivot, std::vector<Entry> column, std::vector<Entry> row) {
    order.push_back(v);
    pivots.push_back(pivot);
    columns.push_back(std::move(column));
    rows.push_back(std::move(row));
  }
};

/// Largest pivot magnitude.
inline double max_pivot(const LUFactorization& f) {
  double m = 0.0;
  for (double d : f.pivots) m = std::max(m, std::abs(d));
  return m;
}

/// y = sum_i c_i (r_i . x)
inline Eigen::VectorXd apply_product(const LUFactorization& f, const Eigen::VectorXd& x) {
  if (x.size() != f.n) fail(ErrorKind::DimensionMismatch, "apply_product");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(f.n);
  for (std::size_t i = 0; i < f.steps(); ++i) {
    double t = 0.0;
    for (const Entry& e : f.rows[i]) t += e.value * x(e.index);
    if (t == 0.0) continue;
    for (const Entry& e : f.columns[i]) y(e.index) += e.value * t;
  }
  return y;
}

struct InverseInfo {
  /// |mean(b)| * sqrt(n) before projection, i.e. the removed component.
  double projected_component = 0.0;
  bool projected = false;
};

inline void project_out_ones(Eigen::VectorXd& x) {
  if (x.size() > 0) x.array() -= x.mean();
}

/// Checks that every pivot other than the last is bounded away from zero.
inline void check_pivots(const LUFactorization& f, double rel_tol = 1e-14) {
  const double floor = rel_tol * max_pivot(f);
  for (std::size_t i = 0; i + 1 < f.steps(); ++i) {
    if (!(std::abs(f.pivots[i]) > floor)) {
      fail(ErrorKind::ZeroInteriorPivot, "pivot " + std::to_string(i) + " of vertex " +
                                             std::to_string(f.order[i]) + " is " + std::to_string(f.pivots[i]));
    }
  }
}

/// Pseudoinverse action of the product on 1^perp: forward substitution with
/// the lower factor in elimination order, the free coordinate of the zero
/// pivot set to 0, back substitution with the unit upper factor, and a final
/// projection orthogonal to 1.
inline Eigen::VectorXd apply_inverse(const LUFactorization& f, const Eigen::VectorXd& b,
                                     InverseInfo* info = nullptr) {
  if (b.size() != f.n) fail(ErrorKind::DimensionMismatch, "apply_inverse");
  if (static_cast<Index>(f.steps()) != f.n) fail(ErrorKind::DimensionMismatch, "factorization is incomplete");
  check_pivots(f);
  Eigen::VectorXd w = b;
  InverseInfo local;
  if (f.n > 0) {
    const double mean = w.mean();
    local.projected_component = std::abs(mean) * std::sqrt(static_cast<double>(f.n));
    local.projected = local.projected_component > 1e-12 * std::max(1.0, w.norm());
    w.array() -= mean;
  }
  const std::size_t steps = f.steps();
  std::vector<double> z(steps, 0.0);
  for (std::size_t i = 0; i < steps; ++i) {
    const Index v = f.order[i];
    const double d = f.pivots[i];
    if (d == 0.0) continue;  // the final zero pivot; its coordinate is free
    const double zi = w(v) / d;
    z[i] = zi;
    for (const Entry& e : f.columns[i]) w(e.index) -= e.value * zi;
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(f.n);
  for (std::size_t i = steps; i-- > 0;) {
    const Index v = f.order[i];
    double acc = z[i];
    for (const Entry& e : f.rows[i]) {
      if (e.index != v) acc -= e.value * x(e.index);
    }
    x(v) = acc;
  }
  project_out_ones(x);
  if (info) *info = local;
  return x;
}

/// Dense lower factor: column order[i] holds c_i.
inline dense::DenseMatrix dense_lower(const LUFactorization& f) {
  dense::guard_size(f.n, "dense_lower");
  dense::DenseMatrix l = dense::DenseMatrix::Zero(f.n, f.n);
  for (std::size_t i = 0; i < f.steps(); ++i)
    for (const Entry& e : f.columns[i]) l(e.index, f.order[i]) += e.value;
  return l;
}

/// Dense upper factor: row order[i] holds r_i.
inline dense::DenseMatrix dense_upper(const LUFactorization& f) {
  dense::guard_size(f.n, "dense_upper");
  dense::DenseMatrix u = dense::DenseMatrix::Zero(f.n, f.n);
  for (std::size_t i = 0; i < f.steps(); ++i)
    for (const Entry& e : f.rows[i]) u(f.order[i], e.index) += e.value;
  return u;
}

inline dense::DenseMatrix dense_product(const LUFactorization& f) { return dense_lower(f) * dense_upper(f); }

/// Z = apply_inverse materialised column by column.
inline dense::DenseMatrix dense_inverse(const LUFactorization& f) {
  dense::guard_size(f.n, "dense_inverse");
  dense::DenseMatrix z(f.n, f.n);
  for (Index j = 0; j < f.n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(f.n);
    e(j) = 1.0;
    z.col(j) = apply_inverse(f, e);
  }
  return z;
}

/// Reorders a square matrix so that index order[i] becomes i.
inline dense::DenseMatrix permute(const dense::DenseMatrix& m, const std::vector<Index>& order) {
  const Index k = static_cast<Index>(order.size());
  dense::DenseMatrix p(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) p(i, j) = m(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  return p;
}

}  // namespace eulerlu
