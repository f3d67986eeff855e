#pragma once

// Dense ground truth for small instances: pseudoinverses, exact Schur
// complements, the asymmetric approximation norm and the F-norm diagnostics.
// Everything here is O(n^3) and guarded to n <= kDenseLimit.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "eulerlu/laplacian.hpp"

namespace eulerlu::dense {

using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;

inline constexpr Index kDenseLimit = 2048;
inline constexpr double kEps = std::numeric_limits<double>::epsilon();

/// Singular values below this times the largest count as zero. n * eps alone
/// lets cancellation noise through on small matrices.
inline double rank_cutoff(Index n, double top) {
  return std::max(static_cast<double>(n) * kEps, 1e-13) * top;
}

inline void guard_size(Index n, const char* what) {
  if (n > kDenseLimit) {
    fail(ErrorKind::TooLarge, std::string(what) + ": n = " + std::to_string(n) +
                                  " exceeds the dense limit " + std::to_string(kDenseLimit));
  }
}

inline void check_finite(const DenseMatrix& m, const char* what) {
  if (!m.allFinite()) fail(ErrorKind::NonFinite, what);
}

inline DenseMatrix sym(const DenseMatrix& m) { return 0.5 * (m + m.transpose()); }

inline double spectral_norm(const DenseMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<DenseMatrix> svd(m);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

/// Moore-Penrose pseudoinverse; singular values at or below rank_cutoff of
/// max(sigma_max, scale) count as zero. Pass the norm of the matrix m was
/// derived from as `scale` when m may be pure rounding noise.
inline DenseMatrix pinv(const DenseMatrix& m, double scale = 0.0) {
  check_finite(m, "pinv input");
  guard_size(std::max(m.rows(), m.cols()), "pinv");
  if (m.size() == 0) return DenseMatrix::Zero(m.cols(), m.rows());
  Eigen::BDCSVD<DenseMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = rank_cutoff(std::max(m.rows(), m.cols()), std::max(scale, s.size() ? s(0) : 0.0));
  DenseVector inv = DenseVector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Eigen-decomposition of a symmetric matrix with a numerical rank cut.
struct SymmetricSpectrum {
  DenseVector values;   // ascending
  DenseMatrix vectors;  // columns
  double cutoff = 0.0;  // |lambda| <= cutoff is treated as zero

  explicit SymmetricSpectrum(const DenseMatrix& s) {
    check_finite(s, "symmetric spectrum input");
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sym(s));
    values = es.eigenvalues();
    vectors = es.eigenvectors();
    const double top = values.size() ? values.cwiseAbs().maxCoeff() : 0.0;
    cutoff = rank_cutoff(s.rows(), top);
  }

  /// Orthonormal basis of the image (columns with |lambda| > cutoff).
  DenseMatrix image_basis() const { return select(true); }
  DenseMatrix kernel_basis() const { return select(false); }

  /// f applied to the nonzero eigenvalues, zero on the kernel.
  template <typename Fn>
  DenseMatrix apply(Fn fn) const {
    DenseVector d = DenseVector::Zero(values.size());
    for (Index i = 0; i < values.size(); ++i) {
      if (std::abs(values(i)) > cutoff) d(i) = fn(values(i));
    }
    return vectors * d.asDiagonal() * vectors.transpose();
  }

 private:
  DenseMatrix select(bool image) const {
    std::vector<Index> cols;
    for (Index i = 0; i < values.size(); ++i) {
      if ((std::abs(values(i)) > cutoff) == image) cols.push_back(i);
    }
    DenseMatrix b(vectors.rows(), static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) b.col(static_cast<Index>(k)) = vectors.col(cols[k]);
    return b;
  }
};

/// A^{dagger/2} for symmetric PSD A (negative noise eigenvalues are dropped).
inline DenseMatrix pinv_sqrt(const DenseMatrix& a) {
  SymmetricSpectrum sp(a);
  return sp.apply([](double l) { return l > 0.0 ? 1.0 / std::sqrt(l) : 0.0; });
}

inline DenseMatrix psd_sqrt(const DenseMatrix& a) {
  SymmetricSpectrum sp(a);
  return sp.apply([](double l) { return l > 0.0 ? std::sqrt(l) : 0.0; });
}

inline double min_eigenvalue(const DenseMatrix& s) {
  if (s.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sym(s), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_eigenvalue(const DenseMatrix& s) {
  if (s.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sym(s), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

/// Default PSD slack: 1e-9 * (1 + ||m||_2).
inline double psd_tolerance(const DenseMatrix& m, double rel = 1e-9) {
  return rel * (1.0 + spectral_norm(m));
}

struct PsdComparisonResult {
  double min_eigenvalue = 0.0;  // of (B - A)
  double tolerance = 0.0;
  bool pass = false;
};

/// Checks A <= B in the Loewner order: lambda_min(B - A) >= -tol.
inline PsdComparisonResult psd_leq(const DenseMatrix& a, const DenseMatrix& b,
                                   double rel_tol = 1e-9) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) fail(ErrorKind::DimensionMismatch, "psd_leq");
  const DenseMatrix diff = sym(b - a);
  PsdComparisonResult r;
  r.min_eigenvalue = min_eigenvalue(diff);
  r.tolerance = rel_tol * (1.0 + std::max(spectral_norm(sym(a)), spectral_norm(sym(b))));
  r.pass = r.min_eigenvalue >= -r.tolerance;
  return r;
}

/// Full n x n Schur complement after eliminating `eliminated`; rows and
/// columns of eliminated indices are zero.
inline DenseMatrix schur_complement(const DenseMatrix& m, std::span<const Index> eliminated) {
  const Index n = m.rows();
  if (m.cols() != n) fail(ErrorKind::DimensionMismatch, "schur_complement needs a square matrix");
  guard_size(n, "schur_complement");
  std::vector<char> in_f(static_cast<std::size_t>(n), 0);
  for (Index v : eliminated) {
    if (v < 0 || v >= n) fail(ErrorKind::IndexOutOfRange, "schur_complement index");
    in_f[static_cast<std::size_t>(v)] = 1;
  }
  std::vector<Index> f, c;
  for (Index i = 0; i < n; ++i) (in_f[static_cast<std::size_t>(i)] ? f : c).push_back(i);
  if (f.empty()) return m;

  auto block = [&](const std::vector<Index>& r, const std::vector<Index>& s) {
    DenseMatrix b(static_cast<Index>(r.size()), static_cast<Index>(s.size()));
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t j = 0; j < s.size(); ++j)
        b(static_cast<Index>(i), static_cast<Index>(j)) = m(r[i], s[j]);
    return b;
  };
  const DenseMatrix mff = block(f, f);
  Eigen::FullPivLU<DenseMatrix> lu(mff);
  if (!lu.isInvertible() || lu.rcond() < static_cast<double>(f.size()) * kEps * 16.0) {
    fail(ErrorKind::SingularPivotBlock, "eliminated block is singular");
  }
  const DenseMatrix sc = block(c, c) - block(c, f) * lu.solve(block(f, c));
  DenseMatrix out = DenseMatrix::Zero(n, n);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) out(c[i], c[j]) = sc(static_cast<Index>(i), static_cast<Index>(j));
  return out;
}

/// Orthogonal projector onto ker(m)^perp (the row space of m).
inline DenseMatrix row_space_projector(const DenseMatrix& m, double scale = 0.0) {
  return pinv(m, scale) * m;
}

/// Projected coordinate restriction of M^dagger onto the kept set C:
/// P_S (M^dagger)_CC P_{S^T} with S the Schur complement onto C, returned
/// as a |C| x |C| matrix.
inline DenseMatrix projected_restriction(const DenseMatrix& m, std::span<const Index> kept) {
  const Index n = m.rows();
  std::vector<char> in_c(static_cast<std::size_t>(n), 0);
  for (Index v : kept) in_c[static_cast<std::size_t>(v)] = 1;
  std::vector<Index> f, c;
  for (Index i = 0; i < n; ++i) (in_c[static_cast<std::size_t>(i)] ? c : f).push_back(i);
  const DenseMatrix full = schur_complement(m, f);
  DenseMatrix s(static_cast<Index>(c.size()), static_cast<Index>(c.size()));
  DenseMatrix mp = pinv(m);
  DenseMatrix mpcc(s.rows(), s.cols());
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      s(static_cast<Index>(i), static_cast<Index>(j)) = full(c[i], c[j]);
      mpcc(static_cast<Index>(i), static_cast<Index>(j)) = mp(c[i], c[j]);
    }
  }
  const double scale = spectral_norm(m);
  return row_space_projector(s, scale) * mpcc * row_space_projector(s.transpose(), scale);
}

/// ||U_A^{dagger/2} (A - B) U_A^{dagger/2}||_2 after checking that U_A is PSD
/// and that ker(U_A) is inside the left and right kernels of A - B.
inline double asym_approx_error(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != a.cols() || a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorKind::DimensionMismatch, "asym_approx_error");
  }
  check_finite(a, "asym_approx_error A");
  check_finite(b, "asym_approx_error B");
  guard_size(a.rows(), "asym_approx_error");
  const DenseMatrix u = sym(a);
  SymmetricSpectrum sp(u);
  const double unorm = sp.values.size() ? sp.values.cwiseAbs().maxCoeff() : 0.0;
  if (sp.values.size() && sp.values(0) < -1e-9 * (1.0 + unorm)) {
    fail(ErrorKind::NotPsd, "U_A has eigenvalue " + std::to_string(sp.values(0)));
  }
  const DenseMatrix diff = a - b;
  const DenseMatrix ker = sp.kernel_basis();
  if (ker.cols() > 0) {
    const double scale = 1.0 + std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    const double leak = std::max((diff * ker).cwiseAbs().maxCoeff(),
                                 (diff.transpose() * ker).cwiseAbs().maxCoeff());
    if (leak > 1e-9 * scale) {
      fail(ErrorKind::KernelMismatch, "ker(U_A) not contained in ker(A - B); leak " + std::to_string(leak));
    }
  }
  const DenseMatrix h = sp.apply([](double l) { return l > 0.0 ? 1.0 / std::sqrt(l) : 0.0; });
  return spectral_norm(h * diff * h);
}

/// Range of the generalized eigenvalues of (A, B) on im(B):
/// lambda(B^{dagger/2} A B^{dagger/2}) restricted to the image of B.
inline std::pair<double, double> relative_spectrum(const DenseMatrix& a, const DenseMatrix& b) {
  SymmetricSpectrum sp(b);
  const DenseMatrix q = sp.image_basis();
  if (q.cols() == 0) return {0.0, 0.0};
  DenseVector inv_sqrt(q.cols());
  Index k = 0;
  for (Index i = 0; i < sp.values.size(); ++i) {
    if (std::abs(sp.values(i)) > sp.cutoff) inv_sqrt(k++) = 1.0 / std::sqrt(std::max(sp.values(i), sp.cutoff));
  }
  const DenseMatrix core = inv_sqrt.asDiagonal() * (q.transpose() * sym(a) * q) * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(core, Eigen::EigenvaluesOnly);
  return {es.eigenvalues()(0), es.eigenvalues()(es.eigenvalues().size() - 1)};
}

/// Local undirectification at vertex v: the Schur complement of the
/// undirected star at v, plus the diagonal D_local with entries
/// (in(u) + out(u)) / 2 over the neighbours u.
struct LocalUndirectification {
  DenseMatrix u_local;
  DenseMatrix d_local;
};

inline LocalUndirectification local_undirectification(const DirectedLaplacian& lap, Index v) {
  const Index n = lap.size();
  guard_size(n, "local_undirectification");
  if (v < 0 || v >= n) fail(ErrorKind::IndexOutOfRange, "local_undirectification vertex");
  // a(u) = (w(u -> v) + w(v -> u)) / 2 = -U_L(u, v)
  DenseVector a = DenseVector::Zero(n);
  for (const Entry& e : lap.row(v)) a(e.index) += -0.5 * e.value;
  for (const Entry& e : lap.col(v)) a(e.index) += -0.5 * e.value;
  const double d = lap.diag(v);
  if (!(d > 0.0)) fail(ErrorKind::IsolatedVertex, "vertex " + std::to_string(v) + " has zero degree");
  LocalUndirectification out;
  out.d_local = a.asDiagonal();
  // star(U_L, v) - U_L(:, v) U_L(v, :) / U_L(v, v); the v row and column cancel.
  out.u_local = out.d_local - (a * a.transpose()) / d;
  return out;
}

/// F = sum_p theta_p * U_p
inline DenseMatrix build_F(std::span<const std::pair<double, DenseMatrix>> snapshots) {
  if (snapshots.empty()) fail(ErrorKind::DimensionMismatch, "build_F needs at least one snapshot");
  const Index n = snapshots.front().second.rows();
  DenseMatrix f = DenseMatrix::Zero(n, n);
  double theta_sum = 0.0;
  for (const auto& [theta, u] : snapshots) {
    if (u.rows() != n || u.cols() != n) fail(ErrorKind::DimensionMismatch, "build_F snapshot size");
    if ((u - u.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + u.cwiseAbs().maxCoeff())) {
      fail(ErrorKind::InvariantViolation, "build_F snapshot is not symmetric");
    }
    f += theta * u;
    theta_sum += theta;
  }
  if (std::abs(theta_sum - 1.0) > 1e-9) {
    fail(ErrorKind::InvariantViolation, "build_F weights sum to " + std::to_string(theta_sum));
  }
  return f;
}

struct DiagnosticsReport {
  double eps_f = 0.0;          // ||F^{dagger/2} (L - LU) F^{dagger/2}||_2
  double gamma = 0.0;          // lambda_min of F^{dagger/2} (LU)^T F^dagger (LU) F^{dagger/2} on im(F)
  double f_over_u_min = 0.0;   // lambda_min(U_L^{dagger/2} F U_L^{dagger/2}) on im(U_L)
  double f_over_u_max = 0.0;   // lambda_max of the same
  double eps_u = 0.0;          // the same error measured against U_L
};

inline DiagnosticsReport diagnose_factorization(const DenseMatrix& lap, const DenseMatrix& lu_product,
                                                const DenseMatrix& f) {
  const Index n = lap.rows();
  guard_size(n, "diagnose_factorization");
  if (lu_product.rows() != n || f.rows() != n || lap.cols() != n || lu_product.cols() != n ||
      f.cols() != n) {
    fail(ErrorKind::DimensionMismatch, "diagnose_factorization");
  }
  SymmetricSpectrum fs(f);
  const double fnorm = fs.values.size() ? fs.values.cwiseAbs().maxCoeff() : 0.0;
  if (fs.values.size() && fs.values(0) < -1e-9 * (1.0 + fnorm)) fail(ErrorKind::NotPsd, "F");
  DiagnosticsReport rep;
  const DenseMatrix fh = fs.apply([](double l) { return l > 0.0 ? 1.0 / std::sqrt(l) : 0.0; });
  const DenseMatrix fp = fs.apply([](double l) { return l > 0.0 ? 1.0 / l : 0.0; });
  rep.eps_f = spectral_norm(fh * (lap - lu_product) * fh);

  const DenseMatrix q = fs.image_basis();
  if (q.cols() > 0) {
    const DenseMatrix g = q.transpose() * fh * lu_product.transpose() * fp * lu_product * fh * q;
    rep.gamma = min_eigenvalue(g);
  }
  const DenseMatrix u = sym(lap);
  const auto [lo, hi] = relative_spectrum(f, u);
  rep.f_over_u_min = lo;
  rep.f_over_u_max = hi;
  const DenseMatrix uh = pinv_sqrt(u);
  rep.eps_u = spectral_norm(uh * (lap - lu_product) * uh);
  return rep;
}

}  // namespace eulerlu::dense
