#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eulerlu/dense.hpp"
#include "eulerlu/eulerian_lu.hpp"
#include "eulerlu/lu.hpp"

namespace eulerlu {

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct SolveReport {
  Index iterations = 0;
  std::vector<double> residual_l2;  // ||b - M x_k|| / ||b||, k = 0..iterations
  std::vector<double> error_u;      // ||x_k - x*||_U / ||x*||_U when a reference is known
  std::vector<double> contraction;  // successive ratios of error_u (or residual_l2)
  double median_contraction = 0.0;
  double final_relative_error = 0.0;
  std::string certificate;  // "dense-U_L" or "l2-residual"
  bool converged = false;
  bool projected_rhs = false;
  double seconds = 0.0;
};

struct RichardsonOptions {
  double eta = 1.0;
  Index max_iters = 200;
  /// Stop when the tracked error (U-norm if a reference is given, otherwise
  /// relative l2 residual) drops to tol.
  double tol = 1e-8;
  /// Divergence if the residual reaches this multiple of its running minimum.
  double divergence_factor = 10.0;
};

/// Optional exact-solution reference for U-norm error tracking.
struct ErrorReference {
  Eigen::VectorXd solution;
  dense::DenseMatrix norm;  // PSD matrix defining the seminorm
};

inline double seminorm(const dense::DenseMatrix& u, const Eigen::VectorXd& x) {
  return std::sqrt(std::max(0.0, x.dot(u * x)));
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

/// x_{k+1} = x_k + eta Z (b - M x_k), x_0 = 0.
inline Eigen::VectorXd richardson(const LinearOperator& m, const LinearOperator& z, const Eigen::VectorXd& b,
                                  const RichardsonOptions& opt, SolveReport* report = nullptr,
                                  const ErrorReference* ref = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  const double bnorm = b.norm();
  double ref_norm = 0.0;
  if (ref) {
    ref_norm = seminorm(ref->norm, ref->solution);
    rep.certificate = "dense-U_L";
  } else {
    rep.certificate = "l2-residual";
  }
  auto tracked_error = [&](const Eigen::VectorXd& xk, double rel_res) {
    if (!ref) return rel_res;
    return ref_norm > 0.0 ? seminorm(ref->norm, xk - ref->solution) / ref_norm : seminorm(ref->norm, xk);
  };
  if (bnorm == 0.0) {
    rep.residual_l2.push_back(0.0);
    if (ref) rep.error_u.push_back(0.0);
    rep.converged = true;
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (report) *report = rep;
    return x;
  }
  Eigen::VectorXd r = b;
  double res = 1.0;
  double err = tracked_error(x, res);
  double min_res = res;
  rep.residual_l2.push_back(res);
  if (ref) rep.error_u.push_back(err);
  rep.converged = err <= opt.tol;
  for (Index k = 0; k < opt.max_iters && !rep.converged; ++k) {
    x += opt.eta * z(r);
    r = b - m(x);
    if (!r.allFinite() || !x.allFinite()) fail(ErrorKind::Divergence, "non-finite iterate");
    res = r.norm() / bnorm;
    const double next = tracked_error(x, res);
    rep.contraction.push_back(err > 0.0 ? next / err : 0.0);
    err = next;
    rep.residual_l2.push_back(res);
    if (ref) rep.error_u.push_back(err);
    rep.iterations = k + 1;
    min_res = std::min(min_res, res);
    if (res >= opt.divergence_factor * min_res && res > 1e-300) {
      fail(ErrorKind::Divergence, "residual grew to " + std::to_string(res) + " from a minimum of " +
                                      std::to_string(min_res) + " after " + std::to_string(k + 1) + " iterations");
    }
    rep.converged = err <= opt.tol;
  }
  rep.final_relative_error = err;
  rep.median_contraction = median(rep.contraction);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (report) *report = rep;
  return x;
}

struct SolveConfig {
  LuConfig lu;
  RichardsonOptions richardson;
  /// Above the dense limit the l2 residual must reach eps_solve / kappa_estimate.
  double kappa_estimate = 100.0;
  bool throw_on_failure = true;
};

struct SolveResult {
  Eigen::VectorXd x;
  SolveReport report;
  LuStats build;
};

/// Solves L x = b (b projected orthogonal to 1) by Richardson iteration
/// preconditioned with an approximate LU factorization of L.
inline SolveResult solve_with_factorization(const DirectedLaplacian& lap, const LUFactorization& fact,
                                            const Eigen::VectorXd& b_in, double eps_solve, const SolveConfig& cfg) {
  if (b_in.size() != lap.size()) fail(ErrorKind::DimensionMismatch, "right-hand side length");
  if (!b_in.allFinite()) fail(ErrorKind::NonFinite, "right-hand side");
  SolveResult out;
  Eigen::VectorXd b = b_in;
  const double mean = b.mean();
  out.report.projected_rhs = std::abs(mean) * std::sqrt(static_cast<double>(b.size())) > 1e-12 * std::max(1.0, b.norm());
  project_out_ones(b);

  RichardsonOptions opt = cfg.richardson;
  std::optional<ErrorReference> ref;
  if (lap.size() <= dense::kDenseLimit) {
    const dense::DenseMatrix l = lap.to_dense();
    ref.emplace();
    ref->solution = dense::pinv(l) * b;
    ref->norm = dense::sym(l);
    opt.tol = eps_solve;
  } else {
    opt.tol = eps_solve / cfg.kappa_estimate;
  }
  LinearOperator m = [&](const Eigen::VectorXd& x) { return lap.multiply(x); };
  LinearOperator z = [&](const Eigen::VectorXd& r) { return apply_inverse(fact, r); };
  SolveReport rep;
  out.x = richardson(m, z, b, opt, &rep, ref ? &*ref : nullptr);
  project_out_ones(out.x);
  rep.projected_rhs = out.report.projected_rhs;
  out.report = rep;
  if (!rep.converged && cfg.throw_on_failure) {
    fail(ErrorKind::NotConverged, "error " + std::to_string(rep.final_relative_error) + " after " +
                                      std::to_string(rep.iterations) + " iterations");
  }
  return out;
}

inline SolveResult solve_eulerian(const DirectedLaplacian& lap, const Eigen::VectorXd& b, double eps_solve,
                                  const SolveConfig& cfg, Rng& rng) {
  if (b.size() != lap.size()) fail(ErrorKind::DimensionMismatch, "right-hand side length");
  LuResult built = eulerian_lu(lap, cfg.lu, rng);
  SolveResult out = solve_with_factorization(lap, built.factors, b, eps_solve, cfg);
  out.build = built.stats;
  return out;
}

/// ||F^{1/2} (I_im(L) - Z L) F^{dagger/2}||_2 with Z the materialised
/// apply_inverse operator.
inline double approx_pinv_quality(const dense::DenseMatrix& lap, const LUFactorization& fact,
                                  const dense::DenseMatrix& f) {
  const Index n = lap.rows();
  dense::guard_size(n, "approx_pinv_quality");
  if (fact.n != n || f.rows() != n) fail(ErrorKind::DimensionMismatch, "approx_pinv_quality");
  const dense::DenseMatrix z = dense_inverse(fact);
  const dense::DenseMatrix im = lap * dense::pinv(lap);
  const dense::DenseMatrix e = im - z * lap;
  return dense::spectral_norm(dense::psd_sqrt(f) * e * dense::pinv_sqrt(f));
}

}  // namespace eulerlu
