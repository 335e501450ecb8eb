#ifndef KTL_TRANSFORM_HPP
#define KTL_TRANSFORM_HPP

// Square sparsifying transform learning.
//
// Minimises  ||T X - Z||_F^2 + lambda (||T||_F^2 - log det T) + t^2 ||Z||_0
// by alternating the exact code step (hard thresholding at t) with the exact
// closed-form transform step.

#include "ktl/error.hpp"
#include "ktl/linalg.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace ktl {

enum class InitKind { Identity, SeededRandomOrthogonal };

struct TlConfig {
  double threshold = 0.1;
  double lambda = 1.0;
  int max_iters = 50;
  double rel_tol = 1e-6;
  InitKind init = InitKind::Identity;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(threshold >= 0.0)) throw Error(Errc::InvalidArgument, "threshold must be >= 0");
    if (!(lambda > 0.0)) throw Error(Errc::InvalidArgument, "lambda must be > 0");
    if (max_iters < 1) throw Error(Errc::InvalidArgument, "max_iters must be positive");
    if (!(rel_tol > 0.0)) throw Error(Errc::InvalidArgument, "rel_tol must be > 0");
  }
};

struct FitReport {
  std::vector<double> objective_trace;  // entry 0 is the initial point, then one per sweep
  int iterations_run = 0;
  bool converged = false;
  double wall_time_seconds = 0.0;
  double code_density = 0.0;

  double final_objective() const {
    return objective_trace.empty() ? std::numeric_limits<double>::quiet_NaN() : objective_trace.back();
  }
};

struct TransformModel {
  Matrix matrix;  // m x m
  double threshold = 0.0;
  double lambda = 1.0;
  // Optional n x m orthonormal basis applied before the transform when the
  // model was fitted on principal-component-reduced data.
  Matrix projection;

  Index code_dim() const { return matrix.rows(); }
  Index input_dim() const { return projection.size() ? projection.rows() : matrix.cols(); }
};

// ---------------------------------------------------------------- code step

inline Matrix hard_threshold(const Matrix& m, double t) {
  return m.unaryExpr([t](double v) { return std::abs(v) >= t ? v : 0.0; });
}

inline double nonzero_fraction(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return static_cast<double>((m.array() != 0.0).count()) / static_cast<double>(m.size());
}

// ---------------------------------------------------------------- transform step

/// Closed-form transform update with the Cholesky factor of X X^T + lambda I
/// held fixed, so repeated updates against the same data only pay for the
/// m x m SVD.
///
/// With X X^T + lambda I = L L^T and L^{-1} X Z^T = Q S R^T,
///   T = 0.5 R (S + (S^2 + 2 lambda I)^{1/2}) Q^T L^{-1}.
/// When det(Q R^T) < 0 the smallest singular direction is reflected so the
/// result stays in the det T > 0 domain of the log-determinant barrier.
class TransformSolver {
 public:
  TransformSolver(Matrix&&, double) = delete;  // holds a reference to the data
  TransformSolver(const Matrix& data, double lambda) : data_(data), lambda_(lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw Error(Errc::CholeskyFailure, "lambda must be positive and finite, got " + std::to_string(lambda));
    Matrix gram = Matrix::Identity(data.rows(), data.rows()) * lambda;
    gram.selfadjointView<Eigen::Lower>().rankUpdate(data);
    chol_.compute(gram);
    if (chol_.info() != Eigen::Success || !chol_.matrixLLT().allFinite())
      throw Error(Errc::CholeskyFailure, "X X^T + lambda I is not positive definite");
  }

  Matrix update(const Matrix& codes) const {
    if (codes.rows() != data_.rows() || codes.cols() != data_.cols())
      throw Error(Errc::DimensionMismatch, "codes must have the shape of the data");
    const Index m = data_.rows();
    Matrix y = data_ * codes.transpose();
    chol_.matrixL().solveInPlace(y);  // L^{-1} X Z^T
    if (!y.allFinite()) throw Error(Errc::CholeskyFailure, "non-finite values in L^{-1} X Z^T");

    Matrix q, r;
    Vector s;
    if (y.isZero(0.0)) {
      q = Matrix::Identity(m, m);
      r = Matrix::Identity(m, m);
      s = Vector::Zero(m);
    } else {
      FullSvd svd = full_svd(y);
      q = std::move(svd.u);
      r = std::move(svd.v);
      s = std::move(svd.s);
    }
    const int orientation = signed_log_det(q).sign * signed_log_det(r).sign;
    Vector diag(m);
    for (Index i = 0; i < m; ++i) diag(i) = 0.5 * (s(i) + std::sqrt(s(i) * s(i) + 2.0 * lambda_));
    if (orientation < 0) {
      const Index last = m - 1;  // singular values are sorted, so this is the smallest
      diag(last) = 0.5 * (-s(last) + std::sqrt(s(last) * s(last) + 2.0 * lambda_));
      r.col(last) *= -1.0;
    }
    // Q^T L^{-1} = (L^{-T} Q)^T
    chol_.matrixU().solveInPlace(q);
    return r * diag.asDiagonal() * q.transpose();
  }

  const Matrix& data() const { return data_; }
  double lambda() const { return lambda_; }

 private:
  const Matrix& data_;
  double lambda_;
  Eigen::LLT<Matrix> chol_;
};

inline Matrix transform_update(const Matrix& x, const Matrix& z, double lambda) {
  return TransformSolver(x, lambda).update(z);
}

// ---------------------------------------------------------------- objective / gradient

/// +infinity outside the det T > 0 domain.
inline double tl_objective(const Matrix& t, const Matrix& x, const Matrix& z, double lambda, double threshold) {
  if (t.rows() != t.cols()) throw Error(Errc::DimensionMismatch, "transform must be square");
  if (t.cols() != x.rows() || z.rows() != t.rows() || z.cols() != x.cols())
    throw Error(Errc::DimensionMismatch, "T, X, Z shapes are inconsistent");
  const SignedLogDet ld = signed_log_det(t);
  if (ld.sign <= 0) return std::numeric_limits<double>::infinity();
  const double fit = (t * x - z).squaredNorm();
  const double nnz = static_cast<double>((z.array() != 0.0).count());
  return fit + lambda * (t.squaredNorm() - ld.log_abs) + threshold * threshold * nnz;
}

/// Gradient in T of ||T X - Z||^2 + lambda (||T||^2 - log det T).
inline Matrix tl_gradient_T(const Matrix& t, const Matrix& x, const Matrix& z, double lambda) {
  if (t.rows() != t.cols() || t.cols() != x.rows() || z.rows() != t.rows() || z.cols() != x.cols())
    throw Error(Errc::DimensionMismatch, "T, X, Z shapes are inconsistent");
  Eigen::FullPivLU<Matrix> lu(t);
  if (!lu.isInvertible()) throw Error(Errc::SingularTransform, "transform is singular");
  const Matrix inv_t = lu.inverse();
  return 2.0 * (t * x - z) * x.transpose() + 2.0 * lambda * t - lambda * inv_t.transpose();
}

// ---------------------------------------------------------------- alternation

struct TransformFit {
  TransformModel model;
  Matrix codes;
  FitReport report;
};

inline Matrix initial_transform(Index m, const TlConfig& cfg) {
  if (cfg.init == InitKind::Identity) return Matrix::Identity(m, m);
  return random_orthogonal_rows(m, m, cfg.seed);
}

namespace detail {
inline bool relative_change_below(double prev, double cur, double tol) {
  return std::abs(prev - cur) <= tol * std::max(std::abs(prev), std::numeric_limits<double>::min());
}

inline void check_finite_objective(double value, int iteration) {
  if (std::isnan(value) || value == -std::numeric_limits<double>::infinity())
    throw Error(Errc::NonFiniteObjective, "objective is " + std::to_string(value) + " at iteration " +
                                              std::to_string(iteration));
}
}  // namespace detail

/// Alternating minimisation starting from cfg.init. The trace starts with the
/// objective after the first code step; each sweep is a transform update
/// followed by a code update, so the returned codes are always
/// hard_threshold(T X, t) for the returned T.
inline TransformFit fit_transform_from(const Matrix& x, Matrix initial, const TlConfig& cfg) {
  cfg.validate();
  if (!x.allFinite()) throw Error(Errc::InvalidArgument, "data contains non-finite values");
  if (initial.rows() != x.rows() || initial.cols() != x.rows())
    throw Error(Errc::DimensionMismatch, "initial transform must be m x m for m-row data");
  const auto start = std::chrono::steady_clock::now();

  TransformFit fit;
  fit.model.matrix = std::move(initial);
  fit.model.threshold = cfg.threshold;
  fit.model.lambda = cfg.lambda;

  const TransformSolver solver(x, cfg.lambda);
  const double penalty = cfg.threshold * cfg.threshold;
  auto objective = [&](const Matrix& t, const Matrix& tx, const Matrix& z) {
    const SignedLogDet ld = signed_log_det(t);
    if (ld.sign <= 0) return std::numeric_limits<double>::infinity();
    const double nnz = static_cast<double>((z.array() != 0.0).count());
    return (tx - z).squaredNorm() + cfg.lambda * (t.squaredNorm() - ld.log_abs) + penalty * nnz;
  };

  Matrix tx = fit.model.matrix * x;
  fit.codes = hard_threshold(tx, cfg.threshold);
  fit.report.objective_trace.push_back(objective(fit.model.matrix, tx, fit.codes));
  detail::check_finite_objective(fit.report.objective_trace.back(), 0);

  for (int it = 1; it <= cfg.max_iters; ++it) {
    fit.model.matrix = solver.update(fit.codes);
    tx.noalias() = fit.model.matrix * x;
    fit.codes = hard_threshold(tx, cfg.threshold);
    const double value = objective(fit.model.matrix, tx, fit.codes);
    detail::check_finite_objective(value, it);
    const double prev = fit.report.objective_trace.back();
    fit.report.objective_trace.push_back(value);
    fit.report.iterations_run = it;
    if (detail::relative_change_below(prev, value, cfg.rel_tol)) {
      fit.report.converged = true;
      break;
    }
  }
  fit.report.code_density = nonzero_fraction(fit.codes);
  fit.report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return fit;
}

inline TransformFit fit_transform(const Matrix& x, const TlConfig& cfg) {
  cfg.validate();
  return fit_transform_from(x, initial_transform(x.rows(), cfg), cfg);
}

inline Matrix tl_encode(const TransformModel& model, const Matrix& x) {
  if (x.rows() != model.input_dim())
    throw Error(Errc::DimensionMismatch, "input dim " + std::to_string(x.rows()) + " vs model input dim " +
                                             std::to_string(model.input_dim()));
  if (model.projection.size()) return hard_threshold(model.matrix * (model.projection.transpose() * x), model.threshold);
  return hard_threshold(model.matrix * x, model.threshold);
}

inline Vector tl_encode(const TransformModel& model, const Vector& x) {
  return tl_encode(model, Matrix(x)).col(0);
}

}  // namespace ktl

#endif  // KTL_TRANSFORM_HPP
