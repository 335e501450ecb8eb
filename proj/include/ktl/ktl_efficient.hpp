#ifndef KTL_KTL_EFFICIENT_HPP
#define KTL_KTL_EFFICIENT_HPP

// Memory-efficient kernel transform learning.
//
// The Gram matrix is factored once as K ~ U diag(lambda) U^T (U: N x r) and
// then dropped. The transform is parameterised as B = B' U^T with B' square
// r x r, so B K = B' diag(lambda) U^T and the transform step is ordinary
// transform learning with the r x r diagonal diag(lambda) as data. Codes live
// in the lifted r x N frame; the reduced-code subproblem
//
//   min_{Z'} ||B' diag(lambda) - Z'||^2 + t^2 ||Z' U^T||_0
//
// is split with a proxy P = Z' U^T and solved by scaled ADMM:
//   P1  Z' <- (B' diag(lambda) + eps (P - D) U) / (1 + eps)
//   P2  P  <- hard_threshold(Z' U^T + D, t / sqrt(eps))
//       D  <- D + Z' U^T - P
// Nothing larger than r x N is allocated after the factorisation.

#include "ktl/error.hpp"
#include "ktl/kernel.hpp"
#include "ktl/ktl_direct.hpp"
#include "ktl/linalg.hpp"
#include "ktl/transform.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace ktl {

struct EigFactors {
  Matrix vectors;  // U, N x r, orthonormal columns
  Vector values;   // r eigenvalues, non-increasing, >= 0 after clamping

  Index rank() const { return vectors.cols(); }
  Index size() const { return vectors.rows(); }
};

enum class EigSolverKind { Dense, Randomized };

struct EigOptions {
  EigSolverKind solver = EigSolverKind::Dense;
  // randomized subspace iteration only
  Index oversample = 20;
  int power_iters = 4;
  std::uint64_t seed = 0;
};

namespace detail {
// Flip each eigenvector so its largest-magnitude entry is positive.
inline void normalize_signs(Matrix& u) {
  for (Index j = 0; j < u.cols(); ++j) {
    Index arg = 0;
    u.col(j).cwiseAbs().maxCoeff(&arg);
    if (u(arg, j) < 0.0) u.col(j) *= -1.0;
  }
}

inline Matrix orthonormalize(const Matrix& y) {
  Eigen::HouseholderQR<Matrix> qr(y);
  return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}
}  // namespace detail

inline EigFactors truncated_eig(const GramMatrix& k, Index r, const EigOptions& opts = {}) {
  const Index n = k.values.rows();
  if (k.values.cols() != n) throw Error(Errc::DimensionMismatch, "Gram matrix must be square");
  if (r < 1 || r > n)
    throw Error(Errc::RankExceedsN, "rank " + std::to_string(r) + " outside [1, " + std::to_string(n) + "]");
  const double trace = k.values.trace();
  const double floor = -1e-8 * std::abs(trace);

  EigFactors out;
  if (opts.solver == EigSolverKind::Dense) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(k.values);
    if (eig.info() != Eigen::Success) throw Error(Errc::NotPositiveSemidefinite, "eigensolver did not converge");
    if (eig.eigenvalues()(0) < floor)
      throw Error(Errc::NotPositiveSemidefinite, "smallest eigenvalue " + std::to_string(eig.eigenvalues()(0)) +
                                                     " below -1e-8 * trace");
    out.values = eig.eigenvalues().tail(r).reverse();
    out.vectors = eig.eigenvectors().rightCols(r).rowwise().reverse();
  } else {
    const Index width = std::min(n, r + std::max<Index>(0, opts.oversample));
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix omega(n, width);
    for (Index j = 0; j < width; ++j)
      for (Index i = 0; i < n; ++i) omega(i, j) = gauss(rng);
    Matrix q = detail::orthonormalize(k.values * omega);
    for (int it = 0; it < opts.power_iters; ++it) q = detail::orthonormalize(k.values * q);
    const Matrix small = q.transpose() * k.values * q;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (small + small.transpose()));
    if (eig.info() != Eigen::Success) throw Error(Errc::NotPositiveSemidefinite, "eigensolver did not converge");
    if (eig.eigenvalues()(0) < floor)
      throw Error(Errc::NotPositiveSemidefinite, "Ritz value below -1e-8 * trace");
    out.values = eig.eigenvalues().tail(r).reverse();
    out.vectors = q * eig.eigenvectors().rightCols(r).rowwise().reverse();
  }
  out.values = out.values.cwiseMax(0.0);
  detail::normalize_signs(out.vectors);
  return out;
}

// ---------------------------------------------------------------- ADMM code step

struct AdmmState {
  Matrix codes_reduced;  // Z', r x r
  Matrix proxy;          // P, r x N (sparse codes in the lifted frame)
  Matrix dual;           // D, r x N (scaled multiplier)
  double epsilon = 1.0;
  int inner_iters = 10;
  std::vector<double> primal_residuals;  // ||Z' U^T - P||_F after each sweep

  void validate(Index r, Index n) const {
    if (!(epsilon > 0.0)) throw Error(Errc::InvalidArgument, "epsilon must be > 0");
    if (inner_iters < 1) throw Error(Errc::InvalidArgument, "inner_iters must be positive");
    if (codes_reduced.rows() != r || codes_reduced.cols() != r || proxy.rows() != r || proxy.cols() != n ||
        dual.rows() != r || dual.cols() != n)
      throw Error(Errc::DimensionMismatch, "ADMM state shapes do not match rank/sample count");
  }
};

/// Z' = B' diag(lambda), P = hard_threshold(Z' U^T, t / sqrt(eps)), D = 0.
inline AdmmState admm_warm_start(const Matrix& b_reduced, const EigFactors& eig, double threshold, double epsilon = 1.0,
                                 int inner_iters = 10) {
  AdmmState s;
  s.epsilon = epsilon;
  s.inner_iters = inner_iters;
  s.codes_reduced = b_reduced * eig.values.asDiagonal();
  s.proxy = hard_threshold(s.codes_reduced * eig.vectors.transpose(), threshold / std::sqrt(epsilon));
  s.dual = Matrix::Zero(s.proxy.rows(), s.proxy.cols());
  return s;
}

/// P1: exact minimiser over Z' of ||B' diag(lambda) - Z'||^2 + eps ||P - Z' U^T - D||^2.
inline Matrix admm_p1(const Matrix& b_reduced, const EigFactors& eig, const Matrix& proxy, const Matrix& dual,
                      double epsilon) {
  return (b_reduced * eig.values.asDiagonal() + epsilon * ((proxy - dual) * eig.vectors)) / (1.0 + epsilon);
}

inline AdmmState admm_code_update(const Matrix& b_reduced, const EigFactors& eig, AdmmState state, double threshold) {
  const Index r = eig.rank();
  if (b_reduced.rows() != r || b_reduced.cols() != r)
    throw Error(Errc::DimensionMismatch, "reduced transform must be r x r");
  state.validate(r, eig.size());
  const double prox_threshold = threshold / std::sqrt(state.epsilon);
  Matrix lifted(r, eig.size());
  for (int it = 0; it < state.inner_iters; ++it) {
    state.codes_reduced = admm_p1(b_reduced, eig, state.proxy, state.dual, state.epsilon);
    lifted.noalias() = state.codes_reduced * eig.vectors.transpose();
    state.proxy = hard_threshold(lifted + state.dual, prox_threshold);
    state.dual += lifted - state.proxy;
    state.primal_residuals.push_back((lifted - state.proxy).norm());
  }
  return state;
}

// ---------------------------------------------------------------- fit

struct EktlOptions {
  double epsilon = 1.0;
  int inner_iters = 10;
  EigOptions eig;
  GramOptions gram;
};

/// ||B' diag(lambda) U^T - P||^2 + lambda (||B'||^2 - log det B') + t^2 ||P||_0.
/// At r = N this is the direct-path objective evaluated at B = B' U^T.
inline double ektl_objective(const Matrix& b_reduced, const EigFactors& eig, const Matrix& proxy, double lambda,
                             double threshold) {
  const SignedLogDet ld = signed_log_det(b_reduced);
  if (ld.sign <= 0) return std::numeric_limits<double>::infinity();
  const Matrix fitted = (b_reduced * eig.values.asDiagonal()) * eig.vectors.transpose();
  const double nnz = static_cast<double>((proxy.array() != 0.0).count());
  return (fitted - proxy).squaredNorm() + lambda * (b_reduced.squaredNorm() - ld.log_abs) +
         threshold * threshold * nnz;
}

/// Initial B' for a given factorisation: the orthogonal polar factor of the
/// first r rows of (B_init U), where B_init is the direct path's N x N
/// initial transform. At r = N this makes B' U^T equal B_init. If the factor
/// has negative determinant, the last eigenvector (and the matching column of
/// B') is negated so log det B' is defined; the eigen-pair is unchanged.
inline Matrix ektl_initial_transform(EigFactors& eig, const TlConfig& cfg) {
  const Index r = eig.rank();
  const Index n = eig.size();
  Matrix seed_rows = cfg.init == InitKind::Identity ? Matrix(eig.vectors.topRows(r))
                                                     : Matrix(random_orthogonal_rows(n, r, cfg.seed) * eig.vectors);
  Matrix b = polar_orthogonal(seed_rows);
  if (signed_log_det(b).sign < 0) {
    b.col(r - 1) *= -1.0;
    eig.vectors.col(r - 1) *= -1.0;
  }
  return b;
}

/// Alternation on a precomputed factorisation. Nothing N x N is allocated here
/// unless the training matrix itself is at least that large.
inline KtlFit fit_ektl_from_eig(const Matrix& x, const KernelSpec& kernel, EigFactors eig, const TlConfig& cfg,
                                const EktlOptions& opts = {}) {
  cfg.validate();
  if (eig.size() != x.cols()) throw Error(Errc::DimensionMismatch, "factorisation size must equal sample count");
  if (!(opts.epsilon > 0.0)) throw Error(Errc::InvalidArgument, "epsilon must be > 0");
  const auto start = std::chrono::steady_clock::now();
  const Index r = eig.rank();

  Matrix b = ektl_initial_transform(eig, cfg);
  const Matrix data = eig.values.asDiagonal() * Matrix::Identity(r, r);
  const TransformSolver solver(data, cfg.lambda);

  KtlFit out;
  AdmmState state = admm_code_update(b, eig, admm_warm_start(b, eig, cfg.threshold, opts.epsilon, opts.inner_iters),
                                     cfg.threshold);
  out.report.objective_trace.push_back(ektl_objective(b, eig, state.proxy, cfg.lambda, cfg.threshold));
  detail::check_finite_objective(out.report.objective_trace.back(), 0);

  for (int it = 1; it <= cfg.max_iters; ++it) {
    // transform step: with U^T U = I, ||B' L U^T - P||^2 = ||B' L - P U||^2 + const
    b = solver.update(state.proxy * eig.vectors);
    state = admm_code_update(b, eig, admm_warm_start(b, eig, cfg.threshold, opts.epsilon, opts.inner_iters),
                             cfg.threshold);
    const double value = ektl_objective(b, eig, state.proxy, cfg.lambda, cfg.threshold);
    detail::check_finite_objective(value, it);
    const double prev = out.report.objective_trace.back();
    out.report.objective_trace.push_back(value);
    out.report.iterations_run = it;
    if (detail::relative_change_below(prev, value, cfg.rel_tol)) {
      out.report.converged = true;
      break;
    }
  }

  out.model.reduced = ReducedTransform{std::move(b), std::move(eig.vectors)};
  out.model.kernel = kernel;
  out.model.train_samples = x;
  out.model.threshold = cfg.threshold;
  out.model.lambda = cfg.lambda;
  out.model.gram_fingerprint = fingerprint(x);
  out.codes = std::move(state.proxy);
  out.report.code_density = nonzero_fraction(out.codes);
  out.report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline KtlFit fit_ektl(const Matrix& x, const KernelSpec& kernel, Index rank, const TlConfig& cfg,
                       const EktlOptions& opts = {}) {
  cfg.validate();
  if (rank < 1 || rank > x.cols())
    throw Error(Errc::RankExceedsN, "rank " + std::to_string(rank) + " outside [1, " + std::to_string(x.cols()) + "]");
  const auto start = std::chrono::steady_clock::now();
  EigFactors eig = [&] {
    const GramMatrix k = gram(x, kernel, opts.gram);
    return truncated_eig(k, rank, opts.eig);
  }();  // K is released here
  KtlFit out = fit_ektl_from_eig(x, kernel, std::move(eig), cfg, opts);
  out.report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// Default rank min(n, N).
inline Index default_rank(const Matrix& x) { return std::min(x.rows(), x.cols()); }

}  // namespace ktl

#endif  // KTL_KTL_EFFICIENT_HPP
