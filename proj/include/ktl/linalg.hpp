#ifndef KTL_LINALG_HPP
#define KTL_LINALG_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <random>

namespace ktl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;
using Index = Eigen::Index;

/// 64-bit FNV-1a over the shape and raw bytes of a matrix.
inline std::uint64_t fingerprint(const Matrix& m) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  const std::int64_t rows = m.rows(), cols = m.cols();
  mix(&rows, sizeof rows);
  mix(&cols, sizeof cols);
  mix(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  return h;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

struct SignedLogDet {
  int sign = 0;  // -1, 0, +1
  double log_abs = -std::numeric_limits<double>::infinity();
};

inline SignedLogDet signed_log_det(const Matrix& a) {
  Eigen::PartialPivLU<Matrix> lu(a);
  const Matrix& f = lu.matrixLU();
  SignedLogDet out;
  int sign = static_cast<int>(lu.permutationP().determinant());
  double acc = 0.0;
  for (Index i = 0; i < f.rows(); ++i) {
    const double d = f(i, i);
    if (d == 0.0 || !std::isfinite(d)) return out;
    if (d < 0.0) sign = -sign;
    acc += std::log(std::abs(d));
  }
  out.sign = sign;
  out.log_abs = acc;
  return out;
}

struct FullSvd {
  Matrix u;  // m x m orthogonal
  Vector s;  // descending
  Matrix v;  // m x m orthogonal
};

namespace detail {
inline bool orthogonal_within(const Matrix& q, double tol) {
  return q.allFinite() && (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).norm() <= tol;
}

// Keep the first `keep` columns and fill the rest with an orthonormal basis of
// their complement.
inline Matrix complete_basis(const Matrix& q, Index keep) {
  const Index m = q.rows();
  if (keep == 0) return Matrix::Identity(m, m);
  Eigen::HouseholderQR<Matrix> qr(q.leftCols(keep));
  Matrix full = qr.householderQ() * Matrix::Identity(m, m);
  full.leftCols(keep) = q.leftCols(keep);
  return full;
}
}  // namespace detail

/// Full SVD of a square matrix with orthogonal factors even when the matrix is
/// rank deficient. BDCSVD can return degenerate vectors for exactly-zero
/// singular values; those are replaced by a completion of the well-determined
/// ones, falling back to JacobiSVD if the completion is not orthogonal.
inline FullSvd full_svd(const Matrix& a) {
  const Index m = a.rows();
  const double tol = 1e-8 * std::sqrt(static_cast<double>(std::max<Index>(m, 1)));
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  FullSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  if (detail::orthogonal_within(out.u, tol) && detail::orthogonal_within(out.v, tol)) return out;

  const double cutoff = out.s.size() ? out.s(0) * static_cast<double>(m) * std::numeric_limits<double>::epsilon() : 0.0;
  Index rank = 0;
  while (rank < out.s.size() && out.s(rank) > cutoff) ++rank;
  out.u = detail::complete_basis(out.u, rank);
  out.v = detail::complete_basis(out.v, rank);
  out.s.tail(m - rank).setZero();
  if (detail::orthogonal_within(out.u, tol) && detail::orthogonal_within(out.v, tol)) return out;

  Eigen::JacobiSVD<Matrix> jacobi(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {jacobi.matrixU(), jacobi.singularValues(), jacobi.matrixV()};
}

/// Orthogonal factor of the polar decomposition of a square matrix.
inline Matrix polar_orthogonal(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

/// First `rows` rows of a seeded Haar-style random orthogonal n x n matrix.
///
/// The rows are the leading columns of the Q factor of an n x rows Gaussian
/// matrix, drawn column by column, so the leading rows of the full n x n
/// matrix do not depend on how many rows are requested. When rows == n the
/// last row is negated if needed so the determinant is positive.
inline Matrix random_orthogonal_rows(Index n, Index rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(n, rows);
  for (Index j = 0; j < rows; ++j)
    for (Index i = 0; i < n; ++i) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, rows);
  Matrix out = q.transpose();
  if (rows == n && signed_log_det(out).sign < 0) out.row(n - 1) *= -1.0;
  return out;
}

}  // namespace ktl

#endif  // KTL_LINALG_HPP
