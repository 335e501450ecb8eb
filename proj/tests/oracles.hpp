#ifndef KTL_TESTS_ORACLES_HPP
#define KTL_TESTS_ORACLES_HPP

// Independent reference computations for the test suites. Nothing here calls
// the library routine it is used to check.

#include "ktl/ktl.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <utility>
#include <vector>

namespace ktl::oracle {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

/// Minimiser of (v - z)^2 + t^2 [z != 0] over z in {0, v}; ties keep v.
inline double l0_prox_brute(double v, double t) {
  const double cost_zero = v * v;
  const double cost_keep = v != 0.0 ? t * t : 0.0;
  return cost_keep <= cost_zero ? v : 0.0;
}

/// Smooth part of the transform objective, with log det from a full-pivot LU
/// determinant instead of the library's partial-pivot log-sum.
inline double smooth_objective(const Matrix& t, const Matrix& x, const Matrix& z, double lambda) {
  const double det = Eigen::FullPivLU<Matrix>(t).determinant();
  if (!(det > 0.0)) return std::numeric_limits<double>::infinity();
  return (t * x - z).squaredNorm() + lambda * (t.squaredNorm() - std::log(det));
}

inline Matrix finite_difference_gradient(const Matrix& t, const Matrix& x, const Matrix& z, double lambda,
                                         double h = 1e-6) {
  Matrix g(t.rows(), t.cols());
  for (Index i = 0; i < t.rows(); ++i)
    for (Index j = 0; j < t.cols(); ++j) {
      Matrix plus = t, minus = t;
      plus(i, j) += h;
      minus(i, j) -= h;
      g(i, j) = (smooth_objective(plus, x, z, lambda) - smooth_objective(minus, x, z, lambda)) / (2.0 * h);
    }
  return g;
}

inline Matrix gram_by_loop(const Matrix& x, const Matrix& y, const KernelSpec& spec) {
  Matrix out(x.cols(), y.cols());
  for (Index i = 0; i < x.cols(); ++i)
    for (Index j = 0; j < y.cols(); ++j) {
      double value = 0.0;
      if (spec.family == KernelFamily::Rbf) {
        double d2 = 0.0;
        for (Index k = 0; k < x.rows(); ++k) d2 += (x(k, i) - y(k, j)) * (x(k, i) - y(k, j));
        value = std::exp(-spec.gamma * d2);
      } else {
        double ip = 0.0;
        for (Index k = 0; k < x.rows(); ++k) ip += x(k, i) * y(k, j);
        value = spec.family == KernelFamily::Linear ? ip : std::pow(spec.gain * ip + spec.coef0, spec.degree);
      }
      out(i, j) = value;
    }
  return out;
}

inline double min_eigenvalue(const Matrix& symmetric) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(symmetric, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

/// Dense least squares for min_Z ||A - Z||^2 + eps ||C - Z U^T||^2, solved row
/// by row from the stacked system [I; sqrt(eps) U] z^T = [a^T; sqrt(eps) c^T].
inline Matrix p1_least_squares(const Matrix& a, const Matrix& c, const Matrix& u, double eps) {
  const Index r = a.cols();
  const Index n = u.rows();
  Matrix stacked(r + n, r);
  stacked.topRows(r) = Matrix::Identity(r, r);
  stacked.bottomRows(n) = std::sqrt(eps) * u;
  Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
  Matrix out(a.rows(), r);
  for (Index i = 0; i < a.rows(); ++i) {
    Vector rhs(r + n);
    rhs.head(r) = a.row(i).transpose();
    rhs.tail(n) = std::sqrt(eps) * c.row(i).transpose();
    out.row(i) = qr.solve(rhs).transpose();
  }
  return out;
}

/// Full sort of (distance, index) pairs, then a vote with smallest-class ties.
inline std::vector<int> knn_brute(const Matrix& train, const std::vector<int>& labels, const Matrix& test, int k) {
  std::vector<int> out;
  for (Index j = 0; j < test.cols(); ++j) {
    std::vector<std::pair<double, Index>> d;
    for (Index i = 0; i < train.cols(); ++i) {
      double s = 0.0;
      for (Index r = 0; r < train.rows(); ++r) s += (train(r, i) - test(r, j)) * (train(r, i) - test(r, j));
      d.emplace_back(s, i);
    }
    std::sort(d.begin(), d.end());
    std::map<int, int> votes;
    for (int i = 0; i < k; ++i) ++votes[labels[static_cast<std::size_t>(d[static_cast<std::size_t>(i)].second)]];
    int best = -1, best_count = -1;
    for (const auto& [label, count] : votes)
      if (count > best_count) best = label, best_count = count;
    out.push_back(best);
  }
  return out;
}

/// IDX fixture built byte by byte.
inline std::vector<std::uint8_t> idx_bytes(std::uint32_t magic, const std::vector<std::uint32_t>& dims,
                                           const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> out;
  auto be = [&out](std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
  };
  be(magic);
  for (auto d : dims) be(d);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

}  // namespace ktl::oracle

#endif  // KTL_TESTS_ORACLES_HPP
