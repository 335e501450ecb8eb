#include "ktl/ktl_efficient.hpp"
#include "ktl/dataset.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace ktl;

namespace {

GramMatrix wrap(Matrix k) {
  GramMatrix g;
  g.values = std::move(k);
  return g;
}

EigFactors random_factors(Index n, Index r, std::mt19937_64& rng) {
  EigFactors eig;
  eig.vectors = random_orthogonal_rows(n, r, rng()).transpose();
  eig.values.resize(r);
  for (Index i = 0; i < r; ++i) eig.values(i) = static_cast<double>(r - i);
  return eig;
}

}  // namespace

TEST(TruncatedEig, DiagonalCase) {
  Matrix k = Matrix::Zero(3, 3);
  k.diagonal() << 3, 2, 1;
  const EigFactors eig = truncated_eig(wrap(k), 2);
  EXPECT_LE((eig.values - Eigen::Vector2d(3, 2)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((eig.vectors - Matrix::Identity(3, 2)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(TruncatedEig, DroppedEigenvalueIdentityAndFullRank) {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(6, 25, rng);
  const GramMatrix k = gram(x, KernelSpec::polynomial(2));
  const Eigen::SelfAdjointEigenSolver<Matrix> ref(k.values, Eigen::EigenvaluesOnly);
  for (Index r : {3, 10, 20}) {
    const EigFactors eig = truncated_eig(k, r);
    const double residual = (k.values - eig.vectors * eig.values.asDiagonal() * eig.vectors.transpose()).squaredNorm();
    const double dropped = ref.eigenvalues().head(25 - r).squaredNorm();
    EXPECT_NEAR(residual, dropped, 1e-8 * k.values.squaredNorm());
    for (Index i = 1; i < r; ++i) EXPECT_LE(eig.values(i), eig.values(i - 1));
    EXPECT_GE(eig.values.minCoeff(), 0.0);
    EXPECT_LE(eig.values.sum(), k.values.trace() * (1.0 + 1e-8));
  }
  const EigFactors full = truncated_eig(k, 25);
  EXPECT_LE((k.values - full.vectors * full.values.asDiagonal() * full.vectors.transpose()).norm(),
            1e-8 * k.values.norm());
}

TEST(TruncatedEig, Errors) {
  try {
    truncated_eig(wrap(Matrix::Identity(3, 3)), 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RankExceedsN);
  }
  Matrix indefinite = Matrix::Identity(3, 3);
  indefinite(2, 2) = -1.0;
  try {
    truncated_eig(wrap(indefinite), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotPositiveSemidefinite);
  }
}

TEST(TruncatedEig, RandomizedAgreesWithDense) {
  std::mt19937_64 rng(2);
  // degree-2 features of 3-dim data span at most 10 dimensions, so K has a
  // clear spectral cut that the sketch captures
  const Matrix x = oracle::random_matrix(3, 120, rng);
  const GramMatrix k = gram(x, KernelSpec::polynomial(2));
  EigOptions opts;
  opts.solver = EigSolverKind::Randomized;
  opts.seed = 5;
  const EigFactors dense = truncated_eig(k, 8);
  const EigFactors fast = truncated_eig(k, 8, opts);
  EXPECT_LE((dense.values - fast.values).cwiseAbs().maxCoeff(), 1e-8 * dense.values(0));
  const Matrix pd = dense.vectors * dense.vectors.transpose();
  const Matrix pf = fast.vectors * fast.vectors.transpose();
  EXPECT_LE((pd - pf).norm(), 1e-6);
}

TEST(Admm, P1MatchesDenseLeastSquares) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Index r = 2, n = 3;
    const EigFactors eig = random_factors(n, r, rng);
    const Matrix b = oracle::random_matrix(r, r, rng);
    const Matrix p = oracle::random_matrix(r, n, rng);
    const Matrix d = oracle::random_matrix(r, n, rng);
    const double eps = 0.3 + trial;
    const Matrix z = admm_p1(b, eig, p, d, eps);
    const Matrix expected = oracle::p1_least_squares(b * eig.values.asDiagonal(), p - d, eig.vectors, eps);
    EXPECT_LE((z - expected).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Admm, P2IsHardThresholdAtScaledLevel) {
  std::mt19937_64 rng(4);
  const EigFactors eig = random_factors(7, 3, rng);
  const Matrix b = oracle::random_matrix(3, 3, rng);
  AdmmState s = admm_warm_start(b, eig, 0.8, 2.0, 1);
  s.dual = oracle::random_matrix(3, 7, rng, 0.3);
  const Matrix dual_before = s.dual;
  const AdmmState next = admm_code_update(b, eig, s, 0.8);
  const Matrix lifted = next.codes_reduced * eig.vectors.transpose();
  const Matrix arg = lifted + dual_before;
  for (Index i = 0; i < arg.rows(); ++i)
    for (Index j = 0; j < arg.cols(); ++j)
      EXPECT_EQ(next.proxy(i, j), oracle::l0_prox_brute(arg(i, j), 0.8 / std::sqrt(2.0)));
  EXPECT_LE((next.dual - (arg - next.proxy)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Admm, PrimalResidualSettlesAfterFiveSweeps) {
  // Full rank: the lift is invertible and the split residual decays. Below
  // full rank, fixed-penalty ADMM on the l0 term can settle into a short cycle
  // instead, so the regression bound is pinned to this regime.
  std::mt19937_64 rng(5);
  const Matrix x = oracle::random_matrix(6, 30, rng);
  EigFactors eig = truncated_eig(gram(x, KernelSpec::polynomial(2)), 30);
  const Matrix b = ektl_initial_transform(eig, TlConfig{});
  const AdmmState s = admm_code_update(b, eig, admm_warm_start(b, eig, 0.5, 1.0, 50), 0.5);
  ASSERT_EQ(s.primal_residuals.size(), 50u);
  EXPECT_GT(s.primal_residuals.front(), 1e-3);
  for (std::size_t k = 6; k < s.primal_residuals.size(); ++k)
    EXPECT_LE(s.primal_residuals[k], s.primal_residuals[k - 1] + 1e-6) << k;
  EXPECT_LE(s.primal_residuals.back(), 1e-8);
}

TEST(Admm, ShapeChecks) {
  std::mt19937_64 rng(6);
  const EigFactors eig = random_factors(5, 2, rng);
  AdmmState s = admm_warm_start(Matrix::Identity(2, 2), eig, 0.1);
  EXPECT_THROW(admm_code_update(Matrix::Identity(3, 3), eig, s, 0.1), Error);
  s.dual.resize(2, 4);
  EXPECT_THROW(admm_code_update(Matrix::Identity(2, 2), eig, s, 0.1), Error);
}

TEST(FitEktl, FullRankMatchesDirectPath) {
  const Index n = 40;
  const SynthResult s = synth_dataset(16, n + 20, 0.3, 0.01, 40);
  const Matrix x = s.data.samples.leftCols(n), test = s.data.samples.rightCols(20);
  TlConfig cfg;
  cfg.threshold = 0.5;
  cfg.max_iters = 30;
  const KernelSpec spec = KernelSpec::polynomial(4);
  const KtlFit direct = fit_ktl(x, spec, cfg);
  const KtlFit efficient = fit_ektl(x, spec, n, cfg);
  const double od = direct.report.final_objective(), oe = efficient.report.final_objective();
  EXPECT_LE(std::abs(od - oe), 1e-4 * (1.0 + std::abs(od)));
  const Matrix ed = ktl_encode(direct.model, test), ee = ktl_encode(efficient.model, test);
  EXPECT_LE((ed - ee).norm(), 1e-6 * ed.norm());
}

TEST(FitEktl, ShapesAndEncodeAssociation) {
  const SynthResult s = synth_dataset(5, 60, 0.4, 0.05, 7);
  TlConfig cfg;
  cfg.threshold = 0.3;
  cfg.max_iters = 10;
  const KtlFit fit = fit_ektl(s.data.samples, KernelSpec::polynomial(3), 8, cfg);
  ASSERT_TRUE(fit.model.reduced.has_value());
  EXPECT_FALSE(fit.model.is_direct());
  EXPECT_EQ(fit.model.reduced->b.rows(), 8);
  EXPECT_EQ(fit.model.reduced->b.cols(), 8);
  EXPECT_EQ(fit.model.reduced->basis.rows(), 60);
  EXPECT_EQ(fit.model.reduced->basis.cols(), 8);
  EXPECT_EQ(fit.codes.rows(), 8);
  EXPECT_EQ(fit.codes.cols(), 60);
  EXPECT_NO_THROW(fit.model.validate());

  std::mt19937_64 rng(7);
  const Matrix test = oracle::random_matrix(5, 10, rng, 0.3);
  const Matrix k = cross_gram(s.data.samples, test, fit.model.kernel);
  const Matrix right = fit.model.reduced->b * (fit.model.reduced->basis.transpose() * k);
  const Matrix left = (fit.model.reduced->b * fit.model.reduced->basis.transpose()) * k;
  EXPECT_LE((right - left).norm(), 1e-10 * (1.0 + right.norm()));
  EXPECT_EQ(ktl_encode(fit.model, test), hard_threshold(right, cfg.threshold));
  EXPECT_EQ(ktl_encode(fit.model, test).rows(), 8);
}

TEST(FitEktl, TransformStepIsExactForFixedProxy) {
  // ||B' diag(l) U^T - P||^2 = ||B' diag(l) - P U||^2 + ||P (I - U U^T)||^2, so
  // the reduced update minimises the full objective over B' with P fixed.
  std::mt19937_64 rng(8);
  const Matrix x = oracle::random_matrix(5, 40, rng);
  EigFactors eig = truncated_eig(gram(x, KernelSpec::polynomial(3)), 7);
  const Matrix p = hard_threshold(oracle::random_matrix(7, 40, rng, 3.0), 1.0);
  const Matrix b = transform_update(Matrix(eig.values.asDiagonal()), p * eig.vectors, 0.5);
  const double base = ektl_objective(b, eig, p, 0.5, 1.0);
  for (int d = 0; d < 50; ++d) {
    Matrix dir = oracle::random_matrix(7, 7, rng);
    dir /= dir.norm();
    EXPECT_GE(ektl_objective(b + 1e-3 * dir, eig, p, 0.5, 1.0) - base, -1e-9 * std::abs(base));
  }
}

TEST(FitEktl, RankErrors) {
  const Matrix x = Matrix::Random(3, 5);
  try {
    fit_ektl(x, KernelSpec::linear(), 6, TlConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RankExceedsN);
  }
  EXPECT_EQ(default_rank(x), 3);
}
