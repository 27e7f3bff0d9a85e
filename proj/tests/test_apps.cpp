#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "lrsqrt/gaussian.hpp"
#include "lrsqrt/gls.hpp"
#include "lrsqrt/polar.hpp"
#include "lrsqrt/shampoo.hpp"
#include "lrsqrt/zca.hpp"
#include "test_util.hpp"

namespace lrsqrt {
namespace {

using testing::rel_fro;

SolverConfig tight() {
  SolverConfig cfg;
  cfg.tol = 1e-12;
  return cfg;
}

double spectral(const Matrix& m) { return DenseSymmetric::from_computed(m).spectral_norm(); }

TEST(Zca, ZeroSpikeIsScaledIdentity) {
  SpikedCovariance cov{4.0, Matrix::Zero(6, 2)};
  const ZcaWhitener w = zca_fit(cov, 2);
  EXPECT_EQ(w.U.width(), 0);
  EXPECT_LE((w.dense() - 0.5 * Matrix::Identity(6, 6)).norm(), 1e-15);
}

TEST(Zca, UnitSpike) {
  SpikedCovariance cov{1.0, Vector::Unit(5, 0)};
  const ZcaWhitener w = zca_fit(cov, 1, tight());
  Matrix expected = Matrix::Zero(5, 5);
  expected(0, 0) = 1.0 - 1.0 / std::sqrt(2.0);
  EXPECT_EQ(w.U.sign(), -1);
  EXPECT_LE((-w.U.dense() - expected).norm(), 1e-10);
}

TEST(Zca, SpikedCovarianceMatchesDense) {
  Rng rng(91);
  SpikedCovariance cov{0.5, rng.gaussian(100, 3)};
  const ZcaWhitener w = zca_fit(cov, 12, tight());
  const Matrix exact = testing::dense_power(cov.dense(), -0.5);
  EXPECT_LE(rel_fro(w.dense(), exact), 1e-5);
}

TEST(Zca, ApplyMatchesDenseMultiplyAndCountsFlops) {
  Rng rng(92);
  const Index p = 30, n = 40;
  SpikedCovariance cov{2.0, rng.gaussian(p, 2)};
  const ZcaWhitener w = zca_fit(cov, 6);
  const Matrix data = rng.gaussian(n, p);
  long long flops = 0;
  const Matrix out = zca_apply(w, data, &flops);
  EXPECT_LE(rel_fro(out, data * w.dense()), 1e-10);
  EXPECT_EQ(flops, n * p + 2 * n * p * w.U.width());
}

TEST(Zca, IdentityAndRankZeroWhiteners) {
  Rng rng(93);
  const Matrix data = rng.gaussian(5, 4);
  ZcaWhitener id;
  id.sigma = 1.0;
  id.U = LowRankFactor::empty(4, -1);
  EXPECT_EQ(zca_apply(id, data), data);
  ZcaWhitener scaled = id;
  scaled.sigma = 2.0;
  EXPECT_LE((zca_apply(scaled, data) - 0.5 * data).norm(), 1e-15);
  EXPECT_THROW(zca_apply(id, Matrix::Ones(2, 3)), DimensionError);
}

TEST(Zca, WhitenedSampleCovarianceApproachesIdentity) {
  Rng rng(94);
  const Index p = 20, count = 20000;
  SpikedCovariance cov{1.0, rng.gaussian(p, 2)};
  const ZcaWhitener w = zca_fit(cov, 10, tight());
  const Matrix root = testing::dense_power(cov.dense(), 0.5);
  const Matrix data = rng.gaussian(count, p) * root;
  const Matrix white = zca_apply(w, data);
  const Matrix sample_cov = white.transpose() * white / static_cast<double>(count);
  EXPECT_LT(spectral(sample_cov - Matrix::Identity(p, p)), 0.1);
}

Matrix dense_polar_P(const Matrix& X) { return testing::dense_power(X.transpose() * X, 0.5); }

TEST(Polar, RemovingZeroRowChangesNothing) {
  Rng rng(95);
  const Index n = 12, d = 3;
  Eigen::HouseholderQR<Matrix> qr(rng.gaussian(n, d));
  Matrix X = 2.0 * (qr.householderQ() * Matrix::Identity(n, d));
  X.row(4).setZero();
  const PolarState s = polar_init(X);
  const PolarState t = polar_downdate(s, 4, {});
  EXPECT_LE((t.dense_P() - s.dense_P()).norm(), 1e-12);
  Matrix u_expected(n - 1, d);
  u_expected << s.U_factor.topRows(4), s.U_factor.bottomRows(n - 5);
  EXPECT_LE((t.U_factor - u_expected).norm(), 1e-12);
}

TEST(Polar, DowndateMatchesDenseSvd) {
  Rng rng(96);
  const Index n = 50, d = 5;
  const Matrix X = rng.gaussian(n, d);
  PolarStepOptions opts;
  opts.rank = 4;
  const PolarState t = polar_downdate(polar_init(X), n - 1, opts);
  const Matrix x_minus = X.topRows(n - 1);
  Eigen::JacobiSVD<Matrix> svd(x_minus, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix p_svd = svd.matrixV() * svd.singularValues().asDiagonal() * svd.matrixV().transpose();
  const Matrix u_svd = svd.matrixU() * svd.matrixV().transpose();
  EXPECT_LE(rel_fro(t.dense_P(), p_svd), 1e-4);
  EXPECT_LE(rel_fro(t.U_factor, u_svd), 1e-4);
  EXPECT_LE((t.U_factor.transpose() * t.U_factor - Matrix::Identity(d, d)).norm(), 1e-6);
  EXPECT_LE(rel_fro(t.U_factor * t.dense_P(), x_minus), 1e-6);
}

TEST(Polar, RepeatedDowndatesStayBounded) {
  Rng rng(97);
  const Index n = 50, d = 5;
  PolarState s = polar_init(rng.gaussian(n, d));
  PolarStepOptions opts;
  opts.rank = 4;
  double worst = 0.0;
  for (int step = 0; step < 10; ++step) {
    s = polar_downdate(s, s.X.rows() - 1 - step % 3, opts);
    worst = std::max(worst, rel_fro(s.dense_P(), dense_polar_P(s.X)));
  }
  EXPECT_LE(worst, 10.0 * 1e-4);
  EXPECT_LE((s.U_factor.transpose() * s.U_factor - Matrix::Identity(d, d)).norm(), 1e-6);
}

TEST(Polar, UpdateMatchesDenseAndRoundTrips) {
  Rng rng(98);
  const Index n = 30, d = 4;
  const Matrix X = rng.gaussian(n, d);
  const Vector row = rng.gaussian(d);
  PolarStepOptions opts;
  opts.rank = d;
  opts.solver = tight();
  const PolarState s = polar_init(X);
  const PolarState up = polar_update(s, row, opts);
  EXPECT_LE(rel_fro(up.dense_P(), dense_polar_P(up.X)), 1e-4);
  EXPECT_LE((up.U_factor.transpose() * up.U_factor - Matrix::Identity(d, d)).norm(), 1e-6);
  const PolarState back = polar_downdate(up, n, opts);
  EXPECT_LE(rel_fro(back.dense_P(), s.dense_P()), 1e-8);
  EXPECT_LE(rel_fro(back.U_factor, s.U_factor), 1e-8);
  const PolarState same = polar_update(s, Vector::Zero(d), opts);
  EXPECT_LE((same.dense_P() - s.dense_P()).norm(), 1e-12);
}

TEST(Polar, InfeasibleRemovalThrows) {
  Matrix X = Matrix::Zero(4, 2);
  X(0, 0) = 1.0;
  X(1, 1) = 1.0;
  X(2, 1) = 1.0;
  EXPECT_THROW(polar_downdate(polar_init(X), 0, {}), InfeasibleDowndateError);
}

TEST(GaussianSampler, ZeroUpdateGivesStandardNormal) {
  const Index n = 5;
  const auto q0 = std::make_shared<DiagonalOperator>(Vector::Ones(n));
  const GaussianSamples s = gaussian_sample(Vector::Zero(n), q0, Matrix::Zero(n, 1), 1, 50000, 7);
  const Matrix cov = s.samples * s.samples.transpose() / 50000.0;
  EXPECT_LT(spectral(cov - Matrix::Identity(n, n)), 0.05);
  EXPECT_LT(s.samples.rowwise().mean().cwiseAbs().maxCoeff(), 3.0 / std::sqrt(50000.0) * 1.5);
}

TEST(GaussianSampler, CovarianceMatchesPerturbedPrecision) {
  Rng rng(99);
  const Index n = 20, count = 50000;
  const Vector q0 = testing::uniform_vector(rng, n, 1.0, 2.0);
  const Matrix Z = rng.gaussian(n, 2);
  const Vector mu = rng.gaussian(n);
  const auto q0_inv_sqrt = std::make_shared<DiagonalOperator>(q0.cwiseSqrt().cwiseInverse());
  const GaussianSamples s = gaussian_sample(mu, q0_inv_sqrt, Z, 12, count, 3, tight());
  const Matrix centered = s.samples.colwise() - mu;
  const Matrix cov = centered * centered.transpose() / static_cast<double>(count);
  const Matrix target = (Matrix(q0.asDiagonal()) + Z * Z.transpose()).inverse();
  EXPECT_LT(spectral(cov - target) / spectral(target), 0.05);

  // count·(x̄ − μ)ᵀΣ⁻¹(x̄ − μ) is χ² with n degrees of freedom; 45 is its 0.999 quantile for n = 20.
  const Vector diff = s.samples.rowwise().mean() - mu;
  const double stat = static_cast<double>(count) * diff.dot(target.ldlt().solve(diff));
  EXPECT_LT(stat, 45.0);
}

TEST(GaussianSampler, DeterministicPerSeed) {
  Rng rng(100);
  const Index n = 8;
  const auto q0 = std::make_shared<DiagonalOperator>(Vector::Ones(n));
  const Matrix Z = rng.gaussian(n, 1);
  const GaussianSamples a = gaussian_sample(Vector::Zero(n), q0, Z, 2, 10, 5);
  const GaussianSamples b = gaussian_sample(Vector::Zero(n), q0, Z, 2, 10, 5);
  EXPECT_EQ(a.samples, b.samples);
}

ShampooConfig shampoo_config(Index cap) {
  ShampooConfig cfg;
  cfg.eps = 1e-3;
  cfg.step_rank = 5;
  cfg.compression_cap = cap;
  return cfg;
}

TEST(Shampoo, ZeroGradientLeavesTrackerUnchanged) {
  ShampooTracker tr(10, shampoo_config(20));
  const ShampooStepReport rep = tr.step(Matrix::Zero(10, 5));
  EXPECT_TRUE(rep.accepted);
  EXPECT_EQ(tr.t(), 0);
  EXPECT_EQ(tr.inv_sqrt().total_width(), 0);
  EXPECT_LE((tr.inv_fourth().dense() - std::pow(1e-3, -0.25) * Matrix::Identity(10, 10)).norm(), 1e-12);
}

TEST(Shampoo, SingleStepMatchesDenseFourthRoot) {
  Rng rng(101);
  const Index m = 100;
  ShampooTracker tr(m, shampoo_config(20));
  const Matrix G = rng.gaussian(m, 5) / std::sqrt(static_cast<double>(m));
  const ShampooStepReport rep = tr.step(G);
  ASSERT_TRUE(rep.accepted) << rep.message;
  const Matrix L = 1e-3 * Matrix::Identity(m, m) + G * G.transpose();
  EXPECT_LE(rel_fro(tr.inv_fourth().dense(), testing::dense_power(L, -0.25)), 1e-3);
  EXPECT_LE(rel_fro(tr.inv_sqrt().dense(), testing::dense_power(L, -0.5)), 1e-3);
}

TEST(Shampoo, TrackedOperatorsStayPositiveDefinite) {
  Rng rng(102);
  const Index m = 40;
  ShampooTracker tr(m, shampoo_config(m));
  for (int t = 0; t < 8; ++t) {
    const Matrix G = rng.gaussian(m, 5) / std::sqrt(static_cast<double>(m));
    const ShampooStepReport rep = tr.step(G);
    EXPECT_TRUE(rep.accepted) << rep.message;
    EXPECT_GT(min_eigenvalue(tr.inv_sqrt().dense()), 0.0) << "t " << t;
    EXPECT_GT(min_eigenvalue(tr.inv_fourth().dense()), 0.0) << "t " << t;
    EXPECT_LE(tr.inv_sqrt().total_width(), m);
    EXPECT_LE(tr.inv_fourth().total_width(), m);
  }
  EXPECT_EQ(tr.t(), 8);
}

TEST(Shampoo, RejectedStepLeavesTrackerUnchanged) {
  // A cap far below the accumulated rank makes the two compressed roots
  // inconsistent, and the fourth-root downdate eventually turns infeasible.
  Rng rng(102);
  const Index m = 40;
  ShampooTracker tr(m, shampoo_config(20));
  bool rejected = false;
  for (int t = 0; t < 8 && !rejected; ++t) {
    const Matrix G = rng.gaussian(m, 5) / std::sqrt(static_cast<double>(m));
    const Matrix s = tr.inv_sqrt().dense(), f = tr.inv_fourth().dense();
    const long long before = tr.t();
    const ShampooStepReport rep = tr.step(G);
    if (rep.accepted) continue;
    rejected = true;
    ASSERT_TRUE(rep.min_eig.has_value());
    EXPECT_LT(*rep.min_eig, 0.0);
    EXPECT_EQ(tr.t(), before);
    EXPECT_EQ(tr.inv_sqrt().dense(), s);
    EXPECT_EQ(tr.inv_fourth().dense(), f);
  }
  EXPECT_TRUE(rejected);
}

TEST(Shampoo, FunctionalStepMatchesMember) {
  Rng rng(103);
  const Index m = 20;
  const ShampooTracker tr(m, shampoo_config(20));
  const Matrix G = rng.gaussian(m, 5) / std::sqrt(static_cast<double>(m));
  ShampooStepReport rep;
  const ShampooTracker next = shampoo_step(tr, G, &rep);
  ShampooTracker copy = tr;
  copy.step(G);
  EXPECT_EQ(next.inv_fourth().dense(), copy.inv_fourth().dense());
  EXPECT_EQ(tr.t(), 0);
  EXPECT_EQ(next.t(), 1);
}

TEST(Shampoo, PreconditionedStepUsesBothSides) {
  const ShampooTracker left(3, shampoo_config(20)), right(2, shampoo_config(20));
  const Matrix w = Matrix::Ones(3, 2), g = Matrix::Ones(3, 2);
  const Matrix out = shampoo_precondition(left, right, w, g, 0.1);
  const double scale = std::pow(1e-3, -0.5);
  EXPECT_LE((out - (w - 0.1 * scale * g)).norm(), 1e-12);
}

TEST(Gls, NoSpikeIsOrdinaryLeastSquares) {
  Rng rng(104);
  const Matrix X = rng.gaussian(30, 3);
  const Vector y = rng.gaussian(30);
  const GlsResult r = gls_solve(X, y, DiagonalOperator(Vector::Ones(30)), Matrix::Zero(30, 1), 1, 1);
  const Vector ols = X.colPivHouseholderQr().solve(y);
  EXPECT_LE((r.coefficients - ols).norm(), 1e-12 * ols.norm());
}

TEST(Gls, InterceptOnlyIsWeightedMean) {
  Rng rng(105);
  const Index n = 10;
  const Vector c = testing::uniform_vector(rng, n, 0.5, 3.0);
  const Vector y = rng.gaussian(n);
  const GlsResult r = gls_solve(Matrix::Ones(n, 1), y, DiagonalOperator(c), Matrix::Zero(n, 1), 1, 1);
  const double expected = y.cwiseQuotient(c).sum() / c.cwiseInverse().sum();
  EXPECT_NEAR(r.coefficients(0), expected, 1e-12 * std::abs(expected));
}

TEST(Gls, SpikedCovarianceMatchesDenseGls) {
  Rng rng(106);
  const Index n = 200, d = 5;
  const Matrix X = rng.gaussian(n, d);
  const Vector y = rng.gaussian(n);
  const Vector dvals = testing::uniform_vector(rng, n, 0.5, 2.0);
  const Matrix Z = rng.gaussian(n, 2);
  const GlsResult r = gls_solve(X, y, DiagonalOperator(dvals), Z, 1, 20, tight());
  const Matrix W = (Matrix(dvals.asDiagonal()) + Z * Z.transpose()).inverse();
  const Vector dense = (X.transpose() * W * X).ldlt().solve(X.transpose() * W * y);
  EXPECT_LE((r.coefficients - dense).norm(), 1e-5 * dense.norm());
  EXPECT_FALSE(r.rank_deficient);
}

TEST(Gls, WeightedNormalEquationsHoldWithApproximateWeights) {
  Rng rng(107);
  const Index n = 80, d = 4;
  const Matrix X = rng.gaussian(n, d);
  const Vector y = rng.gaussian(n);
  const DiagonalOperator D(testing::uniform_vector(rng, n, 1.0, 2.0));
  const Matrix Z = 0.3 * rng.gaussian(n, 2) / std::sqrt(static_cast<double>(n));
  for (int alpha : {1, -1}) {
    const GlsResult r = gls_solve(X, y, D, Z, alpha, 2);
    const Matrix wx = gls_whiten(D, r.correction, X);
    const Vector wy = gls_whiten(D, r.correction, y);
    const Vector lhs = wx.transpose() * wx * r.coefficients;
    const Vector rhs = wx.transpose() * wy;
    EXPECT_LE((lhs - rhs).norm(), 1e-8 * rhs.norm()) << "alpha " << alpha;
  }
}

TEST(Gls, RankDeficientDesignWarns) {
  Rng rng(108);
  const Index n = 20;
  Matrix X(n, 2);
  X.col(0) = rng.gaussian(n);
  X.col(1) = 2.0 * X.col(0);
  const GlsResult r = gls_solve(X, rng.gaussian(n), DiagonalOperator(Vector::Ones(n)), Matrix::Zero(n, 1), 1, 1);
  EXPECT_TRUE(r.rank_deficient);
  EXPECT_FALSE(r.warning.empty());
  EXPECT_NEAR(r.coefficients(1), 2.0 * r.coefficients(0), 1e-10 * r.coefficients.norm());
}

}  // namespace
}  // namespace lrsqrt
