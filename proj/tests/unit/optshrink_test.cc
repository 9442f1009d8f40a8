#include <cmath>
#include <random>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "oracles/oracles.hpp"
#include "panrpca/error.hpp"
#include "panrpca/optshrink.hpp"

namespace panrpca {
namespace {

Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = g(rng);
  return m;
}

Matrix truncated_svd(const Matrix& z, int r) {
  Eigen::JacobiSVD<Matrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
         svd.matrixV().leftCols(r).transpose();
}

Eigen::Index numerical_rank(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  return (s.array() > 1e-10 * s(0)).count();
}

TEST(ThinSvdTest, GramMatchesDirect) {
  std::mt19937_64 rng(51);
  for (const auto [rows, cols] : {std::pair{200, 6}, std::pair{7, 90}, std::pair{40, 40}}) {
    const Matrix z = gaussian(rng, rows, cols);
    const ThinSvd a = thin_svd_direct(z);
    const ThinSvd b = thin_svd_gram(z);
    EXPECT_LT((a.s - b.s).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((b.u * b.s.asDiagonal() * b.v.transpose() - z).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((thin_svd(z).s - a.s).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(ThinSvdTest, GramHandlesRankDeficiency) {
  std::mt19937_64 rng(52);
  const Matrix z = gaussian(rng, 300, 2) * gaussian(rng, 2, 8);
  const ThinSvd b = thin_svd_gram(z);
  EXPECT_LT((b.u * b.s.asDiagonal() * b.v.transpose() - z).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_TRUE(b.u.allFinite());
}

TEST(OptShrinkTest, NoiselessRankRIsExact) {
  std::mt19937_64 rng(53);
  for (int r = 1; r <= 3; ++r) {
    const Matrix z = gaussian(rng, 100, r) * gaussian(rng, r, 40);
    EXPECT_LT((optshrink(z, r) - truncated_svd(z, r)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(OptShrinkTest, ZeroMatrixGivesZero) {
  EXPECT_EQ(optshrink(Matrix::Zero(10, 5), 1), Matrix::Zero(10, 5));
}

TEST(OptShrinkTest, RankArgumentValidated) {
  const Matrix z = Matrix::Ones(6, 4);
  EXPECT_THROW(optshrink(z, 4), Error);
  EXPECT_THROW(optshrink(z, 0), Error);
}

TEST(OptShrinkTest, DTransformOfVanishingTail) {
  // D(z) = 1/z^2 and D'(z) = -2/z^3 when the tail is identically zero.
  const DTransform d = d_transform(2.0, Vector::Zero(5), 30, 6);
  EXPECT_NEAR(d.value, 0.25, 1e-15);
  EXPECT_NEAR(d.derivative, -0.25, 1e-15);
}

TEST(OptShrinkTest, DTransformDerivativeMatchesFiniteDifference) {
  std::mt19937_64 rng(54);
  const Vector tail = oracle::random_matrix(rng, 7, 1, 0.1, 1.0);
  const double z = 2.3;
  const double h = 1e-6;
  const double fd = (d_transform(z + h, tail, 50, 8).value -
                     d_transform(z - h, tail, 50, 8).value) /
                    (2 * h);
  EXPECT_NEAR(d_transform(z, tail, 50, 8).derivative, fd, 1e-6);
}

TEST(OptShrinkTest, AnnihilatesTiedSpectrum) {
  // sigma_1 == sigma_2: weight must be zero.
  const Matrix z = Matrix::Identity(5, 5);
  EXPECT_NEAR(optshrink(z, 1).norm(), 0.0, 0.0);
}

TEST(OptShrinkTest, RankBoundAndDominance) {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix z = gaussian(rng, 60, 20) + 4.0 * gaussian(rng, 60, 2) * gaussian(rng, 2, 20) / 10.0;
    for (int r = 1; r <= 3; ++r) {
      const SpectrumSplit split = split_spectrum(z, r);
      const Vector w = optshrink_weights(split);
      for (int i = 0; i < r; ++i) {
        EXPECT_GE(w(i), 0.0);
        EXPECT_LE(w(i), split.leading_values(i));
      }
      EXPECT_LE(numerical_rank(optshrink(z, r)), r);
    }
  }
}

TEST(OptShrinkTest, OrthogonalInvariance) {
  std::mt19937_64 rng(56);
  const Matrix z = gaussian(rng, 12, 8) + 3.0 * gaussian(rng, 12, 1) * gaussian(rng, 1, 8);
  const Matrix q1 = oracle::random_orthogonal(rng, 12);
  const Matrix q2 = oracle::random_orthogonal(rng, 8);
  const Matrix lhs = optshrink(q1 * z * q2.transpose(), 2);
  const Matrix rhs = q1 * optshrink(z, 2) * q2.transpose();
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(OptShrinkTest, SpikedModelBeatsTruncatedSvd) {
  const int n = 200;
  const double theta = 3.0;
  int wins = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::mt19937_64 rng(1000 + trial);
    Vector u = gaussian(rng, n, 1);
    Vector v = gaussian(rng, n, 1);
    u.normalize();
    v.normalize();
    const Matrix signal = theta * u * v.transpose();
    const Matrix z = signal + gaussian(rng, n, n) / std::sqrt(double(n));
    const LowRankEstimate est = optshrink_estimate(z, 1);
    const ThinSvd svd = thin_svd(z);
    EXPECT_LT(est.values(0), svd.s(0));
    const double e_opt = (est.estimate - signal).norm();
    const double e_svd = (truncated_svd(z, 1) - signal).norm();
    wins += e_opt < e_svd;
  }
  EXPECT_GE(wins, 45);
}

TEST(SvtTest, ZeroThresholdIsIdentity) {
  std::mt19937_64 rng(57);
  const Matrix z = gaussian(rng, 7, 5);
  EXPECT_LT((svt(z, 0.0) - z).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SvtTest, LargeThresholdIsZero) {
  std::mt19937_64 rng(58);
  const Matrix z = gaussian(rng, 7, 5);
  EXPECT_EQ(svt(z, thin_svd(z).s(0)), Matrix::Zero(7, 5));
}

TEST(SvtTest, DiagonalExample) {
  Matrix z = Matrix::Zero(4, 4);
  z(0, 0) = 5;
  z(1, 1) = 3;
  Matrix expected = Matrix::Zero(4, 4);
  expected(0, 0) = 4;
  expected(1, 1) = 2;
  EXPECT_LT((svt(z, 1.0) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SvtTest, SubgradientOptimality) {
  // X = svt(Z, l) iff Z - X = l (U_r V_r^T + W), |W|_2 <= 1, U_r^T W = 0, W V_r = 0.
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix z = gaussian(rng, 5, 5);
    const double lambda = 0.8;
    const Matrix x = svt(z, lambda);
    Eigen::JacobiSVD<Matrix> sx(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Index r = numerical_rank(x);
    const Matrix ur = sx.matrixU().leftCols(r);
    const Matrix vr = sx.matrixV().leftCols(r);
    const Matrix g = (z - x) / lambda;
    const Matrix w = g - ur * vr.transpose();
    EXPECT_LE(Eigen::JacobiSVD<Matrix>(w).singularValues()(0), 1.0 + 1e-10);
    EXPECT_LT((ur.transpose() * w).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((w * vr).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(SvtTest, NegativeThresholdRejected) {
  EXPECT_THROW(svt(Matrix::Ones(3, 3), -1.0), Error);
}

TEST(NuclearNormTest, SumOfSingularValues) {
  Matrix z = Matrix::Zero(3, 4);
  z(0, 1) = -2.0;
  z(2, 3) = 0.5;
  EXPECT_NEAR(nuclear_norm(z), 2.5, 1e-14);
}

}  // namespace
}  // namespace panrpca
