#include <random>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "oracles/oracles.hpp"
#include "panrpca/core.hpp"
#include "panrpca/error.hpp"

namespace panrpca {
namespace {

TEST(ProjectMaskTest, FullMaskIsIdentity) {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(rng, 12, 4);
  EXPECT_EQ(project_mask(x, Matrix::Ones(12, 4)), x);
}

TEST(ProjectMaskTest, EmptyMaskIsZero) {
  std::mt19937_64 rng(2);
  const Matrix x = oracle::random_matrix(rng, 12, 4);
  EXPECT_EQ(project_mask(x, Matrix::Zero(12, 4)), Matrix::Zero(12, 4));
}

TEST(ProjectMaskTest, IdempotentAndNonExpansive) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = oracle::random_matrix(rng, 9, 5);
    const Matrix m = oracle::random_mask(rng, 9, 5);
    const Matrix once = project_mask(x, m);
    EXPECT_EQ(project_mask(once, m), once);
    EXPECT_LE(once.norm(), x.norm());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      EXPECT_EQ(once(i), m(i) == 1.0 ? x(i) : 0.0);
    }
  }
}

TEST(ProjectMaskTest, ShapeMismatchThrows) {
  EXPECT_THROW(project_mask(Matrix::Zero(4, 2), Matrix::Ones(4, 3)), Error);
}

TEST(StackFramesTest, ColumnMajorVectorization) {
  Matrix f(2, 2);
  f << 1, 2, 3, 4;
  const FrameStack s = stack_frames({Image(f)});
  ASSERT_EQ(s.data().rows(), 4);
  ASSERT_EQ(s.data().cols(), 1);
  EXPECT_EQ(s.data().col(0), Vector((Vector(4) << 1, 3, 2, 4).finished()));
  EXPECT_EQ(s.mask(), Matrix::Ones(4, 1));
}

TEST(StackFramesTest, IdenticalFramesGiveRankOne) {
  std::mt19937_64 rng(4);
  const Image f(oracle::random_matrix(rng, 5, 6, 0.0, 1.0));
  const FrameStack s = stack_frames({f, f, f, f});
  Eigen::JacobiSVD<Matrix> svd(s.data());
  EXPECT_GT(svd.singularValues()(0), 0.0);
  EXPECT_LT(svd.singularValues()(1), 1e-12 * svd.singularValues()(0));
}

TEST(StackFramesTest, UnobservedPixelIsZeroed) {
  Matrix f = Matrix::Constant(3, 3, 0.7);
  Matrix m = Matrix::Ones(3, 3);
  m(1, 1) = 0.0;
  const FrameStack s = stack_frames({Image(f)}, {Image(m)});
  EXPECT_EQ(s.data()(1 + 3 * 1, 0), 0.0);
  EXPECT_EQ(s.mask()(1 + 3 * 1, 0), 0.0);
  EXPECT_EQ(s.frame(0)(1, 1), 0.0);
  EXPECT_EQ(s.frame(0)(0, 1), 0.7);
}

TEST(StackFramesTest, RejectsEmptyAndInconsistentInput) {
  EXPECT_THROW(stack_frames(std::vector<Image>{}), Error);
  EXPECT_THROW(stack_frames({Image(2, 2), Image(2, 3)}), Error);
  Matrix bad = Matrix::Ones(2, 2);
  bad(0, 0) = 0.5;
  EXPECT_THROW(stack_frames({Image(2, 2)}, {Image(bad)}), Error);
}

TEST(FrameStackTest, UnvecRoundTrip) {
  std::mt19937_64 rng(5);
  const Matrix f = oracle::random_matrix(rng, 4, 7);
  const FrameStack s = stack_frames({Image(f)});
  EXPECT_EQ(unvec(s.data().col(0), 4, 7).pixels(), f);
}

TEST(TvValueTest, ConstantIsZero) {
  std::mt19937_64 rng(6);
  const Matrix mask = oracle::random_mask(rng, 12, 3);
  EXPECT_EQ(tv_value(Matrix::Constant(12, 3, 0.4), TVWeights::from_mask(3, 4, mask)),
            0.0);
}

TEST(TvValueTest, SingleDifference) {
  const Matrix x = (Matrix(2, 1) << 0.0, 1.0).finished();
  EXPECT_DOUBLE_EQ(tv_value(x, TVWeights::full(2, 1, 1)), 1.0);
}

TEST(TvValueTest, MatchesLoopOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix x = oracle::random_matrix(rng, 9, 2);
    const Matrix mask = oracle::random_mask(rng, 9, 2);
    const TVWeights w = TVWeights::from_mask(3, 3, mask);
    EXPECT_NEAR(tv_value(x, w), oracle::tv_naive(x, mask, 3, 3), 1e-12);
  }
}

TEST(TvValueTest, ZeroOnPiecewiseConstantRegions) {
  // Two observed regions separated by an unobserved column.
  Matrix x(3, 3);
  x << 0.2, 0.0, 0.9, 0.2, 0.0, 0.9, 0.2, 0.0, 0.9;
  Matrix m = Matrix::Ones(3, 3);
  m.col(1).setZero();
  const FrameStack s = stack_frames({Image(x)}, {Image(m)});
  const TVWeights w = TVWeights::from_mask(3, 3, s.mask());
  EXPECT_EQ(tv_value(s.data(), w), 0.0);

  Matrix y = x;
  y(2, 2) = 0.5;
  const FrameStack t = stack_frames({Image(y)}, {Image(m)});
  EXPECT_GT(tv_value(t.data(), w), 0.0);
}

TEST(TvValueTest, ClearingMaskBitNeverIncreases) {
  std::mt19937_64 rng(8);
  const Matrix x = oracle::random_matrix(rng, 16, 3);
  Matrix mask = oracle::random_mask(rng, 16, 3, 0.9);
  double prev = tv_value(x, TVWeights::from_mask(4, 4, mask));
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    if (mask(i) == 0.0) continue;
    mask(i) = 0.0;
    const double now = tv_value(x, TVWeights::from_mask(4, 4, mask));
    EXPECT_LE(now, prev);
    prev = now;
  }
}

TEST(TvWeightsTest, ProductOfEndpoints) {
  std::mt19937_64 rng(9);
  const Matrix mask = oracle::random_mask(rng, 6, 3);
  const TVWeights w = TVWeights::from_mask(2, 3, mask);
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 3; ++j) {
      for (int i = 0; i < 2; ++i) {
        const int r = i + 2 * j;
        const double wx = i + 1 < 2 ? mask(r, k) * mask(r + 1, k) : 0.0;
        const double wy = j + 1 < 3 ? mask(r, k) * mask(r + 2, k) : 0.0;
        const double wz = k + 1 < 3 ? mask(r, k) * mask(r, k + 1) : 0.0;
        EXPECT_EQ(w.wx(r, k), wx);
        EXPECT_EQ(w.wy(r, k), wy);
        EXPECT_EQ(w.wz(r, k), wz);
      }
    }
  }
}

TEST(DifferenceOperatorTest, TwoPixelColumn) {
  const DifferenceOperator op =
      build_difference_operator(2, 1, 1, TVWeights::full(2, 1, 1));
  ASSERT_EQ(op.c.rows(), 1);
  ASSERT_EQ(op.c.cols(), 2);
  EXPECT_EQ(Matrix(op.c), (Matrix(1, 2) << -1.0, 1.0).finished());
  EXPECT_EQ(op.weights(0), 1.0);
}

TEST(DifferenceOperatorTest, RowsHaveOnePlusAndOneMinus) {
  std::mt19937_64 rng(10);
  const Matrix mask = oracle::random_mask(rng, 12, 3);
  const DifferenceOperator op =
      build_difference_operator(3, 4, 3, TVWeights::from_mask(3, 4, mask));
  const Matrix c(op.c);
  for (Eigen::Index r = 0; r < c.rows(); ++r) {
    EXPECT_EQ((c.row(r).array() == 1.0).count(), 1);
    EXPECT_EQ((c.row(r).array() == -1.0).count(), 1);
    EXPECT_EQ((c.row(r).array() != 0.0).count(), 2);
  }
  EXPECT_NEAR((op.c * Vector::Constant(36, 2.5)).norm(), 0.0, 0.0);
}

TEST(DifferenceOperatorTest, WeightedNormMatchesTvValue) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix x = oracle::random_matrix(rng, 15, 4);
    const Matrix mask = oracle::random_mask(rng, 15, 4);
    const TVWeights w = TVWeights::from_mask(5, 3, mask);
    const DifferenceOperator op = build_difference_operator(5, 3, 4, w);
    const Vector vx = x.reshaped();
    EXPECT_NEAR((op.weighted() * vx).lpNorm<1>(), tv_value(x, w), 1e-12);
    EXPECT_NEAR((op.active_rows().c * vx).lpNorm<1>(), tv_value(x, w), 1e-12);
  }
}

TEST(DifferenceOperatorTest, ActiveRowsMatchDenseOracle) {
  std::mt19937_64 rng(12);
  const Matrix mask = oracle::random_mask(rng, 6, 2);
  const Matrix dense = oracle::dense_difference(2, 3, 2, mask);
  const DifferenceOperator op =
      build_difference_operator(2, 3, 2, TVWeights::from_mask(2, 3, mask));
  const Matrix active(op.active_rows().c);
  ASSERT_EQ(active.rows(), dense.rows());
  // Same rows up to ordering: compare Gram matrices.
  EXPECT_NEAR((active.transpose() * active - dense.transpose() * dense).norm(),
              0.0, 1e-12);
}

TEST(DifferenceOperatorTest, CirculantWrapsEachAxis) {
  const DifferenceOperator op = build_difference_operator(
      3, 2, 2, TVWeights::full(3, 2, 2), Boundary::kCirculant);
  EXPECT_EQ(op.c.rows(), 3 * 12);
  EXPECT_NEAR((op.c * Vector::Ones(12)).norm(), 0.0, 0.0);
  EXPECT_THROW(build_difference_operator(2, 2, 1, TVWeights::from_mask(
                                                      2, 2, Matrix::Zero(4, 1)),
                                         Boundary::kCirculant),
               Error);
}

}  // namespace
}  // namespace panrpca
