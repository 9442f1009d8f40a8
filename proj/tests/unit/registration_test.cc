#include <algorithm>
#include <random>
#include <functional>
#include <sstream>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "oracles/oracles.hpp"
#include "panrpca/error.hpp"
#include "panrpca/registration.hpp"

namespace panrpca {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an exception";
  return ErrorCode::kInvalidArgument;
}

std::vector<Correspondence> exact_corrs(const Homography& h, int count,
                                        std::mt19937_64& rng, double extent = 100.0) {
  std::uniform_real_distribution<double> u(0.0, extent);
  std::vector<Correspondence> out;
  for (int i = 0; i < count; ++i) {
    const Eigen::Vector2d p(u(rng), u(rng));
    out.push_back({p, h.apply(p)});
  }
  return out;
}

// Smooth random texture in [0, 1].
Matrix texture(std::mt19937_64& rng, int h, int w) {
  Matrix noise = oracle::random_matrix(rng, h, w, 0.0, 1.0);
  Matrix out = Matrix::Zero(h, w);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      double s = 0.0;
      int n = 0;
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          const int a = i + di;
          const int b = j + dj;
          if (a < 0 || b < 0 || a >= h || b >= w) continue;
          s += noise(a, b);
          ++n;
        }
      }
      out(i, j) = s / n;
    }
  }
  return out;
}

TEST(HomographyTest, IdentityAndTranslation) {
  EXPECT_EQ(apply_homography(Homography::identity(), {3, 4}), Eigen::Vector2d(3, 4));
  EXPECT_EQ(apply_homography(Homography::translation(5, -2), {0, 0}),
            Eigen::Vector2d(5, -2));
}

TEST(HomographyTest, NormalizesBottomRight) {
  Eigen::Matrix3d m = 2.0 * Eigen::Matrix3d::Identity();
  m(2, 0) = 4.0;
  const Homography h(m);
  EXPECT_EQ(h(2, 2), 1.0);
  EXPECT_EQ(h(2, 0), 2.0);
  EXPECT_EQ(code_of([] { Homography(Eigen::Matrix3d::Zero()); }),
            ErrorCode::kNormalization);
  Eigen::Matrix3d singular = Eigen::Matrix3d::Zero();
  singular(2, 2) = 1.0;
  EXPECT_EQ(code_of([&] { Homography{singular}; }), ErrorCode::kSingularTransform);
}

TEST(HomographyTest, MatchesDirectMultiplyOracle) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Matrix3d m = oracle::random_homography(rng);
    const Homography h(m);
    const Eigen::Vector2d p(u(rng), u(rng));
    EXPECT_LT((h.apply(p) - oracle::project_direct(m, p)).norm(), 1e-9);
  }
}

TEST(HomographyTest, InverseRoundTrip) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Homography h(oracle::random_homography(rng));
    const Eigen::Vector2d p(u(rng), u(rng));
    EXPECT_LT((apply_homography(h.inverse(), apply_homography(h, p)) - p).norm(), 1e-9);
  }
}

TEST(HomographyTest, PointAtInfinity) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = -1.0;  // third coordinate x*(-1) + 1 vanishes at x = 1
  const Homography h(m);
  EXPECT_EQ(code_of([&] { h.apply({1.0, 5.0}); }), ErrorCode::kPointAtInfinity);
}

TEST(HomographyTest, ThenComposesInOrder) {
  std::mt19937_64 rng(23);
  const Homography a(oracle::random_homography(rng));
  const Homography b(oracle::random_homography(rng));
  const Eigen::Vector2d p(12.0, 40.0);
  EXPECT_LT((a.then(b).apply(p) - b.apply(a.apply(p))).norm(), 1e-9);
}

TEST(DltTest, IdentityFromFourPoints) {
  const std::vector<Correspondence> c = {{{0, 0}, {0, 0}},
                                         {{10, 0}, {10, 0}},
                                         {{0, 10}, {0, 10}},
                                         {{10, 10}, {10, 10}}};
  const Homography h = estimate_homography_dlt(c);
  EXPECT_LT((h.matrix() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(DltTest, RecoversRandomHomography) {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 50; ++trial) {
    const Homography truth(oracle::random_homography(rng));
    const Homography h = estimate_homography_dlt(exact_corrs(truth, 20, rng));
    EXPECT_LT((h.matrix() - truth.matrix()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(DltTest, CollinearSourcesAreDegenerate) {
  std::vector<Correspondence> c;
  for (int i = 0; i < 8; ++i) {
    c.push_back({{double(i), 2.0 * i + 1.0}, {double(i) + 3.0, 2.0 * i - 1.0}});
  }
  EXPECT_EQ(code_of([&] { estimate_homography_dlt(c); }),
            ErrorCode::kDegenerateConfiguration);
}

TEST(DltTest, TooFewPointsRejected) {
  std::mt19937_64 rng(25);
  EXPECT_THROW(estimate_homography_dlt(exact_corrs(Homography(), 3, rng)), Error);
}

TEST(DltTest, ProjectivelyConsistentUnderScaling) {
  std::mt19937_64 rng(26);
  const double s = 2.5;
  const Eigen::Matrix3d ds = Eigen::Vector3d(s, s, 1.0).asDiagonal();
  for (int trial = 0; trial < 20; ++trial) {
    const Homography truth(oracle::random_homography(rng));
    auto corrs = exact_corrs(truth, 12, rng);
    const Homography h = estimate_homography_dlt(corrs);
    for (auto& c : corrs) {
      c.source *= s;
      c.target *= s;
    }
    const Homography hs = estimate_homography_dlt(corrs);
    const Eigen::Matrix3d back = ds.inverse() * hs.matrix().transpose() * ds;
    EXPECT_LT((back - h.matrix().transpose()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(RansacTest, ExactDataAllInliers) {
  std::mt19937_64 rng(27);
  const Homography truth(oracle::random_homography(rng));
  const auto corrs = exact_corrs(truth, 30, rng);
  const RansacResult r = estimate_homography_ransac(corrs, {});
  EXPECT_EQ(r.inlier_count, 30);
  EXPECT_TRUE(std::all_of(r.inliers.begin(), r.inliers.end(), [](bool b) { return b; }));
  const Homography dlt = estimate_homography_dlt(corrs);
  EXPECT_LT((r.model.matrix() - dlt.matrix()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(RansacTest, PlantedModelWithOutliers) {
  std::mt19937_64 rng(28);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Homography truth(oracle::random_homography(rng));
    auto corrs = exact_corrs(truth, 50, rng);
    for (int i = 0; i < 50; ++i) {
      corrs.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
    }
    RansacConfig cfg;
    cfg.inlier_threshold = 1.0;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const RansacResult r = estimate_homography_ransac(corrs, cfg);
    for (int i = 0; i < 50; ++i) {
      EXPECT_LT(reprojection_error(r.model, corrs[i]), 1e-3);
      EXPECT_TRUE(r.inliers[i]);
    }
  }
}

TEST(RansacTest, AllOutliersGiveNoModel) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<Correspondence> corrs;
  for (int i = 0; i < 60; ++i) corrs.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
  RansacConfig cfg;
  cfg.min_inlier_fraction = 0.3;
  EXPECT_EQ(code_of([&] { estimate_homography_ransac(corrs, cfg); }),
            ErrorCode::kNoModel);
}

TEST(RansacTest, SeededRunsAreReproducible) {
  std::mt19937_64 rng(30);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  const Homography truth(oracle::random_homography(rng));
  auto corrs = exact_corrs(truth, 40, rng);
  for (int i = 0; i < 40; ++i) corrs.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
  RansacConfig cfg;
  cfg.seed = 99;
  const RansacResult a = estimate_homography_ransac(corrs, cfg);
  const RansacResult b = estimate_homography_ransac(corrs, cfg);
  EXPECT_EQ(a.model.matrix(), b.model.matrix());
  EXPECT_EQ(a.inliers, b.inliers);
}

TEST(RansacTest, InvalidConfig) {
  RansacConfig cfg;
  cfg.iterations = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.inlier_threshold = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(FeaturesTest, IdenticalFramesMatchThemselves) {
  std::mt19937_64 rng(31);
  const Image a(texture(rng, 64, 64));
  const auto corrs = find_correspondences(a, a);
  ASSERT_GE(corrs.size(), 4u);
  for (const auto& c : corrs) EXPECT_EQ(c.source, c.target);
}

TEST(FeaturesTest, PlantedShiftRecovered) {
  std::mt19937_64 rng(32);
  const Matrix base = texture(rng, 64, 72);
  const Image a(Matrix(base.leftCols(64)));
  Matrix shifted(64, 64);
  // frame_b(i, j) = frame_a(i, j - 3)
  for (int j = 0; j < 64; ++j) {
    shifted.col(j) = j >= 3 ? base.col(j - 3) : base.col(64 + j);
  }
  const Image b(shifted);
  const auto corrs = find_correspondences(a, b);
  ASSERT_GE(corrs.size(), 4u);
  std::vector<double> dx;
  std::vector<double> dy;
  for (const auto& c : corrs) {
    dx.push_back(c.target.x() - c.source.x());
    dy.push_back(c.target.y() - c.source.y());
  }
  std::nth_element(dx.begin(), dx.begin() + dx.size() / 2, dx.end());
  std::nth_element(dy.begin(), dy.begin() + dy.size() / 2, dy.end());
  EXPECT_NEAR(dx[dx.size() / 2], 3.0, 0.5);
  EXPECT_NEAR(dy[dy.size() / 2], 0.0, 0.5);
}

TEST(FeaturesTest, SubpixelShiftRecovered) {
  std::mt19937_64 rng(33);
  const Matrix base = texture(rng, 64, 72);
  const Image a(Matrix(base.leftCols(64)));
  const Image b(Matrix(base.middleCols(2, 64)));  // frame_b(i, j) = frame_a(i, j + 2)
  FeatureConfig cfg;
  cfg.subpixel = true;
  const auto corrs = find_correspondences(a, b, cfg);
  ASSERT_GE(corrs.size(), 4u);
  const RansacResult r = estimate_homography_ransac(corrs, {});
  EXPECT_NEAR(r.model(2, 0), -2.0, 0.25);
  EXPECT_NEAR(r.model(2, 1), 0.0, 0.25);
}

TEST(FeaturesTest, FeaturelessImagesRejected) {
  const Image flat(Matrix::Constant(40, 40, 0.5));
  EXPECT_EQ(code_of([&] { find_correspondences(flat, flat); }),
            ErrorCode::kInsufficientFeatures);
}

TEST(FeaturesTest, SizeMismatchRejected) {
  EXPECT_THROW(find_correspondences(Image(10, 10), Image(10, 11)), Error);
}

TEST(FeaturesTest, MedianFilterRemovesIsolatedImpulse) {
  Matrix m = Matrix::Constant(7, 7, 0.3);
  m(3, 3) = 1.0;
  const Image out = median_filter(Image(m), 1);
  EXPECT_EQ(out(3, 3), 0.3);
  EXPECT_EQ(median_filter(Image(m), 0).pixels(), m);
}

TEST(ChainTest, IdentityLinks) {
  const auto out = chain_to_anchor(std::vector<Homography>(4), 2);
  ASSERT_EQ(out.size(), 5u);
  for (const auto& h : out) EXPECT_EQ(h.matrix(), Eigen::Matrix3d::Identity());
}

TEST(ChainTest, TranslationChain) {
  // Three frames, anchor is the middle one (index 1).
  const auto out = chain_to_anchor(
      {Homography::translation(1, 0), Homography::translation(1, 0)}, 1);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_LT((out[0].matrix() - Homography::translation(1, 0).matrix()).norm(), 1e-15);
  EXPECT_EQ(out[1].matrix(), Eigen::Matrix3d::Identity());
  EXPECT_LT((out[2].matrix() - Homography::translation(-1, 0).matrix()).norm(), 1e-15);
}

TEST(ChainTest, PointwiseCompositionOracle) {
  std::mt19937_64 rng(34);
  std::vector<Homography> links;
  for (int k = 0; k < 4; ++k) links.emplace_back(oracle::random_homography(rng, 20.0));
  const int anchor = default_anchor(5);
  EXPECT_EQ(anchor, 2);
  const auto out = chain_to_anchor(links, anchor);
  const Eigen::Vector2d p(7.0, 11.0);
  for (int k = 0; k < 5; ++k) {
    Eigen::Vector2d q = p;
    for (int j = k; j < anchor; ++j) q = links[j].apply(q);
    for (int j = k - 1; j >= anchor; --j) q = links[j].inverse().apply(q);
    EXPECT_LT((out[k].apply(p) - q).norm(), 1e-9) << "frame " << k;
    EXPECT_EQ(out[k](2, 2), 1.0);
  }
}

TEST(ChainTest, AnchorOutOfRange) {
  EXPECT_THROW(chain_to_anchor(std::vector<Homography>(2), 3), Error);
  EXPECT_THROW(chain_to_anchor(std::vector<Homography>(2), -1), Error);
}

TEST(RegisterTest, SingleFrame) {
  std::mt19937_64 rng(35);
  const Image f(oracle::random_matrix(rng, 9, 11, 0.0, 1.0));
  const Registration r = register_video({f});
  EXPECT_EQ(r.canvas.height, 9);
  EXPECT_EQ(r.canvas.width, 11);
  EXPECT_EQ(r.stack.mask(), Matrix::Ones(99, 1));
  EXPECT_LT((r.stack.frame(0).pixels() - f.pixels()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RegisterTest, StaticCameraStacksOriginals) {
  std::mt19937_64 rng(36);
  std::vector<Image> frames;
  for (int k = 0; k < 3; ++k) frames.emplace_back(oracle::random_matrix(rng, 8, 6, 0.0, 1.0));
  RegistrationConfig cfg;
  cfg.static_camera = true;
  const Registration r = register_video(frames, cfg);
  EXPECT_EQ(r.stack.mask(), Matrix::Ones(48, 3));
  for (int k = 0; k < 3; ++k) {
    EXPECT_LT((r.stack.frame(k).pixels() - frames[k].pixels()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(RegisterTest, IntegerTranslationPanorama) {
  std::mt19937_64 rng(37);
  const int h = 12;
  const int w = 16;
  const Matrix pano = oracle::random_matrix(rng, h, w + 5, 0.0, 1.0);
  const std::vector<Image> frames = {Image(Matrix(pano.leftCols(w))),
                                     Image(Matrix(pano.middleCols(5, w)))};
  // A point at column x of frame 0 sits at column x - 5 of frame 1.
  const Registration r = register_with_links(frames, {Homography::translation(-5, 0)});
  ASSERT_EQ(r.canvas.width, w + 5);
  ASSERT_EQ(r.canvas.height, h);
  const Image f0 = r.stack.frame(0);
  const Image f1 = r.stack.frame(1);
  const Image m0 = r.stack.mask_frame(0);
  const Image m1 = r.stack.mask_frame(1);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w + 5; ++j) {
      EXPECT_EQ(m0(i, j), j < w ? 1.0 : 0.0);
      EXPECT_EQ(m1(i, j), j >= 5 ? 1.0 : 0.0);
      if (m0(i, j) == 1.0 && m1(i, j) == 1.0) {
        EXPECT_NEAR(f0(i, j), f1(i, j), 1e-6);
      }
      if (m0(i, j) == 1.0) EXPECT_NEAR(f0(i, j), pano(i, j), 1e-9);
    }
  }
}

TEST(RegisterTest, MaskCountMatchesBruteForce) {
  std::mt19937_64 rng(38);
  std::vector<Image> frames;
  std::vector<Homography> links;
  for (int k = 0; k < 4; ++k) frames.emplace_back(oracle::random_matrix(rng, 10, 12, 0.0, 1.0));
  for (int k = 0; k < 3; ++k) links.emplace_back(oracle::random_homography(rng, 12.0));
  const Registration r = register_with_links(frames, links);
  for (int k = 0; k < 4; ++k) {
    const int expected = oracle::covered_pixel_count(r.to_anchor[k], r.canvas, 10, 12);
    EXPECT_EQ(r.stack.mask().col(k).sum(), expected) << "frame " << k;
  }
}

TEST(RegisterTest, EstimatedPanMatchesKnownShift) {
  std::mt19937_64 rng(39);
  const Matrix pano = texture(rng, 48, 48 + 8);
  const std::vector<Image> frames = {Image(Matrix(pano.leftCols(48))),
                                     Image(Matrix(pano.middleCols(4, 48))),
                                     Image(Matrix(pano.middleCols(8, 48)))};
  const Registration r = register_video(frames);
  EXPECT_EQ(r.anchor, 1);
  EXPECT_EQ(r.canvas.width, 56);
  for (const auto& link : r.links) {
    EXPECT_LT((link.matrix() - Homography::translation(-4, 0).matrix()).norm(), 1e-6);
  }
}

TEST(TextIoTest, CorrespondencesRoundTrip) {
  std::mt19937_64 rng(40);
  const auto corrs = exact_corrs(Homography(oracle::random_homography(rng)), 7, rng);
  std::stringstream ss;
  write_correspondences(ss, corrs);
  const auto back = read_correspondences(ss);
  ASSERT_EQ(back.size(), corrs.size());
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    EXPECT_EQ(back[i].source, corrs[i].source);
    EXPECT_EQ(back[i].target, corrs[i].target);
  }
  std::stringstream bad("1 2 3\n");
  EXPECT_THROW(read_correspondences(bad), Error);
}

TEST(TextIoTest, HomographyRoundTrip) {
  std::mt19937_64 rng(41);
  const Homography h(oracle::random_homography(rng));
  std::stringstream ss;
  write_homography(ss, h);
  EXPECT_EQ(read_homography(ss).matrix(), h.matrix());
}

}  // namespace
}  // namespace panrpca
