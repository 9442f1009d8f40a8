#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "panrpca/core.hpp"

namespace panrpca {

// Projective map acting on homogeneous points as  kappa * p' = H^T p,
// normalized so that H(2, 2) == 1.
class Homography {
 public:
  Homography() : h_(Eigen::Matrix3d::Identity()) {}
  // Normalizes by the bottom-right entry. Throws on |H33| < 1e-12 or on a
  // (near) singular matrix.
  explicit Homography(const Eigen::Matrix3d& h);

  static Homography identity() { return Homography(); }
  static Homography translation(double tx, double ty);

  const Eigen::Matrix3d& matrix() const { return h_; }
  double operator()(int r, int c) const { return h_(r, c); }

  Eigen::Vector2d apply(const Eigen::Vector2d& point) const;
  Homography inverse() const;

  // Map that applies *this first, then `next`.
  Homography then(const Homography& next) const;

 private:
  Eigen::Matrix3d h_;
};

Eigen::Vector2d apply_homography(const Homography& h,
                                 const Eigen::Vector2d& point);

struct Correspondence {
  Eigen::Vector2d source;
  Eigen::Vector2d target;
};

Homography estimate_homography_dlt(const std::vector<Correspondence>& corrs);

struct RansacConfig {
  int iterations = 2000;
  double inlier_threshold = 1.5;
  double min_inlier_fraction = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RansacResult {
  Homography model;
  std::vector<bool> inliers;
  int inlier_count = 0;
};

RansacResult estimate_homography_ransac(const std::vector<Correspondence>& corrs,
                                        const RansacConfig& cfg);

double reprojection_error(const Homography& h, const Correspondence& c);

struct FeatureConfig {
  int max_corners = 400;
  double harris_k = 0.04;
  double gaussian_sigma = 1.0;
  // Corners weaker than this fraction of the strongest response are dropped.
  double quality_level = 0.01;
  int min_distance = 5;
  int patch_radius = 5;
  int search_radius = 12;
  double ncc_floor = 0.8;
  // Median prefilter (radius in pixels) applied before detection and
  // matching; 0 disables it. Helps with impulsive noise.
  int median_radius = 0;
  bool subpixel = false;
  // Keep a match only when matching back from its target returns to the
  // source corner.
  bool cross_check = true;
};

struct Corner {
  Eigen::Vector2d position;  // (x, y) = (column, row)
  double response = 0.0;
};

std::vector<Corner> detect_harris_corners(const Image& image,
                                          const FeatureConfig& cfg);

Image median_filter(const Image& image, int radius);

std::vector<Correspondence> find_correspondences(const Image& frame_a,
                                                 const Image& frame_b,
                                                 const FeatureConfig& cfg = {});

// links[k] maps frame k onto frame k+1. Returns, for every frame, the map
// into the coordinates of frame `anchor` (0-based).
std::vector<Homography> chain_to_anchor(const std::vector<Homography>& links,
                                        int anchor);

int default_anchor(int frame_count);

struct Canvas {
  int height = 0;
  int width = 0;
  // Anchor coordinates of canvas pixel (0, 0).
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
};

Canvas canvas_extent(const std::vector<Homography>& to_anchor, int frame_height,
                     int frame_width);

// Warps every frame onto the canvas by inverse mapping with bilinear
// interpolation. A canvas pixel is observed in frame k iff its preimage lies
// in [0, w-1] x [0, h-1] of that frame, so all four bilinear neighbors exist.
FrameStack warp_to_canvas(const std::vector<Image>& frames,
                          const std::vector<Homography>& to_anchor,
                          const Canvas& canvas);

struct RegistrationConfig {
  FeatureConfig features;
  RansacConfig ransac;
  std::optional<int> anchor;
  // Skip estimation and treat the camera as static.
  bool static_camera = false;
};

struct Registration {
  FrameStack stack;
  Canvas canvas;
  int anchor = 0;
  std::vector<Homography> links;
  std::vector<Homography> to_anchor;
};

Registration register_video(const std::vector<Image>& frames,
                            const RegistrationConfig& cfg = {});

// Same as register_video but with known inter-frame links.
Registration register_with_links(const std::vector<Image>& frames,
                                 const std::vector<Homography>& links,
                                 std::optional<int> anchor = std::nullopt);

// Text interchange. Correspondences: one "x y x' y'" per line.
// Homography: 9 numbers, row-major.
void write_correspondences(std::ostream& os,
                           const std::vector<Correspondence>& corrs);
std::vector<Correspondence> read_correspondences(std::istream& is);
void write_homography(std::ostream& os, const Homography& h);
Homography read_homography(std::istream& is);

}  // namespace panrpca
