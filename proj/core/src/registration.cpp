#include "panrpca/registration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "panrpca/error.hpp"

namespace panrpca {
namespace {

constexpr double kTiny = 1e-12;
// Preimages this close to the frame border still count as inside.
constexpr double kEdgeSlack = 1e-6;

// Similarity that moves the centroid to the origin and the mean distance to
// sqrt(2).
Eigen::Matrix3d conditioning_transform(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (mean_dist < kTiny) {
    throw Error(ErrorCode::kDegenerateConfiguration,
                "all correspondence points coincide");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return t;
}

}  // namespace

Homography::Homography(const Eigen::Matrix3d& h) {
  if (!h.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "homography has non-finite entries");
  }
  if (std::abs(h(2, 2)) < kTiny) {
    throw Error(ErrorCode::kNormalization,
                "cannot normalize homography with H33 ~ 0");
  }
  h_ = h / h(2, 2);
  if (std::abs(h_.determinant()) <= kTiny) {
    throw Error(ErrorCode::kSingularTransform, "homography is not invertible");
  }
}

Homography Homography::translation(double tx, double ty) {
  Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
  // kappa p' = H^T p, so the translation lives in the bottom row.
  h(2, 0) = tx;
  h(2, 1) = ty;
  return Homography(h);
}

Eigen::Vector2d Homography::apply(const Eigen::Vector2d& point) const {
  const Eigen::Vector3d q = h_.transpose() * point.homogeneous();
  if (std::abs(q.z()) < kTiny) {
    throw Error(ErrorCode::kPointAtInfinity,
                "point maps to infinity under homography");
  }
  return q.hnormalized();
}

Homography Homography::inverse() const { return Homography(h_.inverse()); }

Homography Homography::then(const Homography& next) const {
  return Homography(h_ * next.h_);
}

Eigen::Vector2d apply_homography(const Homography& h,
                                 const Eigen::Vector2d& point) {
  return h.apply(point);
}

Homography estimate_homography_dlt(const std::vector<Correspondence>& corrs) {
  if (corrs.size() < 4) {
    throw Error(ErrorCode::kInvalidArgument,
                "DLT needs at least 4 correspondences");
  }
  std::vector<Eigen::Vector2d> src;
  std::vector<Eigen::Vector2d> dst;
  src.reserve(corrs.size());
  dst.reserve(corrs.size());
  for (const auto& c : corrs) {
    if (!c.source.allFinite() || !c.target.allFinite()) {
      throw Error(ErrorCode::kNonFinite, "correspondence is not finite");
    }
    src.push_back(c.source);
    dst.push_back(c.target);
  }
  const Eigen::Matrix3d ts = conditioning_transform(src);
  const Eigen::Matrix3d tt = conditioning_transform(dst);

  const auto d = static_cast<Eigen::Index>(corrs.size());
  // At least 9 rows so the null vector shows up as a singular value.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(2 * d, 9), 9);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::Vector3d p = ts * src[static_cast<std::size_t>(i)].homogeneous();
    const Eigen::Vector3d q = tt * dst[static_cast<std::size_t>(i)].homogeneous();
    const double xt = q.x() / q.z();
    const double yt = q.y() / q.z();
    // Rows [0, p^T, -y' p^T] and [p^T, 0, -x' p^T] against h = vec(H).
    a.block<1, 3>(2 * i, 3) = p.transpose();
    a.block<1, 3>(2 * i, 6) = -yt * p.transpose();
    a.block<1, 3>(2 * i + 1, 0) = p.transpose();
    a.block<1, 3>(2 * i + 1, 6) = -xt * p.transpose();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  if (s(7) - s(8) <= 1e-10 * s(0)) {
    throw Error(ErrorCode::kDegenerateConfiguration,
                "correspondences do not determine a unique homography");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  const Eigen::Matrix3d hn = h.reshaped(3, 3);
  // Undo conditioning on the forward map G = H^T, where p' ~ G p.
  const Eigen::Matrix3d g = tt.inverse() * hn.transpose() * ts;
  if (std::abs(g(2, 2)) < kTiny * g.norm()) {
    throw Error(ErrorCode::kNormalization, "h9 vanishes; cannot normalize");
  }
  return Homography(g.transpose());
}

void RansacConfig::validate() const {
  if (iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "RANSAC iterations must be >= 1");
  }
  if (!(inlier_threshold > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "RANSAC inlier threshold must be positive");
  }
  if (!(min_inlier_fraction >= 0.0 && min_inlier_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "min_inlier_fraction must lie in [0, 1]");
  }
}

double reprojection_error(const Homography& h, const Correspondence& c) {
  const Eigen::Vector3d q = h.matrix().transpose() * c.source.homogeneous();
  if (std::abs(q.z()) < kTiny) return std::numeric_limits<double>::infinity();
  return (q.hnormalized() - c.target).norm();
}

namespace {

// |cross| of (b - a, c - a) relative to the squared spread.
bool nearly_collinear(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                      const Eigen::Vector2d& c) {
  const Eigen::Vector2d u = b - a;
  const Eigen::Vector2d v = c - a;
  const double cross = u.x() * v.y() - u.y() * v.x();
  return std::abs(cross) <= 1e-9 * (u.squaredNorm() + v.squaredNorm());
}

// Exact four-point fit with h9 = 1 on conditioned coordinates. Empty when
// the sample is degenerate.
std::optional<Homography> minimal_fit(const std::array<Correspondence, 4>& s) {
  for (int skip = 0; skip < 4; ++skip) {
    std::array<int, 3> t{};
    for (int i = 0, k = 0; i < 4; ++i) {
      if (i != skip) t[static_cast<std::size_t>(k++)] = i;
    }
    if (nearly_collinear(s[t[0]].source, s[t[1]].source, s[t[2]].source) ||
        nearly_collinear(s[t[0]].target, s[t[1]].target, s[t[2]].target)) {
      return std::nullopt;
    }
  }
  std::vector<Eigen::Vector2d> src;
  std::vector<Eigen::Vector2d> dst;
  for (const auto& c : s) {
    src.push_back(c.source);
    dst.push_back(c.target);
  }
  const Eigen::Matrix3d ts = conditioning_transform(src);
  const Eigen::Matrix3d tt = conditioning_transform(dst);
  Eigen::Matrix<double, 8, 8> a = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector3d p = ts * src[static_cast<std::size_t>(i)].homogeneous();
    const Eigen::Vector3d q = tt * dst[static_cast<std::size_t>(i)].homogeneous();
    const double xt = q.x() / q.z();
    const double yt = q.y() / q.z();
    // Same rows as the DLT with the h9 column moved to the right-hand side.
    a.block<1, 3>(2 * i, 3) = p.transpose();
    a.block<1, 2>(2 * i, 6) = -yt * p.head<2>().transpose();
    b(2 * i) = yt * p.z();
    a.block<1, 3>(2 * i + 1, 0) = p.transpose();
    a.block<1, 2>(2 * i + 1, 6) = -xt * p.head<2>().transpose();
    b(2 * i + 1) = xt * p.z();
  }
  const Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
  if (lu.rank() < 8) return std::nullopt;
  Eigen::Matrix<double, 9, 1> h;
  h << lu.solve(b), 1.0;
  const Eigen::Matrix3d g = tt.inverse() * h.reshaped(3, 3).transpose() * ts;
  if (!g.allFinite() || std::abs(g(2, 2)) < kTiny * g.norm()) return std::nullopt;
  try {
    return Homography(g.transpose());
  } catch (const Error&) {
    return std::nullopt;
  }
}

double median_residual(const Homography& h, const std::vector<Correspondence>& corrs) {
  std::vector<double> r;
  r.reserve(corrs.size());
  for (const auto& c : corrs) r.push_back(reprojection_error(h, c));
  const auto mid = r.begin() + static_cast<std::ptrdiff_t>(r.size() / 2);
  std::nth_element(r.begin(), mid, r.end());
  return *mid;
}

int count_inliers(const Homography& h, const std::vector<Correspondence>& corrs,
                  double threshold, std::vector<bool>* flags) {
  int count = 0;
  if (flags) flags->assign(corrs.size(), false);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (reprojection_error(h, corrs[i]) < threshold) {
      ++count;
      if (flags) (*flags)[i] = true;
    }
  }
  return count;
}

}  // namespace

RansacResult estimate_homography_ransac(const std::vector<Correspondence>& corrs,
                                        const RansacConfig& cfg) {
  cfg.validate();
  if (corrs.size() < 4) {
    throw Error(ErrorCode::kInvalidArgument,
                "RANSAC needs at least 4 correspondences");
  }
  const int n = static_cast<int>(corrs.size());
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> pick(0, n - 1);

  std::optional<Homography> best;
  int best_count = -1;
  std::array<Correspondence, 4> sample;
  for (int it = 0; it < cfg.iterations; ++it) {
    std::array<int, 4> idx{};
    for (int s = 0; s < 4; ++s) {
      int candidate = 0;
      do {
        candidate = pick(rng);
      } while (std::find(idx.begin(), idx.begin() + s, candidate) !=
               idx.begin() + s);
      idx[static_cast<std::size_t>(s)] = candidate;
      sample[static_cast<std::size_t>(s)] = corrs[static_cast<std::size_t>(candidate)];
    }
    const std::optional<Homography> h = minimal_fit(sample);
    if (!h) continue;
    const int count = count_inliers(*h, corrs, cfg.inlier_threshold, nullptr);
    if (count > best_count) {
      best_count = count;
      best = *h;
      if (count == n) break;
    }
  }
  if (!best || best_count < 4) {
    throw Error(ErrorCode::kNoModel, "no consensus set of at least 4 points");
  }

  RansacResult result;
  result.model = *best;
  result.inlier_count =
      count_inliers(result.model, corrs, cfg.inlier_threshold, &result.inliers);

  std::vector<Correspondence> consensus;
  for (int i = 0; i < n; ++i) {
    if (result.inliers[static_cast<std::size_t>(i)]) {
      consensus.push_back(corrs[static_cast<std::size_t>(i)]);
    }
  }
  try {
    Homography refit = estimate_homography_dlt(consensus);
    std::vector<bool> flags;
    const int count = count_inliers(refit, corrs, cfg.inlier_threshold, &flags);
    // Ties go to the tighter fit of the consensus set.
    if (count > result.inlier_count ||
        (count == result.inlier_count &&
         median_residual(refit, consensus) <= median_residual(result.model, consensus))) {
      result.model = refit;
      result.inliers = std::move(flags);
      result.inlier_count = count;
    }
  } catch (const Error&) {
    // The minimal-sample model stands.
  }

  if (result.inlier_count < cfg.min_inlier_fraction * n) {
    throw Error(ErrorCode::kNoModel,
                "consensus " + std::to_string(result.inlier_count) + "/" +
                    std::to_string(n) + " below min_inlier_fraction");
  }
  return result;
}

std::vector<Homography> chain_to_anchor(const std::vector<Homography>& links,
                                        int anchor) {
  const int p = static_cast<int>(links.size()) + 1;
  if (anchor < 0 || anchor >= p) {
    throw Error(ErrorCode::kInvalidArgument,
                "anchor " + std::to_string(anchor) + " outside [0, " +
                    std::to_string(p) + ")");
  }
  for (std::size_t k = 0; k < links.size(); ++k) {
    if (std::abs(links[k].matrix().determinant()) <= kTiny) {
      throw Error(ErrorCode::kSingularTransform,
                  "link " + std::to_string(k) + " is not invertible");
    }
  }
  std::vector<Homography> out(static_cast<std::size_t>(p));
  out[static_cast<std::size_t>(anchor)] = Homography::identity();
  // Frames before the anchor: H_k first, then H_{k+1}, ..., H_{anchor-1}.
  for (int k = anchor - 1; k >= 0; --k) {
    out[static_cast<std::size_t>(k)] =
        links[static_cast<std::size_t>(k)].then(out[static_cast<std::size_t>(k + 1)]);
  }
  // Frames after: H_{k-1}^{-1} first, then ..., H_anchor^{-1}.
  for (int k = anchor + 1; k < p; ++k) {
    out[static_cast<std::size_t>(k)] =
        links[static_cast<std::size_t>(k - 1)].inverse().then(
            out[static_cast<std::size_t>(k - 1)]);
  }
  return out;
}

int default_anchor(int frame_count) { return frame_count / 2; }

Canvas canvas_extent(const std::vector<Homography>& to_anchor, int frame_height,
                     int frame_width) {
  if (to_anchor.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no frames");
  }
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  const std::array<Eigen::Vector2d, 4> corners = {
      Eigen::Vector2d(0, 0), Eigen::Vector2d(frame_width - 1, 0),
      Eigen::Vector2d(0, frame_height - 1),
      Eigen::Vector2d(frame_width - 1, frame_height - 1)};
  for (const Homography& h : to_anchor) {
    for (const auto& c : corners) {
      const Eigen::Vector2d q = h.apply(c);
      min_x = std::min(min_x, q.x());
      min_y = std::min(min_y, q.y());
      max_x = std::max(max_x, q.x());
      max_y = std::max(max_y, q.y());
    }
  }
  Canvas canvas;
  const double ox = std::floor(min_x + kEdgeSlack);
  const double oy = std::floor(min_y + kEdgeSlack);
  canvas.origin = Eigen::Vector2d(ox, oy);
  canvas.width = static_cast<int>(std::ceil(max_x - kEdgeSlack) - ox) + 1;
  canvas.height = static_cast<int>(std::ceil(max_y - kEdgeSlack) - oy) + 1;
  return canvas;
}

namespace {

// Lower bilinear neighbor and weight of the upper one; `size` >= 1 and
// `coord` already known to be inside [0, size-1] up to slack.
std::pair<int, double> bilinear_axis(double coord, int size) {
  if (size == 1) return {0, 0.0};
  const double clamped = std::clamp(coord, 0.0, double(size - 1));
  int lo = static_cast<int>(std::floor(clamped));
  lo = std::min(lo, size - 2);
  return {lo, clamped - lo};
}

}  // namespace

FrameStack warp_to_canvas(const std::vector<Image>& frames,
                          const std::vector<Homography>& to_anchor,
                          const Canvas& canvas) {
  if (frames.empty() || frames.size() != to_anchor.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "need one homography per frame");
  }
  const int m = canvas.height;
  const int n = canvas.width;
  const auto p = static_cast<Eigen::Index>(frames.size());
  Matrix data = Matrix::Zero(Eigen::Index(m) * n, p);
  Matrix mask = Matrix::Zero(Eigen::Index(m) * n, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const Image& f = frames[static_cast<std::size_t>(k)];
    const int h = f.height();
    const int w = f.width();
    const Homography inv = to_anchor[static_cast<std::size_t>(k)].inverse();
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < m; ++i) {
        const Eigen::Vector3d q =
            inv.matrix().transpose() *
            Eigen::Vector3d(canvas.origin.x() + j, canvas.origin.y() + i, 1.0);
        if (std::abs(q.z()) < kTiny) continue;
        const double sx = q.x() / q.z();
        const double sy = q.y() / q.z();
        if (sx < -kEdgeSlack || sx > w - 1 + kEdgeSlack || sy < -kEdgeSlack ||
            sy > h - 1 + kEdgeSlack) {
          continue;
        }
        const auto [x0, fx] = bilinear_axis(sx, w);
        const auto [y0, fy] = bilinear_axis(sy, h);
        const int x1 = std::min(x0 + 1, w - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const double v = (1 - fy) * ((1 - fx) * f(y0, x0) + fx * f(y0, x1)) +
                         fy * ((1 - fx) * f(y1, x0) + fx * f(y1, x1));
        const Eigen::Index idx = i + Eigen::Index(m) * j;
        data(idx, k) = v;
        mask(idx, k) = 1.0;
      }
    }
  }
  return FrameStack(m, n, std::move(data), std::move(mask));
}

Registration register_with_links(const std::vector<Image>& frames,
                                 const std::vector<Homography>& links,
                                 std::optional<int> anchor) {
  if (frames.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no frames to register");
  }
  if (links.size() + 1 != frames.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "need frame_count - 1 inter-frame links");
  }
  const int h = frames.front().height();
  const int w = frames.front().width();
  for (const Image& f : frames) {
    if (f.height() != h || f.width() != w) {
      throw Error(ErrorCode::kDimensionMismatch, "frames differ in size");
    }
  }
  Registration reg;
  reg.anchor = anchor.value_or(default_anchor(static_cast<int>(frames.size())));
  reg.links = links;
  reg.to_anchor = chain_to_anchor(links, reg.anchor);
  reg.canvas = canvas_extent(reg.to_anchor, h, w);
  reg.stack = warp_to_canvas(frames, reg.to_anchor, reg.canvas);
  return reg;
}

Registration register_video(const std::vector<Image>& frames,
                            const RegistrationConfig& cfg) {
  if (frames.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no frames to register");
  }
  cfg.ransac.validate();
  std::vector<Homography> links(frames.size() - 1, Homography::identity());
  if (!cfg.static_camera) {
    for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
      const auto corrs =
          find_correspondences(frames[k], frames[k + 1], cfg.features);
      RansacConfig rc = cfg.ransac;
      rc.seed = cfg.ransac.seed + k;
      links[k] = estimate_homography_ransac(corrs, rc).model;
    }
  }
  return register_with_links(frames, links, cfg.anchor);
}

void write_correspondences(std::ostream& os,
                           const std::vector<Correspondence>& corrs) {
  os << std::setprecision(17);
  for (const auto& c : corrs) {
    os << c.source.x() << ' ' << c.source.y() << ' ' << c.target.x() << ' '
       << c.target.y() << '\n';
  }
}

std::vector<Correspondence> read_correspondences(std::istream& is) {
  std::vector<Correspondence> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    Correspondence c;
    if (!(ls >> c.source.x() >> c.source.y() >> c.target.x() >> c.target.y())) {
      throw Error(ErrorCode::kIo, "malformed correspondence on line " +
                                      std::to_string(line_no));
    }
    out.push_back(c);
  }
  return out;
}

void write_homography(std::ostream& os, const Homography& h) {
  os << std::setprecision(17);
  for (int r = 0; r < 3; ++r) {
    os << h(r, 0) << ' ' << h(r, 1) << ' ' << h(r, 2) << '\n';
  }
}

Homography read_homography(std::istream& is) {
  Eigen::Matrix3d h;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (!(is >> h(r, c))) {
        throw Error(ErrorCode::kIo, "homography needs 9 numbers");
      }
    }
  }
  return Homography(h);
}

}  // namespace panrpca
