#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "panrpca/error.hpp"
#include "panrpca/registration.hpp"

namespace panrpca {
namespace {

Matrix gaussian_blur(const Matrix& in, double sigma) {
  if (sigma <= 0.0) return in;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    const double v = std::exp(-0.5 * t * t / (sigma * sigma));
    kernel[static_cast<std::size_t>(t + radius)] = v;
    sum += v;
  }
  for (double& v : kernel) v /= sum;

  const auto rows = static_cast<int>(in.rows());
  const auto cols = static_cast<int>(in.cols());
  Matrix tmp(rows, cols);
  Matrix out(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        const int ii = std::clamp(i + t, 0, rows - 1);
        acc += kernel[static_cast<std::size_t>(t + radius)] * in(ii, j);
      }
      tmp(i, j) = acc;
    }
  }
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        const int jj = std::clamp(j + t, 0, cols - 1);
        acc += kernel[static_cast<std::size_t>(t + radius)] * tmp(i, jj);
      }
      out(i, j) = acc;
    }
  }
  return out;
}

double patch_ncc(const Matrix& a, int ay, int ax, const Matrix& b, int by,
                 int bx, int r) {
  const int side = 2 * r + 1;
  const auto pa = a.block(ay - r, ax - r, side, side).array();
  const auto pb = b.block(by - r, bx - r, side, side).array();
  const double ma = pa.mean();
  const double mb = pb.mean();
  const double num = ((pa - ma) * (pb - mb)).sum();
  const double va = (pa - ma).square().sum();
  const double vb = (pb - mb).square().sum();
  if (va <= 0.0 || vb <= 0.0) return -1.0;
  return num / std::sqrt(va * vb);
}

double parabola_offset(double left, double center, double right) {
  const double denom = left - 2.0 * center + right;
  if (denom >= 0.0) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

}  // namespace

Image median_filter(const Image& image, int radius) {
  if (radius <= 0) return image;
  const int h = image.height();
  const int w = image.width();
  Matrix out(h, w);
  std::vector<double> window;
  window.reserve(static_cast<std::size_t>((2 * radius + 1) * (2 * radius + 1)));
  for (int j = 0; j < w; ++j) {
    for (int i = 0; i < h; ++i) {
      window.clear();
      for (int dj = -radius; dj <= radius; ++dj) {
        const int jj = j + dj;
        if (jj < 0 || jj >= w) continue;
        for (int di = -radius; di <= radius; ++di) {
          const int ii = i + di;
          if (ii < 0 || ii >= h) continue;
          window.push_back(image(ii, jj));
        }
      }
      auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
      std::nth_element(window.begin(), mid, window.end());
      out(i, j) = *mid;
    }
  }
  return Image(std::move(out));
}

std::vector<Corner> detect_harris_corners(const Image& image,
                                          const FeatureConfig& cfg) {
  const int h = image.height();
  const int w = image.width();
  const Matrix& img = image.pixels();
  Matrix ixx = Matrix::Zero(h, w);
  Matrix iyy = Matrix::Zero(h, w);
  Matrix ixy = Matrix::Zero(h, w);
  // Sobel gradients on the interior.
  for (int j = 1; j + 1 < w; ++j) {
    for (int i = 1; i + 1 < h; ++i) {
      const double gx = (img(i - 1, j + 1) + 2 * img(i, j + 1) + img(i + 1, j + 1)) -
                        (img(i - 1, j - 1) + 2 * img(i, j - 1) + img(i + 1, j - 1));
      const double gy = (img(i + 1, j - 1) + 2 * img(i + 1, j) + img(i + 1, j + 1)) -
                        (img(i - 1, j - 1) + 2 * img(i - 1, j) + img(i - 1, j + 1));
      ixx(i, j) = gx * gx;
      iyy(i, j) = gy * gy;
      ixy(i, j) = gx * gy;
    }
  }
  ixx = gaussian_blur(ixx, cfg.gaussian_sigma);
  iyy = gaussian_blur(iyy, cfg.gaussian_sigma);
  ixy = gaussian_blur(ixy, cfg.gaussian_sigma);
  const Matrix trace = ixx + iyy;
  const Matrix response =
      (ixx.array() * iyy.array() - ixy.array().square() -
       cfg.harris_k * trace.array().square())
          .matrix();

  const double peak = response.maxCoeff();
  std::vector<Corner> candidates;
  if (!(peak > 0.0)) return candidates;
  const double floor = cfg.quality_level * peak;
  const int margin = cfg.patch_radius + 1;
  for (int j = margin; j < w - margin; ++j) {
    for (int i = margin; i < h - margin; ++i) {
      const double r = response(i, j);
      if (r <= floor) continue;
      bool is_max = true;
      for (int dj = -1; dj <= 1 && is_max; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if ((di || dj) && response(i + di, j + dj) > r) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back({Eigen::Vector2d(j, i), r});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Corner& a, const Corner& b) {
                     return a.response > b.response;
                   });
  std::vector<Corner> corners;
  const double min_d2 = double(cfg.min_distance) * cfg.min_distance;
  for (const Corner& c : candidates) {
    if (static_cast<int>(corners.size()) >= cfg.max_corners) break;
    bool far = true;
    for (const Corner& kept : corners) {
      if ((kept.position - c.position).squaredNorm() < min_d2) {
        far = false;
        break;
      }
    }
    if (far) corners.push_back(c);
  }
  return corners;
}

std::vector<Correspondence> find_correspondences(const Image& frame_a,
                                                 const Image& frame_b,
                                                 const FeatureConfig& cfg) {
  if (frame_a.height() != frame_b.height() ||
      frame_a.width() != frame_b.width()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "correspondence frames differ in size");
  }
  const Image a = median_filter(frame_a, cfg.median_radius);
  const Image b = median_filter(frame_b, cfg.median_radius);
  const int h = a.height();
  const int w = a.width();
  const int r = cfg.patch_radius;
  const int search = cfg.search_radius;

  struct Match {
    int dx = 0;
    int dy = 0;
    double score = -2.0;
  };
  // Best NCC displacement of the patch at (cx, cy) in `from` within `to`.
  auto best_match = [&](const Matrix& from, const Matrix& to, int cx, int cy) {
    Match m;
    for (int dy = -search; dy <= search; ++dy) {
      const int by = cy + dy;
      if (by - r < 0 || by + r >= h) continue;
      for (int dx = -search; dx <= search; ++dx) {
        const int bx = cx + dx;
        if (bx - r < 0 || bx + r >= w) continue;
        const double score = patch_ncc(from, cy, cx, to, by, bx, r);
        const bool tie = std::abs(score - m.score) <= 1e-12;
        if ((score > m.score && !tie) ||
            (tie && dx * dx + dy * dy < m.dx * m.dx + m.dy * m.dy)) {
          m = {dx, dy, score};
        }
      }
    }
    return m;
  };

  std::vector<Correspondence> matches;
  for (const Corner& corner : detect_harris_corners(a, cfg)) {
    const int cx = static_cast<int>(corner.position.x());
    const int cy = static_cast<int>(corner.position.y());
    const Match fwd = best_match(a.pixels(), b.pixels(), cx, cy);
    const double best = fwd.score;
    const int best_dx = fwd.dx;
    const int best_dy = fwd.dy;
    if (best < cfg.ncc_floor) continue;
    if (cfg.cross_check) {
      const Match back = best_match(b.pixels(), a.pixels(), cx + best_dx, cy + best_dy);
      if (back.dx != -best_dx || back.dy != -best_dy) continue;
    }

    Eigen::Vector2d target(cx + best_dx, cy + best_dy);
    if (cfg.subpixel) {
      const int bx = cx + best_dx;
      const int by = cy + best_dy;
      auto score_at = [&](int x, int y) {
        if (x - r < 0 || x + r >= w || y - r < 0 || y + r >= h) return best;
        return patch_ncc(a.pixels(), cy, cx, b.pixels(), y, x, r);
      };
      target.x() += parabola_offset(score_at(bx - 1, by), best, score_at(bx + 1, by));
      target.y() += parabola_offset(score_at(bx, by - 1), best, score_at(bx, by + 1));
    }
    matches.push_back({corner.position, target});
  }
  if (matches.size() < 4) {
    throw Error(ErrorCode::kInsufficientFeatures,
                "only " + std::to_string(matches.size()) +
                    " correspondences found");
  }
  return matches;
}

}  // namespace panrpca
