#include "panrpca/evalsim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "panrpca/error.hpp"

namespace panrpca {
namespace {

const Matrix& region_or_ones(const Matrix& values, const Matrix& region,
                             Matrix& storage) {
  if (region.size() == 0) {
    storage = Matrix::Ones(values.rows(), values.cols());
    return storage;
  }
  if (region.rows() != values.rows() || region.cols() != values.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "region shape");
  }
  return region;
}

std::vector<Eigen::Vector2i> object_pixels(const Eigen::Vector2d& center,
                                           const SceneConfig& cfg) {
  std::vector<Eigen::Vector2i> pixels;
  const int s = cfg.object_size;
  if (s <= 0) return pixels;
  const double half = (s - 1) / 2.0;
  const int x0 = static_cast<int>(std::floor(center.x() - half + 0.5));
  const int y0 = static_cast<int>(std::floor(center.y() - half + 0.5));
  if (cfg.shape == ObjectShape::kSquare) {
    for (int dx = 0; dx < s; ++dx) {
      for (int dy = 0; dy < s; ++dy) pixels.emplace_back(x0 + dx, y0 + dy);
    }
    return pixels;
  }
  const double r2 = (s / 2.0) * (s / 2.0);
  for (int x = x0 - 1; x <= x0 + s; ++x) {
    for (int y = y0 - 1; y <= y0 + s; ++y) {
      const double ddx = x - center.x();
      const double ddy = y - center.y();
      if (ddx * ddx + ddy * ddy <= r2) pixels.emplace_back(x, y);
    }
  }
  return pixels;
}

Image make_background(int height, int width, const SceneConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> period(24.0, 96.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> amp(0.5, 1.0);
  constexpr int kWaves = 6;
  struct Wave {
    double kx, ky, phase, amplitude;
  };
  std::vector<Wave> waves;
  for (int w = 0; w < kWaves; ++w) {
    const double theta = angle(rng);
    const double freq = 2.0 * M_PI / period(rng);
    waves.push_back({freq * std::cos(theta), freq * std::sin(theta), angle(rng),
                     amp(rng)});
  }
  if (cfg.texture_amplitude > 0.0) {
    std::uniform_real_distribution<double> fine(5.0, 12.0);
    for (int w = 0; w < kWaves; ++w) {
      const double theta = angle(rng);
      const double freq = 2.0 * M_PI / fine(rng);
      waves.push_back({freq * std::cos(theta), freq * std::sin(theta), angle(rng),
                       cfg.texture_amplitude * amp(rng)});
    }
  }
  Matrix img(height, width);
  for (int j = 0; j < width; ++j) {
    for (int i = 0; i < height; ++i) {
      double v = 0.0;
      for (const Wave& w : waves) {
        v += w.amplitude * std::sin(w.kx * j + w.ky * i + w.phase);
      }
      img(i, j) = v;
    }
  }
  const double lo = img.minCoeff();
  const double hi = img.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  img = ((img.array() - lo) / span * (cfg.background_high - cfg.background_low) +
         cfg.background_low)
            .matrix();
  return Image(std::move(img));
}

}  // namespace

double signal_power(const FrameStack& stack) {
  const double count = stack.mask().sum();
  if (count <= 0.0) return 0.0;
  return stack.data().cwiseProduct(stack.mask()).squaredNorm() / count;
}

CorruptedStack add_salt_pepper(const FrameStack& stack, double probability,
                               std::uint64_t seed) {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "salt-and-pepper probability must lie in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Matrix data = stack.data();
  Matrix hits = Matrix::Zero(data.rows(), data.cols());
  const Matrix& mask = stack.mask();
  for (Eigen::Index k = 0; k < data.cols(); ++k) {
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      if (mask(i, k) == 0.0) continue;
      const bool hit = uniform(rng) < probability;
      const bool salt = uniform(rng) < 0.5;
      if (hit) {
        data(i, k) = salt ? 1.0 : 0.0;
        hits(i, k) = 1.0;
      }
    }
  }
  return {stack.with_data(std::move(data)), std::move(hits)};
}

CorruptedStack add_gaussian_snr(const FrameStack& stack, double snr_db,
                                std::uint64_t seed) {
  if (!std::isfinite(snr_db)) {
    throw Error(ErrorCode::kInvalidArgument, "SNR must be finite");
  }
  const double power = signal_power(stack);
  if (!(power > 0.0)) {
    throw Error(ErrorCode::kUndefinedSnr, "signal power is zero");
  }
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  Matrix data = stack.data();
  const Matrix& mask = stack.mask();
  for (Eigen::Index k = 0; k < data.cols(); ++k) {
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      if (mask(i, k) != 0.0) data(i, k) += noise(rng);
    }
  }
  return {stack.with_data(std::move(data)), mask};
}

double psnr_region(const Matrix& truth, const Matrix& estimate,
                   const Matrix& region) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols() ||
      truth.rows() != region.rows() || truth.cols() != region.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "psnr operand shapes");
  }
  const double count = region.sum();
  if (!(count > 0.0)) {
    throw Error(ErrorCode::kEmptyRegion, "PSNR region is empty");
  }
  const double mse = (truth - estimate).cwiseProduct(region).squaredNorm() / count;
  if (mse <= 0.0) return kPsnrCapDb;
  // Peak intensity is 1.
  return std::min(kPsnrCapDb, -10.0 * std::log10(mse));
}

double otsu_threshold(const Matrix& values, const Matrix& region, int bins) {
  if (bins < 2) {
    throw Error(ErrorCode::kInvalidArgument, "Otsu needs at least 2 bins");
  }
  Matrix storage;
  const Matrix& r = region_or_ones(values, region, storage);
  double peak = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (r(i) != 0.0) peak = std::max(peak, std::abs(values(i)));
  }
  if (!(peak > 0.0)) return 0.0;

  std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
  double total = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (r(i) == 0.0) continue;
    const int b = std::min(bins - 1, static_cast<int>(std::abs(values(i)) / peak * bins));
    hist[static_cast<std::size_t>(b)] += 1.0;
    total += 1.0;
  }
  double sum_all = 0.0;
  for (int b = 0; b < bins; ++b) sum_all += b * hist[static_cast<std::size_t>(b)];

  double w0 = 0.0;
  double sum0 = 0.0;
  double best_var = -1.0;
  int best_bin = 0;
  for (int b = 0; b < bins - 1; ++b) {
    w0 += hist[static_cast<std::size_t>(b)];
    sum0 += b * hist[static_cast<std::size_t>(b)];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (var > best_var) {
      best_var = var;
      best_bin = b;
    }
  }
  return (best_bin + 1) * peak / bins;
}

ForegroundMask foreground_mask(const Matrix& component, const ThresholdSpec& spec,
                               const Matrix& region) {
  Matrix storage;
  const Matrix& r = region_or_ones(component, region, storage);
  ForegroundMask out;
  out.threshold = spec.mode == ThresholdMode::kOtsu
                      ? otsu_threshold(component, r, spec.bins)
                      : spec.value;
  out.mask = ((component.array().abs() > out.threshold).cast<double>() * r.array())
                 .matrix();
  return out;
}

MetricReport f_measure(const Matrix& estimated, const Matrix& truth,
                       const Matrix& region) {
  if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "f_measure operand shapes");
  }
  Matrix storage;
  const Matrix& r = region_or_ones(truth, region, storage);
  double tp = 0.0;
  double fp = 0.0;
  double fn = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    if (r(i) == 0.0) continue;
    const bool est = estimated(i) != 0.0;
    const bool tru = truth(i) != 0.0;
    tp += est && tru;
    fp += est && !tru;
    fn += !est && tru;
  }
  MetricReport report;
  if (tp + fp > 0.0) {
    report.precision = tp / (tp + fp);
  } else {
    report.degenerate = true;
  }
  if (tp + fn > 0.0) {
    report.recall = tp / (tp + fn);
  } else {
    report.degenerate = true;
  }
  const double denom = report.precision + report.recall;
  if (denom > 0.0) {
    report.f_measure = 2.0 * report.precision * report.recall / denom;
  } else {
    report.degenerate = true;
  }
  return report;
}

MetricReport evaluate(const FrameStack& truth, const Matrix& truth_foreground,
                      const Matrix& estimate, const Matrix& foreground,
                      const ThresholdSpec& spec) {
  const Matrix& observed = truth.mask();
  const Matrix fg_region = truth_foreground.cwiseProduct(observed);
  const Matrix bg_region = (1.0 - truth_foreground.array()).matrix().cwiseProduct(observed);
  const ForegroundMask est = foreground_mask(foreground, spec, observed);
  MetricReport report = f_measure(est.mask, fg_region, observed);
  report.f_psnr = psnr_region(truth.data(), estimate, fg_region);
  report.b_psnr = psnr_region(truth.data(), estimate, bg_region);
  report.threshold_mode = to_string(spec.mode);
  report.threshold = est.threshold;
  return report;
}

int panorama_width(const SceneConfig& cfg) {
  return cfg.width + std::abs(cfg.pan_per_frame) * (cfg.frames - 1);
}

SyntheticScene make_synthetic_scene(const SceneConfig& cfg) {
  if (cfg.height < 1 || cfg.width < 1 || cfg.frames < 1) {
    throw Error(ErrorCode::kInvalidArgument, "scene dimensions must be positive");
  }
  if (cfg.object_size < 0) {
    throw Error(ErrorCode::kInvalidArgument, "object size must be >= 0");
  }
  if (!(cfg.texture_amplitude >= 0.0) || !std::isfinite(cfg.texture_amplitude)) {
    throw Error(ErrorCode::kInvalidArgument, "texture amplitude must be finite and >= 0");
  }
  const int h = cfg.height;
  const int w = cfg.width;
  const int p = cfg.frames;
  const int pano_w = panorama_width(cfg);

  SyntheticScene scene;
  scene.config = cfg;
  scene.background = make_background(h, pano_w, cfg);

  std::vector<int> offsets(static_cast<std::size_t>(p));
  for (int k = 0; k < p; ++k) {
    offsets[static_cast<std::size_t>(k)] =
        cfg.pan_per_frame >= 0 ? k * cfg.pan_per_frame
                               : (p - 1 - k) * -cfg.pan_per_frame;
  }

  for (int k = 0; k < p; ++k) {
    const Eigen::Vector2d center = cfg.start + double(k) * cfg.velocity;
    scene.trajectory.push_back(center);
    Matrix pano = scene.background.pixels();
    Matrix pano_mask = Matrix::Zero(h, pano_w);
    for (const Eigen::Vector2i& px : object_pixels(center, cfg)) {
      if (px.x() < 0 || px.x() >= pano_w || px.y() < 0 || px.y() >= h) {
        throw Error(ErrorCode::kOutOfBounds,
                    "object leaves the scene at frame " + std::to_string(k));
      }
      pano(px.y(), px.x()) = cfg.object_intensity;
      pano_mask(px.y(), px.x()) = 1.0;
    }
    const int off = offsets[static_cast<std::size_t>(k)];
    scene.frames.emplace_back(Matrix(pano.middleCols(off, w)));
    scene.foreground_masks.emplace_back(Matrix(pano_mask.middleCols(off, w)));
  }

  // Frame k sees panorama column x + offset_k, so frame k+1 sees it at
  // x + offset_k - offset_{k+1}.
  for (int k = 0; k + 1 < p; ++k) {
    scene.links.push_back(Homography::translation(
        offsets[static_cast<std::size_t>(k)] - offsets[static_cast<std::size_t>(k + 1)],
        0.0));
  }
  const Registration reg = register_with_links(scene.frames, scene.links);
  scene.anchor = reg.anchor;
  scene.to_anchor = reg.to_anchor;
  scene.registered = reg.stack;
  const FrameStack fg =
      warp_to_canvas(scene.foreground_masks, reg.to_anchor, reg.canvas);
  scene.registered_foreground = fg.data();
  scene.registered_background =
      scene.background.pixels().reshaped().replicate(1, p);
  return scene;
}

std::string to_string(ThresholdMode mode) {
  return mode == ThresholdMode::kOtsu ? "otsu" : "fixed";
}

std::string to_string(ObjectShape shape) {
  return shape == ObjectShape::kDisc ? "disc" : "square";
}

}  // namespace panrpca
