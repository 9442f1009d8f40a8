#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "panrpca/core.hpp"
#include "panrpca/registration.hpp"

namespace panrpca {

// PSNR reported for a region reconstructed without error.
inline constexpr double kPsnrCapDb = 99.0;

struct CorruptedStack {
  FrameStack stack;
  Matrix hits;  // 1 where a pixel was replaced / perturbed
};

CorruptedStack add_salt_pepper(const FrameStack& stack, double probability,
                               std::uint64_t seed);

CorruptedStack add_gaussian_snr(const FrameStack& stack, double snr_db,
                                std::uint64_t seed);

// Mean of squared intensities over observed pixels.
double signal_power(const FrameStack& stack);

double psnr_region(const Matrix& truth, const Matrix& estimate,
                   const Matrix& region);

enum class ThresholdMode { kFixed, kOtsu };

struct ThresholdSpec {
  ThresholdMode mode = ThresholdMode::kOtsu;
  double value = 0.0;  // fixed threshold; ignored for Otsu
  int bins = 256;
};

// Otsu threshold of |values| restricted to region (empty region = all).
double otsu_threshold(const Matrix& values, const Matrix& region, int bins = 256);

struct ForegroundMask {
  Matrix mask;
  double threshold = 0.0;
};

ForegroundMask foreground_mask(const Matrix& component, const ThresholdSpec& spec,
                               const Matrix& region = Matrix());

struct MetricReport {
  double f_psnr = 0.0;
  double b_psnr = 0.0;
  double f_measure = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  bool degenerate = false;  // empty denominator somewhere
  std::string threshold_mode = "otsu";
  double threshold = 0.0;
};

// Fills precision, recall, f_measure and degenerate.
MetricReport f_measure(const Matrix& estimated, const Matrix& truth,
                       const Matrix& region = Matrix());

// f-PSNR / b-PSNR of `estimate` against `truth` on the true foreground and
// background (restricted to observed pixels), and the F-measure of the
// thresholded `foreground` component.
MetricReport evaluate(const FrameStack& truth, const Matrix& truth_foreground,
                      const Matrix& estimate, const Matrix& foreground,
                      const ThresholdSpec& spec = {});

enum class ObjectShape { kSquare, kDisc };

struct SceneConfig {
  int height = 64;
  int width = 64;
  int frames = 40;
  // Horizontal camera pan in pixels per frame; 0 is a static camera.
  int pan_per_frame = 0;
  int object_size = 8;
  ObjectShape shape = ObjectShape::kSquare;
  // Object center in background (panorama) coordinates (x, y) at frame 0,
  // and its per-frame velocity.
  Eigen::Vector2d start = Eigen::Vector2d(8.5, 27.5);
  Eigen::Vector2d velocity = Eigen::Vector2d(1.0, 0.0);
  double object_intensity = 0.95;
  double background_low = 0.1;
  double background_high = 0.6;
  // Relative amplitude of fine-scale waves (periods 5-12 px) added to the
  // smooth background; 0 keeps it smooth.
  double texture_amplitude = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticScene {
  SceneConfig config;
  Image background;  // full panorama (equals the frame size when static)
  std::vector<Image> frames;
  std::vector<Image> foreground_masks;  // per raw frame
  std::vector<Eigen::Vector2d> trajectory;  // object center per frame
  std::vector<Homography> links;            // frame k -> k+1
  int anchor = 0;
  std::vector<Homography> to_anchor;
  FrameStack registered;          // clean frames on the panoramic canvas
  Matrix registered_foreground;   // foreground masks on the canvas
  Matrix registered_background;   // background panorama in every column
};

int panorama_width(const SceneConfig& cfg);

SyntheticScene make_synthetic_scene(const SceneConfig& cfg);

std::string to_string(ThresholdMode mode);
std::string to_string(ObjectShape shape);

}  // namespace panrpca
