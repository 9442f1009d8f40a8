#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "panrpca/evalsim.hpp"
#include "panrpca/registration.hpp"
#include "panrpca/solver.hpp"

namespace panrpca::cli {

using Json = nlohmann::ordered_json;

enum class CorruptionKind { kSaltPepper, kGaussian };

struct CorruptionConfig {
  CorruptionKind kind = CorruptionKind::kSaltPepper;
  double probability = 0.0;
  double snr_db = 30.0;
};

enum class ForegroundSource { kSmooth, kSparse };

struct MetricConfig {
  ThresholdSpec threshold;
  // Component thresholded for the F-measure in decompose reports.
  ForegroundSource foreground = ForegroundSource::kSmooth;
};

struct RunConfig {
  RegistrationConfig registration;
  SolverConfig solver;
  CorruptionConfig corruption;
  MetricConfig metric;
  SceneConfig scene;
  std::uint64_t seed = 0;
  // Every n-th frame gets a montage; 0 disables montages.
  int montage_stride = 10;
  // Wall-clock durations make reports non-reproducible, so they are opt-in.
  bool record_timing = false;

  void validate() const;
  // Propagates `seed` into every seeded sub-config.
  void apply_seed(std::uint64_t value);
};

// Overlays the keys present in `j` onto `base`. Unknown keys are rejected.
RunConfig merge_run_config(const Json& j, RunConfig base = {});
RunConfig load_run_config(const std::string& path, RunConfig base = {});

Json to_json(const RunConfig& cfg);
Json to_json(const SolverConfig& cfg);
Json to_json(const RegistrationConfig& cfg);
Json to_json(const SceneConfig& cfg);
Json to_json(const MetricReport& report);
Json to_json(const SolverTrace& trace);
Json to_json(const Homography& h);

Homography homography_from_json(const Json& j);

std::string to_string(XSolver solver);
XSolver parse_x_solver(const std::string& name);
std::string to_string(Boundary boundary);
Boundary parse_boundary(const std::string& name);
ThresholdMode parse_threshold_mode(const std::string& name);
ObjectShape parse_object_shape(const std::string& name);
std::string to_string(CorruptionKind kind);
CorruptionKind parse_corruption_kind(const std::string& name);
std::string to_string(ForegroundSource source);
ForegroundSource parse_foreground_source(const std::string& name);

}  // namespace panrpca::cli
