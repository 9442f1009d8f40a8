#include "run_config.hpp"

#include <cmath>
#include <set>

#include "image_io.hpp"
#include "panrpca/error.hpp"

namespace panrpca::cli {
namespace {

[[noreturn]] void bad_config(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, "config: " + what);
}

void check_keys(const Json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad_config(section + " must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (keys.count(key) == 0) bad_config("unknown key " + section + "." + key);
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    bad_config(std::string("bad value for ") + key + ": " + e.what());
  }
}

template <typename T, typename Parse>
void read_enum(const Json& j, const char* key, T& out, Parse parse) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_string()) bad_config(std::string(key) + " must be a string");
  out = parse(j.at(key).get<std::string>());
}

void read_vec2(const Json& j, const char* key, Eigen::Vector2d& out) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    bad_config(std::string(key) + " must be [x, y]");
  }
  out = Eigen::Vector2d(v[0].get<double>(), v[1].get<double>());
}

void merge_admm(const Json& j, AdmmConfig& a) {
  check_keys(j, "solver.admm",
             {"rho", "max_outer", "tol", "cg_tol", "cg_max", "warm_start",
              "boundary", "x_solver"});
  read(j, "rho", a.rho);
  read(j, "max_outer", a.max_outer);
  read(j, "tol", a.tol);
  read(j, "cg_tol", a.cg_tol);
  read(j, "cg_max", a.cg_max);
  read(j, "warm_start", a.warm_start);
  read_enum(j, "boundary", a.boundary, parse_boundary);
  read_enum(j, "x_solver", a.x_solver, parse_x_solver);
}

void merge_solver(const Json& j, SolverConfig& s) {
  check_keys(j, "solver",
             {"tau", "rank", "lambda_sparse", "lambda_smooth", "lambda_low_rank",
              "max_iter", "rel_tol", "low_rank_mode", "smooth_component", "admm"});
  read(j, "tau", s.tau);
  read(j, "rank", s.rank);
  read(j, "lambda_sparse", s.lambda_sparse);
  read(j, "lambda_smooth", s.lambda_smooth);
  if (j.contains("lambda_low_rank")) {
    if (j.at("lambda_low_rank").is_null()) {
      s.lambda_low_rank.reset();
    } else {
      double v = 0.0;
      read(j, "lambda_low_rank", v);
      s.lambda_low_rank = v;
    }
  }
  read(j, "max_iter", s.max_iter);
  read(j, "rel_tol", s.rel_tol);
  read_enum(j, "low_rank_mode", s.low_rank_mode, parse_low_rank_mode);
  read(j, "smooth_component", s.smooth_component);
  if (j.contains("admm")) merge_admm(j.at("admm"), s.admm);
}

void merge_registration(const Json& j, RegistrationConfig& r) {
  check_keys(j, "registration", {"features", "ransac", "anchor", "static_camera"});
  if (j.contains("features")) {
    const Json& f = j.at("features");
    check_keys(f, "registration.features",
               {"max_corners", "harris_k", "gaussian_sigma", "quality_level",
                "min_distance", "patch_radius", "search_radius", "ncc_floor",
                "median_radius", "subpixel", "cross_check"});
    read(f, "max_corners", r.features.max_corners);
    read(f, "harris_k", r.features.harris_k);
    read(f, "gaussian_sigma", r.features.gaussian_sigma);
    read(f, "quality_level", r.features.quality_level);
    read(f, "min_distance", r.features.min_distance);
    read(f, "patch_radius", r.features.patch_radius);
    read(f, "search_radius", r.features.search_radius);
    read(f, "ncc_floor", r.features.ncc_floor);
    read(f, "median_radius", r.features.median_radius);
    read(f, "subpixel", r.features.subpixel);
    read(f, "cross_check", r.features.cross_check);
  }
  if (j.contains("ransac")) {
    const Json& rs = j.at("ransac");
    check_keys(rs, "registration.ransac",
               {"iterations", "inlier_threshold", "min_inlier_fraction"});
    read(rs, "iterations", r.ransac.iterations);
    read(rs, "inlier_threshold", r.ransac.inlier_threshold);
    read(rs, "min_inlier_fraction", r.ransac.min_inlier_fraction);
  }
  if (j.contains("anchor")) {
    if (j.at("anchor").is_null()) {
      r.anchor.reset();
    } else {
      int a = 0;
      read(j, "anchor", a);
      r.anchor = a;
    }
  }
  read(j, "static_camera", r.static_camera);
}

void merge_scene(const Json& j, SceneConfig& s) {
  check_keys(j, "scene",
             {"height", "width", "frames", "pan_per_frame", "object_size", "shape",
              "start", "velocity", "object_intensity", "background_low",
              "background_high", "texture_amplitude"});
  read(j, "height", s.height);
  read(j, "width", s.width);
  read(j, "frames", s.frames);
  read(j, "pan_per_frame", s.pan_per_frame);
  read(j, "object_size", s.object_size);
  read_enum(j, "shape", s.shape, parse_object_shape);
  read_vec2(j, "start", s.start);
  read_vec2(j, "velocity", s.velocity);
  read(j, "object_intensity", s.object_intensity);
  read(j, "background_low", s.background_low);
  read(j, "background_high", s.background_high);
  read(j, "texture_amplitude", s.texture_amplitude);
}

}  // namespace

void RunConfig::validate() const {
  solver.validate();
  registration.ransac.validate();
  const FeatureConfig& f = registration.features;
  if (f.max_corners < 4 || f.gaussian_sigma <= 0.0 || f.patch_radius < 1 ||
      f.search_radius < 0 || f.min_distance < 0 || f.median_radius < 0 ||
      !(f.quality_level >= 0.0 && f.quality_level <= 1.0) ||
      !(f.ncc_floor >= -1.0 && f.ncc_floor <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid feature settings");
  }
  if (registration.anchor && *registration.anchor < 0) {
    throw Error(ErrorCode::kInvalidArgument, "anchor must be non-negative");
  }
  if (corruption.kind == CorruptionKind::kSaltPepper &&
      !(corruption.probability >= 0.0 && corruption.probability <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "probability must lie in [0, 1]");
  }
  if (corruption.kind == CorruptionKind::kGaussian && !std::isfinite(corruption.snr_db)) {
    throw Error(ErrorCode::kInvalidArgument, "SNR must be finite");
  }
  if (metric.threshold.bins < 2) {
    throw Error(ErrorCode::kInvalidArgument, "threshold bins must be >= 2");
  }
  if (metric.threshold.mode == ThresholdMode::kFixed &&
      !(metric.threshold.value >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "fixed threshold must be >= 0");
  }
  if (montage_stride < 0) {
    throw Error(ErrorCode::kInvalidArgument, "montage stride must be >= 0");
  }
}

void RunConfig::apply_seed(std::uint64_t value) {
  seed = value;
  registration.ransac.seed = value;
  scene.seed = value;
}

RunConfig merge_run_config(const Json& j, RunConfig base) {
  check_keys(j, "config",
             {"registration", "solver", "corruption", "metric", "scene", "seed",
              "montage_stride", "record_timing"});
  if (j.contains("registration")) merge_registration(j.at("registration"), base.registration);
  if (j.contains("solver")) merge_solver(j.at("solver"), base.solver);
  if (j.contains("corruption")) {
    const Json& c = j.at("corruption");
    check_keys(c, "corruption", {"kind", "probability", "snr_db"});
    read_enum(c, "kind", base.corruption.kind, parse_corruption_kind);
    read(c, "probability", base.corruption.probability);
    read(c, "snr_db", base.corruption.snr_db);
  }
  if (j.contains("metric")) {
    const Json& m = j.at("metric");
    check_keys(m, "metric", {"threshold", "threshold_value", "bins", "foreground"});
    read_enum(m, "threshold", base.metric.threshold.mode, parse_threshold_mode);
    read(m, "threshold_value", base.metric.threshold.value);
    read(m, "bins", base.metric.threshold.bins);
    read_enum(m, "foreground", base.metric.foreground, parse_foreground_source);
  }
  if (j.contains("scene")) merge_scene(j.at("scene"), base.scene);
  if (j.contains("seed")) {
    std::uint64_t s = 0;
    read(j, "seed", s);
    base.apply_seed(s);
  }
  read(j, "montage_stride", base.montage_stride);
  read(j, "record_timing", base.record_timing);
  return base;
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    bad_config(path + ": " + e.what());
  }
  return merge_run_config(j, std::move(base));
}

Json to_json(const SolverConfig& s) {
  Json j;
  j["tau"] = s.tau;
  j["rank"] = s.rank;
  j["lambda_sparse"] = s.lambda_sparse;
  j["lambda_smooth"] = s.lambda_smooth;
  j["lambda_low_rank"] = s.lambda_low_rank ? Json(*s.lambda_low_rank) : Json(nullptr);
  j["max_iter"] = s.max_iter;
  j["rel_tol"] = s.rel_tol;
  j["low_rank_mode"] = to_string(s.low_rank_mode);
  j["smooth_component"] = s.smooth_component;
  j["admm"] = {{"rho", s.admm.rho},
               {"max_outer", s.admm.max_outer},
               {"tol", s.admm.tol},
               {"cg_tol", s.admm.cg_tol},
               {"cg_max", s.admm.cg_max},
               {"warm_start", s.admm.warm_start},
               {"boundary", to_string(s.admm.boundary)},
               {"x_solver", to_string(s.admm.x_solver)}};
  return j;
}

Json to_json(const RegistrationConfig& r) {
  Json j;
  const FeatureConfig& f = r.features;
  j["features"] = {{"max_corners", f.max_corners},
                   {"harris_k", f.harris_k},
                   {"gaussian_sigma", f.gaussian_sigma},
                   {"quality_level", f.quality_level},
                   {"min_distance", f.min_distance},
                   {"patch_radius", f.patch_radius},
                   {"search_radius", f.search_radius},
                   {"ncc_floor", f.ncc_floor},
                   {"median_radius", f.median_radius},
                   {"subpixel", f.subpixel},
                   {"cross_check", f.cross_check}};
  j["ransac"] = {{"iterations", r.ransac.iterations},
                 {"inlier_threshold", r.ransac.inlier_threshold},
                 {"min_inlier_fraction", r.ransac.min_inlier_fraction},
                 {"seed", r.ransac.seed}};
  j["anchor"] = r.anchor ? Json(*r.anchor) : Json(nullptr);
  j["static_camera"] = r.static_camera;
  return j;
}

Json to_json(const SceneConfig& s) {
  Json j;
  j["height"] = s.height;
  j["width"] = s.width;
  j["frames"] = s.frames;
  j["pan_per_frame"] = s.pan_per_frame;
  j["object_size"] = s.object_size;
  j["shape"] = to_string(s.shape);
  j["start"] = {s.start.x(), s.start.y()};
  j["velocity"] = {s.velocity.x(), s.velocity.y()};
  j["object_intensity"] = s.object_intensity;
  j["background_low"] = s.background_low;
  j["background_high"] = s.background_high;
  j["texture_amplitude"] = s.texture_amplitude;
  j["seed"] = s.seed;
  return j;
}

Json to_json(const RunConfig& cfg) {
  Json j;
  j["seed"] = cfg.seed;
  j["registration"] = to_json(cfg.registration);
  j["solver"] = to_json(cfg.solver);
  j["corruption"] = {{"kind", to_string(cfg.corruption.kind)},
                     {"probability", cfg.corruption.probability},
                     {"snr_db", cfg.corruption.snr_db}};
  j["metric"] = {{"threshold", to_string(cfg.metric.threshold.mode)},
                 {"threshold_value", cfg.metric.threshold.value},
                 {"bins", cfg.metric.threshold.bins},
                 {"foreground", to_string(cfg.metric.foreground)}};
  j["scene"] = to_json(cfg.scene);
  j["montage_stride"] = cfg.montage_stride;
  j["record_timing"] = cfg.record_timing;
  return j;
}

Json to_json(const MetricReport& r) {
  Json j;
  j["f_psnr"] = r.f_psnr;
  j["b_psnr"] = r.b_psnr;
  j["f_measure"] = r.f_measure;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["degenerate"] = r.degenerate;
  j["threshold_mode"] = r.threshold_mode;
  j["threshold"] = r.threshold;
  return j;
}

namespace {

Json record_json(const IterationRecord& r, bool with_time) {
  Json j;
  j["iteration"] = r.iteration;
  j["objective"] = r.objective;
  j["nuclear_norm"] = r.nuclear_norm;
  j["full_objective"] = r.full_objective;
  j["data_fit"] = r.data_fit;
  j["delta_low_rank"] = r.delta_low_rank;
  j["delta_sparse"] = r.delta_sparse;
  j["delta_smooth"] = r.delta_smooth;
  j["admm_iterations"] = r.admm_iterations;
  j["tv_step_rejected"] = r.tv_step_rejected;
  if (with_time) j["seconds"] = r.seconds;
  return j;
}

}  // namespace

Json to_json(const SolverTrace& t) {
  Json j;
  j["converged"] = t.converged;
  j["cg_warnings"] = t.cg_warnings;
  j["worst_cg_residual"] = t.worst_cg_residual;
  j["initial"] = record_json(t.initial, false);
  Json its = Json::array();
  for (const auto& r : t.iterations) its.push_back(record_json(r, false));
  j["iterations"] = std::move(its);
  return j;
}

Json to_json(const Homography& h) {
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({h(r, 0), h(r, 1), h(r, 2)});
  return rows;
}

Homography homography_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) bad_config("homography must be 3x3");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    if (!j[r].is_array() || j[r].size() != 3) bad_config("homography must be 3x3");
    for (int c = 0; c < 3; ++c) m(r, c) = j[r][c].get<double>();
  }
  return Homography(m);
}

std::string to_string(XSolver s) {
  switch (s) {
    case XSolver::kConjugateGradient: return "cg";
    case XSolver::kFft: return "fft";
    case XSolver::kAuto: return "auto";
  }
  return "cg";
}

XSolver parse_x_solver(const std::string& name) {
  if (name == "cg") return XSolver::kConjugateGradient;
  if (name == "fft") return XSolver::kFft;
  if (name == "auto") return XSolver::kAuto;
  throw Error(ErrorCode::kInvalidArgument, "unknown x-solver: " + name);
}

std::string to_string(Boundary b) {
  return b == Boundary::kCirculant ? "circulant" : "dropped";
}

Boundary parse_boundary(const std::string& name) {
  if (name == "dropped") return Boundary::kDropped;
  if (name == "circulant") return Boundary::kCirculant;
  throw Error(ErrorCode::kInvalidArgument, "unknown boundary: " + name);
}

ThresholdMode parse_threshold_mode(const std::string& name) {
  if (name == "otsu") return ThresholdMode::kOtsu;
  if (name == "fixed") return ThresholdMode::kFixed;
  throw Error(ErrorCode::kInvalidArgument, "unknown threshold mode: " + name);
}

ObjectShape parse_object_shape(const std::string& name) {
  if (name == "square") return ObjectShape::kSquare;
  if (name == "disc") return ObjectShape::kDisc;
  throw Error(ErrorCode::kInvalidArgument, "unknown object shape: " + name);
}

std::string to_string(CorruptionKind k) {
  return k == CorruptionKind::kGaussian ? "gaussian" : "salt_pepper";
}

CorruptionKind parse_corruption_kind(const std::string& name) {
  if (name == "salt_pepper") return CorruptionKind::kSaltPepper;
  if (name == "gaussian") return CorruptionKind::kGaussian;
  throw Error(ErrorCode::kInvalidArgument, "unknown corruption kind: " + name);
}

std::string to_string(ForegroundSource s) {
  return s == ForegroundSource::kSparse ? "sparse" : "smooth";
}

ForegroundSource parse_foreground_source(const std::string& name) {
  if (name == "smooth") return ForegroundSource::kSmooth;
  if (name == "sparse") return ForegroundSource::kSparse;
  throw Error(ErrorCode::kInvalidArgument, "unknown foreground component: " + name);
}

}  // namespace panrpca::cli
