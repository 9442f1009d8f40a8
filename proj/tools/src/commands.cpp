#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "image_io.hpp"
#include "panrpca/error.hpp"
#include "panrpca/evalsim.hpp"
#include "panrpca/registration.hpp"
#include "panrpca/solver.hpp"

namespace panrpca::cli {
namespace {

using Clock = std::chrono::steady_clock;

std::string numbered(const char* stem, int k, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04d%s", stem, k, ext);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Image binarize(const Image& img) {
  return Image(img.pixels().unaryExpr([](double v) { return v >= 0.5 ? 1.0 : 0.0; }));
}

Sequence read_manifest_sequence(const fs::path& manifest_path) {
  Json j;
  try {
    j = Json::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kIo, manifest_path.string() + ": " + e.what());
  }
  if (j.value("schema_version", 0) != kSchemaVersion) {
    throw Error(ErrorCode::kInvalidArgument,
                "unsupported manifest schema in " + manifest_path.string());
  }
  if (j.value("kind", "") != "sequence" || !j.contains("frames")) {
    throw Error(ErrorCode::kInvalidArgument,
                manifest_path.string() + " is not a sequence manifest");
  }
  const fs::path base = manifest_path.parent_path();
  double offset = 0.0;
  double scale = 1.0;
  if (j.contains("encoding")) {
    offset = j["encoding"].value("offset", 0.0);
    scale = j["encoding"].value("scale", 1.0);
  }
  Sequence seq;
  seq.bit_depth = 8;
  for (const auto& f : j["frames"]) {
    LoadedImage img = read_image(base / f.get<std::string>());
    seq.bit_depth = std::max(seq.bit_depth, img.bit_depth);
    if (offset == 0.0 && scale == 1.0) {
      seq.frames.push_back(std::move(img.image));
    } else {
      seq.frames.emplace_back(
          (img.image.pixels().array() * scale + offset).matrix());
    }
  }
  if (j.contains("masks")) {
    for (const auto& f : j["masks"]) {
      seq.masks.push_back(binarize(read_image(base / f.get<std::string>()).image));
    }
  }
  if (seq.frames.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty sequence in " + manifest_path.string());
  }
  return seq;
}

std::vector<Image> mask_columns(const FrameStack& s) {
  std::vector<Image> out;
  for (int k = 0; k < s.frame_count(); ++k) out.push_back(s.mask_frame(k));
  return out;
}

Json canvas_json(const Canvas& c) {
  return {{"height", c.height},
          {"width", c.width},
          {"origin", {c.origin.x(), c.origin.y()}}};
}

Json homographies_json(const std::vector<Homography>& hs) {
  Json a = Json::array();
  for (const auto& h : hs) a.push_back(to_json(h));
  return a;
}

void write_homography_file(const fs::path& path, const Homography& h) {
  std::ostringstream ss;
  write_homography(ss, h);
  write_file_atomic(path, ss.str());
}

}  // namespace

Sequence read_sequence(const fs::path& path) {
  if (fs::is_regular_file(path) && path.extension() == ".json") {
    return read_manifest_sequence(path);
  }
  if (fs::is_directory(path) && fs::exists(path / "manifest.json")) {
    return read_manifest_sequence(path / "manifest.json");
  }
  if (!fs::is_directory(path)) {
    throw Error(ErrorCode::kIo, "no such sequence: " + path.string());
  }
  Sequence seq;
  for (const auto& file : list_images(path)) {
    LoadedImage img = read_image(file);
    seq.bit_depth = std::max(seq.bit_depth, img.bit_depth);
    seq.frames.push_back(std::move(img.image));
  }
  if (seq.frames.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no images in " + path.string());
  }
  return seq;
}

FrameStack to_stack(const Sequence& seq) {
  if (seq.masks.empty()) return stack_frames(seq.frames);
  return stack_frames(seq.frames, seq.masks);
}

Matrix read_mask_matrix(const fs::path& path) {
  const Sequence seq = read_sequence(path);
  std::vector<Image> bits;
  for (const auto& f : seq.frames) bits.push_back(binarize(f));
  return stack_frames(bits).data();
}

std::vector<Image> stack_columns(const Matrix& data, int height, int width) {
  std::vector<Image> out;
  for (Eigen::Index k = 0; k < data.cols(); ++k) {
    out.push_back(unvec(data.col(k), height, width));
  }
  return out;
}

Json write_sequence(const fs::path& dir, const std::vector<Image>& frames,
                    const std::vector<Image>& masks, int bit_depth,
                    const Json& extra) {
  if (frames.empty()) throw Error(ErrorCode::kInvalidArgument, "no frames to write");
  double lo = 0.0;
  double hi = 1.0;
  double min_v = frames[0].pixels().minCoeff();
  double max_v = frames[0].pixels().maxCoeff();
  for (const auto& f : frames) {
    min_v = std::min(min_v, f.pixels().minCoeff());
    max_v = std::max(max_v, f.pixels().maxCoeff());
  }
  if (min_v < 0.0 || max_v > 1.0) {
    lo = min_v;
    hi = max_v;
    bit_depth = 16;
  }
  const double scale = hi > lo ? hi - lo : 1.0;

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "sequence";
  j["height"] = frames[0].height();
  j["width"] = frames[0].width();
  j["frame_count"] = frames.size();
  j["encoding"] = {{"format", "png"}, {"bit_depth", bit_depth},
                   {"offset", lo}, {"scale", scale}};
  Json names = Json::array();
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const std::string name = numbered("frame", static_cast<int>(k), ".png");
    Image stored = frames[k];
    if (lo != 0.0 || scale != 1.0) {
      stored = Image(((frames[k].pixels().array() - lo) / scale).matrix());
    }
    write_image(dir / name, stored, bit_depth);
    names.push_back(name);
  }
  j["frames"] = names;
  if (!masks.empty()) {
    Json mnames = Json::array();
    for (std::size_t k = 0; k < masks.size(); ++k) {
      const std::string name = numbered("mask", static_cast<int>(k), ".png");
      write_image(dir / name, masks[k], 8);
      mnames.push_back(name);
    }
    j["masks"] = mnames;
  }
  for (const auto& [key, value] : extra.items()) j[key] = value;
  write_json(dir / "manifest.json", j);
  return j;
}

void write_json(const fs::path& path, const Json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

Json cmd_register(const fs::path& input, const fs::path& output,
                  const RunConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  const Sequence seq = read_sequence(input);
  const Registration reg = register_video(seq.frames, cfg.registration);

  Json extra;
  extra["command"] = "register";
  extra["input"] = input.string();
  extra["seed"] = cfg.seed;
  extra["canvas"] = canvas_json(reg.canvas);
  extra["anchor"] = reg.anchor;
  extra["links"] = homographies_json(reg.links);
  extra["to_anchor"] = homographies_json(reg.to_anchor);
  extra["config"] = to_json(cfg.registration);
  for (std::size_t k = 0; k < reg.links.size(); ++k) {
    write_homography_file(output / "homographies" / numbered("link", static_cast<int>(k), ".txt"),
                          reg.links[k]);
  }
  for (std::size_t k = 0; k < reg.to_anchor.size(); ++k) {
    write_homography_file(
        output / "homographies" / numbered("to_anchor", static_cast<int>(k), ".txt"),
        reg.to_anchor[k]);
  }
  if (cfg.record_timing) extra["duration_seconds"] = seconds_since(t0);
  return write_sequence(output,
                        stack_columns(reg.stack.data(), reg.stack.height(), reg.stack.width()),
                        mask_columns(reg.stack), 16, extra);
}

Image montage(const std::vector<Image>& panels, const std::vector<bool>& is_signed) {
  if (panels.empty()) throw Error(ErrorCode::kInvalidArgument, "no montage panels");
  constexpr int kGap = 2;
  const int h = panels[0].height();
  const int w = panels[0].width();
  const int n = static_cast<int>(panels.size());
  Matrix out = Matrix::Ones(h, n * w + (n - 1) * kGap);
  for (int i = 0; i < n; ++i) {
    Matrix p = panels[i].pixels();
    if (i < static_cast<int>(is_signed.size()) && is_signed[i]) {
      p = (p.array() * 0.5 + 0.5).matrix();
    }
    out.block(0, i * (w + kGap), h, w) = p.cwiseMax(0.0).cwiseMin(1.0);
  }
  return Image(std::move(out));
}

Json cmd_decompose(const fs::path& input, const fs::path& output,
                   const RunConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  const Sequence seq = read_sequence(input);
  const FrameStack y = to_stack(seq);

  Json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["command"] = "decompose";
  manifest["input"] = input.string();
  manifest["seed"] = cfg.seed;
  manifest["config"] = to_json(cfg.solver);

  SolverResult result;
  try {
    result = decompose(y, cfg.solver);
  } catch (const SolverDivergence& e) {
    Json trace = to_json(e.trace());
    trace["diverged_at"] = e.iteration();
    write_json(output / "trace.json", trace);
    manifest["status"] = "diverged";
    manifest["diverged_at"] = e.iteration();
    manifest["trace"] = "trace.json";
    write_json(output / "manifest.json", manifest);
    throw;
  }

  const int h = y.height();
  const int w = y.width();
  const Decomposition& d = result.decomposition;
  const Matrix scene = d.low_rank + d.smooth;
  const std::vector<Image> masks = seq.masks.empty() ? std::vector<Image>{} : mask_columns(y);
  const std::pair<const char*, const Matrix*> parts[] = {
      {"low_rank", &d.low_rank}, {"sparse", &d.sparse},
      {"smooth", &d.smooth}, {"scene", &scene}};
  Json components;
  for (const auto& [name, m] : parts) {
    write_sequence(output / name, stack_columns(*m, h, w), masks, 16,
                   {{"component", name}});
    components[name] = std::string(name) + "/manifest.json";
  }
  write_json(output / "trace.json", to_json(result.trace));

  Json montages = Json::array();
  if (cfg.montage_stride > 0) {
    for (int k = 0; k < y.frame_count(); k += cfg.montage_stride) {
      const Image m = montage({y.frame(k), unvec(d.low_rank.col(k), h, w),
                               unvec(d.sparse.col(k), h, w), unvec(d.smooth.col(k), h, w),
                               unvec(scene.col(k), h, w)},
                              {false, false, true, true, false});
      const std::string name = "montage/" + numbered("montage", k, ".png");
      write_image(output / name, m, 8);
      montages.push_back(name);
    }
  }
  manifest["status"] = "ok";
  manifest["components"] = components;
  manifest["montage_panels"] = {"input", "low_rank", "sparse", "smooth", "scene"};
  manifest["montages"] = montages;
  manifest["trace"] = "trace.json";
  manifest["iterations"] = result.trace.iterations.size();
  manifest["converged"] = result.trace.converged;
  const IterationRecord& last = result.trace.iterations.empty()
                                    ? result.trace.initial
                                    : result.trace.iterations.back();
  manifest["final_objective"] = last.objective;
  manifest["final_data_fit"] = last.data_fit;
  if (cfg.record_timing) manifest["duration_seconds"] = seconds_since(t0);
  write_json(output / "manifest.json", manifest);
  return manifest;
}

Json cmd_corrupt(const fs::path& input, const fs::path& output,
                 const RunConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  const Sequence seq = read_sequence(input);
  const FrameStack y = to_stack(seq);
  const CorruptedStack c =
      cfg.corruption.kind == CorruptionKind::kSaltPepper
          ? add_salt_pepper(y, cfg.corruption.probability, cfg.seed)
          : add_gaussian_snr(y, cfg.corruption.snr_db, cfg.seed);
  const std::vector<Image> masks = seq.masks.empty() ? std::vector<Image>{} : mask_columns(y);

  Json extra;
  extra["command"] = "corrupt";
  extra["input"] = input.string();
  extra["seed"] = cfg.seed;
  extra["corruption"] = {{"kind", to_string(cfg.corruption.kind)}};
  if (cfg.corruption.kind == CorruptionKind::kSaltPepper) {
    extra["corruption"]["probability"] = cfg.corruption.probability;
  } else {
    extra["corruption"]["snr_db"] = cfg.corruption.snr_db;
  }
  extra["hits"] = "hits/manifest.json";
  write_sequence(output / "hits", stack_columns(c.hits, y.height(), y.width()), {}, 8,
                 {{"component", "hits"}});
  if (cfg.record_timing) extra["duration_seconds"] = seconds_since(t0);
  return write_sequence(output,
                        stack_columns(c.stack.data(), y.height(), y.width()), masks,
                        seq.bit_depth, extra);
}

Json cmd_synth(const fs::path& output, const RunConfig& cfg) {
  cfg.validate();
  const SyntheticScene s = make_synthetic_scene(cfg.scene);
  const FrameStack& reg = s.registered;

  write_sequence(output / "frames", s.frames, {}, 16, {{"component", "frames"}});
  write_sequence(output / "foreground", s.foreground_masks, {}, 8,
                 {{"component", "foreground"}});
  write_sequence(output / "registered",
                 stack_columns(reg.data(), reg.height(), reg.width()), mask_columns(reg),
                 16, {{"component", "registered"}});
  write_sequence(output / "registered_foreground",
                 stack_columns(s.registered_foreground, reg.height(), reg.width()), {},
                 8, {{"component", "registered_foreground"}});
  write_image(output / "background.png", s.background, 16);

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "synth";
  j["seed"] = cfg.seed;
  j["scene"] = to_json(s.config);
  j["anchor"] = s.anchor;
  j["canvas"] = {{"height", reg.height()}, {"width", reg.width()}};
  j["links"] = homographies_json(s.links);
  Json traj = Json::array();
  for (const auto& c : s.trajectory) traj.push_back({c.x(), c.y()});
  j["trajectory"] = traj;
  j["sequences"] = {{"frames", "frames/manifest.json"},
                    {"foreground", "foreground/manifest.json"},
                    {"registered", "registered/manifest.json"},
                    {"registered_foreground", "registered_foreground/manifest.json"}};
  j["background"] = "background.png";
  write_json(output / "manifest.json", j);
  return j;
}

Json cmd_evaluate(const EvaluateInputs& in, const fs::path& output,
                  const RunConfig& cfg) {
  cfg.validate();
  const FrameStack truth = to_stack(read_sequence(in.truth));
  const Matrix truth_fg = read_mask_matrix(in.truth_foreground);
  const Matrix estimate = to_stack(read_sequence(in.estimate)).data();
  const Matrix foreground = to_stack(read_sequence(in.foreground)).data();
  const MetricReport r =
      evaluate(truth, truth_fg, estimate, foreground, cfg.metric.threshold);

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "evaluate";
  j["inputs"] = {{"truth", in.truth.string()},
                 {"truth_foreground", in.truth_foreground.string()},
                 {"estimate", in.estimate.string()},
                 {"foreground", in.foreground.string()}};
  j["report"] = to_json(r);
  if (!output.empty()) write_json(output, j);
  return j;
}

}  // namespace panrpca::cli
