#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "panrpca/error.hpp"
#include "panrpca/solver.hpp"

namespace {

using panrpca::cli::RunConfig;

template <typename T>
void overlay(const std::optional<T>& flag, T& field) {
  if (flag) field = *flag;
}

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool timing = false;

  void add(CLI::App* app) {
    app->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "Seed for every stochastic step");
    app->add_flag("--timing", timing, "Embed wall-clock durations in manifests");
  }

  RunConfig base() const {
    RunConfig cfg = config.empty() ? RunConfig{} : panrpca::cli::load_run_config(config);
    if (seed) cfg.apply_seed(*seed);
    if (timing) cfg.record_timing = true;
    return cfg;
  }
};

struct SolverFlags {
  std::optional<double> tau, lambda_sparse, lambda_smooth, lambda_low_rank, rel_tol;
  std::optional<int> rank, max_iter, admm_max_outer, cg_max;
  std::optional<double> rho, admm_tol, cg_tol;
  std::optional<std::string> mode, x_solver, boundary;
  bool no_smooth = false;

  void add(CLI::App* app) {
    app->add_option("--tau", tau, "Step size");
    app->add_option("--rank", rank, "OptShrink rank");
    app->add_option("--lambda-sparse", lambda_sparse, "Weight of |S1|_1");
    app->add_option("--lambda-smooth", lambda_smooth, "Weight of TV(S2)");
    app->add_option("--lambda-low-rank", lambda_low_rank, "Nuclear-norm weight (svt mode)");
    app->add_option("--max-iter", max_iter, "Outer iteration cap");
    app->add_option("--rel-tol", rel_tol, "Relative-change stopping tolerance");
    app->add_option("--mode", mode, "Low-rank update")->check(CLI::IsMember({"optshrink", "svt"}));
    app->add_flag("--no-smooth", no_smooth, "Pin S2 at zero (plain L + S1 model)");
    app->add_option("--admm-rho", rho, "ADMM penalty");
    app->add_option("--admm-max-outer", admm_max_outer, "ADMM iteration cap");
    app->add_option("--admm-tol", admm_tol, "ADMM tolerance");
    app->add_option("--cg-tol", cg_tol, "CG tolerance");
    app->add_option("--cg-max", cg_max, "CG iteration cap");
    app->add_option("--x-solver", x_solver, "ADMM x-update")
        ->check(CLI::IsMember({"cg", "fft", "auto"}));
    app->add_option("--boundary", boundary, "TV boundary")
        ->check(CLI::IsMember({"dropped", "circulant"}));
  }

  void apply(panrpca::SolverConfig& s) const {
    overlay(tau, s.tau);
    overlay(rank, s.rank);
    overlay(lambda_sparse, s.lambda_sparse);
    overlay(lambda_smooth, s.lambda_smooth);
    if (lambda_low_rank) s.lambda_low_rank = *lambda_low_rank;
    overlay(max_iter, s.max_iter);
    overlay(rel_tol, s.rel_tol);
    if (mode) s.low_rank_mode = panrpca::parse_low_rank_mode(*mode);
    if (no_smooth) s.smooth_component = false;
    overlay(rho, s.admm.rho);
    overlay(admm_max_outer, s.admm.max_outer);
    overlay(admm_tol, s.admm.tol);
    overlay(cg_tol, s.admm.cg_tol);
    overlay(cg_max, s.admm.cg_max);
    if (x_solver) s.admm.x_solver = panrpca::cli::parse_x_solver(*x_solver);
    if (boundary) s.admm.boundary = panrpca::cli::parse_boundary(*boundary);
  }
};

int exit_code_for(const panrpca::Error& e) {
  return panrpca::is_numerical(e.code()) ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Panoramic robust PCA: registration, decomposition and evaluation"};
  app.require_subcommand(1);

  // register
  CommonFlags reg_common;
  std::string reg_in, reg_out;
  std::optional<int> anchor, median_radius, ransac_iterations;
  std::optional<double> ransac_threshold, ncc_floor;
  bool static_camera = false;
  bool subpixel = false;
  auto* reg = app.add_subcommand("register", "Register a frame sequence onto a panoramic canvas");
  reg_common.add(reg);
  reg->add_option("--input,-i", reg_in, "Directory of frames or a sequence manifest")->required();
  reg->add_option("--output,-o", reg_out, "Output directory")->required();
  reg->add_option("--anchor", anchor, "Anchor frame (0-based)");
  reg->add_flag("--static", static_camera, "Skip estimation, identity homographies");
  reg->add_option("--median-radius", median_radius, "Median prefilter radius");
  reg->add_option("--ncc-floor", ncc_floor, "Minimum NCC score of a match");
  reg->add_flag("--subpixel", subpixel, "Subpixel match refinement");
  reg->add_option("--ransac-iterations", ransac_iterations, "RANSAC iterations");
  reg->add_option("--ransac-threshold", ransac_threshold, "RANSAC inlier threshold (px)");

  // decompose
  CommonFlags dec_common;
  SolverFlags solver_flags;
  std::string dec_in, dec_out;
  std::optional<int> montage_stride;
  auto* dec = app.add_subcommand("decompose", "Split a registered stack into L, S1 and S2");
  dec_common.add(dec);
  solver_flags.add(dec);
  dec->add_option("--input,-i", dec_in, "Sequence manifest or directory")->required();
  dec->add_option("--output,-o", dec_out, "Output directory")->required();
  dec->add_option("--montage-stride", montage_stride, "Montage every n-th frame (0: none)");

  // corrupt
  CommonFlags cor_common;
  std::string cor_in, cor_out;
  std::optional<double> probability, snr;
  auto* cor = app.add_subcommand("corrupt", "Add salt-and-pepper or Gaussian noise");
  cor_common.add(cor);
  cor->add_option("--input,-i", cor_in, "Sequence manifest or directory")->required();
  cor->add_option("--output,-o", cor_out, "Output directory")->required();
  auto* sp_opt = cor->add_option("--salt-pepper", probability, "Outlier probability");
  auto* snr_opt = cor->add_option("--snr", snr, "Gaussian noise SNR in dB");
  sp_opt->excludes(snr_opt);

  // evaluate
  CommonFlags ev_common;
  panrpca::cli::EvaluateInputs ev_in;
  std::string ev_out;
  std::optional<std::string> threshold;
  std::optional<double> threshold_value;
  auto* ev = app.add_subcommand("evaluate", "f-PSNR, b-PSNR and F-measure against ground truth");
  ev_common.add(ev);
  ev->add_option("--truth", ev_in.truth, "Clean sequence (its masks bound the region)")->required();
  ev->add_option("--truth-foreground", ev_in.truth_foreground, "Bilevel foreground sequence")
      ->required();
  ev->add_option("--estimate", ev_in.estimate, "Reconstructed scene sequence")->required();
  ev->add_option("--foreground", ev_in.foreground, "Component to threshold")->required();
  ev->add_option("--output,-o", ev_out, "Report JSON path");
  ev->add_option("--threshold", threshold, "Threshold mode")
      ->check(CLI::IsMember({"otsu", "fixed"}));
  ev->add_option("--threshold-value", threshold_value, "Fixed threshold on |component|");

  // synth
  CommonFlags syn_common;
  std::string syn_out;
  std::optional<int> height, width, frames, pan, object_size;
  std::optional<std::string> shape;
  std::optional<double> intensity, texture;
  auto* syn = app.add_subcommand("synth", "Generate a synthetic scene with ground truth");
  syn_common.add(syn);
  syn->add_option("--output,-o", syn_out, "Output directory")->required();
  syn->add_option("--height", height, "Frame height");
  syn->add_option("--width", width, "Frame width");
  syn->add_option("--frames", frames, "Frame count");
  syn->add_option("--pan", pan, "Camera pan in pixels per frame");
  syn->add_option("--object-size", object_size, "Object size in pixels");
  syn->add_option("--shape", shape, "Object shape")->check(CLI::IsMember({"square", "disc"}));
  syn->add_option("--object-intensity", intensity, "Object intensity");
  syn->add_option("--texture", texture, "Amplitude of fine background texture");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    panrpca::cli::Json out;
    if (reg->parsed()) {
      RunConfig cfg = reg_common.base();
      if (anchor) cfg.registration.anchor = *anchor;
      if (static_camera) cfg.registration.static_camera = true;
      overlay(median_radius, cfg.registration.features.median_radius);
      overlay(ncc_floor, cfg.registration.features.ncc_floor);
      if (subpixel) cfg.registration.features.subpixel = true;
      overlay(ransac_iterations, cfg.registration.ransac.iterations);
      overlay(ransac_threshold, cfg.registration.ransac.inlier_threshold);
      out = panrpca::cli::cmd_register(reg_in, reg_out, cfg);
      std::cout << "registered " << out["frame_count"] << " frames onto a "
                << out["canvas"]["height"] << "x" << out["canvas"]["width"] << " canvas\n";
    } else if (dec->parsed()) {
      RunConfig cfg = dec_common.base();
      solver_flags.apply(cfg.solver);
      overlay(montage_stride, cfg.montage_stride);
      out = panrpca::cli::cmd_decompose(dec_in, dec_out, cfg);
      std::cout << "decomposed in " << out["iterations"] << " iterations, objective "
                << out["final_objective"] << "\n";
    } else if (cor->parsed()) {
      RunConfig cfg = cor_common.base();
      if (probability) {
        cfg.corruption.kind = panrpca::cli::CorruptionKind::kSaltPepper;
        cfg.corruption.probability = *probability;
      }
      if (snr) {
        cfg.corruption.kind = panrpca::cli::CorruptionKind::kGaussian;
        cfg.corruption.snr_db = *snr;
      }
      out = panrpca::cli::cmd_corrupt(cor_in, cor_out, cfg);
      std::cout << "corrupted " << out["frame_count"] << " frames\n";
    } else if (ev->parsed()) {
      RunConfig cfg = ev_common.base();
      if (threshold) cfg.metric.threshold.mode = panrpca::cli::parse_threshold_mode(*threshold);
      overlay(threshold_value, cfg.metric.threshold.value);
      out = panrpca::cli::cmd_evaluate(ev_in, ev_out, cfg);
      std::cout << out["report"].dump(2) << "\n";
    } else if (syn->parsed()) {
      RunConfig cfg = syn_common.base();
      overlay(height, cfg.scene.height);
      overlay(width, cfg.scene.width);
      overlay(frames, cfg.scene.frames);
      overlay(pan, cfg.scene.pan_per_frame);
      overlay(object_size, cfg.scene.object_size);
      if (shape) cfg.scene.shape = panrpca::cli::parse_object_shape(*shape);
      overlay(intensity, cfg.scene.object_intensity);
      overlay(texture, cfg.scene.texture_amplitude);
      out = panrpca::cli::cmd_synth(syn_out, cfg);
      std::cout << "wrote " << out["scene"]["frames"] << " frames to " << syn_out << "\n";
    }
  } catch (const panrpca::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
