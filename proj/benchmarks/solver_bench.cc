#include <benchmark/benchmark.h>

#include "panrpca/evalsim.hpp"
#include "panrpca/solver.hpp"

namespace {

// Cost of a fixed number of outer iterations on the 64x64x40 scene.
void BM_DecomposeIterations(benchmark::State& state) {
  const panrpca::SyntheticScene scene = panrpca::make_synthetic_scene({});
  const panrpca::FrameStack y = panrpca::add_salt_pepper(scene.registered, 0.2, 1).stack;
  panrpca::SolverConfig cfg;
  cfg.lambda_sparse = 0.1;
  cfg.lambda_smooth = 0.05;
  cfg.max_iter = static_cast<int>(state.range(0));
  cfg.rel_tol = 0.0;
  cfg.admm.max_outer = 20;
  cfg.admm.x_solver = panrpca::XSolver::kAuto;
  for (auto _ : state) benchmark::DoNotOptimize(panrpca::decompose(y, cfg));
}
BENCHMARK(BM_DecomposeIterations)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_DecomposeSvtNoSmooth(benchmark::State& state) {
  const panrpca::SyntheticScene scene = panrpca::make_synthetic_scene({});
  const panrpca::FrameStack y = panrpca::add_salt_pepper(scene.registered, 0.2, 1).stack;
  panrpca::SolverConfig cfg;
  cfg.low_rank_mode = panrpca::LowRankMode::kSvt;
  cfg.smooth_component = false;
  cfg.max_iter = 20;
  cfg.rel_tol = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(panrpca::decompose(y, cfg));
}
BENCHMARK(BM_DecomposeSvtNoSmooth)->Unit(benchmark::kMillisecond);

}  // namespace
