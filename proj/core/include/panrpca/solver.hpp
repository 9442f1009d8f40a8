#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "panrpca/core.hpp"
#include "panrpca/error.hpp"
#include "panrpca/tvprox.hpp"

namespace panrpca {

enum class LowRankMode { kOptShrink, kSvt };

struct SolverConfig {
  double tau = 0.33;
  int rank = 1;
  double lambda_sparse = 1e-3;  // lambda_S1
  double lambda_smooth = 1e-3;  // lambda_S2
  // Nuclear-norm weight; used by the SVT update only. Unset means
  // 1 / sqrt(max(m*n, p)).
  std::optional<double> lambda_low_rank;
  int max_iter = 200;
  double rel_tol = 1e-4;
  LowRankMode low_rank_mode = LowRankMode::kOptShrink;
  // When false, S2 is pinned at zero and the model is plain L + S1 robust PCA.
  bool smooth_component = true;
  AdmmConfig admm;

  void validate() const;
  double low_rank_weight(Eigen::Index pixels, Eigen::Index frames) const;
};

struct IterationRecord {
  int iteration = 0;
  // 1/2 |P_M(Y - L - S1 - S2)|_F^2 + lambda_S1 |S1|_1 + lambda_S2 TV(S2)
  double objective = 0.0;
  double nuclear_norm = 0.0;
  // objective + lambda_L |L|_*
  double full_objective = 0.0;
  double data_fit = 0.0;  // |P_M(Y - L - S1 - S2)|_F
  double delta_low_rank = 0.0;
  double delta_sparse = 0.0;
  double delta_smooth = 0.0;
  int admm_iterations = 0;
  bool tv_step_rejected = false;
  double seconds = 0.0;
};

struct SolverTrace {
  IterationRecord initial;  // iteration 0, at the initialization
  std::vector<IterationRecord> iterations;
  bool converged = false;
  int cg_warnings = 0;
  double worst_cg_residual = 0.0;
};

struct SolverResult {
  Decomposition decomposition;
  SolverTrace trace;
};

struct SurrogateObjective {
  double value = 0.0;  // fit + sparse + TV terms
  double nuclear_norm = 0.0;
  double data_fit = 0.0;
};

// Thrown when an iterate stops being finite; carries the trace so far.
class SolverDivergence : public Error {
 public:
  SolverDivergence(int iteration, SolverTrace trace);

  int iteration() const { return iteration_; }
  const SolverTrace& trace() const { return trace_; }

 private:
  int iteration_;
  SolverTrace trace_;
};

Matrix soft_threshold(const Matrix& z, double lambda);

SurrogateObjective surrogate_objective(const FrameStack& y,
                                       const Decomposition& d,
                                       const SolverConfig& cfg);

// Called after every iteration; returning false stops the run.
using IterationCallback =
    std::function<bool(const IterationRecord&, const Decomposition&)>;

SolverResult decompose(const FrameStack& y, const SolverConfig& cfg,
                       const IterationCallback& callback = {});

std::string to_string(LowRankMode mode);
LowRankMode parse_low_rank_mode(const std::string& name);

}  // namespace panrpca
