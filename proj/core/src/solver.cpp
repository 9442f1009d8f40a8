#include "panrpca/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "panrpca/optshrink.hpp"

namespace panrpca {
namespace {

double relative_change(const Matrix& next, const Matrix& prev, double scale) {
  return (next - prev).norm() / scale;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tau > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "step size tau must be positive");
  }
  if (rank < 1) {
    throw Error(ErrorCode::kInvalidArgument, "rank must be >= 1");
  }
  if (!(lambda_sparse >= 0.0) || !(lambda_smooth >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda weights must be >= 0");
  }
  if (lambda_low_rank && !(*lambda_low_rank >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda_L must be >= 0");
  }
  if (max_iter < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_iter must be >= 1");
  }
  if (!(rel_tol >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rel_tol must be >= 0");
  }
  admm.validate();
}

double SolverConfig::low_rank_weight(Eigen::Index pixels,
                                     Eigen::Index frames) const {
  if (lambda_low_rank) return *lambda_low_rank;
  return 1.0 / std::sqrt(static_cast<double>(std::max(pixels, frames)));
}

SolverDivergence::SolverDivergence(int iteration, SolverTrace trace)
    : Error(ErrorCode::kDivergence,
            "non-finite iterate at iteration " + std::to_string(iteration)),
      iteration_(iteration),
      trace_(std::move(trace)) {}

Matrix soft_threshold(const Matrix& z, double lambda) {
  if (!(lambda >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must be >= 0");
  }
  return (z.array().sign() * (z.array().abs() - lambda).cwiseMax(0.0)).matrix();
}

SurrogateObjective surrogate_objective(const FrameStack& y,
                                       const Decomposition& d,
                                       const SolverConfig& cfg) {
  const Matrix residual =
      project_mask(y.data() - d.low_rank - d.sparse - d.smooth, y.mask());
  const TVWeights w = TVWeights::from_mask(y.height(), y.width(), y.mask());
  SurrogateObjective out;
  out.data_fit = residual.norm();
  out.value = 0.5 * residual.squaredNorm() +
              cfg.lambda_sparse * d.sparse.cwiseAbs().sum() +
              cfg.lambda_smooth * tv_value(d.smooth, w);
  out.nuclear_norm = nuclear_norm(d.low_rank);
  return out;
}

std::string to_string(LowRankMode mode) {
  return mode == LowRankMode::kSvt ? "svt" : "optshrink";
}

LowRankMode parse_low_rank_mode(const std::string& name) {
  if (name == "optshrink") return LowRankMode::kOptShrink;
  if (name == "svt") return LowRankMode::kSvt;
  throw Error(ErrorCode::kInvalidArgument, "unknown low-rank mode: " + name);
}

SolverResult decompose(const FrameStack& y, const SolverConfig& cfg,
                       const IterationCallback& callback) {
  cfg.validate();
  const Matrix& data = y.data();
  const Matrix& mask = y.mask();
  const Eigen::Index rows = data.rows();
  const Eigen::Index cols = data.cols();
  if (cfg.low_rank_mode == LowRankMode::kOptShrink &&
      cfg.rank >= std::min(rows, cols)) {
    throw Error(ErrorCode::kInvalidArgument,
                "OptShrink rank must be below min(m*n, p)");
  }

  const double tau = cfg.tau;
  const double lambda_l = cfg.low_rank_weight(rows, cols);
  const TVWeights weights = TVWeights::from_mask(y.height(), y.width(), mask);
  std::optional<TvDenoiser> denoiser;
  if (cfg.smooth_component && cfg.lambda_smooth > 0.0) {
    denoiser.emplace(weights, cfg.admm);
  }

  // Initialization: L = Y, S1 = S2 = 0.
  SolverResult result;
  Decomposition& d = result.decomposition;
  d = Decomposition::zeros(rows, cols);
  d.low_rank = data;
  double tv_smooth = 0.0;

  const double data_norm = data.norm();
  const double scale = data_norm > 0.0 ? data_norm : 1.0;

  SolverTrace& trace = result.trace;
  trace.initial.iteration = 0;
  trace.initial.nuclear_norm = nuclear_norm(d.low_rank);
  trace.initial.full_objective = lambda_l * trace.initial.nuclear_norm;

  using Clock = std::chrono::steady_clock;
  for (int k = 1; k <= cfg.max_iter; ++k) {
    const auto start = Clock::now();
    IterationRecord rec;
    rec.iteration = k;

    const Matrix grad = (d.low_rank + d.sparse + d.smooth - data).cwiseProduct(mask);
    if (!grad.allFinite()) throw SolverDivergence(k, trace);

    const Matrix z_low = d.low_rank - tau * grad;
    if (!z_low.allFinite()) throw SolverDivergence(k, trace);
    LowRankEstimate low = cfg.low_rank_mode == LowRankMode::kOptShrink
                              ? optshrink_estimate(z_low, cfg.rank)
                              : svt_estimate(z_low, tau * lambda_l);
    rec.nuclear_norm = low.values.sum();

    Matrix sparse = soft_threshold(d.sparse - tau * grad, tau * cfg.lambda_sparse);

    Matrix smooth = d.smooth;
    if (cfg.smooth_component) {
      const Matrix z_smooth = d.smooth - tau * grad;
      const double t = tau * cfg.lambda_smooth;
      if (denoiser) {
        TvdnResult tv = denoiser->solve(z_smooth, t);
        rec.admm_iterations = tv.iterations;
        trace.cg_warnings += tv.cg_warnings;
        trace.worst_cg_residual =
            std::max(trace.worst_cg_residual, tv.worst_cg_residual);
        // Accept the inexact prox output only if it does not lose to the
        // current iterate on the prox subproblem.
        const double tv_candidate = tv_value(tv.x, weights);
        const double q_candidate =
            0.5 * (tv.x - z_smooth).squaredNorm() + t * tv_candidate;
        const double q_current =
            0.5 * tau * tau * grad.squaredNorm() + t * tv_smooth;
        if (q_candidate <= q_current) {
          smooth = std::move(tv.x);
          tv_smooth = tv_candidate;
        } else {
          rec.tv_step_rejected = true;
        }
      } else {
        smooth = z_smooth;
      }
    }

    rec.delta_low_rank = relative_change(low.estimate, d.low_rank, scale);
    rec.delta_sparse = relative_change(sparse, d.sparse, scale);
    rec.delta_smooth = relative_change(smooth, d.smooth, scale);

    d.low_rank = std::move(low.estimate);
    d.sparse = std::move(sparse);
    d.smooth = std::move(smooth);

    if (!d.all_finite()) {
      throw SolverDivergence(k, trace);
    }

    const Matrix residual =
        (data - d.low_rank - d.sparse - d.smooth).cwiseProduct(mask);
    rec.data_fit = residual.norm();
    rec.objective = 0.5 * residual.squaredNorm() +
                    cfg.lambda_sparse * d.sparse.cwiseAbs().sum() +
                    cfg.lambda_smooth * tv_smooth;
    rec.full_objective = rec.objective + lambda_l * rec.nuclear_norm;
    rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    trace.iterations.push_back(rec);

    if (callback && !callback(rec, d)) break;
    const double delta =
        std::max({rec.delta_low_rank, rec.delta_sparse, rec.delta_smooth});
    if (delta < cfg.rel_tol) {
      trace.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace panrpca
