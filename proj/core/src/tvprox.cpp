#include "panrpca/tvprox.hpp"

#include <cmath>
#include <complex>

#include <Eigen/IterativeLinearSolvers>
#include <fftw3.h>

#include "panrpca/error.hpp"

namespace panrpca {
namespace {

Vector shrink(const Vector& x, double t) {
  return (x.array().sign() * (x.array().abs() - t).cwiseMax(0.0)).matrix();
}

SparseMatrix normal_matrix(const SparseMatrix& d, double rho) {
  SparseMatrix a = SparseMatrix(d.transpose()) * d;
  a *= rho;
  SparseMatrix eye(d.cols(), d.cols());
  eye.setIdentity();
  a += eye;
  a.makeCompressed();
  return a;
}

Vector cg_solve(const SparseMatrix& a, const Vector& rhs, const Vector& guess,
                const AdmmConfig& cfg, XUpdateStats* stats) {
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(cfg.cg_tol);
  cg.setMaxIterations(cfg.cg_max);
  cg.compute(a);
  Vector x;
  if (guess.size() == rhs.size()) {
    x = cg.solveWithGuess(rhs, guess);
  } else {
    x = cg.solve(rhs);
  }
  if (stats) {
    stats->iterations = static_cast<int>(cg.iterations());
    stats->residual = cg.error();
    stats->converged = cg.info() == Eigen::Success;
  }
  return x;
}

}  // namespace

void AdmmConfig::validate() const {
  if (!(rho > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ADMM rho must be positive");
  }
  if (!(tol > 0.0) || !(cg_tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ADMM tolerances must be positive");
  }
  if (max_outer < 1 || cg_max < 1) {
    throw Error(ErrorCode::kInvalidArgument, "ADMM iteration caps must be >= 1");
  }
}

Vector x_update(const Vector& z, const Vector& v, const Vector& u, double rho,
                const DifferenceOperator& op, const AdmmConfig& cfg,
                const Vector& guess, XUpdateStats* stats) {
  if (op.c.cols() != z.size() || op.c.rows() != v.size() ||
      v.size() != u.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "x_update operand shapes");
  }
  if (rho == 0.0) {
    if (stats) *stats = XUpdateStats{};
    return z;
  }
  const SparseMatrix wc = op.weighted();
  const Vector rhs = z + rho * (wc.transpose() * (v - u));
  return cg_solve(normal_matrix(wc, rho), rhs, guess, cfg, stats);
}

Vector v_update(const Vector& wcx, const Vector& u, double lambda, double rho) {
  if (wcx.size() != u.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "v_update operand shapes");
  }
  return shrink(wcx + u, lambda / rho);
}

// Diagonalizes I + rho D^T D for fully observed weights: a real FFT for
// circulant boundaries, a DCT-II / DCT-III pair for dropped ones.
class TvDenoiser::SpectralSolver {
 public:
  SpectralSolver(int height, int width, int frames, double rho, Boundary boundary)
      : circulant_(boundary == Boundary::kCirculant),
        total_(std::size_t(height) * width * frames) {
    // Row-major dims: frames slowest, rows (i) fastest, matching vec order.
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * total_));
    if (circulant_) {
      half_ = std::size_t(height / 2 + 1) * width * frames;
      spec_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * half_));
      forward_ = fftw_plan_dft_r2c_3d(frames, width, height, real_, spec_,
                                      FFTW_ESTIMATE);
      backward_ = fftw_plan_dft_c2r_3d(frames, width, height, spec_, real_,
                                       FFTW_ESTIMATE);
      scale_ = 1.0 / static_cast<double>(total_);
    } else {
      half_ = total_;
      coef_ = static_cast<double*>(fftw_malloc(sizeof(double) * total_));
      forward_ = fftw_plan_r2r_3d(frames, width, height, real_, coef_, FFTW_REDFT10,
                                  FFTW_REDFT10, FFTW_REDFT10, FFTW_ESTIMATE);
      backward_ = fftw_plan_r2r_3d(frames, width, height, coef_, real_, FFTW_REDFT01,
                                   FFTW_REDFT01, FFTW_REDFT01, FFTW_ESTIMATE);
      scale_ = 1.0 / (8.0 * static_cast<double>(total_));
    }
    const int hh = circulant_ ? height / 2 + 1 : height;
    auto eig = [this](int k, int n) {
      const double angle = circulant_ ? 2.0 * M_PI * k / n : M_PI * k / n;
      return 2.0 - 2.0 * std::cos(angle);
    };
    denom_.resize(static_cast<Eigen::Index>(half_));
    for (int k = 0; k < frames; ++k) {
      for (int j = 0; j < width; ++j) {
        for (int i = 0; i < hh; ++i) {
          const std::size_t idx = (std::size_t(k) * width + j) * hh + i;
          denom_(static_cast<Eigen::Index>(idx)) =
              1.0 + rho * (eig(i, height) + eig(j, width) + eig(k, frames));
        }
      }
    }
  }
  ~SpectralSolver() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(real_);
    if (spec_) fftw_free(spec_);
    if (coef_) fftw_free(coef_);
  }
  SpectralSolver(const SpectralSolver&) = delete;
  SpectralSolver& operator=(const SpectralSolver&) = delete;

  Vector solve(const Vector& rhs) {
    std::copy(rhs.data(), rhs.data() + total_, real_);
    fftw_execute(forward_);
    for (std::size_t i = 0; i < half_; ++i) {
      const double d = denom_(static_cast<Eigen::Index>(i));
      if (circulant_) {
        spec_[i][0] /= d;
        spec_[i][1] /= d;
      } else {
        coef_[i] /= d;
      }
    }
    fftw_execute(backward_);
    Vector x(static_cast<Eigen::Index>(total_));
    for (std::size_t i = 0; i < total_; ++i) {
      x(static_cast<Eigen::Index>(i)) = real_[i] * scale_;
    }
    return x;
  }

 private:
  bool circulant_;
  std::size_t total_;
  std::size_t half_ = 0;
  double scale_ = 1.0;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  double* coef_ = nullptr;
  fftw_plan forward_{};
  fftw_plan backward_{};
  Vector denom_;
};

TvDenoiser::TvDenoiser(const TVWeights& weights, const AdmmConfig& cfg)
    : weights_(weights), cfg_(cfg) {
  cfg_.validate();
  op_ = build_difference_operator(weights.height, weights.width, weights.frames,
                                  weights, cfg_.boundary)
            .active_rows();
  const bool full = weights.all_ones_in_range();
  if (cfg_.x_solver == XSolver::kFft && !full) {
    throw Error(ErrorCode::kInvalidArgument,
                "the spectral x-solver needs fully observed weights");
  }
  if (cfg_.x_solver == XSolver::kFft ||
      (cfg_.x_solver == XSolver::kAuto && full)) {
    spectral_ = std::make_unique<SpectralSolver>(
        weights.height, weights.width, weights.frames, cfg_.rho, cfg_.boundary);
  } else {
    system_ = normal_matrix(op_.c, cfg_.rho);
  }
}

TvDenoiser::~TvDenoiser() = default;
TvDenoiser::TvDenoiser(TvDenoiser&&) noexcept = default;
TvDenoiser& TvDenoiser::operator=(TvDenoiser&&) noexcept = default;

void TvDenoiser::reset() {
  x_.resize(0);
  v_.resize(0);
  u_.resize(0);
}

Vector TvDenoiser::solve_x(const Vector& rhs, const Vector& guess,
                           XUpdateStats* stats) {
  if (spectral_) {
    if (stats) *stats = XUpdateStats{};
    return spectral_->solve(rhs);
  }
  return cg_solve(system_, rhs, guess, cfg_, stats);
}

TvdnResult TvDenoiser::solve(const Matrix& z_mat, double lambda) {
  if (!(lambda >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "TV weight must be >= 0");
  }
  if (z_mat.rows() != Eigen::Index(weights_.height) * weights_.width ||
      z_mat.cols() != weights_.frames) {
    throw Error(ErrorCode::kDimensionMismatch, "tvdn input shape");
  }
  if (!z_mat.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "tvdn input is not finite");
  }
  TvdnResult result;
  if (lambda == 0.0 || op_.c.rows() == 0) {
    result.x = z_mat;
    result.converged = true;
    return result;
  }

  const Vector z = z_mat.reshaped();
  const SparseMatrix& d = op_.c;
  const SparseMatrix dt = d.transpose();
  const bool warm = cfg_.warm_start && x_.size() == z.size();
  Vector x = warm ? x_ : z;
  Vector v = warm ? v_ : Vector(d * z);
  Vector u = warm ? u_ : Vector(Vector::Zero(d.rows()));

  for (int it = 1; it <= cfg_.max_outer; ++it) {
    XUpdateStats stats;
    const Vector rhs = z + cfg_.rho * (dt * (v - u));
    x = solve_x(rhs, x, &stats);
    if (!stats.converged) {
      ++result.cg_warnings;
      result.worst_cg_residual = std::max(result.worst_cg_residual, stats.residual);
    }
    const Vector dx = d * x;
    const Vector v_old = v;
    v = shrink(dx + u, lambda / cfg_.rho);
    u += dx - v;

    result.iterations = it;
    result.primal_residual = (dx - v).norm();
    result.dual_residual = cfg_.rho * (dt * (v - v_old)).norm();
    const double eps_primal = cfg_.tol * std::max(dx.norm(), v.norm());
    const double eps_dual = cfg_.tol * cfg_.rho * (dt * u).norm();
    if (result.primal_residual <= eps_primal &&
        result.dual_residual <= eps_dual) {
      result.converged = true;
      break;
    }
  }
  if (cfg_.warm_start) {
    x_ = x;
    v_ = v;
    u_ = u;
  }
  result.x = x.reshaped(z_mat.rows(), z_mat.cols());
  return result;
}

TvdnResult tvdn(const Matrix& z, double lambda, const TVWeights& w,
                const AdmmConfig& cfg) {
  AdmmConfig local = cfg;
  local.warm_start = false;
  TvDenoiser denoiser(w, local);
  return denoiser.solve(z, lambda);
}

}  // namespace panrpca
