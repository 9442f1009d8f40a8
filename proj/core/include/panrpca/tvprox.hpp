#pragma once

#include <memory>

#include "panrpca/core.hpp"

namespace panrpca {

enum class XSolver {
  kConjugateGradient,
  // Exact transform solve (FFT for circulant boundaries, DCT for dropped
  // ones). Requires all-ones weights.
  kFft,
  // kFft when the weights allow it, conjugate gradient otherwise.
  kAuto,
};

struct AdmmConfig {
  double rho = 1.0;
  int max_outer = 50;
  double tol = 1e-4;
  double cg_tol = 1e-8;
  int cg_max = 200;
  bool warm_start = true;
  Boundary boundary = Boundary::kDropped;
  XSolver x_solver = XSolver::kConjugateGradient;

  void validate() const;
};

struct XUpdateStats {
  int iterations = 0;
  double residual = 0.0;  // relative CG residual
  bool converged = true;
};

// Solves (I + rho C^T W^T W C) x = z + rho C^T W^T (v - u) by conjugate
// gradient. `guess` seeds the iteration when non-empty.
Vector x_update(const Vector& z, const Vector& v, const Vector& u, double rho,
                const DifferenceOperator& op, const AdmmConfig& cfg,
                const Vector& guess = Vector(), XUpdateStats* stats = nullptr);

// v = soft_{lambda/rho}(wcx + u)
Vector v_update(const Vector& wcx, const Vector& u, double lambda, double rho);

struct TvdnResult {
  Matrix x;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
  int cg_warnings = 0;
  double worst_cg_residual = 0.0;
};

// Weighted anisotropic TV denoiser,  argmin_x 1/2 |z - x|^2 + lambda |W C x|_1,
// by scaled-form ADMM. Keeps its iterates between calls when warm starting
// is enabled; one instance per thread.
class TvDenoiser {
 public:
  TvDenoiser(const TVWeights& weights, const AdmmConfig& cfg);
  ~TvDenoiser();
  TvDenoiser(TvDenoiser&&) noexcept;
  TvDenoiser& operator=(TvDenoiser&&) noexcept;

  TvdnResult solve(const Matrix& z, double lambda);
  void reset();

  const AdmmConfig& config() const { return cfg_; }

 private:
  class SpectralSolver;

  Vector solve_x(const Vector& rhs, const Vector& guess, XUpdateStats* stats);

  TVWeights weights_;
  AdmmConfig cfg_;
  DifferenceOperator op_;  // active rows only
  SparseMatrix system_;    // I + rho D^T D
  std::unique_ptr<SpectralSolver> spectral_;
  Vector x_;
  Vector v_;
  Vector u_;
};

TvdnResult tvdn(const Matrix& z, double lambda, const TVWeights& w,
                const AdmmConfig& cfg = {});

}  // namespace panrpca
