#pragma once

#include "panrpca/core.hpp"

namespace panrpca {

// Thin SVD: U is rows x q, V is cols x q, q = min(rows, cols), singular
// values non-increasing.
struct ThinSvd {
  Matrix u;
  Vector s;
  Matrix v;
};

// Picks the Gram-matrix route for strongly rectangular inputs and a direct
// bidiagonal SVD otherwise.
ThinSvd thin_svd(const Matrix& z);
ThinSvd thin_svd_direct(const Matrix& z);
// Eigendecomposition of the small Gram matrix. Left (or right) vectors whose
// singular value is below eps * s_max are returned as zero columns.
ThinSvd thin_svd_gram(const Matrix& z);

struct SpectrumSplit {
  Vector leading_values;   // sigma_1..sigma_r
  Matrix leading_u;        // rows x r
  Matrix leading_v;        // cols x r
  Vector trailing_values;  // sigma_{r+1}..sigma_q
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

SpectrumSplit split_spectrum(const Matrix& z, int rank);

// Empirical D-transform of the trailing spectrum and its derivative at z.
struct DTransform {
  double value = 0.0;
  double derivative = 0.0;
};

DTransform d_transform(double z, const Vector& trailing, Eigen::Index rows,
                       Eigen::Index cols);

// w_i = -2 D(sigma_i) / D'(sigma_i), clamped to [0, sigma_i]; zero when
// sigma_i is within 1e-9 of sigma_{r+1}.
Vector optshrink_weights(const SpectrumSplit& split);

struct LowRankEstimate {
  Matrix estimate;
  Vector values;  // singular values of the estimate (weights)
};

LowRankEstimate optshrink_estimate(const Matrix& z, int rank);
Matrix optshrink(const Matrix& z, int rank);

LowRankEstimate svt_estimate(const Matrix& z, double lambda);
Matrix svt(const Matrix& z, double lambda);

double nuclear_norm(const Matrix& z);

}  // namespace panrpca
