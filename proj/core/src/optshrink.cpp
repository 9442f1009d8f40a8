#include "panrpca/optshrink.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "panrpca/error.hpp"

namespace panrpca {
namespace {

// Aspect ratio beyond which the Gram route is used.
constexpr Eigen::Index kGramAspect = 8;
constexpr Eigen::Index kGramMaxSide = 1024;

// Singular values this close to the first trailing one make the D-transform
// blow up; the component is annihilated instead.
constexpr double kAnnihilationGap = 1e-9;

void check_finite(const Matrix& z) {
  if (!z.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "low-rank input is not finite");
  }
}

}  // namespace

ThinSvd thin_svd_direct(const Matrix& z) {
  Eigen::BDCSVD<Matrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

ThinSvd thin_svd_gram(const Matrix& z) {
  const bool tall = z.rows() >= z.cols();
  const Eigen::Index q = std::min(z.rows(), z.cols());
  Matrix gram(q, q);
  if (tall) {
    gram.setZero();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose());
  } else {
    gram.setZero();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(z);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  // Ascending eigenvalues; flip to descending singular values.
  const Vector evals = eig.eigenvalues().reverse();
  const Matrix evecs = eig.eigenvectors().rowwise().reverse();

  ThinSvd out;
  out.s = evals.cwiseMax(0.0).cwiseSqrt();
  const double cutoff =
      (out.s.size() ? out.s(0) : 0.0) * std::numeric_limits<double>::epsilon() *
      static_cast<double>(std::max(z.rows(), z.cols()));
  Matrix other = tall ? Matrix(z * evecs) : Matrix(z.transpose() * evecs);
  for (Eigen::Index i = 0; i < q; ++i) {
    if (out.s(i) > cutoff && out.s(i) > 0.0) {
      other.col(i) /= out.s(i);
    } else {
      other.col(i).setZero();
    }
  }
  if (tall) {
    out.u = std::move(other);
    out.v = evecs;
  } else {
    out.u = evecs;
    out.v = std::move(other);
  }
  return out;
}

ThinSvd thin_svd(const Matrix& z) {
  const Eigen::Index lo = std::min(z.rows(), z.cols());
  const Eigen::Index hi = std::max(z.rows(), z.cols());
  if (lo <= kGramMaxSide && hi >= kGramAspect * lo) return thin_svd_gram(z);
  return thin_svd_direct(z);
}

SpectrumSplit split_spectrum(const Matrix& z, int rank) {
  const Eigen::Index q = std::min(z.rows(), z.cols());
  if (rank < 1 || rank >= q) {
    throw Error(ErrorCode::kInvalidArgument,
                "rank " + std::to_string(rank) + " must satisfy 1 <= r < " +
                    std::to_string(q));
  }
  check_finite(z);
  ThinSvd svd = thin_svd(z);
  SpectrumSplit split;
  split.rows = z.rows();
  split.cols = z.cols();
  split.leading_values = svd.s.head(rank);
  split.leading_u = svd.u.leftCols(rank);
  split.leading_v = svd.v.leftCols(rank);
  split.trailing_values = svd.s.tail(q - rank);
  return split;
}

DTransform d_transform(double z, const Vector& trailing, Eigen::Index rows,
                       Eigen::Index cols) {
  const Eigen::Index q = std::min(rows, cols);
  const Eigen::Index big = std::max(rows, cols);
  const auto r = static_cast<double>(q - trailing.size());
  const double tail_count = static_cast<double>(trailing.size());
  const double pad = static_cast<double>(big - q);

  double sum = 0.0;        // sum z / (z^2 - s^2)
  double sum_deriv = 0.0;  // sum -(z^2 + s^2) / (z^2 - s^2)^2
  for (Eigen::Index k = 0; k < trailing.size(); ++k) {
    const double s2 = trailing(k) * trailing(k);
    const double denom = z * z - s2;
    sum += z / denom;
    sum_deriv += -(z * z + s2) / (denom * denom);
  }
  const double phi1 = sum / tail_count;
  const double dphi1 = sum_deriv / tail_count;
  const double phi2 = (sum + pad / z) / (static_cast<double>(big) - r);
  const double dphi2 = (sum_deriv - pad / (z * z)) / (static_cast<double>(big) - r);
  return {phi1 * phi2, dphi1 * phi2 + phi1 * dphi2};
}

Vector optshrink_weights(const SpectrumSplit& split) {
  const Eigen::Index r = split.leading_values.size();
  Vector w = Vector::Zero(r);
  const double first_trailing =
      split.trailing_values.size() ? split.trailing_values(0) : 0.0;
  for (Eigen::Index i = 0; i < r; ++i) {
    const double sigma = split.leading_values(i);
    if (sigma - first_trailing <= kAnnihilationGap) continue;
    const DTransform d =
        d_transform(sigma, split.trailing_values, split.rows, split.cols);
    if (!(d.derivative < 0.0) || !std::isfinite(d.value)) continue;
    const double weight = -2.0 * d.value / d.derivative;
    w(i) = std::isfinite(weight) ? std::clamp(weight, 0.0, sigma) : 0.0;
  }
  return w;
}

LowRankEstimate optshrink_estimate(const Matrix& z, int rank) {
  const SpectrumSplit split = split_spectrum(z, rank);
  LowRankEstimate out;
  out.values = optshrink_weights(split);
  out.estimate = split.leading_u * out.values.asDiagonal() *
                 split.leading_v.transpose();
  return out;
}

Matrix optshrink(const Matrix& z, int rank) {
  return optshrink_estimate(z, rank).estimate;
}

LowRankEstimate svt_estimate(const Matrix& z, double lambda) {
  if (!(lambda >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "SVT threshold must be >= 0");
  }
  check_finite(z);
  const ThinSvd svd = thin_svd(z);
  const Vector shrunk = (svd.s.array() - lambda).cwiseMax(0.0).matrix();
  Eigen::Index keep = 0;
  while (keep < shrunk.size() && shrunk(keep) > 0.0) ++keep;
  LowRankEstimate out;
  out.values = shrunk;
  out.estimate = svd.u.leftCols(keep) * shrunk.head(keep).asDiagonal() *
                 svd.v.leftCols(keep).transpose();
  return out;
}

Matrix svt(const Matrix& z, double lambda) { return svt_estimate(z, lambda).estimate; }

double nuclear_norm(const Matrix& z) {
  const Eigen::Index lo = std::min(z.rows(), z.cols());
  const Eigen::Index hi = std::max(z.rows(), z.cols());
  if (lo <= kGramMaxSide && hi >= kGramAspect * lo) {
    Matrix gram = Matrix::Zero(lo, lo);
    if (z.rows() >= z.cols()) {
      gram.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose());
    } else {
      gram.selfadjointView<Eigen::Lower>().rankUpdate(z);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  }
  Eigen::BDCSVD<Matrix> svd(z);
  return svd.singularValues().sum();
}

}  // namespace panrpca
