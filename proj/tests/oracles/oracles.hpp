#pragma once

// Reference implementations used only by tests. They deliberately avoid the
// library's operators so they can check them.

#include <random>
#include <vector>

#include <Eigen/Core>

#include "panrpca/core.hpp"
#include "panrpca/registration.hpp"

namespace panrpca::oracle {

// Weighted anisotropic TV by explicit (i, j, k) loops; weights are derived
// directly from the mask (both endpoints observed).
double tv_naive(const Matrix& x, const Matrix& mask, int height, int width);

// Dense first-difference matrix over an m x n x p grid (dropped boundaries),
// only rows whose endpoints are both observed.
Eigen::MatrixXd dense_difference(int height, int width, int frames,
                                 const Matrix& mask);

// Exact minimizer of 1/2 |z - x|^2 + lambda |D x|_1 by enumerating every
// sign pattern in {-1, 0, +1} of the rows of D and solving each
// equality-constrained quadratic in closed form.
Eigen::VectorXd tv_prox_enumerate(const Eigen::VectorXd& z,
                                  const Eigen::MatrixXd& d, double lambda);

double tv_objective(const Eigen::VectorXd& z, const Eigen::MatrixXd& d,
                    double lambda, const Eigen::VectorXd& x);

// kappa p' = H^T p written out component by component.
Eigen::Vector2d project_direct(const Eigen::Matrix3d& h, const Eigen::Vector2d& p);

// Random homography close to a similarity, H33 = 1, condition-bounded.
Eigen::Matrix3d random_homography(std::mt19937_64& rng, double scale = 100.0);

// Per-pixel count of canvas pixels whose preimage lies inside the frame.
int covered_pixel_count(const Homography& to_anchor, const Canvas& canvas,
                        int frame_height, int frame_width);

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                     double lo = -1.0, double hi = 1.0);
Matrix random_mask(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                   double keep = 0.7);
Matrix random_orthogonal(std::mt19937_64& rng, Eigen::Index n);

}  // namespace panrpca::oracle
