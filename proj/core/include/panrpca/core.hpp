#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace panrpca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

// Grayscale image, pixel (i, j) is row i, column j. Intensities are nominally
// in [0, 1]; derived images (components, residuals) may leave that range.
class Image {
 public:
  Image() = default;
  explicit Image(Matrix pixels);
  Image(int height, int width, double fill = 0.0);

  int height() const { return static_cast<int>(pixels_.rows()); }
  int width() const { return static_cast<int>(pixels_.cols()); }
  bool empty() const { return pixels_.size() == 0; }

  double operator()(int i, int j) const { return pixels_(i, j); }
  double& operator()(int i, int j) { return pixels_(i, j); }

  const Matrix& pixels() const { return pixels_; }
  Matrix& pixels() { return pixels_; }

 private:
  Matrix pixels_;
};

// Registered frames stacked column-wise. Row index i + m*j addresses canvas
// pixel (i, j); column k is frame k. Unobserved entries of data are zero.
class FrameStack {
 public:
  FrameStack() = default;
  FrameStack(int height, int width, Matrix data, Matrix mask);

  // Fully observed stack.
  FrameStack(int height, int width, Matrix data);

  int height() const { return height_; }
  int width() const { return width_; }
  int frame_count() const { return static_cast<int>(data_.cols()); }
  Eigen::Index pixel_count() const { return data_.rows(); }

  const Matrix& data() const { return data_; }
  const Matrix& mask() const { return mask_; }

  Image frame(int k) const;
  Image mask_frame(int k) const;

  // Replaces the data; the result is re-projected onto the mask.
  FrameStack with_data(Matrix data) const;

  Eigen::Index observed_count() const;

 private:
  int height_ = 0;
  int width_ = 0;
  Matrix data_;
  Matrix mask_;
};

struct Decomposition {
  Matrix low_rank;  // L, background
  Matrix sparse;    // S1, sparse corruption
  Matrix smooth;    // S2, TV-smooth foreground

  static Decomposition zeros(Eigen::Index rows, Eigen::Index cols);
  bool all_finite() const;
};

// 0/1 weights on forward differences. wx(i + m*j, k) weights
// x(i+1, j, k) - x(i, j, k); wy weights the column step and wz the frame step.
// Out-of-range differences carry weight 0.
struct TVWeights {
  int height = 0;
  int width = 0;
  int frames = 0;
  Matrix wx;
  Matrix wy;
  Matrix wz;

  static TVWeights from_mask(int height, int width, const Matrix& mask);
  static TVWeights full(int height, int width, int frames);

  bool all_ones_in_range() const;
};

enum class Boundary {
  kDropped,    // out-of-range differences are omitted
  kCirculant,  // differences wrap around along every axis of length > 1
};

// Sparse first-difference operator C with 0/1 row weights W. Every row of C
// has one -1 (at the base pixel) and one +1 (at the forward neighbor). Rows
// are ordered x-differences, then y, then t.
struct DifferenceOperator {
  SparseMatrix c;
  Vector weights;

  // Rows of C whose weight is 1; weights of the result are all 1.
  DifferenceOperator active_rows() const;
  SparseMatrix weighted() const;
};

Matrix project_mask(const Matrix& x, const Matrix& mask);

FrameStack stack_frames(const std::vector<Image>& frames,
                        const std::vector<Image>& masks);
FrameStack stack_frames(const std::vector<Image>& frames);

Image unvec(const Eigen::Ref<const Vector>& column, int height, int width);

double tv_value(const Matrix& x, const TVWeights& w);

DifferenceOperator build_difference_operator(int height, int width, int frames,
                                             const TVWeights& w,
                                             Boundary boundary = Boundary::kDropped);

}  // namespace panrpca
