#include "panrpca/core.hpp"

#include <cmath>
#include <string>

#include "panrpca/error.hpp"

namespace panrpca {
namespace {

bool is_binary(const Matrix& m) {
  return (m.array() == 0.0 || m.array() == 1.0).all();
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " +
                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

void check_weights(const Matrix& x, const TVWeights& w) {
  const Eigen::Index pixels = Eigen::Index(w.height) * w.width;
  if (x.rows() != pixels || x.cols() != w.frames) {
    throw Error(ErrorCode::kDimensionMismatch,
                "stack does not match TV weight dimensions");
  }
}

}  // namespace

Image::Image(Matrix pixels) : pixels_(std::move(pixels)) {
  if (pixels_.rows() < 1 || pixels_.cols() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "image must be at least 1x1");
  }
  if (!pixels_.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "image contains non-finite values");
  }
}

Image::Image(int height, int width, double fill)
    : Image(Matrix::Constant(height, width, fill)) {}

FrameStack::FrameStack(int height, int width, Matrix data, Matrix mask)
    : height_(height), width_(width), data_(std::move(data)),
      mask_(std::move(mask)) {
  if (height < 1 || width < 1) {
    throw Error(ErrorCode::kInvalidArgument, "canvas must be at least 1x1");
  }
  if (data_.rows() != Eigen::Index(height) * width || data_.cols() < 1) {
    throw Error(ErrorCode::kDimensionMismatch,
                "stack rows must equal canvas height * width");
  }
  check_same_shape(data_, mask_, "stack data/mask");
  if (!is_binary(mask_)) {
    throw Error(ErrorCode::kInvalidArgument, "mask entries must be 0 or 1");
  }
  if (!data_.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "stack contains non-finite values");
  }
  data_ = data_.cwiseProduct(mask_);
}

FrameStack::FrameStack(int height, int width, Matrix data)
    : FrameStack(height, width, data, Matrix::Ones(data.rows(), data.cols())) {}

Image FrameStack::frame(int k) const {
  return unvec(data_.col(k), height_, width_);
}

Image FrameStack::mask_frame(int k) const {
  return unvec(mask_.col(k), height_, width_);
}

FrameStack FrameStack::with_data(Matrix data) const {
  return FrameStack(height_, width_, std::move(data), mask_);
}

Eigen::Index FrameStack::observed_count() const {
  return static_cast<Eigen::Index>(mask_.sum());
}

Decomposition Decomposition::zeros(Eigen::Index rows, Eigen::Index cols) {
  return {Matrix::Zero(rows, cols), Matrix::Zero(rows, cols),
          Matrix::Zero(rows, cols)};
}

bool Decomposition::all_finite() const {
  return low_rank.allFinite() && sparse.allFinite() && smooth.allFinite();
}

TVWeights TVWeights::from_mask(int height, int width, const Matrix& mask) {
  const Eigen::Index m = height;
  if (mask.rows() != m * width) {
    throw Error(ErrorCode::kDimensionMismatch,
                "mask rows must equal height * width");
  }
  const auto p = static_cast<int>(mask.cols());
  TVWeights w;
  w.height = height;
  w.width = width;
  w.frames = p;
  w.wx = Matrix::Zero(mask.rows(), p);
  w.wy = Matrix::Zero(mask.rows(), p);
  w.wz = Matrix::Zero(mask.rows(), p);
  for (int k = 0; k < p; ++k) {
    for (int j = 0; j < width; ++j) {
      for (int i = 0; i < height; ++i) {
        const Eigen::Index idx = i + m * j;
        const double here = mask(idx, k);
        if (i + 1 < height) w.wx(idx, k) = here * mask(idx + 1, k);
        if (j + 1 < width) w.wy(idx, k) = here * mask(idx + m, k);
        if (k + 1 < p) w.wz(idx, k) = here * mask(idx, k + 1);
      }
    }
  }
  return w;
}

TVWeights TVWeights::full(int height, int width, int frames) {
  return from_mask(height, width,
                   Matrix::Ones(Eigen::Index(height) * width, frames));
}

bool TVWeights::all_ones_in_range() const {
  const Eigen::Index m = height;
  for (int k = 0; k < frames; ++k) {
    for (int j = 0; j < width; ++j) {
      for (int i = 0; i < height; ++i) {
        const Eigen::Index idx = i + m * j;
        if (i + 1 < height && wx(idx, k) != 1.0) return false;
        if (j + 1 < width && wy(idx, k) != 1.0) return false;
        if (k + 1 < frames && wz(idx, k) != 1.0) return false;
      }
    }
  }
  return true;
}

DifferenceOperator DifferenceOperator::active_rows() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(c.nonZeros()));
  // C is column-major; gather row remapping first.
  std::vector<Eigen::Index> new_row(static_cast<std::size_t>(c.rows()), -1);
  Eigen::Index rows = 0;
  for (Eigen::Index r = 0; r < c.rows(); ++r) {
    if (weights(r) != 0.0) new_row[static_cast<std::size_t>(r)] = rows++;
  }
  for (Eigen::Index col = 0; col < c.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(c, col); it; ++it) {
      const Eigen::Index r = new_row[static_cast<std::size_t>(it.row())];
      if (r >= 0) triplets.emplace_back(r, it.col(), it.value());
    }
  }
  DifferenceOperator out;
  out.c.resize(rows, c.cols());
  out.c.setFromTriplets(triplets.begin(), triplets.end());
  out.weights = Vector::Ones(rows);
  return out;
}

SparseMatrix DifferenceOperator::weighted() const {
  return weights.asDiagonal() * c;
}

Matrix project_mask(const Matrix& x, const Matrix& mask) {
  check_same_shape(x, mask, "project_mask");
  return x.cwiseProduct(mask);
}

FrameStack stack_frames(const std::vector<Image>& frames,
                        const std::vector<Image>& masks) {
  if (frames.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no frames to stack");
  }
  if (masks.size() != frames.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "frame and mask counts differ");
  }
  const int m = frames.front().height();
  const int n = frames.front().width();
  const Eigen::Index pixels = Eigen::Index(m) * n;
  const auto p = static_cast<Eigen::Index>(frames.size());
  Matrix data(pixels, p);
  Matrix mask(pixels, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const Image& f = frames[static_cast<std::size_t>(k)];
    const Image& w = masks[static_cast<std::size_t>(k)];
    if (f.height() != m || f.width() != n || w.height() != m ||
        w.width() != n) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "frame " + std::to_string(k) + " has inconsistent size");
    }
    // Eigen storage is column-major, so reshaping is the vec() operator.
    data.col(k) = f.pixels().reshaped();
    mask.col(k) = w.pixels().reshaped();
  }
  return FrameStack(m, n, std::move(data), std::move(mask));
}

FrameStack stack_frames(const std::vector<Image>& frames) {
  std::vector<Image> masks;
  masks.reserve(frames.size());
  for (const Image& f : frames) masks.emplace_back(f.height(), f.width(), 1.0);
  return stack_frames(frames, masks);
}

Image unvec(const Eigen::Ref<const Vector>& column, int height, int width) {
  if (column.size() != Eigen::Index(height) * width) {
    throw Error(ErrorCode::kDimensionMismatch, "unvec size mismatch");
  }
  return Image(column.reshaped(height, width).eval());
}

double tv_value(const Matrix& x, const TVWeights& w) {
  check_weights(x, w);
  const Eigen::Index m = w.height;
  const Eigen::Index pixels = x.rows();
  double total = 0.0;
  for (int k = 0; k < w.frames; ++k) {
    for (Eigen::Index idx = 0; idx < pixels; ++idx) {
      const double here = x(idx, k);
      if (w.wx(idx, k) != 0.0) {
        total += w.wx(idx, k) * std::abs(x(idx + 1, k) - here);
      }
      if (w.wy(idx, k) != 0.0) {
        total += w.wy(idx, k) * std::abs(x(idx + m, k) - here);
      }
      if (w.wz(idx, k) != 0.0) {
        total += w.wz(idx, k) * std::abs(x(idx, k + 1) - here);
      }
    }
  }
  return total;
}

DifferenceOperator build_difference_operator(int height, int width, int frames,
                                             const TVWeights& w,
                                             Boundary boundary) {
  if (height < 1 || width < 1 || frames < 1) {
    throw Error(ErrorCode::kInvalidArgument, "dimensions must be positive");
  }
  if (w.height != height || w.width != width || w.frames != frames) {
    throw Error(ErrorCode::kDimensionMismatch,
                "TV weights do not match operator dimensions");
  }
  const bool circulant = boundary == Boundary::kCirculant;
  if (circulant && !w.all_ones_in_range()) {
    throw Error(ErrorCode::kInvalidArgument,
                "circulant boundaries require fully observed weights");
  }

  const Eigen::Index m = height;
  const Eigen::Index n = width;
  const Eigen::Index mn = m * n;
  const Eigen::Index total = mn * frames;

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> weights;
  triplets.reserve(static_cast<std::size_t>(6 * total));
  weights.reserve(static_cast<std::size_t>(3 * total));

  auto add_row = [&](Eigen::Index from, Eigen::Index to, double weight) {
    const auto row = static_cast<Eigen::Index>(weights.size());
    triplets.emplace_back(row, from, -1.0);
    triplets.emplace_back(row, to, 1.0);
    weights.push_back(weight);
  };

  // Axis 0: rows (i).
  for (int k = 0; k < frames; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index idx = i + m * j;
        const Eigen::Index flat = idx + mn * k;
        if (i + 1 < m) {
          add_row(flat, flat + 1, w.wx(idx, k));
        } else if (circulant && m > 1) {
          add_row(flat, flat - (m - 1), 1.0);
        }
      }
    }
  }
  // Axis 1: columns (j).
  for (int k = 0; k < frames; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index idx = i + m * j;
        const Eigen::Index flat = idx + mn * k;
        if (j + 1 < n) {
          add_row(flat, flat + m, w.wy(idx, k));
        } else if (circulant && n > 1) {
          add_row(flat, flat - m * (n - 1), 1.0);
        }
      }
    }
  }
  // Axis 2: frames (k).
  for (int k = 0; k < frames; ++k) {
    for (Eigen::Index idx = 0; idx < mn; ++idx) {
      const Eigen::Index flat = idx + mn * k;
      if (k + 1 < frames) {
        add_row(flat, flat + mn, w.wz(idx, k));
      } else if (circulant && frames > 1) {
        add_row(flat, idx, 1.0);
      }
    }
  }

  DifferenceOperator op;
  op.c.resize(static_cast<Eigen::Index>(weights.size()), total);
  op.c.setFromTriplets(triplets.begin(), triplets.end());
  op.weights = Eigen::Map<const Vector>(weights.data(),
                                        static_cast<Eigen::Index>(weights.size()));
  return op;
}

}  // namespace panrpca
