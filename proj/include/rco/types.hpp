#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace rco {

// Batches are row-major: one example per row.
using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXf;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;
using VecMap = Eigen::Map<Vec>;
using ConstVecMap = Eigen::Map<const Vec>;

std::string shape_str(const std::vector<int>& shape);
int64_t shape_size(const std::vector<int>& shape);

/// Dense n-dimensional array of 32-bit floats, flat row-major storage.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<int> shape_, std::vector<float> data_);

  static Tensor zeros(std::vector<int> shape_);

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  bool empty() const { return data.empty(); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape.size()); }

  // Views as Eigen objects. The requested rows*cols must equal size().
  MatMap mat(int rows, int cols);
  ConstMatMap mat(int rows, int cols) const;
  // Batch view: shape[0] rows, everything else flattened into columns.
  MatMap mat2d();
  ConstMatMap mat2d() const;
  VecMap vec();
  ConstVecMap vec() const;
};

bool same_shape(const Tensor& a, const Tensor& b);
bool bitwise_equal(const Tensor& a, const Tensor& b);
bool all_finite(const Tensor& t);

}  // namespace rco
