#include "rco/types.hpp"

#include "rco/errors.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace rco {

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream out;
  out << '(';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ')';
  return out.str();
}

int64_t shape_size(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<int> shape_, std::vector<float> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  if (shape_size(shape) != static_cast<int64_t>(data.size())) {
    fail(errc::shape_mismatch, "tensor shape " + shape_str(shape) + " does not hold " +
                                   std::to_string(data.size()) + " values");
  }
}

Tensor Tensor::zeros(std::vector<int> shape_) {
  Tensor t;
  t.shape = std::move(shape_);
  t.data.assign(static_cast<size_t>(shape_size(t.shape)), 0.0f);
  return t;
}

MatMap Tensor::mat(int rows, int cols) {
  if (static_cast<int64_t>(rows) * cols != size()) {
    fail(errc::shape_mismatch, "cannot view tensor " + shape_str(shape) + " as " +
                                   std::to_string(rows) + "x" + std::to_string(cols));
  }
  return MatMap(data.data(), rows, cols);
}

ConstMatMap Tensor::mat(int rows, int cols) const {
  if (static_cast<int64_t>(rows) * cols != size()) {
    fail(errc::shape_mismatch, "cannot view tensor " + shape_str(shape) + " as " +
                                   std::to_string(rows) + "x" + std::to_string(cols));
  }
  return ConstMatMap(data.data(), rows, cols);
}

MatMap Tensor::mat2d() {
  if (shape.empty()) fail(errc::shape_mismatch, "cannot view a rank-0 tensor as a batch");
  int rows = shape[0];
  int cols = rows == 0 ? 0 : static_cast<int>(size() / rows);
  return MatMap(data.data(), rows, cols);
}

ConstMatMap Tensor::mat2d() const {
  if (shape.empty()) fail(errc::shape_mismatch, "cannot view a rank-0 tensor as a batch");
  int rows = shape[0];
  int cols = rows == 0 ? 0 : static_cast<int>(size() / rows);
  return ConstMatMap(data.data(), rows, cols);
}

VecMap Tensor::vec() { return VecMap(data.data(), static_cast<Eigen::Index>(data.size())); }

ConstVecMap Tensor::vec() const {
  return ConstVecMap(data.data(), static_cast<Eigen::Index>(data.size()));
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) return false;
  if (a.data.empty()) return b.data.empty();
  return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0;
}

bool all_finite(const Tensor& t) {
  for (float v : t.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace rco
