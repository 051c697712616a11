#include "thermalcycle/tensor.hpp"

#include <cmath>
#include <sstream>

namespace thermalcycle {

std::string Shape::str() const {
  std::ostringstream out;
  out << n << 'x' << c << 'x' << h << 'x' << w;
  return out.str();
}

namespace {

void validate(const Shape& s) {
  if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
    throw ShapeError("tensor extents must be >= 1, got " + s.str());
  }
}

}  // namespace

Tensor::Tensor() : data_(1, 0.0f) {}

Tensor::Tensor(Shape shape, float fill) : shape_(shape) {
  validate(shape_);
  data_.assign(shape_.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
  validate(shape_);
  if (data_.size() != shape_.numel()) {
    throw ShapeError("tensor of shape " + shape_.str() + " needs " + std::to_string(shape_.numel()) +
                     " values, got " + std::to_string(data_.size()));
  }
}

Tensor Tensor::scalar(float value) { return Tensor(Shape{}, value); }

Tensor Tensor::full_like(const Tensor& other, float value) { return Tensor(other.shape(), value); }

float Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on non-scalar tensor " + shape_.str());
  return data_[0];
}

void Tensor::add_inplace(const Tensor& other) {
  require_same_shape(shape_, other.shape(), "add_inplace");
  const float* src = other.raw();
  float* dst = data_.data();
  for (std::size_t i = 0; i < data_.size(); ++i) dst[i] += src[i];
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.str() + " vs " + b.str());
  }
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_diff");
  float worst = 0.0f;
  for (std::size_t i = 0; i < a.numel(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a.shape(), b.shape(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

}  // namespace thermalcycle
