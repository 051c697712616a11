#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace thermalcycle {

/// Raised when operand shapes or layer specs are inconsistent.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// (batch, channels, height, width). Every extent is >= 1.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  constexpr std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  constexpr std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  constexpr bool operator==(const Shape&) const = default;

  std::string str() const;
};

/// Dense rank-4 float tensor stored row-major in (N, C, H, W) order.
///
/// Plain value type: copies are deep, and no operation in this library
/// mutates a tensor it receives as input.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  static Tensor scalar(float value);
  static Tensor full_like(const Tensor& other, float value);

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  float* raw() { return data_.data(); }
  const float* raw() const { return data_.data(); }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  float& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
  float at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }

  /// Value of a 1x1x1x1 tensor.
  float item() const;

  /// Elementwise in-place accumulation; shapes must match.
  void add_inplace(const Tensor& other);

  bool operator==(const Tensor& other) const = default;

 private:
  std::size_t offset(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }

  Shape shape_;
  std::vector<float> data_;
};

void require_same_shape(const Shape& a, const Shape& b, const char* what);

/// Largest absolute elementwise difference; shapes must match.
float max_abs_diff(const Tensor& a, const Tensor& b);

/// Sum of elementwise products, accumulated in double.
double dot(const Tensor& a, const Tensor& b);

}  // namespace thermalcycle
