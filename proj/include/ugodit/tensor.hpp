#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ugodit {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape &shape);
std::size_t shape_size(const Shape &shape);

// Dense row-major array of doubles. Images are rank 3 (channels, height,
// width); complex MRI images use two channels (real, imaginary). Multi-coil
// k-space is rank 4 (coils, 2, height, width).
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor image(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0) {
    return Tensor({c, h, w}, fill);
  }

  const Shape &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Image accessors; valid for rank-3 tensors.
  std::size_t channels() const { return shape_.at(0); }
  std::size_t height() const { return shape_.at(rank() - 2); }
  std::size_t width() const { return shape_.at(rank() - 1); }

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double> &storage() { return data_; }
  const std::vector<double> &storage() const { return data_; }

  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double &at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }

  // Plane pointer for rank-3 (channel) or rank-4 (outer, inner) indexing.
  double *plane(std::size_t c) { return data_.data() + c * height() * width(); }
  const double *plane(std::size_t c) const { return data_.data() + c * height() * width(); }

  void fill(double v);
  void reshape(Shape shape);
  bool same_shape(const Tensor &other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  Tensor &operator+=(const Tensor &other);
  Tensor &operator-=(const Tensor &other);
  Tensor &operator*=(double s);

  friend bool operator==(const Tensor &a, const Tensor &b) = default;

private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor &b);
Tensor operator-(Tensor a, const Tensor &b);
Tensor operator*(Tensor a, double s);

double dot(const Tensor &a, const Tensor &b);
double squared_norm(const Tensor &a);
double norm(const Tensor &a);
double max_abs_diff(const Tensor &a, const Tensor &b);

// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(const void *bytes, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t checksum(const Tensor &t, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Concatenate rank-3 tensors along the channel axis.
Tensor concat_channels(const Tensor &a, const Tensor &b);

} // namespace ugodit
