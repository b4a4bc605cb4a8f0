#include "ugodit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "ugodit/error.hpp"

namespace ugodit {

std::string shape_string(const Shape &shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i)
      s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

std::size_t shape_size(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  require(data_.size() == shape_size(shape_), "tensor data does not match shape " + shape_string(shape_));
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::reshape(Shape shape) {
  require(shape_size(shape) == data_.size(), "reshape to " + shape_string(shape) + " changes element count");
  shape_ = std::move(shape);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor &Tensor::operator+=(const Tensor &other) {
  require(same_shape(other), "shape mismatch in +=: " + shape_string(shape_) + " vs " + shape_string(other.shape_));
  for (std::size_t i = 0; i < data_.size(); ++i)
    data_[i] += other.data_[i];
  return *this;
}

Tensor &Tensor::operator-=(const Tensor &other) {
  require(same_shape(other), "shape mismatch in -=: " + shape_string(shape_) + " vs " + shape_string(other.shape_));
  for (std::size_t i = 0; i < data_.size(); ++i)
    data_[i] -= other.data_[i];
  return *this;
}

Tensor &Tensor::operator*=(double s) {
  for (double &v : data_)
    v *= s;
  return *this;
}

Tensor operator+(Tensor a, const Tensor &b) { return a += b; }
Tensor operator-(Tensor a, const Tensor &b) { return a -= b; }
Tensor operator*(Tensor a, double s) { return a *= s; }

double dot(const Tensor &a, const Tensor &b) {
  require(a.size() == b.size(), "dot of tensors with different sizes");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

double squared_norm(const Tensor &a) { return dot(a, a); }
double norm(const Tensor &a) { return std::sqrt(squared_norm(a)); }

double max_abs_diff(const Tensor &a, const Tensor &b) {
  require(a.size() == b.size(), "max_abs_diff of tensors with different sizes");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::uint64_t fnv1a(const void *bytes, std::size_t n, std::uint64_t seed) {
  auto p = static_cast<const unsigned char *>(bytes);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t checksum(const Tensor &t, std::uint64_t seed) {
  return fnv1a(t.data(), t.size() * sizeof(double), seed);
}

Tensor concat_channels(const Tensor &a, const Tensor &b) {
  require(a.rank() == 3 && b.rank() == 3 && a.height() == b.height() && a.width() == b.width(),
          "concat_channels needs rank-3 tensors with equal spatial size");
  Tensor out({a.channels() + b.channels(), a.height(), a.width()});
  std::memcpy(out.data(), a.data(), a.size() * sizeof(double));
  std::memcpy(out.data() + a.size(), b.data(), b.size() * sizeof(double));
  return out;
}

} // namespace ugodit
