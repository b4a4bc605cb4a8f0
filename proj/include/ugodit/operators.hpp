#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ugodit/tensor.hpp"

namespace ugodit {

struct CartesianMask {
  std::vector<std::uint8_t> sampled_columns; // 1 = acquired phase-encode column
  int acceleration_factor = 1;
  std::size_t acs_width = 0;

  std::size_t width() const { return sampled_columns.size(); }
  std::size_t sampled_count() const;
  bool operator==(const CartesianMask &) const = default;
};

// Samples round(width / af) columns: a centered ACS band of
// round(acs_fraction * width) columns plus uniformly drawn extras.
CartesianMask make_cartesian_mask(std::size_t width, int acceleration_factor, double acs_fraction,
                                  std::uint64_t seed);

// Complex coil profiles stored as (coils, 2, height, width).
struct SensitivityMaps {
  Tensor maps;

  std::size_t coils() const { return maps.dim(0); }
  std::size_t height() const { return maps.dim(2); }
  std::size_t width() const { return maps.dim(3); }
};

// Gaussian-bump magnitudes around the field of view with linear phase ramps
// (phase relative to coil 0), normalized to unit root-sum-of-squares.
SensitivityMaps make_sensitivity_maps(std::size_t coils, std::size_t height, std::size_t width, std::uint64_t seed);

struct MriOperator {
  CartesianMask mask;
  SensitivityMaps maps;
};

struct SrOperator {
  std::size_t factor = 4;
};

// y = (G * max(x, 0)^gamma)^(1/gamma), G a normalized truncated Gaussian with
// replicated borders.
struct NdbOperator {
  double gamma = 2.2;
  double blur_sigma = 2.0;
  std::size_t kernel_radius = 6;
};

enum class OperatorKind { mri, sr, ndb };

std::string to_string(OperatorKind kind);
OperatorKind parse_operator_kind(const std::string &name);

class ForwardOperator {
public:
  using Variant = std::variant<MriOperator, SrOperator, NdbOperator>;

  explicit ForwardOperator(MriOperator op);
  explicit ForwardOperator(SrOperator op);
  explicit ForwardOperator(NdbOperator op);

  OperatorKind kind() const;
  bool is_linear() const { return kind() != OperatorKind::ndb; }
  const Variant &params() const { return op_; }
  const std::string &id() const { return id_; }

  // Shape of A x for an image of the given shape; throws ContractError when
  // the image is incompatible with this operator.
  Shape measurement_shape(const Shape &image_shape) const;
  Shape image_shape(const Shape &measurement_shape) const;

  Tensor apply(const Tensor &x) const;
  Tensor adjoint(const Tensor &y) const;
  // Vector-Jacobian product (dA/dx)^T g at x. Equals adjoint(g) for the
  // linear kinds.
  Tensor pullback(const Tensor &x, const Tensor &g) const;

private:
  Variant op_;
  std::string id_;
};

struct Measurement {
  Tensor y;
  double noise_sigma = 0.0;
  std::string operator_id;
};

Measurement apply_forward(const ForwardOperator &op, const Tensor &x);
Tensor apply_adjoint(const ForwardOperator &op, const Measurement &y);

// apply_forward plus i.i.d. Gaussian noise (for MRI only at sampled columns,
// on both real and imaginary channels).
Measurement simulate_measurement(const Tensor &x_star, const ForwardOperator &op, double sigma, std::uint64_t seed);

// Normalized 1-D Gaussian taps of length 2*radius+1.
std::vector<double> gaussian_taps(double sigma, std::size_t radius);

} // namespace ugodit
