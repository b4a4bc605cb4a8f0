#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ugodit/tensor.hpp"

namespace ugodit {

// Encoder level l: conv(k x k) -> activation -> 2x2 average pool.
// Decoder level l (deepest first): nearest 2x upsample -> concat encoder
// feature of level l-1 (when skip and l >= 1) -> conv(k x k) -> activation.
// A 1x1 head maps channels[0] to out_channels, followed by a sigmoid.
struct ArchitectureSpec {
  int depth = 5;
  std::vector<std::size_t> channels{8, 16, 16, 16, 16};
  std::size_t kernel_size = 3;
  std::size_t in_channels = 3;
  std::size_t out_channels = 3;
  bool skip = true;
  std::string activation = "leaky_relu"; // or "identity"
  double leaky_slope = 0.2;
  std::string upsample_mode = "nearest";

  void validate() const;
  // Throws ContractError unless height and width are multiples of 2^depth.
  void validate_input(std::size_t height, std::size_t width) const;
  std::string canonical() const;
  std::uint64_t fingerprint() const;
  static ArchitectureSpec parse_canonical(const std::string &text);

  // Input channel count of decoder convolution at level l.
  std::size_t decoder_in_channels(int level) const;
  double activation_slope() const { return activation == "identity" ? 1.0 : leaky_slope; }

  bool operator==(const ArchitectureSpec &) const = default;
};

// Weight (out, in, k, k) and bias (out).
struct ConvLayer {
  Tensor weight;
  Tensor bias;

  std::size_t out_channels() const { return weight.dim(0); }
  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t kernel() const { return weight.dim(2); }
  bool operator==(const ConvLayer &) const = default;
};

struct EncoderParams {
  std::vector<ConvLayer> layers; // one per level
  std::uint64_t fingerprint = 0;
  bool operator==(const EncoderParams &) const = default;
};

struct DecoderParams {
  std::vector<ConvLayer> layers; // layers[l] = level l, layers[depth] = 1x1 head
  std::uint64_t fingerprint = 0;
  bool operator==(const DecoderParams &) const = default;
};

struct LatentBundle {
  Tensor bottleneck;
  std::vector<Tensor> skips; // skips[l] = pooled output of encoder level l, l < depth-1
};

// Intermediate values kept for backpropagation and feature probing.
struct EncoderTrace {
  std::vector<Tensor> padded_inputs;
  std::vector<Tensor> pre_activations;
  std::vector<Tensor> activations; // per level, before pooling
};

struct DecoderTrace {
  std::vector<Tensor> padded_inputs; // per level, then the head input
  std::vector<Tensor> pre_activations;
  Tensor output;
};

// Weight init. With auto_scale, every layer uses std = sqrt(2 / fan_in);
// otherwise all weights use std = sigma_ini. Biases start at zero. The
// encoder and decoder `index` draw from independent sub-streams of seed.
EncoderParams init_encoder(const ArchitectureSpec &spec, double sigma_ini, std::uint64_t seed, bool auto_scale = false);
DecoderParams init_decoder(const ArchitectureSpec &spec, double sigma_ini, std::uint64_t seed, std::size_t index = 0,
                           bool auto_scale = false);
std::pair<EncoderParams, DecoderParams> init_params(const ArchitectureSpec &spec, double sigma_ini, std::uint64_t seed,
                                                    bool auto_scale = false);

LatentBundle encode(const ArchitectureSpec &spec, const EncoderParams &phi, const Tensor &z,
                    EncoderTrace *trace = nullptr);
Tensor decode(const ArchitectureSpec &spec, const DecoderParams &psi, const LatentBundle &latent,
              DecoderTrace *trace = nullptr);
Tensor forward_pass(const ArchitectureSpec &spec, const EncoderParams &phi, const DecoderParams &psi, const Tensor &z);

// Backpropagate d(loss)/d(output). Gradients accumulate into grad_psi;
// grad_latent (optional) receives d(loss)/d(latent).
void decode_backward(const ArchitectureSpec &spec, const DecoderParams &psi, const DecoderTrace &trace,
                     const Tensor &grad_output, DecoderParams &grad_psi, LatentBundle *grad_latent);
// grad_phi and grad_z are optional; pass nullptr for values not needed.
void encode_backward(const ArchitectureSpec &spec, const EncoderParams &phi, const EncoderTrace &trace,
                     const LatentBundle &grad_latent, EncoderParams *grad_phi, Tensor *grad_z);

// Visiting all parameter tensors in a fixed order.
void for_each_tensor(EncoderParams &p, const std::function<void(Tensor &)> &fn);
void for_each_tensor(const EncoderParams &p, const std::function<void(const Tensor &)> &fn);
void for_each_tensor(DecoderParams &p, const std::function<void(Tensor &)> &fn);
void for_each_tensor(const DecoderParams &p, const std::function<void(const Tensor &)> &fn);

template <class Params> Params zeros_like(const Params &p) {
  Params z = p;
  for_each_tensor(z, [](Tensor &t) { t.fill(0.0); });
  return z;
}

std::uint64_t params_checksum(const EncoderParams &p);
std::uint64_t params_checksum(const DecoderParams &p);
std::size_t parameter_count(const EncoderParams &p);
std::size_t parameter_count(const DecoderParams &p);

// Round every value to the nearest float32, the on-disk precision.
void round_to_float32(EncoderParams &p);

} // namespace ugodit
