#include "ugodit/network.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "ugodit/error.hpp"
#include "ugodit/rng.hpp"
#include "ugodit/simd/kernels.hpp"

namespace ugodit {

// ---------------------------------------------------------------------------
// ArchitectureSpec

void ArchitectureSpec::validate() const {
  if (depth < 1)
    throw ConfigError("network depth must be >= 1");
  if (channels.size() != static_cast<std::size_t>(depth))
    throw ConfigError("network needs one channel width per level: depth " + std::to_string(depth) + ", got " +
                      std::to_string(channels.size()) + " widths");
  for (std::size_t c : channels)
    if (c == 0)
      throw ConfigError("channel widths must be positive");
  if (kernel_size % 2 == 0)
    throw ConfigError("kernel size must be odd");
  if (in_channels == 0 || out_channels == 0)
    throw ConfigError("in/out channel counts must be positive");
  if (activation != "leaky_relu" && activation != "identity")
    throw ConfigError("unknown activation '" + activation + "'");
  if (upsample_mode != "nearest")
    throw ConfigError("unknown upsample mode '" + upsample_mode + "'");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0))
    throw ConfigError("leaky slope must lie in [0, 1)");
}

void ArchitectureSpec::validate_input(std::size_t height, std::size_t width) const {
  const std::size_t unit = std::size_t{1} << depth;
  require(height >= unit && width >= unit && height % unit == 0 && width % unit == 0,
          "input size " + std::to_string(height) + "x" + std::to_string(width) + " is not a multiple of 2^" +
              std::to_string(depth) + " = " + std::to_string(unit));
}

std::size_t ArchitectureSpec::decoder_in_channels(int level) const {
  const std::size_t up = channels[static_cast<std::size_t>(std::min(level + 1, depth - 1))];
  const std::size_t sk = (skip && level >= 1) ? channels[static_cast<std::size_t>(level - 1)] : 0;
  return up + sk;
}

std::string ArchitectureSpec::canonical() const {
  std::ostringstream s;
  s << "depth=" << depth << ";channels=";
  for (std::size_t i = 0; i < channels.size(); ++i)
    s << (i ? "," : "") << channels[i];
  char slope[64];
  std::snprintf(slope, sizeof slope, "%.17g", leaky_slope);
  s << ";kernel=" << kernel_size << ";in=" << in_channels << ";out=" << out_channels << ";skip=" << (skip ? 1 : 0)
    << ";activation=" << activation << ";slope=" << slope << ";upsample=" << upsample_mode;
  return s.str();
}

std::uint64_t ArchitectureSpec::fingerprint() const {
  const std::string c = canonical();
  return fnv1a(c.data(), c.size());
}

ArchitectureSpec ArchitectureSpec::parse_canonical(const std::string &text) {
  ArchitectureSpec spec;
  std::istringstream in(text);
  std::string field;
  int seen = 0;
  while (std::getline(in, field, ';')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos)
      throw FormatError("malformed architecture field '" + field + "'");
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    try {
      if (key == "depth")
        spec.depth = std::stoi(value);
      else if (key == "channels") {
        spec.channels.clear();
        std::istringstream cs(value);
        std::string item;
        while (std::getline(cs, item, ','))
          spec.channels.push_back(std::stoul(item));
      } else if (key == "kernel")
        spec.kernel_size = std::stoul(value);
      else if (key == "in")
        spec.in_channels = std::stoul(value);
      else if (key == "out")
        spec.out_channels = std::stoul(value);
      else if (key == "skip")
        spec.skip = value == "1";
      else if (key == "activation")
        spec.activation = value;
      else if (key == "slope")
        spec.leaky_slope = std::stod(value);
      else if (key == "upsample")
        spec.upsample_mode = value;
      else
        throw FormatError("unknown architecture field '" + key + "'");
    } catch (const std::logic_error &) {
      throw FormatError("bad value in architecture field '" + field + "'");
    }
    ++seen;
  }
  if (seen != 9)
    throw FormatError("architecture description has " + std::to_string(seen) + " fields, expected 9");
  return spec;
}

// ---------------------------------------------------------------------------
// Parameter utilities

void for_each_tensor(EncoderParams &p, const std::function<void(Tensor &)> &fn) {
  for (auto &l : p.layers) {
    fn(l.weight);
    fn(l.bias);
  }
}
void for_each_tensor(const EncoderParams &p, const std::function<void(const Tensor &)> &fn) {
  for (const auto &l : p.layers) {
    fn(l.weight);
    fn(l.bias);
  }
}
void for_each_tensor(DecoderParams &p, const std::function<void(Tensor &)> &fn) {
  for (auto &l : p.layers) {
    fn(l.weight);
    fn(l.bias);
  }
}
void for_each_tensor(const DecoderParams &p, const std::function<void(const Tensor &)> &fn) {
  for (const auto &l : p.layers) {
    fn(l.weight);
    fn(l.bias);
  }
}

std::uint64_t params_checksum(const EncoderParams &p) {
  std::uint64_t h = fnv1a(&p.fingerprint, sizeof p.fingerprint);
  for_each_tensor(p, [&](const Tensor &t) { h = checksum(t, h); });
  return h;
}

std::uint64_t params_checksum(const DecoderParams &p) {
  std::uint64_t h = fnv1a(&p.fingerprint, sizeof p.fingerprint);
  for_each_tensor(p, [&](const Tensor &t) { h = checksum(t, h); });
  return h;
}

std::size_t parameter_count(const EncoderParams &p) {
  std::size_t n = 0;
  for_each_tensor(p, [&](const Tensor &t) { n += t.size(); });
  return n;
}

std::size_t parameter_count(const DecoderParams &p) {
  std::size_t n = 0;
  for_each_tensor(p, [&](const Tensor &t) { n += t.size(); });
  return n;
}

void round_to_float32(EncoderParams &p) {
  for_each_tensor(p, [](Tensor &t) {
    for (double &v : t.storage())
      v = static_cast<double>(static_cast<float>(v));
  });
}

namespace {

ConvLayer make_layer(std::size_t cout, std::size_t cin, std::size_t k, double sigma, bool auto_scale, Rng &rng) {
  ConvLayer layer{Tensor({cout, cin, k, k}), Tensor({cout})};
  const double sd = auto_scale ? std::sqrt(2.0 / static_cast<double>(cin * k * k)) : sigma;
  if (sd > 0.0)
    for (double &w : layer.weight.storage())
      w = sd * rng.normal();
  return layer;
}

void check_sigma(double sigma_ini) {
  if (!(sigma_ini >= 0.0))
    throw ConfigError("sigma_ini must be >= 0");
}

} // namespace

EncoderParams init_encoder(const ArchitectureSpec &spec, double sigma_ini, std::uint64_t seed, bool auto_scale) {
  spec.validate();
  check_sigma(sigma_ini);
  Rng rng(derive_seed(seed, "encoder"));
  EncoderParams p;
  p.fingerprint = spec.fingerprint();
  std::size_t cin = spec.in_channels;
  for (int l = 0; l < spec.depth; ++l) {
    const std::size_t cout = spec.channels[static_cast<std::size_t>(l)];
    p.layers.push_back(make_layer(cout, cin, spec.kernel_size, sigma_ini, auto_scale, rng));
    cin = cout;
  }
  return p;
}

DecoderParams init_decoder(const ArchitectureSpec &spec, double sigma_ini, std::uint64_t seed, std::size_t index,
                           bool auto_scale) {
  spec.validate();
  check_sigma(sigma_ini);
  Rng rng(derive_seed(seed, "decoder", index));
  DecoderParams p;
  p.fingerprint = spec.fingerprint();
  for (int l = 0; l < spec.depth; ++l)
    p.layers.push_back(make_layer(spec.channels[static_cast<std::size_t>(l)], spec.decoder_in_channels(l),
                                  spec.kernel_size, sigma_ini, auto_scale, rng));
  p.layers.push_back(make_layer(spec.out_channels, spec.channels[0], 1, sigma_ini, auto_scale, rng));
  return p;
}

std::pair<EncoderParams, DecoderParams> init_params(const ArchitectureSpec &spec, double sigma_ini, std::uint64_t seed,
                                                    bool auto_scale) {
  return {init_encoder(spec, sigma_ini, seed, auto_scale), init_decoder(spec, sigma_ini, seed, 0, auto_scale)};
}

// ---------------------------------------------------------------------------
// Layer primitives

namespace {

Tensor pad(const Tensor &in, std::size_t p) {
  if (p == 0)
    return in;
  const std::size_t c = in.channels(), h = in.height(), w = in.width(), wp = w + 2 * p;
  Tensor out({c, h + 2 * p, wp});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      std::memcpy(out.plane(ch) + (y + p) * wp + p, in.plane(ch) + y * w, w * sizeof(double));
  return out;
}

// out (Cout, H, W) from a padded input (Cin, H+2p, W+2p).
Tensor conv_forward(const ConvLayer &layer, const Tensor &padded) {
  const auto &K = simd::active();
  const std::size_t cout = layer.out_channels(), cin = layer.in_channels(), k = layer.kernel();
  const std::size_t hp = padded.height(), wp = padded.width(), h = hp - (k - 1), w = wp - (k - 1);
  require(padded.channels() == cin, "convolution expects " + std::to_string(cin) + " input channels, got " +
                                        std::to_string(padded.channels()));
  Tensor out({cout, h, w});
  for (std::size_t co = 0; co < cout; ++co) {
    double *o = out.plane(co);
    std::fill(o, o + h * w, layer.bias[co]);
    K.conv_channel(h, w, k, cin, layer.weight.data() + co * cin * k * k, padded.data(), hp * wp, wp, o);
  }
  return out;
}

void conv_backward(const ConvLayer &layer, const Tensor &padded, const Tensor &grad_out, ConvLayer &grad,
                   Tensor *grad_in) {
  const auto &K = simd::active();
  const std::size_t cout = layer.out_channels(), cin = layer.in_channels(), k = layer.kernel(), p = k / 2;
  const std::size_t h = grad_out.height(), w = grad_out.width(), wp = padded.width();
  double *gw = grad.weight.data();
  for (std::size_t co = 0; co < cout; ++co) {
    const double *g = grad_out.plane(co);
    double s = 0.0;
    for (std::size_t i = 0; i < h * w; ++i)
      s += g[i];
    grad.bias[co] += s;
    for (std::size_t ci = 0; ci < cin; ++ci)
      K.corr_plane(h, w, k, g, padded.plane(ci), wp, gw + (co * cin + ci) * k * k);
  }
  if (grad_in == nullptr)
    return;

  // Input gradient: correlation of the padded output gradient with the
  // spatially flipped kernel, with input and output channels swapped.
  const Tensor gpad = pad(grad_out, p);
  std::vector<double> flipped(cin * cout * k * k);
  const double *wt = layer.weight.data();
  for (std::size_t co = 0; co < cout; ++co)
    for (std::size_t ci = 0; ci < cin; ++ci)
      for (std::size_t ky = 0; ky < k; ++ky)
        for (std::size_t kx = 0; kx < k; ++kx)
          flipped[((ci * cout + co) * k + ky) * k + kx] = wt[((co * cin + ci) * k + (k - 1 - ky)) * k + (k - 1 - kx)];
  *grad_in = Tensor({cin, h, w});
  const std::size_t gplane = gpad.height() * gpad.width();
  for (std::size_t ci = 0; ci < cin; ++ci)
    K.conv_channel(h, w, k, cout, flipped.data() + ci * cout * k * k, gpad.data(), gplane, gpad.width(),
                   grad_in->plane(ci));
}

Tensor avg_pool2(const Tensor &in) {
  const std::size_t c = in.channels(), h = in.height() / 2, w = in.width() / 2;
  Tensor out({c, h, w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        out.at(ch, y, x) = 0.25 * (in.at(ch, 2 * y, 2 * x) + in.at(ch, 2 * y, 2 * x + 1) +
                                   in.at(ch, 2 * y + 1, 2 * x) + in.at(ch, 2 * y + 1, 2 * x + 1));
  return out;
}

Tensor avg_pool2_backward(const Tensor &g) {
  const std::size_t c = g.channels(), h = g.height() * 2, w = g.width() * 2;
  Tensor out({c, h, w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        out.at(ch, y, x) = 0.25 * g.at(ch, y / 2, x / 2);
  return out;
}

Tensor upsample2(const Tensor &in) {
  const std::size_t c = in.channels(), h = in.height() * 2, w = in.width() * 2;
  Tensor out({c, h, w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        out.at(ch, y, x) = in.at(ch, y / 2, x / 2);
  return out;
}

Tensor upsample2_backward(const Tensor &g) {
  const std::size_t c = g.channels(), h = g.height() / 2, w = g.width() / 2;
  Tensor out({c, h, w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        out.at(ch, y, x) = g.at(ch, 2 * y, 2 * x) + g.at(ch, 2 * y, 2 * x + 1) + g.at(ch, 2 * y + 1, 2 * x) +
                           g.at(ch, 2 * y + 1, 2 * x + 1);
  return out;
}

Tensor activate(const ArchitectureSpec &spec, const Tensor &pre) {
  Tensor out(pre.shape());
  simd::active().leaky_relu(pre.size(), spec.activation_slope(), pre.data(), out.data());
  return out;
}

void activate_backward(const ArchitectureSpec &spec, const Tensor &pre, Tensor &grad) {
  simd::active().leaky_relu_backward(pre.size(), spec.activation_slope(), pre.data(), grad.data());
}

void check_fingerprint(const ArchitectureSpec &spec, std::uint64_t fp, const char *what) {
  if (fp != spec.fingerprint())
    throw ArchitectureError(std::string(what) + " parameters were built for a different architecture than " +
                            spec.canonical());
}

} // namespace

// ---------------------------------------------------------------------------
// Forward / backward

LatentBundle encode(const ArchitectureSpec &spec, const EncoderParams &phi, const Tensor &z, EncoderTrace *trace) {
  check_fingerprint(spec, phi.fingerprint, "encoder");
  require(z.rank() == 3 && z.channels() == spec.in_channels,
          "encoder input must be (" + std::to_string(spec.in_channels) + ", H, W), got " + shape_string(z.shape()));
  spec.validate_input(z.height(), z.width());
  if (trace)
    *trace = EncoderTrace{};
  const std::size_t p = spec.kernel_size / 2;
  LatentBundle latent;
  Tensor x = z;
  for (int l = 0; l < spec.depth; ++l) {
    Tensor padded = pad(x, p);
    Tensor pre = conv_forward(phi.layers[static_cast<std::size_t>(l)], padded);
    Tensor act = activate(spec, pre);
    Tensor pooled = avg_pool2(act);
    require(pooled.height() * 2 == x.height() && pooled.width() * 2 == x.width(), "encoder level did not halve");
    if (trace) {
      trace->padded_inputs.push_back(std::move(padded));
      trace->pre_activations.push_back(std::move(pre));
      trace->activations.push_back(std::move(act));
    }
    if (l < spec.depth - 1)
      latent.skips.push_back(pooled);
    x = std::move(pooled);
  }
  latent.bottleneck = std::move(x);
  if (!spec.skip)
    latent.skips.clear();
  return latent;
}

Tensor decode(const ArchitectureSpec &spec, const DecoderParams &psi, const LatentBundle &latent,
              DecoderTrace *trace) {
  check_fingerprint(spec, psi.fingerprint, "decoder");
  require(latent.bottleneck.rank() == 3 && latent.bottleneck.channels() == spec.channels.back(),
          "latent bottleneck has the wrong channel count");
  require(!spec.skip || latent.skips.size() == static_cast<std::size_t>(spec.depth - 1),
          "latent bundle must carry depth-1 skip features");
  const std::size_t p = spec.kernel_size / 2;
  const std::size_t levels = static_cast<std::size_t>(spec.depth);
  if (trace) {
    trace->padded_inputs.assign(levels + 1, Tensor{});
    trace->pre_activations.assign(levels, Tensor{});
  }
  Tensor d = latent.bottleneck;
  for (int l = spec.depth - 1; l >= 0; --l) {
    Tensor up = upsample2(d);
    if (spec.skip && l >= 1)
      up = concat_channels(up, latent.skips[static_cast<std::size_t>(l - 1)]);
    Tensor padded = pad(up, p);
    Tensor pre = conv_forward(psi.layers[static_cast<std::size_t>(l)], padded);
    d = activate(spec, pre);
    if (trace) {
      trace->padded_inputs[static_cast<std::size_t>(l)] = std::move(padded);
      trace->pre_activations[static_cast<std::size_t>(l)] = std::move(pre);
    }
  }
  Tensor out = conv_forward(psi.layers[levels], d);
  for (double &v : out.storage())
    v = 1.0 / (1.0 + std::exp(-v));
  if (trace) {
    trace->padded_inputs[levels] = std::move(d);
    trace->output = out;
  }
  return out;
}

Tensor forward_pass(const ArchitectureSpec &spec, const EncoderParams &phi, const DecoderParams &psi, const Tensor &z) {
  return decode(spec, psi, encode(spec, phi, z));
}

void decode_backward(const ArchitectureSpec &spec, const DecoderParams &psi, const DecoderTrace &trace,
                     const Tensor &grad_output, DecoderParams &grad_psi, LatentBundle *grad_latent) {
  require(grad_output.same_shape(trace.output), "decoder output gradient has the wrong shape");
  const std::size_t levels = static_cast<std::size_t>(spec.depth);
  Tensor g(grad_output.shape());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double o = trace.output[i];
    g[i] = grad_output[i] * o * (1.0 - o);
  }
  Tensor gd;
  conv_backward(psi.layers[levels], trace.padded_inputs[levels], g, grad_psi.layers[levels], &gd);

  if (grad_latent) {
    grad_latent->skips.assign(spec.skip ? levels - 1 : 0, Tensor{});
  }
  for (std::size_t l = 0; l < levels; ++l) {
    activate_backward(spec, trace.pre_activations[l], gd);
    const bool need_input = l + 1 < levels || grad_latent != nullptr;
    Tensor gcat;
    conv_backward(psi.layers[l], trace.padded_inputs[l], gd, grad_psi.layers[l], need_input ? &gcat : nullptr);
    if (!need_input)
      break;
    const std::size_t up_channels = spec.channels[std::min(l + 1, levels - 1)];
    const std::size_t plane = gcat.height() * gcat.width();
    Tensor gup({up_channels, gcat.height(), gcat.width()});
    std::memcpy(gup.data(), gcat.data(), gup.size() * sizeof(double));
    if (spec.skip && l >= 1 && grad_latent) {
      const std::size_t sc = gcat.channels() - up_channels;
      Tensor gs({sc, gcat.height(), gcat.width()});
      std::memcpy(gs.data(), gcat.data() + up_channels * plane, gs.size() * sizeof(double));
      grad_latent->skips[l - 1] = std::move(gs);
    }
    gd = upsample2_backward(gup);
  }
  if (grad_latent)
    grad_latent->bottleneck = std::move(gd);
}

void encode_backward(const ArchitectureSpec &spec, const EncoderParams &phi, const EncoderTrace &trace,
                     const LatentBundle &grad_latent, EncoderParams *grad_phi, Tensor *grad_z) {
  if (grad_phi == nullptr && grad_z == nullptr)
    return;
  EncoderParams scratch;
  if (grad_phi == nullptr) {
    scratch = zeros_like(phi);
    grad_phi = &scratch;
  }
  Tensor g = grad_latent.bottleneck;
  for (int l = spec.depth - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    if (l < spec.depth - 1 && li < grad_latent.skips.size() && !grad_latent.skips[li].empty())
      g += grad_latent.skips[li];
    Tensor gh = avg_pool2_backward(g);
    activate_backward(spec, trace.pre_activations[li], gh);
    const bool need_input = l > 0 || grad_z != nullptr;
    Tensor gin;
    conv_backward(phi.layers[li], trace.padded_inputs[li], gh, grad_phi->layers[li], need_input ? &gin : nullptr);
    g = std::move(gin);
  }
  if (grad_z)
    *grad_z = std::move(g);
}

} // namespace ugodit
