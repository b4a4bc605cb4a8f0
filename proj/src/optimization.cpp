#include "ugodit/optimization.hpp"

#include <cmath>
#include <stdexcept>

#include "ugodit/adam.hpp"
#include "ugodit/error.hpp"

namespace ugodit {

std::string to_string(UpdateOrder order) {
  return order == UpdateOrder::simultaneous ? "simultaneous" : "sequential";
}

UpdateOrder parse_update_order(const std::string &name) {
  if (name == "simultaneous")
    return UpdateOrder::simultaneous;
  if (name == "sequential")
    return UpdateOrder::sequential;
  throw ConfigError("unknown update order '" + name + "' (expected simultaneous or sequential)");
}

void SolverConfig::validate() const {
  if (K < 1)
    throw ConfigError("solver.K must be >= 1");
  if (N < 1)
    throw ConfigError("solver.N must be >= 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ConfigError("solver.lambda must be >= 0");
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw ConfigError("solver.beta must be > 0");
  if (!(sigma_ini >= 0.0))
    throw ConfigError("solver.sigma_ini must be >= 0");
}

GuardedImage::GuardedImage(Tensor image) : state_(std::make_shared<State>()) { state_->image = std::move(image); }

const Tensor &GuardedImage::for_metrics() const {
  ++state_->metric_reads;
  return state_->image;
}

const Tensor &GuardedImage::read() const {
  ++state_->reads;
  return state_->image;
}

ItemLoss item_loss_and_gradient(const ArchitectureSpec &spec, const EncoderParams &phi, const DecoderParams &psi,
                                const ForwardOperator &op, const Tensor &y, const Tensor &z, double lambda,
                                DecoderParams *grad_psi, EncoderParams *grad_phi, Tensor *grad_z) {
  const bool need_encoder = grad_phi != nullptr || grad_z != nullptr;
  EncoderTrace et;
  const LatentBundle latent = encode(spec, phi, z, need_encoder ? &et : nullptr);
  DecoderTrace dt;
  const Tensor out = decode(spec, psi, latent, &dt);

  Tensor residual = op.apply(out);
  require(residual.same_shape(y), "measurement shape " + shape_string(y.shape()) + " does not match operator output " +
                                      shape_string(residual.shape()));
  residual -= y;
  ItemLoss loss;
  loss.data_fit = squared_norm(residual);
  Tensor diff = out - z;
  loss.autoenc = lambda * squared_norm(diff);

  if (grad_psi == nullptr && !need_encoder)
    return loss;

  Tensor grad_out = op.pullback(out, residual);
  grad_out *= 2.0;
  for (std::size_t i = 0; i < grad_out.size(); ++i)
    grad_out[i] += 2.0 * lambda * diff[i];

  DecoderParams scratch;
  if (grad_psi == nullptr) {
    scratch = zeros_like(psi);
    grad_psi = &scratch;
  }
  LatentBundle grad_latent;
  decode_backward(spec, psi, dt, grad_out, *grad_psi, need_encoder ? &grad_latent : nullptr);
  if (need_encoder)
    encode_backward(spec, phi, et, grad_latent, grad_phi, grad_z);
  if (grad_z) {
    for (std::size_t i = 0; i < grad_z->size(); ++i)
      (*grad_z)[i] -= 2.0 * lambda * diff[i];
  }
  return loss;
}

ItemLoss item_loss(const ArchitectureSpec &spec, const EncoderParams &phi, const DecoderParams &psi,
                   const ForwardOperator &op, const Tensor &y, const Tensor &z, double lambda) {
  return item_loss_and_gradient(spec, phi, psi, op, y, z, lambda, nullptr, nullptr, nullptr);
}

namespace detail {

namespace {

std::uint64_t inputs_checksum(const EngineSetup &s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto &item : s.items)
    h = checksum(item.z, h);
  return h;
}

std::uint64_t parameters_checksum(const EngineSetup &s) {
  std::uint64_t h = params_checksum(s.phi);
  for (const auto &d : s.decoders)
    h ^= params_checksum(d) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

void invariant(bool ok, const std::string &what) {
  if (!ok)
    throw std::logic_error("solver invariant violated: " + what);
}

} // namespace

void run_alternating(EngineSetup &s) {
  require(s.spec != nullptr, "engine needs an architecture");
  require(!s.items.empty(), s.context + ": nothing to optimize");
  require(!s.decoders.empty(), s.context + ": no decoders");
  for (const auto &item : s.items)
    require(item.decoder < s.decoders.size(), s.context + ": item refers to a missing decoder");
  const ArchitectureSpec &spec = *s.spec;

  Adam encoder_opt(s.beta);
  std::vector<Adam> decoder_opts(s.decoders.size(), Adam(s.beta));
  long iteration = 0;

  for (int round = 1; round <= s.rounds; ++round) {
    const std::uint64_t z_before = s.check_invariants ? inputs_checksum(s) : 0;

    for (int step = 1; step <= s.steps_per_round; ++step) {
      ++iteration;
      std::vector<DecoderParams> grad_psi;
      grad_psi.reserve(s.decoders.size());
      for (const auto &d : s.decoders)
        grad_psi.push_back(zeros_like(d));
      EncoderParams grad_phi;
      const bool phi_in_first_pass = s.train_encoder && s.order == UpdateOrder::simultaneous;
      if (phi_in_first_pass)
        grad_phi = zeros_like(s.phi);

      for (auto &item : s.items) {
        const ItemLoss loss =
            item_loss_and_gradient(spec, s.phi, s.decoders[item.decoder], *item.op, *item.y, item.z, s.lambda,
                                   &grad_psi[item.decoder], phi_in_first_pass ? &grad_phi : nullptr, nullptr);
        if (!std::isfinite(loss.total()))
          throw DivergenceError(s.context + ": non-finite loss in round " + std::to_string(round) + " (step " +
                                std::to_string(iteration) + ")");
        TraceRow row;
        row.iteration = iteration;
        row.data_fit = loss.data_fit;
        row.autoenc = loss.autoenc;
        row.round_end = step == s.steps_per_round;
        item.trace.append(row);
      }

      for (std::size_t d = 0; d < s.decoders.size(); ++d)
        decoder_opts[d].step(s.decoders[d], grad_psi[d]);

      if (s.train_encoder) {
        if (!phi_in_first_pass) {
          grad_phi = zeros_like(s.phi);
          for (auto &item : s.items) {
            DecoderParams unused = zeros_like(s.decoders[item.decoder]);
            item_loss_and_gradient(spec, s.phi, s.decoders[item.decoder], *item.op, *item.y, item.z, s.lambda,
                                   &unused, &grad_phi, nullptr);
          }
        }
        encoder_opt.step(s.phi, grad_phi);
      }
    }

    if (s.check_invariants)
      invariant(inputs_checksum(s) == z_before, "a parameter step modified the network inputs");
    const std::uint64_t params_before = s.check_invariants ? parameters_checksum(s) : 0;

    for (auto &item : s.items) {
      const bool want_metrics = s.log_metrics && item.truth != nullptr;
      if (!s.update_inputs && !want_metrics)
        continue;
      Tensor estimate = forward_pass(spec, s.phi, s.decoders[item.decoder], item.z);
      if (want_metrics) {
        const ImageQuality q = evaluate_quality(item.op->kind(), estimate, item.truth->for_metrics());
        item.trace.back().psnr_db = q.psnr_db;
        item.trace.back().ssim = q.ssim;
      }
      if (s.update_inputs) {
        item.last_input = std::move(item.z);
        item.z = std::move(estimate);
      }
    }

    if (s.check_invariants)
      invariant(parameters_checksum(s) == params_before, "an input update modified the parameters");
  }
}

} // namespace detail

} // namespace ugodit
