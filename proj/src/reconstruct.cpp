#include "ugodit/reconstruct.hpp"

#include <chrono>
#include <stdexcept>

#include "ugodit/error.hpp"

namespace ugodit {

std::string to_string(ReconMode mode) {
  switch (mode) {
  case ReconMode::frozen:
    return "frozen";
  case ReconMode::warmstart:
    return "warmstart";
  case ReconMode::scratch:
    return "scratch";
  case ReconMode::vanilla:
    return "vanilla";
  }
  return "unknown";
}

ReconMode parse_recon_mode(const std::string &name) {
  for (ReconMode m : {ReconMode::frozen, ReconMode::warmstart, ReconMode::scratch, ReconMode::vanilla})
    if (to_string(m) == name)
      return m;
  throw ConfigError("unknown reconstruction mode '" + name + "' (expected frozen, warmstart, scratch or vanilla)");
}

ReconResult reconstruct(const ReconRequest &req) {
  const auto start = std::chrono::steady_clock::now();
  const ArchitectureSpec &spec = req.spec;
  const SolverConfig &cfg = req.config;
  spec.validate();
  cfg.validate();
  require(req.y.operator_id == req.op.id(), "measurement was produced by operator '" + req.y.operator_id +
                                                "', not '" + req.op.id() + "'");
  const Shape image = req.op.image_shape(req.y.y.shape());
  require(image[0] == spec.in_channels && image[0] == spec.out_channels,
          "architecture channels do not match the image layout " + shape_string(image));
  spec.validate_input(image[1], image[2]);

  const bool uses_encoder = req.mode == ReconMode::frozen || req.mode == ReconMode::warmstart;
  if (uses_encoder && !req.encoder)
    throw ContractError(to_string(req.mode) + " reconstruction needs a pre-trained encoder");
  if (uses_encoder && req.encoder->fingerprint != spec.fingerprint())
    throw ArchitectureError("encoder fingerprint " + std::to_string(req.encoder->fingerprint) +
                            " does not match architecture " + spec.canonical());

  detail::EngineSetup s;
  s.spec = &spec;
  s.phi = uses_encoder ? *req.encoder : init_encoder(spec, cfg.sigma_ini, cfg.seed, cfg.sigma_ini_auto);
  s.train_encoder = req.mode != ReconMode::frozen;
  s.decoders.push_back(init_decoder(spec, cfg.sigma_ini, cfg.seed, 0, cfg.sigma_ini_auto));
  s.beta = cfg.beta;
  s.order = cfg.update_order;
  s.log_metrics = cfg.log_metrics;
  s.check_invariants = cfg.check_invariants;
  s.context = to_string(req.mode) + " reconstruction";
  if (req.mode == ReconMode::vanilla) {
    s.lambda = 0.0;
    s.update_inputs = false;
    s.rounds = 1;
    s.steps_per_round = cfg.K * cfg.N;
  } else {
    s.lambda = cfg.lambda;
    s.update_inputs = true;
    s.rounds = cfg.K;
    s.steps_per_round = cfg.N;
  }

  detail::EngineItem item;
  item.op = &req.op;
  item.y = &req.y.y;
  item.z = apply_adjoint(req.op, req.y);
  item.truth = req.x_star ? &*req.x_star : nullptr;
  item.trace = MetricTrace(req.run_id, TraceRole::test);
  s.items.push_back(std::move(item));

  const std::uint64_t phi_before = params_checksum(s.phi);
  detail::run_alternating(s);
  if (req.mode == ReconMode::frozen && params_checksum(s.phi) != phi_before)
    throw std::logic_error("frozen encoder weights changed during reconstruction");

  ReconResult r;
  auto &done = s.items.front();
  // final_z is the input of the last forward pass, so x_hat = g(h(final_z)).
  if (s.update_inputs) {
    r.x_hat = std::move(done.z);
    r.final_z = std::move(done.last_input);
  } else {
    r.final_z = std::move(done.z);
    r.x_hat = forward_pass(spec, s.phi, s.decoders.front(), r.final_z);
  }
  if (max_abs_diff(forward_pass(spec, s.phi, s.decoders.front(), r.final_z), r.x_hat) != 0.0)
    throw std::logic_error("reconstruction is not the final forward pass");
  r.trace = std::move(done.trace);
  r.final_psi = std::move(s.decoders.front());
  r.final_phi = std::move(s.phi);
  r.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::map<ReconMode, ReconResult> compare_modes(const Measurement &y, const ForwardOperator &op,
                                               const EncoderParams &encoder, const ArchitectureSpec &spec,
                                               const SolverConfig &config, const std::optional<GuardedImage> &x_star) {
  std::map<ReconMode, ReconResult> out;
  for (ReconMode m : {ReconMode::frozen, ReconMode::warmstart, ReconMode::scratch}) {
    ReconRequest req{y, op, m, encoder, spec, config, x_star, to_string(m)};
    out.emplace(m, reconstruct(req));
  }
  return out;
}

} // namespace ugodit
