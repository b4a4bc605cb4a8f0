#include "ugodit/trainer.hpp"

#include <chrono>

#include "ugodit/error.hpp"

namespace ugodit {

namespace {

void check_set(const ArchitectureSpec &spec, const TrainingSet &set) {
  require(!set.items.empty(), "training set is empty");
  const Shape shape = set.items.front().op.image_shape(set.items.front().y.y.shape());
  for (const auto &item : set.items) {
    const Shape s = item.op.image_shape(item.y.y.shape());
    require(s == shape, "training images must share dimensions: " + shape_string(s) + " vs " + shape_string(shape));
  }
  require(shape[0] == spec.in_channels && shape[0] == spec.out_channels,
          "architecture channels do not match the image layout " + shape_string(shape));
  spec.validate_input(shape[1], shape[2]);
}

void check_model(const GroupModel &model, const TrainingSet &set) {
  require(model.zs.size() == set.size(), "group model has " + std::to_string(model.zs.size()) + " inputs for " +
                                             std::to_string(set.size()) + " items");
  require(model.psis.size() == set.size() || model.psis.size() == 1, "group model decoder count does not match M");
}

TrainResult run_training(const TrainingSet &set, const ArchitectureSpec &spec, const SolverConfig &config,
                         bool shared_decoder) {
  spec.validate();
  config.validate();
  check_set(spec, set);
  const auto start = std::chrono::steady_clock::now();

  const std::size_t decoders = shared_decoder ? 1 : set.size();
  GroupModel model = initial_group_model(spec, set, config, decoders);

  detail::EngineSetup s;
  s.spec = &spec;
  s.phi = std::move(model.phi);
  s.train_encoder = true;
  s.decoders = std::move(model.psis);
  s.lambda = config.lambda;
  s.update_inputs = true;
  s.rounds = config.K;
  s.steps_per_round = config.N;
  s.beta = config.beta;
  s.order = config.update_order;
  s.log_metrics = config.log_metrics;
  s.check_invariants = config.check_invariants;
  s.context = shared_decoder ? "shared-decoder training" : "group training";
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto &item = set.items[i];
    detail::EngineItem e;
    e.op = &item.op;
    e.y = &item.y.y;
    e.z = std::move(model.zs[i]);
    e.decoder = shared_decoder ? 0 : i;
    e.truth = item.x_star ? &*item.x_star : nullptr;
    e.trace = MetricTrace("train-" + std::to_string(i), TraceRole::train);
    s.items.push_back(std::move(e));
  }

  detail::run_alternating(s);

  TrainResult result;
  result.phi_hat = std::move(s.phi);
  round_to_float32(result.phi_hat);
  result.psis = std::move(s.decoders);
  for (auto &item : s.items) {
    result.traces.push_back(std::move(item.trace));
    result.final_zs.push_back(std::move(item.z));
  }
  result.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

} // namespace

GroupModel initial_group_model(const ArchitectureSpec &spec, const TrainingSet &set, const SolverConfig &config,
                               std::size_t decoder_count) {
  GroupModel model;
  model.phi = init_encoder(spec, config.sigma_ini, config.seed, config.sigma_ini_auto);
  for (std::size_t d = 0; d < decoder_count; ++d)
    model.psis.push_back(init_decoder(spec, config.sigma_ini, config.seed, d, config.sigma_ini_auto));
  for (const auto &item : set.items)
    model.zs.push_back(apply_adjoint(item.op, item.y));
  return model;
}

ObjectiveValue group_objective(const ArchitectureSpec &spec, const GroupModel &model, const TrainingSet &set,
                               double lambda) {
  check_model(model, set);
  ObjectiveValue v;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto &psi = model.psis.size() == 1 ? model.psis[0] : model.psis[i];
    const ItemLoss l = item_loss(spec, model.phi, psi, set.items[i].op, set.items[i].y.y, model.zs[i], lambda);
    v.items.push_back(l);
    v.total += l.total();
  }
  return v;
}

ObjectiveGradient group_objective_gradient(const ArchitectureSpec &spec, const GroupModel &model,
                                           const TrainingSet &set, double lambda) {
  check_model(model, set);
  ObjectiveGradient g;
  g.phi = zeros_like(model.phi);
  for (const auto &psi : model.psis)
    g.psis.push_back(zeros_like(psi));
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::size_t d = model.psis.size() == 1 ? 0 : i;
    Tensor gz;
    const ItemLoss l = item_loss_and_gradient(spec, model.phi, model.psis[d], set.items[i].op, set.items[i].y.y,
                                              model.zs[i], lambda, &g.psis[d], &g.phi, &gz);
    g.zs.push_back(std::move(gz));
    g.value.items.push_back(l);
    g.value.total += l.total();
  }
  return g;
}

TrainResult train_group(const TrainingSet &set, const ArchitectureSpec &spec, const SolverConfig &config) {
  return run_training(set, spec, config, false);
}

TrainResult train_shared_decoder(const TrainingSet &set, const ArchitectureSpec &spec, const SolverConfig &config) {
  return run_training(set, spec, config, true);
}

} // namespace ugodit
