#pragma once

#include <optional>
#include <vector>

#include "ugodit/metrics.hpp"
#include "ugodit/network.hpp"
#include "ugodit/operators.hpp"
#include "ugodit/optimization.hpp"

namespace ugodit {

struct TrainingItem {
  Measurement y;
  ForwardOperator op;
  std::optional<GuardedImage> x_star; // metric logging only
};

struct TrainingSet {
  std::vector<TrainingItem> items;
  std::size_t size() const { return items.size(); }
};

// Shared encoder, one decoder and one evolving input per training item.
struct GroupModel {
  EncoderParams phi;
  std::vector<DecoderParams> psis;
  std::vector<Tensor> zs;
};

struct ObjectiveValue {
  double total = 0.0;
  std::vector<ItemLoss> items;
};

struct ObjectiveGradient {
  ObjectiveValue value;
  EncoderParams phi;
  std::vector<DecoderParams> psis;
  std::vector<Tensor> zs;
};

// sum_i ||A_i g_i(h(z_i)) - y_i||^2 + lambda ||g_i(h(z_i)) - z_i||^2.
ObjectiveValue group_objective(const ArchitectureSpec &spec, const GroupModel &model, const TrainingSet &set,
                               double lambda);
ObjectiveGradient group_objective_gradient(const ArchitectureSpec &spec, const GroupModel &model,
                                           const TrainingSet &set, double lambda);

// Initial model: z_i = A_i^H y_i, encoder and decoders from config.seed.
GroupModel initial_group_model(const ArchitectureSpec &spec, const TrainingSet &set, const SolverConfig &config,
                               std::size_t decoder_count);

struct TrainResult {
  EncoderParams phi_hat; // rounded to float32, the checkpoint precision
  std::vector<DecoderParams> psis;
  std::vector<MetricTrace> traces; // one per item, K*N rows each
  std::vector<Tensor> final_zs;
  double wall_time_seconds = 0.0;
};

// Shared encoder with one disentangled decoder per item.
TrainResult train_group(const TrainingSet &set, const ArchitectureSpec &spec, const SolverConfig &config);

// Baseline: one decoder shared by every item; inputs stay per item.
TrainResult train_shared_decoder(const TrainingSet &set, const ArchitectureSpec &spec, const SolverConfig &config);

} // namespace ugodit
