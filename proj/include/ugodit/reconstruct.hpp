#pragma once

#include <map>
#include <optional>
#include <string>

#include "ugodit/metrics.hpp"
#include "ugodit/network.hpp"
#include "ugodit/operators.hpp"
#include "ugodit/optimization.hpp"

namespace ugodit {

enum class ReconMode { frozen, warmstart, scratch, vanilla };

std::string to_string(ReconMode mode);
ReconMode parse_recon_mode(const std::string &name);

struct ReconRequest {
  Measurement y;
  ForwardOperator op;
  ReconMode mode = ReconMode::frozen;
  std::optional<EncoderParams> encoder; // required for frozen and warmstart
  ArchitectureSpec spec;
  SolverConfig config;
  std::optional<GuardedImage> x_star; // metric logging only
  std::string run_id = "recon";
};

struct ReconResult {
  Tensor x_hat;
  MetricTrace trace;
  DecoderParams final_psi;
  EncoderParams final_phi;
  Tensor final_z;
  double wall_time_seconds = 0.0;
};

// Test-time solve for one measurement.
//   frozen     encoder fixed at the supplied weights, decoder and input adapt
//   warmstart  encoder starts from the supplied weights and is optimized too
//   scratch    encoder and decoder both randomly initialized
//   vanilla    fixed input A^H y, lambda = 0, K*N plain steps
ReconResult reconstruct(const ReconRequest &request);

// Runs frozen, warmstart and scratch with the same seed and budget.
std::map<ReconMode, ReconResult> compare_modes(const Measurement &y, const ForwardOperator &op,
                                               const EncoderParams &encoder, const ArchitectureSpec &spec,
                                               const SolverConfig &config,
                                               const std::optional<GuardedImage> &x_star = std::nullopt);

} // namespace ugodit
