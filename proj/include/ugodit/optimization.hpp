#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ugodit/metrics.hpp"
#include "ugodit/network.hpp"
#include "ugodit/operators.hpp"

namespace ugodit {

// simultaneous: every group's gradient is taken at the pre-step parameters
// and all groups step together. sequential: decoders step first, then the
// encoder gradient is re-evaluated at the updated decoders.
enum class UpdateOrder { simultaneous, sequential };

std::string to_string(UpdateOrder order);
UpdateOrder parse_update_order(const std::string &name);

struct SolverConfig {
  int K = 2000;         // input-update rounds
  int N = 2;            // gradient steps per round
  double lambda = 2.0;  // autoencoding weight
  double beta = 1e-4;   // learning rate
  double sigma_ini = 0.0;
  bool sigma_ini_auto = true; // fan-in scaled init; sigma_ini ignored
  std::uint64_t seed = 0;
  UpdateOrder update_order = UpdateOrder::simultaneous;
  bool log_metrics = true;       // PSNR/SSIM per round when ground truth exists
  bool check_invariants = false; // checksum parameters and inputs around each phase

  void validate() const;
};

// Ground-truth image with read accounting. Copies share counters, so a test
// can hand one to the solvers and inspect it afterwards.
class GuardedImage {
public:
  explicit GuardedImage(Tensor image);

  // Access reserved for metric logging.
  const Tensor &for_metrics() const;
  // Any other access; optimization code must never call this.
  const Tensor &read() const;

  std::size_t reads() const { return state_->reads.load(); }
  std::size_t metric_reads() const { return state_->metric_reads.load(); }
  const Shape &shape() const { return state_->image.shape(); }

private:
  struct State {
    Tensor image;
    std::atomic<std::size_t> reads{0};
    std::atomic<std::size_t> metric_reads{0};
  };
  std::shared_ptr<State> state_;
};

struct ItemLoss {
  double data_fit = 0.0; // ||A x - y||^2
  double autoenc = 0.0;  // lambda ||x - z||^2
  double total() const { return data_fit + autoenc; }
};

// Loss of one item at x = g_psi(h_phi(z)) and its gradients. grad_psi is
// accumulated; grad_phi / grad_z are optional (grad_z is the total
// derivative with respect to the network input, including the direct
// autoencoding term).
ItemLoss item_loss_and_gradient(const ArchitectureSpec &spec, const EncoderParams &phi, const DecoderParams &psi,
                                const ForwardOperator &op, const Tensor &y, const Tensor &z, double lambda,
                                DecoderParams *grad_psi, EncoderParams *grad_phi, Tensor *grad_z);

ItemLoss item_loss(const ArchitectureSpec &spec, const EncoderParams &phi, const DecoderParams &psi,
                   const ForwardOperator &op, const Tensor &y, const Tensor &z, double lambda);

namespace detail {

struct EngineItem {
  const ForwardOperator *op = nullptr;
  const Tensor *y = nullptr;
  Tensor z;
  Tensor last_input; // input of the most recent update pass
  std::size_t decoder = 0;
  const GuardedImage *truth = nullptr;
  MetricTrace trace;
};

struct EngineSetup {
  const ArchitectureSpec *spec = nullptr;
  EncoderParams phi;
  bool train_encoder = true;
  std::vector<DecoderParams> decoders;
  std::vector<EngineItem> items;
  double lambda = 0.0;
  bool update_inputs = true;
  int rounds = 1;
  int steps_per_round = 1;
  double beta = 1e-4;
  UpdateOrder order = UpdateOrder::simultaneous;
  bool log_metrics = true;
  bool check_invariants = false;
  std::string context;
};

// Alternating loop shared by training and test-time reconstruction: rounds
// of gradient steps on the parameters followed by z <- g(h(z)).
void run_alternating(EngineSetup &setup);

} // namespace detail

} // namespace ugodit
