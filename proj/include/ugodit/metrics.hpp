#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ugodit/network.hpp"
#include "ugodit/operators.hpp"
#include "ugodit/tensor.hpp"

namespace ugodit {

// PSNR cap reported for identical images.
inline constexpr double kPsnrCapDb = 99.0;

// 10 log10(peak^2 / MSE) with peak = max(x_star); 99 dB when MSE is zero.
double psnr(const Tensor &x_hat, const Tensor &x_star);

// Mean SSIM over all fully contained 11x11 Gaussian (sigma 1.5) windows and
// channels, K1 = 0.01, K2 = 0.03, data range = max(x_star).
double ssim(const Tensor &x_hat, const Tensor &x_star);

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

// |re + i im| of a 2-channel complex image, as a 1-channel image.
Tensor to_magnitude(const Tensor &complex_image);

struct ImageQuality {
  double psnr_db = 0.0;
  double ssim = 0.0;
};

// PSNR/SSIM in the task's convention: MRI compares magnitude images.
ImageQuality evaluate_quality(OperatorKind kind, const Tensor &x_hat, const Tensor &x_star);
double task_psnr(OperatorKind kind, const Tensor &x_hat, const Tensor &x_star);

// ---------------------------------------------------------------------------
// Low-frequency magnitude ratio

struct FeatureSpectrum {
  Tensor magnitudes; // (channels, H, W), zero frequency at (H/2, W/2)
  double center_fraction = 0.25;
};

FeatureSpectrum feature_spectrum(const Tensor &features, double center_fraction = 0.25);

// Fraction of Fourier magnitude mass inside the centered square covering
// center_fraction of each frequency axis.
double lf_ratio(const FeatureSpectrum &spectrum);

struct ProbeEntry {
  std::string layer;
  double lf_ratio = 0.0;
};

// One entry per encoder level (activations before pooling, shallow to deep)
// followed by the decoder output.
std::vector<ProbeEntry> spectral_probe(const ArchitectureSpec &spec, const EncoderParams &phi,
                                       const DecoderParams &psi, const Tensor &z, double center_fraction = 0.25);

// ---------------------------------------------------------------------------
// Traces

struct TraceRow {
  long iteration = 0;
  double data_fit = 0.0;
  double autoenc = 0.0; // lambda-weighted autoencoding term
  std::optional<double> psnr_db;
  std::optional<double> ssim;
  bool round_end = false; // last gradient step before an input update
  bool operator==(const TraceRow &) const = default;
};

enum class TraceRole { train, test };

class MetricTrace {
public:
  MetricTrace() = default;
  MetricTrace(std::string run_id, TraceRole role) : run_id_(std::move(run_id)), role_(role) {}

  // Throws ContractError unless iteration exceeds the last row's and all
  // values are finite.
  void append(const TraceRow &row);
  TraceRow &back() { return rows_.back(); }

  const std::vector<TraceRow> &rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  const std::string &run_id() const { return run_id_; }
  TraceRole role() const { return role_; }

  // The last row of every round.
  std::vector<TraceRow> round_rows() const;

  bool operator==(const MetricTrace &) const = default;

private:
  std::string run_id_;
  TraceRole role_ = TraceRole::test;
  std::vector<TraceRow> rows_;
};

std::string to_string(TraceRole role);

} // namespace ugodit
