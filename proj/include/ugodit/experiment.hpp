#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ugodit/config.hpp"
#include "ugodit/metrics.hpp"
#include "ugodit/operators.hpp"
#include "ugodit/optimization.hpp"

namespace ugodit {

// Trace CSV: iteration,data_fit,autoenc,psnr_db,ssim,round_end with empty
// cells for missing metrics. Values use %.17g so reading back is lossless.
void write_trace_csv(const std::filesystem::path &path, const MetricTrace &trace);
MetricTrace read_trace_csv(const std::filesystem::path &path, const std::string &run_id, TraceRole role);

struct MetricsRow {
  std::string run_id;
  std::string mode;
  std::string image_id;
  long iteration = 0;
  double data_fit = 0.0;
  double autoenc = 0.0;
  std::optional<double> psnr_db;
  std::optional<double> ssim;
};
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path &path);

struct SummaryRow {
  std::string mode;
  double psnr_mean = 0.0, psnr_std = 0.0;
  double ssim_mean = 0.0, ssim_std = 0.0;
  double wall_time_mean = 0.0;
};
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path &path);

// Everything an experiment needs besides the optimizers: images, operator,
// measurements. Deterministic in the configuration's seeds.
struct ExperimentData {
  ForwardOperator op;
  std::vector<Tensor> train_images;
  std::vector<Measurement> train_measurements;
  std::vector<Tensor> test_images;
  std::vector<Measurement> test_measurements;
};
ExperimentData prepare_data(const ExperimentConfig &config);
ForwardOperator build_operator(const ExperimentConfig &config);

enum class Stages { train_only, full };

// Output layout under the run directory:
//   manifest.yaml          resolved configuration and seeds
//   encoder.ugck           trained encoder (unless run.checkpoint_path moves it)
//   metrics.csv            one row per round per (test image, mode)
//   summary.csv            mean / std of final PSNR, SSIM and wall time per mode
//   traces/*.csv           every logged step of every run
//   curves.png, images/    plots regenerated from the CSVs by `plot`
std::filesystem::path run_experiment(const ExperimentConfig &config, Stages stages = Stages::full);

// Regenerates curves.png (mean PSNR per round and mode) from metrics.csv.
void plot_run(const std::filesystem::path &run_dir);

enum class SweepAxis { M, depth, NK, lambda };
SweepAxis parse_sweep_axis(const std::string &name);
std::string to_string(SweepAxis axis);

// Applies one sweep value ("6", "3", "10x2000", "0.1") to a copy of base.
ExperimentConfig sweep_variant(const ExperimentConfig &base, SweepAxis axis, const std::string &value);

// One run_experiment per value under <output_dir>/sweep-<axis>/<axis>=<value>,
// then sweep_summary.csv (one row per value and mode) and sweep_curves.png.
std::filesystem::path run_sweep(const ExperimentConfig &base, SweepAxis axis, const std::vector<std::string> &values);

// Writes probe.csv (layer, lf_ratio) for the encoder in the checkpoint on
// test image `image`, after a frozen-mode reconstruction of that image.
std::filesystem::path run_probe(const ExperimentConfig &config, const std::filesystem::path &checkpoint,
                                std::size_t image, double center_fraction);

} // namespace ugodit
