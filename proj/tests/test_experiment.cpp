#include "doctest.h"

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "ugodit/error.hpp"
#include "ugodit/experiment.hpp"
#include "ugodit/persistence.hpp"

using namespace ugodit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny(const fs::path &out, const std::string &task = "sr") {
  return parse_config("task: " + task +
                          "\nseed: 4\n"
                          "data: {train_count: 2, test_count: 2, image_size: 16, family: " +
                          (task == "mri" ? std::string("ellipses") : std::string("texture")) +
                          "}\n"
                          "architecture: {depth: 2, channels: [4, 4]}\n"
                          "solver: {K: 2, N: 2, beta: 0.01}\n"
                          "run: {modes: [frozen, warmstart, scratch, vanilla, shared_frozen]}\n",
                      {"run.output_dir=" + out.string()});
}

} // namespace

TEST_CASE("trace CSV round trip is lossless") {
  testing::TempDir dir("trace");
  MetricTrace t("r", TraceRole::test);
  TraceRow a;
  a.iteration = 1;
  a.data_fit = 0.1 + 0.2;
  a.autoenc = 1.0 / 3.0;
  t.append(a);
  a.iteration = 2;
  a.psnr_db = 23.123456789012345;
  a.ssim = 0.7;
  a.round_end = true;
  t.append(a);
  write_trace_csv(dir.path / "t.csv", t);
  CHECK(read_trace_csv(dir.path / "t.csv", "r", TraceRole::test) == t);
}

TEST_CASE("a full experiment writes every artifact and reproduces metrics byte for byte") {
  testing::TempDir dir("experiment");
  const auto cfg = tiny(dir.path / "run");
  const fs::path run = run_experiment(cfg);
  for (const char *f : {"manifest.yaml", "encoder.ugck", "encoder.shared.ugck", "metrics.csv", "summary.csv",
                        "curves.png", "images/img0.png", "traces/train-group-0.csv", "traces/train-shared-1.csv",
                        "traces/scratch-img1.csv"})
    CHECK_MESSAGE(fs::exists(run / f), f);

  const auto rows = read_metrics_csv(run / "metrics.csv");
  CHECK(rows.size() == 5 * 2 * 2 - 2 * 1); // vanilla logs a single round
  const auto summary = read_summary_csv(run / "summary.csv");
  REQUIRE(summary.size() == 5);
  CHECK(summary[0].mode == "frozen");
  CHECK(summary[0].psnr_mean > 5.0);

  const auto manifest = load_config(run / "manifest.yaml", {"run.output_dir=" + (dir.path / "rerun").string()});
  const fs::path rerun = run_experiment(manifest);
  CHECK(slurp(rerun / "metrics.csv") == slurp(run / "metrics.csv"));
  CHECK(slurp(rerun / "encoder.ugck") == slurp(run / "encoder.ugck"));

  fs::remove(run / "curves.png");
  plot_run(run);
  CHECK(fs::exists(run / "curves.png"));
}

TEST_CASE("reconstruction from a saved checkpoint") {
  testing::TempDir dir("reload");
  auto cfg = tiny(dir.path / "train");
  cfg.run.modes = {"frozen"};
  run_experiment(cfg, Stages::train_only);
  CHECK_FALSE(fs::exists(dir.path / "train" / "metrics.csv"));

  auto load = cfg;
  load.run.train = false;
  load.run.checkpoint_path = cfg.checkpoint_file().string();
  load.run.output_dir = (dir.path / "load").string();
  const auto run = run_experiment(load);
  CHECK(read_summary_csv(run / "summary.csv").size() == 1);

  load.arch.channels = {4, 8};
  CHECK_THROWS_AS(run_experiment(load), ArchitectureError);
  load.run.modes = {"shared_frozen"};
  CHECK_THROWS_AS(run_experiment(load), ConfigError);
}

TEST_CASE("MRI data preparation is seeded and normalized") {
  testing::TempDir dir("mri");
  const auto cfg = tiny(dir.path, "mri");
  const auto a = prepare_data(cfg);
  const auto b = prepare_data(cfg);
  CHECK(a.train_measurements[0].y == b.train_measurements[0].y);
  CHECK(a.op.kind() == OperatorKind::mri);
  double peak = 0;
  const Tensor m = to_magnitude(a.test_images[0]);
  for (double v : m.storage())
    peak = std::max(peak, v);
  CHECK(peak == doctest::Approx(1.0));
  CHECK_FALSE(a.train_measurements[0].y == a.train_measurements[1].y);
}

TEST_CASE("sweeps and probes") {
  testing::TempDir dir("sweep");
  auto cfg = tiny(dir.path / "base");
  cfg.run.modes = {"frozen"};
  CHECK(sweep_variant(cfg, SweepAxis::NK, "3x5").solver.N == 3);
  CHECK(sweep_variant(cfg, SweepAxis::NK, "3x5").solver.K == 5);
  CHECK(sweep_variant(cfg, SweepAxis::M, "3").data.train_count == 3);
  CHECK(sweep_variant(cfg, SweepAxis::depth, "1").arch.channels.size() == 1);
  CHECK(sweep_variant(cfg, SweepAxis::lambda, "0.5").solver.lambda == 0.5);
  CHECK_THROWS_AS(sweep_variant(cfg, SweepAxis::NK, "3"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_axis("beta"), ConfigError);

  const auto out = run_sweep(cfg, SweepAxis::lambda, {"0", "2"});
  CHECK(fs::exists(out / "sweep_summary.csv"));
  CHECK(fs::exists(out / "sweep_curves.png"));
  CHECK(fs::exists(out / "lambda=2" / "summary.csv"));

  run_experiment(cfg, Stages::train_only);
  const auto probe = run_probe(cfg, cfg.checkpoint_file(), 1, 0.25);
  const std::string text = slurp(probe);
  CHECK(text.rfind("layer,lf_ratio\n", 0) == 0);
  CHECK(text.find("decoder_output") != std::string::npos);
  CHECK_THROWS_AS(run_probe(cfg, cfg.checkpoint_file(), 9, 0.25), ContractError);
}
