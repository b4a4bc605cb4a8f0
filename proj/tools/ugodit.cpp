// Command-line front end: train, reconstruct, sweep, probe, plot.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ugodit/error.hpp"
#include "ugodit/experiment.hpp"
#include "ugodit/persistence.hpp"

namespace {

// Flags that mirror frequently used configuration keys. Each one becomes a
// "key=value" override applied on top of --config.
struct CommonFlags {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::string> task, output_dir, checkpoint, modes;
  std::optional<int> K, N;
  std::optional<double> lambda, beta, noise;
  std::optional<std::size_t> train_count, test_count, image_size;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App *app) {
    app->add_option("-c,--config", config, "YAML experiment configuration");
    app->add_option("--set", overrides, "Override a configuration key, e.g. --set solver.K=200");
    app->add_option("--task", task, "mri, sr or ndb");
    app->add_option("--output-dir", output_dir, "Run directory (relative paths go under $UGODIT_OUTPUT_ROOT)");
    app->add_option("--checkpoint", checkpoint, "Encoder checkpoint path");
    app->add_option("--modes", modes, "Comma-separated reconstruction modes");
    app->add_option("--K", K, "Input-update rounds");
    app->add_option("--N", N, "Gradient steps per round");
    app->add_option("--lambda", lambda, "Autoencoding weight");
    app->add_option("--beta", beta, "Learning rate");
    app->add_option("--noise", noise, "Measurement noise standard deviation");
    app->add_option("--M", train_count, "Number of training measurements");
    app->add_option("--tests", test_count, "Number of test images");
    app->add_option("--size", image_size, "Image size");
    app->add_option("--seed", seed, "Master seed");
  }

  ugodit::ExperimentConfig load() const {
    std::vector<std::string> all;
    auto add = [&](const std::string &key, const auto &v) {
      if (v)
        all.push_back(key + "=" + to_text(*v));
    };
    add("task", task);
    add("run.output_dir", output_dir);
    add("run.checkpoint_path", checkpoint);
    if (modes)
      all.push_back("run.modes=[" + *modes + "]");
    add("solver.K", K);
    add("solver.N", N);
    add("solver.lambda", lambda);
    add("solver.beta", beta);
    add("operator.noise_sigma", noise);
    add("data.train_count", train_count);
    add("data.test_count", test_count);
    add("data.image_size", image_size);
    add("seed", seed);
    all.insert(all.end(), overrides.begin(), overrides.end());
    return config.empty() ? ugodit::parse_config("", all) : ugodit::load_config(config, all);
  }

  static std::string to_text(const std::string &s) { return s; }
  template <class T> static std::string to_text(const T &v) {
    if constexpr (std::is_floating_point_v<T>) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return buf;
    } else {
      return std::to_string(v);
    }
  }
};

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Shared-encoder deep image prior: group training and test-time reconstruction"};
  app.require_subcommand(1);

  CommonFlags train_flags, recon_flags, sweep_flags, probe_flags;
  auto *train = app.add_subcommand("train", "Train the shared encoder and write a checkpoint");
  train_flags.attach(train);

  auto *recon = app.add_subcommand("reconstruct", "Run the full experiment: train (or load) and reconstruct tests");
  recon_flags.attach(recon);
  bool use_checkpoint = false;
  recon->add_flag("--from-checkpoint", use_checkpoint, "Load the encoder from --checkpoint instead of training");

  auto *sweep = app.add_subcommand("sweep", "Repeat the experiment over one axis");
  sweep_flags.attach(sweep);
  std::string axis;
  std::vector<std::string> values;
  sweep->add_option("--axis", axis, "M, depth, NK or lambda")->required();
  sweep->add_option("--values", values, "Axis values (NK values look like 10x2000)")->required()->delimiter(',');

  auto *probe = app.add_subcommand("probe", "Low-frequency magnitude ratio per layer");
  probe_flags.attach(probe);
  std::size_t probe_image = 0;
  double center_fraction = 0.25;
  probe->add_option("--image", probe_image, "Test image index");
  probe->add_option("--center-fraction", center_fraction, "Side of the low-frequency square, per axis");

  auto *plot = app.add_subcommand("plot", "Regenerate curve plots from a run directory's CSVs");
  std::string run_dir;
  plot->add_option("run_dir", run_dir, "Run directory containing metrics.csv")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      auto cfg = train_flags.load();
      const auto dir = ugodit::run_experiment(cfg, ugodit::Stages::train_only);
      std::cout << "checkpoint: " << cfg.checkpoint_file().string() << "\nrun directory: " << dir.string() << "\n";
    } else if (*recon) {
      if (use_checkpoint)
        recon_flags.overrides.push_back("run.train=false");
      const auto dir = ugodit::run_experiment(recon_flags.load());
      for (const auto &s : ugodit::read_summary_csv(dir / "summary.csv"))
        std::printf("%-14s PSNR %6.2f +- %5.2f dB  SSIM %.4f +- %.4f  %.1f s\n", s.mode.c_str(), s.psnr_mean,
                    s.psnr_std, s.ssim_mean, s.ssim_std, s.wall_time_mean);
      std::cout << "run directory: " << dir.string() << "\n";
    } else if (*sweep) {
      const auto dir = ugodit::run_sweep(sweep_flags.load(), ugodit::parse_sweep_axis(axis), values);
      std::cout << "sweep directory: " << dir.string() << "\n";
    } else if (*probe) {
      auto cfg = probe_flags.load();
      const auto csv = ugodit::run_probe(cfg, cfg.checkpoint_file(), probe_image, center_fraction);
      std::cout << "probe: " << csv.string() << "\n";
    } else if (*plot) {
      ugodit::plot_run(run_dir);
      std::cout << "wrote " << (std::filesystem::path(run_dir) / "curves.png").string() << "\n";
    }
  } catch (const ugodit::ConfigError &e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const ugodit::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
