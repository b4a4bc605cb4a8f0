#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ugodit/data.hpp"
#include "ugodit/network.hpp"
#include "ugodit/operators.hpp"
#include "ugodit/optimization.hpp"

namespace ugodit {

// Every seeded stream of an experiment. Unless given explicitly (the
// manifest always does), each is derive_seed(master, <name>).
struct SeedPlan {
  std::uint64_t master = 0;
  std::uint64_t data_train = 0;
  std::uint64_t data_test = 0;
  std::uint64_t mask = 0;
  std::uint64_t maps = 0;
  std::uint64_t noise_train = 0; // item i uses derive_seed(noise_train, "item", i)
  std::uint64_t noise_test = 0;
  std::uint64_t init = 0;  // training initialization
  std::uint64_t recon = 0; // test image i uses derive_seed(recon, "image", i)

  static SeedPlan derive(std::uint64_t master);
  std::map<std::string, std::uint64_t> named() const;
};

struct DataConfig {
  std::string source = "synthetic"; // or "directory"
  PhantomFamily family = PhantomFamily::ellipses;
  std::optional<PhantomFamily> test_family; // defaults to family
  int complexity = 3;
  std::string directory;      // source = directory: training images
  std::string test_directory; // defaults to directory (images after the first M)
  std::size_t train_count = 4;
  std::size_t test_count = 5;
  std::size_t image_size = 64;
};

struct OperatorConfig {
  std::optional<int> acceleration;
  std::optional<double> acs_fraction;
  std::optional<std::size_t> coils;
  std::optional<std::size_t> sr_factor;
  std::optional<double> ndb_gamma;
  std::optional<double> ndb_sigma;
  std::optional<std::size_t> ndb_radius;
  double noise_sigma = 0.05;
};

struct RunConfig {
  std::vector<std::string> modes{"frozen"}; // frozen, warmstart, scratch, vanilla, shared_frozen
  std::string output_dir = "ugodit-run";
  std::string checkpoint_path; // empty: <output_dir>/encoder.ugck
  bool train = true;           // false: load checkpoint_path instead of training
  bool plots = true;
  std::optional<double> test_lambda; // test-time lambda; defaults to solver.lambda
};

struct ExperimentConfig {
  OperatorKind task = OperatorKind::mri;
  DataConfig data;
  OperatorConfig op;
  ArchitectureSpec arch;
  SolverConfig solver;
  RunConfig run;
  SeedPlan seeds;

  // Task-dependent operator parameters with their defaults filled in.
  int acceleration() const { return op.acceleration.value_or(4); }
  double acs_fraction() const { return op.acs_fraction.value_or(acceleration() >= 8 ? 0.04 : 0.08); }
  std::size_t coils() const { return op.coils.value_or(4); }
  std::size_t sr_factor() const { return op.sr_factor.value_or(4); }
  double ndb_gamma() const { return op.ndb_gamma.value_or(2.2); }
  double ndb_sigma() const { return op.ndb_sigma.value_or(2.0); }
  std::size_t ndb_radius() const { return op.ndb_radius.value_or(6); }
  double test_lambda() const { return run.test_lambda.value_or(solver.lambda); }
  std::filesystem::path checkpoint_file() const;

  // Throws ConfigError naming the offending key.
  void validate() const;
  // Resolved configuration plus the seeds section, loadable by parse_config.
  std::string to_yaml() const;
};

// Parses YAML text. Unknown keys, wrong types and task-inconsistent fields
// raise ConfigError naming the key. `overrides` are "dotted.key=value" pairs
// applied before parsing (the value is read as YAML).
ExperimentConfig parse_config(const std::string &yaml_text, const std::vector<std::string> &overrides = {});
ExperimentConfig load_config(const std::filesystem::path &path, const std::vector<std::string> &overrides = {});

// Default output root for relative output directories: $UGODIT_OUTPUT_ROOT
// when set, else the current directory.
std::filesystem::path output_root();

} // namespace ugodit
