#include "ugodit/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "ugodit/error.hpp"
#include "ugodit/rng.hpp"

namespace ugodit {

SeedPlan SeedPlan::derive(std::uint64_t master) {
  SeedPlan s;
  s.master = master;
  s.data_train = derive_seed(master, "data-train");
  s.data_test = derive_seed(master, "data-test");
  s.mask = derive_seed(master, "mask");
  s.maps = derive_seed(master, "maps");
  s.noise_train = derive_seed(master, "noise-train");
  s.noise_test = derive_seed(master, "noise-test");
  s.init = derive_seed(master, "init");
  s.recon = derive_seed(master, "recon");
  return s;
}

std::map<std::string, std::uint64_t> SeedPlan::named() const {
  return {{"data_train", data_train}, {"data_test", data_test},     {"mask", mask},
          {"maps", maps},             {"noise_train", noise_train}, {"noise_test", noise_test},
          {"init", init},             {"recon", recon}};
}

std::filesystem::path ExperimentConfig::checkpoint_file() const {
  if (!run.checkpoint_path.empty())
    return run.checkpoint_path;
  std::filesystem::path out(run.output_dir);
  if (out.is_relative())
    out = output_root() / out;
  return out / "encoder.ugck";
}

std::filesystem::path output_root() {
  const char *root = std::getenv("UGODIT_OUTPUT_ROOT");
  return root && *root ? std::filesystem::path(root) : std::filesystem::current_path();
}

namespace {

const std::vector<std::string> kModes{"frozen", "warmstart", "scratch", "vanilla", "shared_frozen"};

void check_keys(const YAML::Node &node, const std::string &prefix, const std::set<std::string> &allowed) {
  if (!node.IsMap())
    throw ConfigError(prefix + " must be a mapping");
  for (const auto &kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key))
      throw ConfigError("unknown configuration key '" + (prefix.empty() ? key : prefix + "." + key) + "'");
  }
}

template <class T> T read(const YAML::Node &node, const std::string &key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception &) {
    throw ConfigError("configuration key '" + key + "' has an invalid value");
  }
}

template <class T> void maybe(const YAML::Node &parent, const char *name, const std::string &prefix, T &out) {
  if (const YAML::Node n = parent[name])
    out = read<T>(n, prefix.empty() ? std::string(name) : prefix + "." + name);
}

template <class T>
void maybe_opt(const YAML::Node &parent, const char *name, const std::string &prefix, std::optional<T> &out) {
  if (const YAML::Node n = parent[name])
    out = read<T>(n, prefix + "." + name);
}

void set_path(YAML::Node node, const std::vector<std::string> &parts, std::size_t i, const YAML::Node &value) {
  if (i + 1 == parts.size()) {
    node[parts[i]] = value;
    return;
  }
  if (!node[parts[i]] || !node[parts[i]].IsMap())
    node[parts[i]] = YAML::Node(YAML::NodeType::Map);
  set_path(node[parts[i]], parts, i + 1, value);
}

void apply_override(YAML::Node &root, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' must look like key=value");
  const std::string key = assignment.substr(0, eq);
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty())
      throw ConfigError("override key '" + key + "' is malformed");
    parts.push_back(part);
  }
  YAML::Node value;
  try {
    value = YAML::Load(assignment.substr(eq + 1));
  } catch (const YAML::Exception &e) {
    throw ConfigError("override '" + key + "' has an unparsable value");
  }
  if (!root.IsMap())
    root = YAML::Node(YAML::NodeType::Map);
  set_path(root, parts, 0, value);
}

std::size_t default_channels_at(std::size_t level) { return level == 0 ? 8 : 16; }

} // namespace

ExperimentConfig parse_config(const std::string &yaml_text, const std::vector<std::string> &overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception &e) {
    throw ConfigError(std::string("configuration is not valid YAML: ") + e.what());
  }
  if (root.IsNull())
    root = YAML::Node(YAML::NodeType::Map);
  for (const auto &o : overrides)
    apply_override(root, o);
  check_keys(root, "", {"task", "seed", "data", "operator", "architecture", "solver", "run", "seeds"});

  ExperimentConfig cfg;
  if (!root["task"])
    throw ConfigError("configuration key 'task' is required (mri, sr or ndb)");
  try {
    cfg.task = parse_operator_kind(read<std::string>(root["task"], "task"));
  } catch (const ContractError &) {
    throw ConfigError("configuration key 'task' must be mri, sr or ndb");
  } catch (const ConfigError &) {
    throw ConfigError("configuration key 'task' must be mri, sr or ndb");
  }
  std::uint64_t master = 0;
  maybe(root, "seed", "", master);
  cfg.seeds = SeedPlan::derive(master);

  if (const YAML::Node d = root["data"]) {
    check_keys(d, "data",
               {"source", "family", "test_family", "complexity", "directory", "test_directory", "train_count",
                "test_count", "image_size"});
    maybe(d, "source", "data", cfg.data.source);
    if (d["family"])
      try {
        cfg.data.family = parse_phantom_family(read<std::string>(d["family"], "data.family"));
      } catch (const ConfigError &) {
        throw ConfigError("configuration key 'data.family' must be ellipses or texture");
      }
    if (d["test_family"])
      try {
        cfg.data.test_family = parse_phantom_family(read<std::string>(d["test_family"], "data.test_family"));
      } catch (const ConfigError &) {
        throw ConfigError("configuration key 'data.test_family' must be ellipses or texture");
      }
    maybe(d, "complexity", "data", cfg.data.complexity);
    maybe(d, "directory", "data", cfg.data.directory);
    maybe(d, "test_directory", "data", cfg.data.test_directory);
    maybe(d, "train_count", "data", cfg.data.train_count);
    maybe(d, "test_count", "data", cfg.data.test_count);
    maybe(d, "image_size", "data", cfg.data.image_size);
  }

  if (const YAML::Node o = root["operator"]) {
    check_keys(o, "operator",
               {"acceleration", "acs_fraction", "coils", "sr_factor", "ndb_gamma", "ndb_sigma", "ndb_radius",
                "noise_sigma"});
    maybe_opt(o, "acceleration", "operator", cfg.op.acceleration);
    maybe_opt(o, "acs_fraction", "operator", cfg.op.acs_fraction);
    maybe_opt(o, "coils", "operator", cfg.op.coils);
    maybe_opt(o, "sr_factor", "operator", cfg.op.sr_factor);
    maybe_opt(o, "ndb_gamma", "operator", cfg.op.ndb_gamma);
    maybe_opt(o, "ndb_sigma", "operator", cfg.op.ndb_sigma);
    maybe_opt(o, "ndb_radius", "operator", cfg.op.ndb_radius);
    maybe(o, "noise_sigma", "operator", cfg.op.noise_sigma);
  }

  const std::size_t image_channels = cfg.task == OperatorKind::mri ? 2 : 3;
  cfg.arch.in_channels = cfg.arch.out_channels = image_channels;
  if (const YAML::Node a = root["architecture"]) {
    check_keys(a, "architecture",
               {"depth", "channels", "kernel_size", "skip", "activation", "leaky_slope", "upsample", "in_channels",
                "out_channels"});
    maybe(a, "depth", "architecture", cfg.arch.depth);
    if (a["channels"]) {
      cfg.arch.channels = read<std::vector<std::size_t>>(a["channels"], "architecture.channels");
    } else if (cfg.arch.depth >= 1) {
      cfg.arch.channels.clear();
      for (int l = 0; l < cfg.arch.depth; ++l)
        cfg.arch.channels.push_back(default_channels_at(static_cast<std::size_t>(l)));
    }
    maybe(a, "kernel_size", "architecture", cfg.arch.kernel_size);
    maybe(a, "skip", "architecture", cfg.arch.skip);
    maybe(a, "activation", "architecture", cfg.arch.activation);
    maybe(a, "leaky_slope", "architecture", cfg.arch.leaky_slope);
    maybe(a, "upsample", "architecture", cfg.arch.upsample_mode);
    maybe(a, "in_channels", "architecture", cfg.arch.in_channels);
    maybe(a, "out_channels", "architecture", cfg.arch.out_channels);
  }

  if (const YAML::Node s = root["solver"]) {
    check_keys(s, "solver",
               {"K", "N", "lambda", "beta", "sigma_ini", "seed", "update_order", "log_metrics", "check_invariants"});
    maybe(s, "K", "solver", cfg.solver.K);
    maybe(s, "N", "solver", cfg.solver.N);
    maybe(s, "lambda", "solver", cfg.solver.lambda);
    maybe(s, "beta", "solver", cfg.solver.beta);
    if (const YAML::Node n = s["sigma_ini"]) {
      if (n.IsScalar() && n.Scalar() == "auto") {
        cfg.solver.sigma_ini_auto = true;
      } else {
        cfg.solver.sigma_ini = read<double>(n, "solver.sigma_ini");
        cfg.solver.sigma_ini_auto = false;
      }
    }
    if (s["seed"])
      cfg.seeds.init = read<std::uint64_t>(s["seed"], "solver.seed");
    if (s["update_order"])
      try {
        cfg.solver.update_order = parse_update_order(read<std::string>(s["update_order"], "solver.update_order"));
      } catch (const ConfigError &) {
        throw ConfigError("configuration key 'solver.update_order' must be simultaneous or sequential");
      }
    maybe(s, "log_metrics", "solver", cfg.solver.log_metrics);
    maybe(s, "check_invariants", "solver", cfg.solver.check_invariants);
  }

  if (const YAML::Node r = root["run"]) {
    check_keys(r, "run", {"modes", "output_dir", "checkpoint_path", "train", "plots", "test_lambda"});
    if (r["modes"]) {
      if (r["modes"].IsScalar())
        cfg.run.modes = {read<std::string>(r["modes"], "run.modes")};
      else
        cfg.run.modes = read<std::vector<std::string>>(r["modes"], "run.modes");
    }
    maybe(r, "output_dir", "run", cfg.run.output_dir);
    maybe(r, "checkpoint_path", "run", cfg.run.checkpoint_path);
    maybe(r, "train", "run", cfg.run.train);
    maybe(r, "plots", "run", cfg.run.plots);
    maybe_opt(r, "test_lambda", "run", cfg.run.test_lambda);
  }

  if (const YAML::Node s = root["seeds"]) {
    std::set<std::string> names;
    for (const auto &kv : cfg.seeds.named())
      names.insert(kv.first);
    check_keys(s, "seeds", names);
    maybe(s, "data_train", "seeds", cfg.seeds.data_train);
    maybe(s, "data_test", "seeds", cfg.seeds.data_test);
    maybe(s, "mask", "seeds", cfg.seeds.mask);
    maybe(s, "maps", "seeds", cfg.seeds.maps);
    maybe(s, "noise_train", "seeds", cfg.seeds.noise_train);
    maybe(s, "noise_test", "seeds", cfg.seeds.noise_test);
    maybe(s, "init", "seeds", cfg.seeds.init);
    maybe(s, "recon", "seeds", cfg.seeds.recon);
  }
  cfg.solver.seed = cfg.seeds.init;

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path &path, const std::vector<std::string> &overrides) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read configuration file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

void ExperimentConfig::validate() const {
  auto bad = [](const std::string &key, const std::string &why) {
    throw ConfigError("configuration key '" + key + "' " + why);
  };
  auto foreign = [&](bool present, const std::string &key) {
    if (present)
      bad(key, "is not valid for task " + to_string(task));
  };
  if (task != OperatorKind::mri) {
    foreign(op.acceleration.has_value(), "operator.acceleration");
    foreign(op.acs_fraction.has_value(), "operator.acs_fraction");
    foreign(op.coils.has_value(), "operator.coils");
  }
  if (task != OperatorKind::sr)
    foreign(op.sr_factor.has_value(), "operator.sr_factor");
  if (task != OperatorKind::ndb) {
    foreign(op.ndb_gamma.has_value(), "operator.ndb_gamma");
    foreign(op.ndb_sigma.has_value(), "operator.ndb_sigma");
    foreign(op.ndb_radius.has_value(), "operator.ndb_radius");
  }

  if (data.source != "synthetic" && data.source != "directory")
    bad("data.source", "must be synthetic or directory");
  if (data.source == "directory" && data.directory.empty())
    bad("data.directory", "is required when data.source is directory");
  if (data.train_count < 1)
    bad("data.train_count", "must be >= 1");
  if (data.test_count < 1)
    bad("data.test_count", "must be >= 1");
  if (data.complexity < 1)
    bad("data.complexity", "must be >= 1");
  if (data.image_size < 8)
    bad("data.image_size", "must be >= 8");

  if (task == OperatorKind::mri) {
    if (acceleration() < 1)
      bad("operator.acceleration", "must be >= 1");
    if (!(acs_fraction() > 0.0 && acs_fraction() <= 1.0))
      bad("operator.acs_fraction", "must lie in (0, 1]");
    const auto budget = static_cast<long>(std::lround(double(data.image_size) / acceleration()));
    if (std::lround(acs_fraction() * double(data.image_size)) > budget)
      bad("operator.acs_fraction", "gives an ACS band wider than the sampling budget");
    if (coils() < 1)
      bad("operator.coils", "must be >= 1");
  }
  if (task == OperatorKind::sr && (sr_factor() < 1 || data.image_size % sr_factor() != 0))
    bad("operator.sr_factor", "must be >= 1 and divide data.image_size");
  if (task == OperatorKind::ndb) {
    if (!(ndb_gamma() > 0.0))
      bad("operator.ndb_gamma", "must be > 0");
    if (!(ndb_sigma() > 0.0))
      bad("operator.ndb_sigma", "must be > 0");
    if (ndb_radius() < 1)
      bad("operator.ndb_radius", "must be >= 1");
  }
  if (!(op.noise_sigma >= 0.0))
    bad("operator.noise_sigma", "must be >= 0");

  const std::size_t image_channels = task == OperatorKind::mri ? 2 : 3;
  if (arch.in_channels != image_channels)
    bad("architecture.in_channels", "must be " + std::to_string(image_channels) + " for task " + to_string(task));
  if (arch.out_channels != image_channels)
    bad("architecture.out_channels", "must be " + std::to_string(image_channels) + " for task " + to_string(task));
  try {
    arch.validate();
  } catch (const Error &e) {
    bad("architecture", std::string("is invalid: ") + e.what());
  }
  const std::size_t align = std::size_t{1} << arch.depth;
  if (data.image_size % align != 0)
    bad("data.image_size", "must be a multiple of 2^depth = " + std::to_string(align));

  solver.validate();

  if (run.modes.empty())
    bad("run.modes", "must list at least one mode");
  for (const auto &m : run.modes)
    if (std::find(kModes.begin(), kModes.end(), m) == kModes.end())
      bad("run.modes", "has unknown mode '" + m + "'");
  if (!run.train && run.checkpoint_path.empty())
    bad("run.checkpoint_path", "is required when run.train is false");
  if (run.test_lambda && !(*run.test_lambda >= 0.0))
    bad("run.test_lambda", "must be >= 0");
}

std::string ExperimentConfig::to_yaml() const {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "task" << YAML::Value << to_string(task);
  e << YAML::Key << "seed" << YAML::Value << seeds.master;

  e << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "source" << YAML::Value << data.source;
  e << YAML::Key << "family" << YAML::Value << to_string(data.family);
  if (data.test_family)
    e << YAML::Key << "test_family" << YAML::Value << to_string(*data.test_family);
  e << YAML::Key << "complexity" << YAML::Value << data.complexity;
  if (!data.directory.empty())
    e << YAML::Key << "directory" << YAML::Value << data.directory;
  if (!data.test_directory.empty())
    e << YAML::Key << "test_directory" << YAML::Value << data.test_directory;
  e << YAML::Key << "train_count" << YAML::Value << data.train_count;
  e << YAML::Key << "test_count" << YAML::Value << data.test_count;
  e << YAML::Key << "image_size" << YAML::Value << data.image_size;
  e << YAML::EndMap;

  e << YAML::Key << "operator" << YAML::Value << YAML::BeginMap;
  if (task == OperatorKind::mri) {
    e << YAML::Key << "acceleration" << YAML::Value << acceleration();
    e << YAML::Key << "acs_fraction" << YAML::Value << acs_fraction();
    e << YAML::Key << "coils" << YAML::Value << coils();
  } else if (task == OperatorKind::sr) {
    e << YAML::Key << "sr_factor" << YAML::Value << sr_factor();
  } else {
    e << YAML::Key << "ndb_gamma" << YAML::Value << ndb_gamma();
    e << YAML::Key << "ndb_sigma" << YAML::Value << ndb_sigma();
    e << YAML::Key << "ndb_radius" << YAML::Value << ndb_radius();
  }
  e << YAML::Key << "noise_sigma" << YAML::Value << op.noise_sigma;
  e << YAML::EndMap;

  e << YAML::Key << "architecture" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "depth" << YAML::Value << arch.depth;
  e << YAML::Key << "channels" << YAML::Value << YAML::Flow << arch.channels;
  e << YAML::Key << "kernel_size" << YAML::Value << arch.kernel_size;
  e << YAML::Key << "skip" << YAML::Value << arch.skip;
  e << YAML::Key << "activation" << YAML::Value << arch.activation;
  e << YAML::Key << "leaky_slope" << YAML::Value << arch.leaky_slope;
  e << YAML::Key << "upsample" << YAML::Value << arch.upsample_mode;
  e << YAML::Key << "in_channels" << YAML::Value << arch.in_channels;
  e << YAML::Key << "out_channels" << YAML::Value << arch.out_channels;
  e << YAML::EndMap;

  e << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "K" << YAML::Value << solver.K;
  e << YAML::Key << "N" << YAML::Value << solver.N;
  e << YAML::Key << "lambda" << YAML::Value << solver.lambda;
  e << YAML::Key << "beta" << YAML::Value << solver.beta;
  if (solver.sigma_ini_auto)
    e << YAML::Key << "sigma_ini" << YAML::Value << "auto";
  else
    e << YAML::Key << "sigma_ini" << YAML::Value << solver.sigma_ini;
  e << YAML::Key << "update_order" << YAML::Value << to_string(solver.update_order);
  e << YAML::Key << "log_metrics" << YAML::Value << solver.log_metrics;
  e << YAML::Key << "check_invariants" << YAML::Value << solver.check_invariants;
  e << YAML::EndMap;

  e << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "modes" << YAML::Value << YAML::Flow << run.modes;
  e << YAML::Key << "output_dir" << YAML::Value << run.output_dir;
  if (!run.checkpoint_path.empty())
    e << YAML::Key << "checkpoint_path" << YAML::Value << run.checkpoint_path;
  e << YAML::Key << "train" << YAML::Value << run.train;
  e << YAML::Key << "plots" << YAML::Value << run.plots;
  if (run.test_lambda)
    e << YAML::Key << "test_lambda" << YAML::Value << *run.test_lambda;
  e << YAML::EndMap;

  e << YAML::Key << "seeds" << YAML::Value << YAML::BeginMap;
  for (const auto &[name, value] : seeds.named())
    e << YAML::Key << name << YAML::Value << value;
  e << YAML::EndMap;

  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

} // namespace ugodit
