#include "ugodit/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "ugodit/error.hpp"
#include "ugodit/persistence.hpp"
#include "ugodit/plot.hpp"
#include "ugodit/reconstruct.hpp"
#include "ugodit/rng.hpp"
#include "ugodit/trainer.hpp"

namespace ugodit {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(const std::optional<double> &v) { return v ? num(*v) : std::string(); }

std::vector<std::string> split(const std::string &line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, sep))
    out.push_back(cell);
  if (!line.empty() && line.back() == sep)
    out.emplace_back();
  return out;
}

double parse_double(const std::string &s, const fs::path &path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size())
      throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw FormatError("bad number '" + s + "' in " + path.string());
  }
}

std::optional<double> parse_optional(const std::string &s, const fs::path &path) {
  if (s.empty())
    return std::nullopt;
  return parse_double(s, path);
}

std::vector<std::vector<std::string>> read_csv(const fs::path &path, const std::string &expected_header) {
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != expected_header)
    throw FormatError(path.string() + " does not start with the header '" + expected_header + "'");
  const std::size_t cols = split(expected_header, ',').size();
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    auto cells = split(line, ',');
    if (cells.size() != cols)
      throw FormatError("row with " + std::to_string(cells.size()) + " cells in " + path.string());
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::ofstream open_out(const fs::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw InputError("cannot write " + path.string());
  return out;
}

fs::path resolve_output(const ExperimentConfig &config) {
  fs::path out(config.run.output_dir);
  return out.is_relative() ? output_root() / out : out;
}

double mean(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v)
    s += x;
  return v.empty() ? 0.0 : s / double(v.size());
}

// Sample standard deviation (n - 1); zero for a single value.
double stddev(const std::vector<double> &v) {
  if (v.size() < 2)
    return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v)
    s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

Tensor normalize_mri(Tensor x) {
  double peak = 0.0;
  for (std::size_t y = 0; y < x.height(); ++y)
    for (std::size_t q = 0; q < x.width(); ++q)
      peak = std::max(peak, std::hypot(x.at(0, y, q), x.at(1, y, q)));
  if (peak > 0.0)
    x *= 1.0 / peak;
  return x;
}

std::vector<Tensor> load_images(const ExperimentConfig &c, bool test) {
  const std::size_t count = test ? c.data.test_count : c.data.train_count;
  std::vector<Tensor> images;
  if (c.data.source == "synthetic") {
    const PhantomFamily fam = test ? c.data.test_family.value_or(c.data.family) : c.data.family;
    images = synthesize_dataset({fam, c.data.complexity, test ? c.seeds.data_test : c.seeds.data_train}, count,
                                c.data.image_size);
  } else if (!test) {
    images = ingest_directory(c.data.directory, c.data.image_size, count);
  } else if (!c.data.test_directory.empty()) {
    images = ingest_directory(c.data.test_directory, c.data.image_size, count);
  } else {
    auto all = ingest_directory(c.data.directory, c.data.image_size, c.data.train_count + count);
    images.assign(all.begin() + static_cast<long>(c.data.train_count), all.end());
  }
  for (auto &img : images) {
    img = to_task_layout(img, c.task);
    if (c.task == OperatorKind::mri)
      img = normalize_mri(std::move(img));
  }
  return images;
}

std::string image_id(std::size_t i) { return "img" + std::to_string(i); }

// Rethrows with the run named in the message, keeping the error category.
[[noreturn]] void rethrow_with(const std::string &context) {
  try {
    throw;
  } catch (const DivergenceError &e) {
    throw DivergenceError(context + ": " + e.what());
  } catch (const ArchitectureError &e) {
    throw ArchitectureError(context + ": " + e.what());
  } catch (const ContractError &e) {
    throw ContractError(context + ": " + e.what());
  }
}

void write_training_traces(const fs::path &dir, const std::string &prefix, const TrainResult &r) {
  for (std::size_t i = 0; i < r.traces.size(); ++i)
    write_trace_csv(dir / (prefix + "-" + std::to_string(i) + ".csv"), r.traces[i]);
}

const char *kMetricsHeader = "run_id,mode,image_id,iteration,data_fit,autoenc,psnr_db,ssim";
const char *kSummaryHeader = "mode,psnr_mean,psnr_std,ssim_mean,ssim_std,wall_time_mean";
const char *kTraceHeader = "iteration,data_fit,autoenc,psnr_db,ssim,round_end";

} // namespace

void write_trace_csv(const fs::path &path, const MetricTrace &trace) {
  auto out = open_out(path);
  out << kTraceHeader << '\n';
  for (const auto &r : trace.rows())
    out << r.iteration << ',' << num(r.data_fit) << ',' << num(r.autoenc) << ',' << num(r.psnr_db) << ','
        << num(r.ssim) << ',' << (r.round_end ? 1 : 0) << '\n';
}

MetricTrace read_trace_csv(const fs::path &path, const std::string &run_id, TraceRole role) {
  MetricTrace trace(run_id, role);
  for (const auto &c : read_csv(path, kTraceHeader)) {
    TraceRow r;
    r.iteration = std::lround(parse_double(c[0], path));
    r.data_fit = parse_double(c[1], path);
    r.autoenc = parse_double(c[2], path);
    r.psnr_db = parse_optional(c[3], path);
    r.ssim = parse_optional(c[4], path);
    r.round_end = c[5] == "1";
    trace.append(r);
  }
  return trace;
}

std::vector<MetricsRow> read_metrics_csv(const fs::path &path) {
  std::vector<MetricsRow> rows;
  for (const auto &c : read_csv(path, kMetricsHeader)) {
    MetricsRow r;
    r.run_id = c[0];
    r.mode = c[1];
    r.image_id = c[2];
    r.iteration = std::lround(parse_double(c[3], path));
    r.data_fit = parse_double(c[4], path);
    r.autoenc = parse_double(c[5], path);
    r.psnr_db = parse_optional(c[6], path);
    r.ssim = parse_optional(c[7], path);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SummaryRow> read_summary_csv(const fs::path &path) {
  std::vector<SummaryRow> rows;
  for (const auto &c : read_csv(path, kSummaryHeader))
    rows.push_back({c[0], parse_double(c[1], path), parse_double(c[2], path), parse_double(c[3], path),
                    parse_double(c[4], path), parse_double(c[5], path)});
  return rows;
}

ForwardOperator build_operator(const ExperimentConfig &c) {
  const std::size_t n = c.data.image_size;
  switch (c.task) {
  case OperatorKind::mri:
    return ForwardOperator(MriOperator{make_cartesian_mask(n, c.acceleration(), c.acs_fraction(), c.seeds.mask),
                                       make_sensitivity_maps(c.coils(), n, n, c.seeds.maps)});
  case OperatorKind::sr:
    return ForwardOperator(SrOperator{c.sr_factor()});
  case OperatorKind::ndb:
    return ForwardOperator(NdbOperator{c.ndb_gamma(), c.ndb_sigma(), c.ndb_radius()});
  }
  throw ConfigError("unknown task");
}

ExperimentData prepare_data(const ExperimentConfig &c) {
  ExperimentData d{build_operator(c), load_images(c, false), {}, load_images(c, true), {}};
  for (std::size_t i = 0; i < d.train_images.size(); ++i)
    d.train_measurements.push_back(simulate_measurement(d.train_images[i], d.op, c.op.noise_sigma,
                                                        derive_seed(c.seeds.noise_train, "item", i)));
  for (std::size_t i = 0; i < d.test_images.size(); ++i)
    d.test_measurements.push_back(simulate_measurement(d.test_images[i], d.op, c.op.noise_sigma,
                                                       derive_seed(c.seeds.noise_test, "item", i)));
  return d;
}

fs::path run_experiment(const ExperimentConfig &config, Stages stages) {
  config.validate();
  const bool wants_shared =
      std::find(config.run.modes.begin(), config.run.modes.end(), "shared_frozen") != config.run.modes.end();
  if (wants_shared && !config.run.train)
    throw ConfigError("configuration key 'run.modes' lists shared_frozen, which needs run.train = true");

  const fs::path dir = resolve_output(config);
  fs::create_directories(dir / "traces");
  {
    auto out = open_out(dir / "manifest.yaml");
    out << config.to_yaml();
  }

  const ExperimentData data = prepare_data(config);
  SolverConfig train_cfg = config.solver;
  train_cfg.seed = config.seeds.init;

  EncoderParams phi;
  EncoderParams phi_shared;
  if (config.run.train) {
    TrainingSet set;
    for (std::size_t i = 0; i < data.train_images.size(); ++i)
      set.items.push_back({data.train_measurements[i], data.op, GuardedImage(data.train_images[i])});
    TrainResult group;
    try {
      group = train_group(set, config.arch, train_cfg);
    } catch (...) {
      rethrow_with("group training");
    }
    write_training_traces(dir / "traces", "train-group", group);
    phi = group.phi_hat;
    CheckpointMeta meta{config.arch,          to_string(config.task), config.data.train_count, config.solver.lambda,
                        config.solver.K,      config.solver.N,         config.seeds.init};
    const fs::path ck = config.checkpoint_file();
    if (ck.has_parent_path())
      fs::create_directories(ck.parent_path());
    save_checkpoint(phi, meta, ck);
    if (wants_shared) {
      TrainResult shared;
      try {
        shared = train_shared_decoder(set, config.arch, train_cfg);
      } catch (...) {
        rethrow_with("shared-decoder training");
      }
      write_training_traces(dir / "traces", "train-shared", shared);
      phi_shared = shared.phi_hat;
      save_checkpoint(phi_shared, meta, fs::path(ck).replace_extension(".shared.ugck"));
    }
  } else {
    const Checkpoint ck = load_checkpoint(config.checkpoint_file());
    if (!(ck.meta.spec == config.arch))
      throw ArchitectureError("checkpoint " + config.checkpoint_file().string() + " holds architecture " +
                              ck.meta.spec.canonical() + ", configuration asks for " + config.arch.canonical());
    phi = ck.phi;
  }
  if (stages == Stages::train_only)
    return dir;

  SolverConfig test_cfg = config.solver;
  test_cfg.lambda = config.test_lambda();

  auto metrics = open_out(dir / "metrics.csv");
  metrics << kMetricsHeader << '\n';
  struct Finals {
    std::vector<double> psnr, ssim, wall;
  };
  std::map<std::string, Finals> finals;
  std::vector<std::vector<GridCell>> grids(data.test_images.size());

  for (std::size_t i = 0; i < data.test_images.size(); ++i) {
    const GuardedImage truth(data.test_images[i]);
    grids[i].push_back({"TRUTH", data.test_images[i]});
    grids[i].push_back({"AHY", apply_adjoint(data.op, data.test_measurements[i])});
    for (const auto &mode : config.run.modes) {
      ReconRequest req{data.test_measurements[i], data.op, ReconMode::frozen, std::nullopt, config.arch, test_cfg,
                       truth, mode + "-" + image_id(i)};
      req.config.seed = derive_seed(config.seeds.recon, "image", i);
      if (mode == "shared_frozen") {
        req.encoder = phi_shared;
      } else {
        req.mode = parse_recon_mode(mode);
        if (req.mode == ReconMode::frozen || req.mode == ReconMode::warmstart)
          req.encoder = phi;
      }
      ReconResult res;
      try {
        res = reconstruct(req);
      } catch (...) {
        rethrow_with(mode + " reconstruction of test " + image_id(i));
      }
      write_trace_csv(dir / "traces" / (req.run_id + ".csv"), res.trace);
      for (const auto &r : res.trace.round_rows())
        metrics << req.run_id << ',' << mode << ',' << image_id(i) << ',' << r.iteration << ',' << num(r.data_fit)
                << ',' << num(r.autoenc) << ',' << num(r.psnr_db) << ',' << num(r.ssim) << '\n';
      const ImageQuality q = evaluate_quality(config.task, res.x_hat, truth.for_metrics());
      finals[mode].psnr.push_back(q.psnr_db);
      finals[mode].ssim.push_back(q.ssim);
      finals[mode].wall.push_back(res.wall_time_seconds);
      grids[i].push_back({mode, res.x_hat});
    }
  }
  metrics.close();

  auto summary = open_out(dir / "summary.csv");
  summary << kSummaryHeader << '\n';
  for (const auto &mode : config.run.modes) {
    const Finals &f = finals[mode];
    summary << mode << ',' << num(mean(f.psnr)) << ',' << num(stddev(f.psnr)) << ',' << num(mean(f.ssim)) << ','
            << num(stddev(f.ssim)) << ',' << num(mean(f.wall)) << '\n';
  }
  summary.close();

  if (config.run.plots) {
    plot_run(dir);
    fs::create_directories(dir / "images");
    for (std::size_t i = 0; i < grids.size(); ++i)
      plot_image_row(dir / "images" / (image_id(i) + ".png"), grids[i]);
  }
  return dir;
}

void plot_run(const fs::path &run_dir) {
  const auto rows = read_metrics_csv(run_dir / "metrics.csv");
  std::vector<std::string> order;
  std::map<std::string, std::map<long, std::pair<double, int>>> acc;
  bool have_psnr = true;
  for (const auto &r : rows)
    have_psnr = have_psnr && r.psnr_db.has_value();
  for (const auto &r : rows) {
    if (!acc.count(r.mode))
      order.push_back(r.mode);
    auto &cell = acc[r.mode][r.iteration];
    cell.first += have_psnr ? *r.psnr_db : r.data_fit;
    cell.second += 1;
  }
  std::vector<Series> series;
  for (const auto &mode : order) {
    Series s{mode, {}, {}};
    for (const auto &[it, v] : acc[mode]) {
      s.x.push_back(double(it));
      s.y.push_back(v.first / v.second);
    }
    series.push_back(std::move(s));
  }
  plot_lines(run_dir / "curves.png", series, have_psnr ? "MEAN PSNR" : "MEAN DATA FIT", "ITERATION",
             have_psnr ? "PSNR (DB)" : "DATA FIT");
}

SweepAxis parse_sweep_axis(const std::string &name) {
  if (name == "M")
    return SweepAxis::M;
  if (name == "depth")
    return SweepAxis::depth;
  if (name == "NK")
    return SweepAxis::NK;
  if (name == "lambda")
    return SweepAxis::lambda;
  throw ConfigError("unknown sweep axis '" + name + "' (expected M, depth, NK or lambda)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
  case SweepAxis::M:
    return "M";
  case SweepAxis::depth:
    return "depth";
  case SweepAxis::NK:
    return "NK";
  case SweepAxis::lambda:
    return "lambda";
  }
  return "?";
}

ExperimentConfig sweep_variant(const ExperimentConfig &base, SweepAxis axis, const std::string &value) {
  ExperimentConfig c = base;
  auto integer = [&](const std::string &s) {
    try {
      std::size_t used = 0;
      const long v = std::stol(s, &used);
      if (used != s.size())
        throw std::invalid_argument(s);
      return v;
    } catch (const std::exception &) {
      throw ConfigError("sweep value '" + value + "' is not valid for axis " + to_string(axis));
    }
  };
  switch (axis) {
  case SweepAxis::M:
    c.data.train_count = static_cast<std::size_t>(std::max(0L, integer(value)));
    break;
  case SweepAxis::depth: {
    c.arch.depth = static_cast<int>(integer(value));
    std::vector<std::size_t> ch;
    for (int l = 0; l < c.arch.depth; ++l)
      ch.push_back(l < static_cast<int>(base.arch.channels.size()) ? base.arch.channels[l] : base.arch.channels.back());
    c.arch.channels = ch;
    break;
  }
  case SweepAxis::NK: {
    const auto x = value.find('x');
    if (x == std::string::npos)
      throw ConfigError("sweep value '" + value + "' for axis NK must look like NxK, e.g. 10x2000");
    c.solver.N = static_cast<int>(integer(value.substr(0, x)));
    c.solver.K = static_cast<int>(integer(value.substr(x + 1)));
    break;
  }
  case SweepAxis::lambda:
    try {
      c.solver.lambda = std::stod(value);
    } catch (const std::exception &) {
      throw ConfigError("sweep value '" + value + "' is not a number");
    }
    break;
  }
  c.run.output_dir = (resolve_output(base) / ("sweep-" + to_string(axis)) / (to_string(axis) + "=" + value)).string();
  if (!base.run.checkpoint_path.empty() && base.run.train)
    c.run.checkpoint_path.clear();
  c.validate();
  return c;
}

fs::path run_sweep(const ExperimentConfig &base, SweepAxis axis, const std::vector<std::string> &values) {
  if (values.empty())
    throw ConfigError("sweep needs at least one value");
  std::vector<ExperimentConfig> variants;
  for (const auto &v : values)
    variants.push_back(sweep_variant(base, axis, v));
  const fs::path dir = resolve_output(base) / ("sweep-" + to_string(axis));
  fs::create_directories(dir);

  auto out = open_out(dir / "sweep_summary.csv");
  out << "axis,value," << kSummaryHeader << '\n';
  std::vector<Series> overlay;
  for (std::size_t k = 0; k < variants.size(); ++k) {
    const fs::path run = run_experiment(variants[k]);
    for (const auto &s : read_summary_csv(run / "summary.csv"))
      out << to_string(axis) << ',' << values[k] << ',' << s.mode << ',' << num(s.psnr_mean) << ','
          << num(s.psnr_std) << ',' << num(s.ssim_mean) << ',' << num(s.ssim_std) << ',' << num(s.wall_time_mean)
          << '\n';
    std::map<long, std::pair<double, int>> acc;
    const std::string first_mode = variants[k].run.modes.front();
    for (const auto &r : read_metrics_csv(run / "metrics.csv"))
      if (r.mode == first_mode && r.psnr_db) {
        acc[r.iteration].first += *r.psnr_db;
        acc[r.iteration].second += 1;
      }
    Series s{to_string(axis) + "=" + values[k], {}, {}};
    for (const auto &[it, v] : acc) {
      s.x.push_back(double(it));
      s.y.push_back(v.first / v.second);
    }
    overlay.push_back(std::move(s));
  }
  out.close();
  if (base.run.plots)
    plot_lines(dir / "sweep_curves.png", overlay, "SWEEP " + to_string(axis), "ITERATION", "PSNR (DB)");
  return dir;
}

fs::path run_probe(const ExperimentConfig &config, const fs::path &checkpoint, std::size_t image,
                   double center_fraction) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  if (!(ck.meta.spec == config.arch))
    throw ArchitectureError("checkpoint architecture " + ck.meta.spec.canonical() +
                            " differs from the configuration's " + config.arch.canonical());
  const ExperimentData data = prepare_data(config);
  require(image < data.test_images.size(), "probe image index " + std::to_string(image) + " is out of range");
  ReconRequest req{data.test_measurements[image], data.op, ReconMode::frozen, ck.phi, config.arch, config.solver,
                   GuardedImage(data.test_images[image]), "probe-" + image_id(image)};
  req.config.seed = derive_seed(config.seeds.recon, "image", image);
  req.config.lambda = config.test_lambda();
  const ReconResult res = reconstruct(req);
  const auto report = spectral_probe(config.arch, ck.phi, res.final_psi, res.final_z, center_fraction);

  const fs::path dir = resolve_output(config);
  fs::create_directories(dir);
  auto out = open_out(dir / "probe.csv");
  out << "layer,lf_ratio\n";
  for (const auto &e : report)
    out << e.layer << ',' << num(e.lf_ratio) << '\n';
  return dir / "probe.csv";
}

} // namespace ugodit
