#include "doctest.h"

#include "ugodit/config.hpp"
#include "ugodit/error.hpp"
#include "ugodit/rng.hpp"

using namespace ugodit;

TEST_CASE("defaults and derived seeds") {
  const auto cfg = parse_config("task: sr\nseed: 7\n");
  CHECK(cfg.task == OperatorKind::sr);
  CHECK(cfg.solver.K == 2000);
  CHECK(cfg.solver.N == 2);
  CHECK(cfg.solver.lambda == 2.0);
  CHECK(cfg.solver.beta == 1e-4);
  CHECK(cfg.sr_factor() == 4);
  CHECK(cfg.seeds.master == 7);
  CHECK(cfg.seeds.mask == derive_seed(7, "mask"));
  CHECK(cfg.solver.seed == cfg.seeds.init);
  CHECK(cfg.test_lambda() == cfg.solver.lambda);
  CHECK(parse_config("task: mri\noperator: {acceleration: 8}\n").acs_fraction() == 0.04);
}

TEST_CASE("overrides use dotted keys and YAML values") {
  const auto cfg = parse_config("task: mri\n", {"solver.K=12", "architecture.channels=[4, 4, 4, 4, 4]",
                                                "run.modes=[frozen, scratch]", "solver.seed=99"});
  CHECK(cfg.solver.K == 12);
  CHECK(cfg.arch.channels == std::vector<std::size_t>{4, 4, 4, 4, 4});
  CHECK(cfg.run.modes == std::vector<std::string>{"frozen", "scratch"});
  CHECK(cfg.seeds.init == 99);
  CHECK(cfg.solver.seed == 99);
  CHECK_THROWS_AS(parse_config("task: mri\n", {"solver.K"}), ConfigError);
}

TEST_CASE("invalid configurations name the offending key") {
  auto message = [](const std::string &yaml) {
    try {
      parse_config(yaml);
    } catch (const ConfigError &e) {
      return std::string(e.what());
    }
    return std::string("accepted");
  };
  CHECK(message("task: mri\nsolver: {K: 0}\n").find("solver.K") != std::string::npos);
  CHECK(message("task: mri\nsolver: {gamma: 1}\n").find("solver.gamma") != std::string::npos);
  CHECK(message("task: sr\noperator: {acceleration: 4}\n").find("operator.acceleration") != std::string::npos);
  CHECK(message("task: mri\noperator: {sr_factor: 2}\n").find("operator.sr_factor") != std::string::npos);
  CHECK(message("task: ct\n").find("'task'") != std::string::npos);
  CHECK(message("task: sr\nseed: -1\n").find("'seed'") != std::string::npos);
  CHECK(message("task: mri\nrun: {modes: [thawed]}\n").find("run.modes") != std::string::npos);
  CHECK(message("task: mri\nsolver: {beta: fast}\n").find("solver.beta") != std::string::npos);
  CHECK(message("task: sr\ndata: {image_size: 30}\n").find("sr_factor") != std::string::npos);
  CHECK(message("task: [") != "accepted");
}

TEST_CASE("resolved YAML parses back to the same configuration") {
  const auto cfg = parse_config("task: ndb\nseed: 3\nsolver: {K: 5, N: 3, lambda: 0.1, sigma_ini: 0.02}\n"
                                "data: {family: texture, test_count: 2}\nrun: {test_lambda: 1.5}\n");
  const auto again = parse_config(cfg.to_yaml());
  CHECK(again.to_yaml() == cfg.to_yaml());
  CHECK(again.solver.sigma_ini == 0.02);
  CHECK_FALSE(again.solver.sigma_ini_auto);
  CHECK(again.test_lambda() == 1.5);
  CHECK(again.seeds.named() == cfg.seeds.named());
}

TEST_CASE("seed derivation separates tags and indices") {
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
  CHECK(derive_seed(1, "a", 3) == derive_seed(1, "a", 3));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
}
