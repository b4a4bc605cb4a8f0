#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ugodit {

// Seed splitting rule: a child seed is splitmix64(parent ^ fnv1a(tag) + index).
// Every seeded stream in the project is derived through this function so the
// master seed of an experiment determines everything downstream.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag, std::uint64_t index = 0);

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }
  std::uint64_t next() { return engine_(); }
  std::mt19937_64 &engine() { return engine_; }

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace ugodit
