#pragma once

// Shared fixtures and independent reference computations for the tests.

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "ugodit/network.hpp"
#include "ugodit/operators.hpp"
#include "ugodit/tensor.hpp"

namespace testing {

using ugodit::Tensor;

inline Tensor random_tensor(const ugodit::Shape &shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(shape);
  for (double &v : t.storage())
    v = u(gen);
  return t;
}

inline ugodit::ArchitectureSpec small_spec(std::size_t channels_in, int depth = 2) {
  ugodit::ArchitectureSpec s;
  s.depth = depth;
  s.channels.assign(static_cast<std::size_t>(depth), 4);
  s.in_channels = s.out_channels = channels_in;
  return s;
}

// Direct O(n^2) unitary 2-D DFT.
inline std::vector<std::complex<double>> naive_dft2(const std::vector<std::complex<double>> &in, std::size_t h,
                                                    std::size_t w) {
  std::vector<std::complex<double>> out(h * w);
  const double pi = std::acos(-1.0);
  for (std::size_t ky = 0; ky < h; ++ky)
    for (std::size_t kx = 0; kx < w; ++kx) {
      std::complex<double> s = 0.0;
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const double a = -2.0 * pi * (double(ky * y) / double(h) + double(kx * x) / double(w));
          s += in[y * w + x] * std::complex<double>(std::cos(a), std::sin(a));
        }
      out[ky * w + kx] = s / std::sqrt(double(h * w));
    }
  return out;
}

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string &name) {
    path = std::filesystem::temp_directory_path() / ("ugodit-test-" + name + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

} // namespace testing
