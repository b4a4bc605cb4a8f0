#include "ugodit/fft.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "ugodit/error.hpp"

namespace ugodit {

namespace {

// fftw plan creation is not thread-safe; execution with new arrays is.
class PlanCache {
public:
  fftw_plan get(std::size_t h, std::size_t w, bool inverse) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(h, w, inverse);
    if (auto it = plans_.find(key); it != plans_.end())
      return it->second;
    std::vector<Complex> scratch(h * w);
    auto *buf = reinterpret_cast<fftw_complex *>(scratch.data());
    fftw_plan p = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), buf, buf,
                                   inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr)
      throw ContractError("fftw could not plan a " + std::to_string(h) + "x" + std::to_string(w) + " transform");
    plans_.emplace(key, p);
    return p;
  }

  ~PlanCache() {
    for (auto &[key, p] : plans_)
      fftw_destroy_plan(p);
  }

private:
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, bool>, fftw_plan> plans_;
};

PlanCache &cache() {
  static PlanCache c;
  return c;
}

} // namespace

void fft2_unitary(std::span<Complex> plane, std::size_t height, std::size_t width, bool inverse) {
  require(plane.size() == height * width, "fft2 plane size does not match dimensions");
  auto *buf = reinterpret_cast<fftw_complex *>(plane.data());
  fftw_execute_dft(cache().get(height, width, inverse), buf, buf);
  const double scale = 1.0 / std::sqrt(static_cast<double>(height * width));
  for (Complex &c : plane)
    c *= scale;
}

void fftshift2(std::span<Complex> plane, std::size_t height, std::size_t width) {
  std::vector<Complex> out(plane.size());
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      out[((y + height / 2) % height) * width + (x + width / 2) % width] = plane[y * width + x];
  std::copy(out.begin(), out.end(), plane.begin());
}

} // namespace ugodit
