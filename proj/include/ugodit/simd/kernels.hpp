#pragma once

#include <cstddef>
#include <string_view>

namespace ugodit::simd {

// Inner-loop primitives used by the convolution, activation, and optimizer
// code. Each instruction set provides one table; `active()` picks one per
// process (override with UGODIT_SIMD=scalar|avx2).
struct KernelTable {
  const char *name;

  // One output plane of a stride-1 convolution over c padded input planes:
  //   out[y*w + x] += sum_{ci, ky, kx} wt[(ci*k + ky)*k + kx] * in[ci*plane + (y+ky)*row + x+kx]
  void (*conv_channel)(std::size_t h, std::size_t w, std::size_t k, std::size_t c, const double *wt, const double *in,
                       std::size_t plane, std::size_t row, double *out);

  // Weight-gradient correlation of one (output, input) plane pair:
  //   acc[ky*k + kx] += sum_{y, x} g[y*w + x] * in[(y+ky)*row + x+kx]
  void (*corr_plane)(std::size_t h, std::size_t w, std::size_t k, const double *g, const double *in, std::size_t row,
                     double *acc);

  // y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double *x, double *y);

  double (*dot)(std::size_t n, const double *x, const double *y);

  // out = pre > 0 ? pre : slope * pre
  void (*leaky_relu)(std::size_t n, double slope, const double *pre, double *out);

  // grad *= pre > 0 ? 1 : slope
  void (*leaky_relu_backward)(std::size_t n, double slope, const double *pre, double *grad);

  // Bias-corrected adaptive-moment step; lr_t already folds in the bias
  // corrections: param -= lr_t * m / (sqrt(v) + eps_t).
  void (*adam_step)(std::size_t n, double beta1, double beta2, double lr_t, double eps_t, const double *grad,
                    double *m, double *v, double *param);
};

enum class Isa { scalar, avx2 };

const KernelTable &scalar_kernels();
// Returns nullptr when the binary was built without AVX2 support.
const KernelTable *avx2_kernels();

bool cpu_has_avx2();

// Process-wide selection. The first call resolves UGODIT_SIMD or CPU
// detection; `select` overrides it (tests use this for equivalence runs).
const KernelTable &active();
void select(Isa isa);
Isa parse_isa(std::string_view name);

} // namespace ugodit::simd
