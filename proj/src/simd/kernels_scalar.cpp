#include <cmath>

#include "ugodit/simd/kernels.hpp"

namespace ugodit::simd {

namespace {

void conv_channel(std::size_t h, std::size_t w, std::size_t k, std::size_t c, const double *wt, const double *in,
                  std::size_t plane, std::size_t row, double *out) {
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double s = out[y * w + x];
      for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t ky = 0; ky < k; ++ky)
          for (std::size_t kx = 0; kx < k; ++kx)
            s += wt[(ci * k + ky) * k + kx] * in[ci * plane + (y + ky) * row + x + kx];
      out[y * w + x] = s;
    }
}

void corr_plane(std::size_t h, std::size_t w, std::size_t k, const double *g, const double *in, std::size_t row,
                double *acc) {
  for (std::size_t ky = 0; ky < k; ++ky)
    for (std::size_t kx = 0; kx < k; ++kx) {
      double s = 0.0;
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
          s += g[y * w + x] * in[(y + ky) * row + x + kx];
      acc[ky * k + kx] += s;
    }
}

void axpy(std::size_t n, double alpha, const double *x, double *y) {
  for (std::size_t i = 0; i < n; ++i)
    y[i] += alpha * x[i];
}

double dot(std::size_t n, const double *x, const double *y) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    s += x[i] * y[i];
  return s;
}

void leaky_relu(std::size_t n, double slope, const double *pre, double *out) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = pre[i] > 0.0 ? pre[i] : slope * pre[i];
}

void leaky_relu_backward(std::size_t n, double slope, const double *pre, double *grad) {
  for (std::size_t i = 0; i < n; ++i)
    if (!(pre[i] > 0.0))
      grad[i] *= slope;
}

void adam_step(std::size_t n, double beta1, double beta2, double lr_t, double eps_t, const double *grad, double *m,
               double *v, double *param) {
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    param[i] -= lr_t * m[i] / (std::sqrt(v[i]) + eps_t);
  }
}

} // namespace

const KernelTable &scalar_kernels() {
  static const KernelTable table{"scalar", conv_channel, corr_plane, axpy, dot, leaky_relu, leaky_relu_backward, adam_step};
  return table;
}

} // namespace ugodit::simd
