#include "ugodit/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define UGODIT_HAVE_AVX2_TU 1
#include <cmath>
#include <immintrin.h>
#endif

namespace ugodit::simd {

#ifdef UGODIT_HAVE_AVX2_TU

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Taps are compile-time for the common kernel sizes so the inner loops unroll.
template <std::size_t K>
void conv_channel_fixed(std::size_t h, std::size_t w, std::size_t c, const double *wt, const double *in,
                        std::size_t plane, std::size_t row, double *out) {
  for (std::size_t y = 0; y < h; ++y) {
    double *o = out + y * w;
    std::size_t x = 0;
    for (; x + 8 <= w; x += 8) {
      __m256d a0 = _mm256_loadu_pd(o + x);
      __m256d a1 = _mm256_loadu_pd(o + x + 4);
      for (std::size_t ci = 0; ci < c; ++ci) {
        const double *base = in + ci * plane + y * row + x;
        const double *wc = wt + ci * K * K;
        for (std::size_t ky = 0; ky < K; ++ky) {
          const double *r = base + ky * row;
          for (std::size_t kx = 0; kx < K; ++kx) {
            const __m256d wv = _mm256_broadcast_sd(wc + ky * K + kx);
            a0 = _mm256_fmadd_pd(wv, _mm256_loadu_pd(r + kx), a0);
            a1 = _mm256_fmadd_pd(wv, _mm256_loadu_pd(r + kx + 4), a1);
          }
        }
      }
      _mm256_storeu_pd(o + x, a0);
      _mm256_storeu_pd(o + x + 4, a1);
    }
    for (; x + 4 <= w; x += 4) {
      __m256d a0 = _mm256_loadu_pd(o + x);
      for (std::size_t ci = 0; ci < c; ++ci) {
        const double *base = in + ci * plane + y * row + x;
        const double *wc = wt + ci * K * K;
        for (std::size_t ky = 0; ky < K; ++ky)
          for (std::size_t kx = 0; kx < K; ++kx)
            a0 = _mm256_fmadd_pd(_mm256_broadcast_sd(wc + ky * K + kx), _mm256_loadu_pd(base + ky * row + kx), a0);
      }
      _mm256_storeu_pd(o + x, a0);
    }
    for (; x < w; ++x) {
      double s = o[x];
      for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t ky = 0; ky < K; ++ky)
          for (std::size_t kx = 0; kx < K; ++kx)
            s = std::fma(wt[(ci * K + ky) * K + kx], in[ci * plane + (y + ky) * row + x + kx], s);
      o[x] = s;
    }
  }
}

void conv_channel_any(std::size_t h, std::size_t w, std::size_t k, std::size_t c, const double *wt, const double *in,
                      std::size_t plane, std::size_t row, double *out) {
  for (std::size_t y = 0; y < h; ++y) {
    double *o = out + y * w;
    std::size_t x = 0;
    for (; x + 4 <= w; x += 4) {
      __m256d a0 = _mm256_loadu_pd(o + x);
      for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t ky = 0; ky < k; ++ky)
          for (std::size_t kx = 0; kx < k; ++kx)
            a0 = _mm256_fmadd_pd(_mm256_broadcast_sd(wt + (ci * k + ky) * k + kx),
                                 _mm256_loadu_pd(in + ci * plane + (y + ky) * row + x + kx), a0);
      _mm256_storeu_pd(o + x, a0);
    }
    for (; x < w; ++x) {
      double s = o[x];
      for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t ky = 0; ky < k; ++ky)
          for (std::size_t kx = 0; kx < k; ++kx)
            s = std::fma(wt[(ci * k + ky) * k + kx], in[ci * plane + (y + ky) * row + x + kx], s);
      o[x] = s;
    }
  }
}

void conv_channel(std::size_t h, std::size_t w, std::size_t k, std::size_t c, const double *wt, const double *in,
                  std::size_t plane, std::size_t row, double *out) {
  switch (k) {
  case 1:
    return conv_channel_fixed<1>(h, w, c, wt, in, plane, row, out);
  case 3:
    return conv_channel_fixed<3>(h, w, c, wt, in, plane, row, out);
  case 5:
    return conv_channel_fixed<5>(h, w, c, wt, in, plane, row, out);
  default:
    return conv_channel_any(h, w, k, c, wt, in, plane, row, out);
  }
}

template <std::size_t K>
void corr_plane_fixed(std::size_t h, std::size_t w, const double *g, const double *in, std::size_t row, double *acc) {
  __m256d a[K * K];
  for (auto &v : a)
    v = _mm256_setzero_pd();
  double tail[K * K] = {};
  for (std::size_t y = 0; y < h; ++y) {
    const double *gr = g + y * w;
    std::size_t x = 0;
    for (; x + 4 <= w; x += 4) {
      const __m256d gv = _mm256_loadu_pd(gr + x);
      for (std::size_t ky = 0; ky < K; ++ky) {
        const double *r = in + (y + ky) * row + x;
        for (std::size_t kx = 0; kx < K; ++kx)
          a[ky * K + kx] = _mm256_fmadd_pd(gv, _mm256_loadu_pd(r + kx), a[ky * K + kx]);
      }
    }
    for (; x < w; ++x)
      for (std::size_t ky = 0; ky < K; ++ky)
        for (std::size_t kx = 0; kx < K; ++kx)
          tail[ky * K + kx] = std::fma(gr[x], in[(y + ky) * row + x + kx], tail[ky * K + kx]);
  }
  for (std::size_t t = 0; t < K * K; ++t)
    acc[t] += hsum(a[t]) + tail[t];
}

void corr_plane_any(std::size_t h, std::size_t w, std::size_t k, const double *g, const double *in, std::size_t row,
                    double *acc) {
  for (std::size_t ky = 0; ky < k; ++ky)
    for (std::size_t kx = 0; kx < k; ++kx) {
      __m256d a = _mm256_setzero_pd();
      double s = 0.0;
      for (std::size_t y = 0; y < h; ++y) {
        const double *gr = g + y * w;
        const double *r = in + (y + ky) * row + kx;
        std::size_t x = 0;
        for (; x + 4 <= w; x += 4)
          a = _mm256_fmadd_pd(_mm256_loadu_pd(gr + x), _mm256_loadu_pd(r + x), a);
        for (; x < w; ++x)
          s = std::fma(gr[x], r[x], s);
      }
      acc[ky * k + kx] += hsum(a) + s;
    }
}

void corr_plane(std::size_t h, std::size_t w, std::size_t k, const double *g, const double *in, std::size_t row,
                double *acc) {
  switch (k) {
  case 1:
    return corr_plane_fixed<1>(h, w, g, in, row, acc);
  case 3:
    return corr_plane_fixed<3>(h, w, g, in, row, acc);
  default:
    return corr_plane_any(h, w, k, g, in, row, acc);
  }
}

double dot(std::size_t n, const double *x, const double *y) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), s1);
  }
  for (; i + 4 <= n; i += 4)
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i)
    s = std::fma(x[i], y[i], s);
  return s;
}

void axpy(std::size_t n, double alpha, const double *x, double *y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i)
    y[i] = std::fma(alpha, x[i], y[i]);
}

void leaky_relu(std::size_t n, double slope, const double *pre, double *out) {
  const __m256d sv = _mm256_set1_pd(slope);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_loadu_pd(pre + i);
    const __m256d pos = _mm256_cmp_pd(p, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(_mm256_mul_pd(sv, p), p, pos));
  }
  for (; i < n; ++i)
    out[i] = pre[i] > 0.0 ? pre[i] : slope * pre[i];
}

void leaky_relu_backward(std::size_t n, double slope, const double *pre, double *grad) {
  const __m256d sv = _mm256_set1_pd(slope);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d pos = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
    const __m256d f = _mm256_blendv_pd(sv, one, pos);
    _mm256_storeu_pd(grad + i, _mm256_mul_pd(_mm256_loadu_pd(grad + i), f));
  }
  for (; i < n; ++i)
    if (!(pre[i] > 0.0))
      grad[i] *= slope;
}

void adam_step(std::size_t n, double beta1, double beta2, double lr_t, double eps_t, const double *grad, double *m,
               double *v, double *param) {
  const __m256d b1 = _mm256_set1_pd(beta1);
  const __m256d b2 = _mm256_set1_pd(beta2);
  const __m256d c1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d c2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d lr = _mm256_set1_pd(lr_t);
  const __m256d ep = _mm256_set1_pd(eps_t);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(c1, g));
    const __m256d vi =
        _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)), _mm256_mul_pd(c2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, mi), _mm256_add_pd(_mm256_sqrt_pd(vi), ep));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * (g * g);
    param[i] -= (lr_t * m[i]) / (std::sqrt(v[i]) + eps_t);
  }
}

} // namespace

const KernelTable *avx2_kernels() {
  static const KernelTable table{"avx2", conv_channel, corr_plane, axpy, dot, leaky_relu, leaky_relu_backward, adam_step};
  return &table;
}

#else

const KernelTable *avx2_kernels() { return nullptr; }

#endif

} // namespace ugodit::simd
