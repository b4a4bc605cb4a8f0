#include "ugodit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ugodit/error.hpp"
#include "ugodit/fft.hpp"
#include "ugodit/operators.hpp"

namespace ugodit {

namespace {

double peak_of(const Tensor &x_star) {
  const double peak = *std::max_element(x_star.storage().begin(), x_star.storage().end());
  return peak > 0.0 ? peak : 1.0;
}

// 'valid' separable filtering of one plane with the given taps.
std::vector<double> filter_valid(const double *plane, std::size_t h, std::size_t w, const std::vector<double> &taps) {
  const std::size_t k = taps.size(), oh = h - k + 1, ow = w - k + 1;
  std::vector<double> rows(h * ow);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t)
        s += taps[t] * plane[y * w + x + t];
      rows[y * ow + x] = s;
    }
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t)
        s += taps[t] * rows[(y + t) * ow + x];
      out[y * ow + x] = s;
    }
  return out;
}

} // namespace

double psnr(const Tensor &x_hat, const Tensor &x_star) {
  require(x_hat.shape() == x_star.shape(), "psnr needs equal shapes, got " + shape_string(x_hat.shape()) + " and " +
                                               shape_string(x_star.shape()));
  require(!x_star.empty(), "psnr of empty images");
  double se = 0.0;
  for (std::size_t i = 0; i < x_hat.size(); ++i) {
    const double d = x_hat[i] - x_star[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(x_hat.size());
  if (mse == 0.0)
    return kPsnrCapDb;
  const double peak = peak_of(x_star);
  return std::min(kPsnrCapDb, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const Tensor &x_hat, const Tensor &x_star) {
  require(x_hat.shape() == x_star.shape() && x_hat.rank() == 3, "ssim needs equal (C, H, W) shapes");
  const std::size_t c = x_hat.channels(), h = x_hat.height(), w = x_hat.width();
  require(h >= kSsimWindow && w >= kSsimWindow, "image " + shape_string(x_hat.shape()) + " is smaller than the " +
                                                    std::to_string(kSsimWindow) + "x" +
                                                    std::to_string(kSsimWindow) + " SSIM window");
  const double range = peak_of(x_star);
  const double c1 = (kSsimK1 * range) * (kSsimK1 * range);
  const double c2 = (kSsimK2 * range) * (kSsimK2 * range);
  const auto taps = gaussian_taps(kSsimSigma, kSsimWindow / 2);

  double total = 0.0;
  std::size_t count = 0;
  std::vector<double> xx(h * w), yy(h * w), xy(h * w);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double *a = x_hat.plane(ch);
    const double *b = x_star.plane(ch);
    for (std::size_t i = 0; i < h * w; ++i) {
      xx[i] = a[i] * a[i];
      yy[i] = b[i] * b[i];
      xy[i] = a[i] * b[i];
    }
    const auto mu_a = filter_valid(a, h, w, taps);
    const auto mu_b = filter_valid(b, h, w, taps);
    const auto e_aa = filter_valid(xx.data(), h, w, taps);
    const auto e_bb = filter_valid(yy.data(), h, w, taps);
    const auto e_ab = filter_valid(xy.data(), h, w, taps);
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double va = e_aa[i] - mu_a[i] * mu_a[i];
      const double vb = e_bb[i] - mu_b[i] * mu_b[i];
      const double cov = e_ab[i] - mu_a[i] * mu_b[i];
      total += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
               ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

Tensor to_magnitude(const Tensor &x) {
  require(x.rank() == 3 && x.channels() == 2, "magnitude conversion needs a 2-channel complex image");
  const std::size_t n = x.height() * x.width();
  Tensor m({1, x.height(), x.width()});
  for (std::size_t i = 0; i < n; ++i)
    m[i] = std::hypot(x[i], x[n + i]);
  return m;
}

ImageQuality evaluate_quality(OperatorKind kind, const Tensor &x_hat, const Tensor &x_star) {
  if (kind == OperatorKind::mri) {
    const Tensor a = to_magnitude(x_hat), b = to_magnitude(x_star);
    return {psnr(a, b), ssim(a, b)};
  }
  return {psnr(x_hat, x_star), ssim(x_hat, x_star)};
}

double task_psnr(OperatorKind kind, const Tensor &x_hat, const Tensor &x_star) {
  if (kind == OperatorKind::mri)
    return psnr(to_magnitude(x_hat), to_magnitude(x_star));
  return psnr(x_hat, x_star);
}

FeatureSpectrum feature_spectrum(const Tensor &features, double center_fraction) {
  require(features.rank() == 3, "feature maps must be (C, H, W)");
  const std::size_t c = features.channels(), h = features.height(), w = features.width();
  Tensor mags({c, h, w});
  std::vector<Complex> buf(h * w);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double *p = features.plane(ch);
    for (std::size_t i = 0; i < h * w; ++i)
      buf[i] = Complex(p[i], 0.0);
    fft2_unitary(buf, h, w, false);
    fftshift2(buf, h, w);
    double *m = mags.plane(ch);
    for (std::size_t i = 0; i < h * w; ++i)
      m[i] = std::abs(buf[i]);
  }
  return FeatureSpectrum{std::move(mags), center_fraction};
}

double lf_ratio(const FeatureSpectrum &spectrum) {
  const double cf = spectrum.center_fraction;
  if (!(cf > 0.0 && cf <= 1.0))
    throw ConfigError("center fraction must lie in (0, 1]");
  const Tensor &m = spectrum.magnitudes;
  const std::size_t c = m.channels(), h = m.height(), w = m.width();
  const std::size_t sh = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cf * static_cast<double>(h))));
  const std::size_t sw = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cf * static_cast<double>(w))));
  const std::size_t y0 = h / 2 - sh / 2, x0 = w / 2 - sw / 2;
  double inner = 0.0, total = 0.0;
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double v = m.at(ch, y, x);
        total += v;
        if (y >= y0 && y < y0 + sh && x >= x0 && x < x0 + sw)
          inner += v;
      }
  if (!(total > 0.0))
    throw UndefinedRatioError("low-frequency ratio is undefined for all-zero feature maps");
  return inner / total;
}

std::vector<ProbeEntry> spectral_probe(const ArchitectureSpec &spec, const EncoderParams &phi,
                                       const DecoderParams &psi, const Tensor &z, double center_fraction) {
  EncoderTrace trace;
  const LatentBundle latent = encode(spec, phi, z, &trace);
  const Tensor out = decode(spec, psi, latent);
  std::vector<ProbeEntry> report;
  for (std::size_t l = 0; l < trace.activations.size(); ++l)
    report.push_back({"encoder_" + std::to_string(l + 1), lf_ratio(feature_spectrum(trace.activations[l], center_fraction))});
  report.push_back({"decoder_output", lf_ratio(feature_spectrum(out, center_fraction))});
  return report;
}

void MetricTrace::append(const TraceRow &row) {
  require(rows_.empty() || row.iteration > rows_.back().iteration, "trace iterations must be strictly increasing");
  require(std::isfinite(row.data_fit) && std::isfinite(row.autoenc), "trace values must be finite");
  require(!row.psnr_db || std::isfinite(*row.psnr_db), "trace PSNR must be finite");
  require(!row.ssim || std::isfinite(*row.ssim), "trace SSIM must be finite");
  rows_.push_back(row);
}

std::vector<TraceRow> MetricTrace::round_rows() const {
  std::vector<TraceRow> out;
  std::copy_if(rows_.begin(), rows_.end(), std::back_inserter(out), [](const TraceRow &r) { return r.round_end; });
  return out;
}

std::string to_string(TraceRole role) { return role == TraceRole::train ? "train" : "test"; }

} // namespace ugodit
