#include "ugodit/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ugodit/error.hpp"
#include "ugodit/fft.hpp"
#include "ugodit/rng.hpp"

namespace ugodit {

std::size_t CartesianMask::sampled_count() const {
  return static_cast<std::size_t>(std::count(sampled_columns.begin(), sampled_columns.end(), std::uint8_t{1}));
}

CartesianMask make_cartesian_mask(std::size_t width, int acceleration_factor, double acs_fraction,
                                  std::uint64_t seed) {
  if (acceleration_factor < 1)
    throw ConfigError("acceleration factor must be >= 1, got " + std::to_string(acceleration_factor));
  if (!(acs_fraction > 0.0 && acs_fraction <= 1.0))
    throw ConfigError("acs fraction must lie in (0, 1]");
  if (width == 0)
    throw ConfigError("mask width must be positive");
  const auto budget = static_cast<std::size_t>(std::lround(static_cast<double>(width) / acceleration_factor));
  const auto acs = static_cast<std::size_t>(std::lround(acs_fraction * static_cast<double>(width)));
  if (acs > budget)
    throw ConfigError("ACS band of " + std::to_string(acs) + " columns exceeds the sampling budget of " +
                      std::to_string(budget));

  CartesianMask mask;
  mask.acceleration_factor = acceleration_factor;
  mask.acs_width = acs;
  mask.sampled_columns.assign(width, 0);
  const std::size_t start = width / 2 - acs / 2;
  for (std::size_t c = start; c < start + acs; ++c)
    mask.sampled_columns[c] = 1;

  std::vector<std::size_t> pool;
  for (std::size_t c = 0; c < width; ++c)
    if (!mask.sampled_columns[c])
      pool.push_back(c);
  // Partial Fisher-Yates: the first (budget - acs) entries become a uniform
  // sample without replacement.
  Rng rng(derive_seed(seed, "cartesian-mask"));
  const std::size_t extra = budget - acs;
  for (std::size_t i = 0; i < extra; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
    mask.sampled_columns[pool[i]] = 1;
  }
  return mask;
}

SensitivityMaps make_sensitivity_maps(std::size_t coils, std::size_t height, std::size_t width, std::uint64_t seed) {
  if (coils < 1)
    throw ConfigError("sensitivity maps need at least one coil");
  require(height > 0 && width > 0, "sensitivity map dimensions must be positive");
  Rng rng(derive_seed(seed, "sensitivity-maps"));
  Tensor maps({coils, 2, height, width});
  const double cy = 0.5 * static_cast<double>(height);
  const double cx = 0.5 * static_cast<double>(width);
  const double extent = static_cast<double>(std::max(height, width));
  const double radius = 0.6 * extent;
  const double spread = 0.55 * extent;
  const double plane = static_cast<double>(height * width);

  for (std::size_t c = 0; c < coils; ++c) {
    const double angle = 2.0 * std::numbers::pi * (static_cast<double>(c) + 0.25 * rng.uniform(-1.0, 1.0)) /
                         static_cast<double>(coils);
    const double py = cy + radius * std::sin(angle);
    const double px = cx + radius * std::cos(angle);
    // Coil 0 is the phase reference.
    const double ramp_y = c == 0 ? 0.0 : rng.uniform(-1.0, 1.0);
    const double ramp_x = c == 0 ? 0.0 : rng.uniform(-1.0, 1.0);
    const double offset = c == 0 ? 0.0 : rng.uniform(-0.5, 0.5) * std::numbers::pi;
    double *re = maps.data() + (c * 2) * static_cast<std::size_t>(plane);
    double *im = re + static_cast<std::size_t>(plane);
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const double dy = static_cast<double>(y) - py;
        const double dx = static_cast<double>(x) - px;
        const double mag = std::exp(-(dy * dy + dx * dx) / (2.0 * spread * spread));
        const double phase = offset + ramp_y * (static_cast<double>(y) - cy) / static_cast<double>(height) +
                             ramp_x * (static_cast<double>(x) - cx) / static_cast<double>(width);
        re[y * width + x] = mag * std::cos(phase);
        im[y * width + x] = mag * std::sin(phase);
      }
    }
  }

  const std::size_t n = height * width;
  for (std::size_t p = 0; p < n; ++p) {
    double energy = 0.0;
    for (std::size_t c = 0; c < coils; ++c) {
      const double re = maps[(c * 2) * n + p];
      const double im = maps[(c * 2 + 1) * n + p];
      energy += re * re + im * im;
    }
    const double inv = 1.0 / std::sqrt(energy);
    for (std::size_t c = 0; c < coils; ++c) {
      maps[(c * 2) * n + p] *= inv;
      maps[(c * 2 + 1) * n + p] *= inv;
    }
  }
  return SensitivityMaps{std::move(maps)};
}

std::string to_string(OperatorKind kind) {
  switch (kind) {
  case OperatorKind::mri:
    return "mri";
  case OperatorKind::sr:
    return "sr";
  case OperatorKind::ndb:
    return "ndb";
  }
  return "?";
}

OperatorKind parse_operator_kind(const std::string &name) {
  if (name == "mri")
    return OperatorKind::mri;
  if (name == "sr")
    return OperatorKind::sr;
  if (name == "ndb")
    return OperatorKind::ndb;
  throw ConfigError("unknown task '" + name + "' (expected mri, sr, or ndb)");
}

std::vector<double> gaussian_taps(double sigma, std::size_t radius) {
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(radius);
    taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += taps[i];
  }
  for (double &t : taps)
    t /= sum;
  return taps;
}

namespace {

std::string make_id(const MriOperator &op) {
  std::uint64_t h = fnv1a(op.mask.sampled_columns.data(), op.mask.sampled_columns.size());
  h = checksum(op.maps.maps, h);
  std::ostringstream s;
  s << "mri-" << std::hex << h;
  return s.str();
}

std::string make_id(const SrOperator &op) { return "sr-x" + std::to_string(op.factor); }

std::string make_id(const NdbOperator &op) {
  std::ostringstream s;
  s << "ndb-g" << op.gamma << "-s" << op.blur_sigma << "-r" << op.kernel_radius;
  return s.str();
}

// ---- MRI: y_c = M F (S_c x) ----
// k-space is stored centered: the zero frequency sits at (h/2, w/2), the
// layout the mask columns refer to.

Tensor mri_apply(const MriOperator &op, const Tensor &x) {
  const std::size_t coils = op.maps.coils(), h = op.maps.height(), w = op.maps.width(), n = h * w;
  Tensor y({coils, 2, h, w});
  std::vector<Complex> buf(n);
  const double *xr = x.plane(0);
  const double *xi = x.plane(1);
  for (std::size_t c = 0; c < coils; ++c) {
    const double *sr = op.maps.maps.data() + (c * 2) * n;
    const double *si = sr + n;
    for (std::size_t p = 0; p < n; ++p)
      buf[p] = Complex(sr[p], si[p]) * Complex(xr[p], xi[p]);
    fft2_unitary(buf, h, w, false);
    double *yr = y.data() + (c * 2) * n;
    double *yi = yr + n;
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t col = 0; col < w; ++col) {
        const std::size_t sc = (col + w / 2) % w;
        if (op.mask.sampled_columns[sc]) {
          const std::size_t q = ((r + h / 2) % h) * w + sc;
          yr[q] = buf[r * w + col].real();
          yi[q] = buf[r * w + col].imag();
        }
      }
  }
  return y;
}

Tensor mri_adjoint(const MriOperator &op, const Tensor &y) {
  const std::size_t coils = op.maps.coils(), h = op.maps.height(), w = op.maps.width(), n = h * w;
  Tensor x({2, h, w});
  std::vector<Complex> buf(n);
  for (std::size_t c = 0; c < coils; ++c) {
    const double *yr = y.data() + (c * 2) * n;
    const double *yi = yr + n;
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t col = 0; col < w; ++col) {
        const std::size_t sc = (col + w / 2) % w;
        const std::size_t q = ((r + h / 2) % h) * w + sc;
        buf[r * w + col] = op.mask.sampled_columns[sc] ? Complex(yr[q], yi[q]) : Complex(0.0, 0.0);
      }
    fft2_unitary(buf, h, w, true);
    const double *sr = op.maps.maps.data() + (c * 2) * n;
    const double *si = sr + n;
    for (std::size_t p = 0; p < n; ++p) {
      const Complex v = std::conj(Complex(sr[p], si[p])) * buf[p];
      x[p] += v.real();
      x[n + p] += v.imag();
    }
  }
  return x;
}

// ---- SR: block average ----

Tensor sr_apply(const SrOperator &op, const Tensor &x) {
  const std::size_t f = op.factor, c = x.channels(), h = x.height() / f, w = x.width() / f;
  Tensor y({c, h, w});
  const double inv = 1.0 / static_cast<double>(f * f);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t col = 0; col < w; ++col) {
        double s = 0.0;
        for (std::size_t dy = 0; dy < f; ++dy)
          for (std::size_t dx = 0; dx < f; ++dx)
            s += x.at(ch, r * f + dy, col * f + dx);
        y.at(ch, r, col) = s * inv;
      }
  return y;
}

Tensor sr_adjoint(const SrOperator &op, const Tensor &y) {
  const std::size_t f = op.factor, c = y.channels();
  Tensor x({c, y.height() * f, y.width() * f});
  const double inv = 1.0 / static_cast<double>(f * f);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t r = 0; r < x.height(); ++r)
      for (std::size_t col = 0; col < x.width(); ++col)
        x.at(ch, r, col) = y.at(ch, r / f, col / f) * inv;
  return x;
}

// ---- NDB ----

// Separable blur with replicated borders, applied along one axis.
void blur_axis(const std::vector<double> &taps, const Tensor &in, Tensor &out, bool vertical) {
  const std::size_t c = in.channels(), h = in.height(), w = in.width();
  const auto r = static_cast<long>(taps.size() / 2);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double s = 0.0;
        for (long t = -r; t <= r; ++t) {
          const long yy = vertical ? std::clamp(static_cast<long>(y) + t, 0L, static_cast<long>(h) - 1) : long(y);
          const long xx = vertical ? long(x) : std::clamp(static_cast<long>(x) + t, 0L, static_cast<long>(w) - 1);
          s += taps[static_cast<std::size_t>(t + r)] * in.at(ch, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
        }
        out.at(ch, y, x) = s;
      }
}

// Transpose of blur_axis.
void blur_axis_transpose(const std::vector<double> &taps, const Tensor &g, Tensor &out, bool vertical) {
  const std::size_t c = g.channels(), h = g.height(), w = g.width();
  const auto r = static_cast<long>(taps.size() / 2);
  out.fill(0.0);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double gv = g.at(ch, y, x);
        for (long t = -r; t <= r; ++t) {
          const long yy = vertical ? std::clamp(static_cast<long>(y) + t, 0L, static_cast<long>(h) - 1) : long(y);
          const long xx = vertical ? long(x) : std::clamp(static_cast<long>(x) + t, 0L, static_cast<long>(w) - 1);
          out.at(ch, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)) +=
              taps[static_cast<std::size_t>(t + r)] * gv;
        }
      }
}

constexpr double kNdbFloor = 1e-12;

Tensor ndb_blurred_power(const NdbOperator &op, const Tensor &x) {
  Tensor u(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    u[i] = std::pow(std::max(x[i], 0.0), op.gamma);
  const auto taps = gaussian_taps(op.blur_sigma, op.kernel_radius);
  Tensor tmp(x.shape()), s(x.shape());
  blur_axis(taps, u, tmp, false);
  blur_axis(taps, tmp, s, true);
  return s;
}

Tensor ndb_apply(const NdbOperator &op, const Tensor &x) {
  Tensor s = ndb_blurred_power(op, x);
  for (double &v : s.storage())
    v = std::pow(std::max(v, 0.0), 1.0 / op.gamma);
  return s;
}

Tensor ndb_pullback(const NdbOperator &op, const Tensor &x, const Tensor &g) {
  const Tensor s = ndb_blurred_power(op, x);
  Tensor ds(x.shape());
  for (std::size_t i = 0; i < s.size(); ++i)
    ds[i] = g[i] * std::pow(std::max(s[i], kNdbFloor), 1.0 / op.gamma - 1.0) / op.gamma;
  const auto taps = gaussian_taps(op.blur_sigma, op.kernel_radius);
  Tensor tmp(x.shape()), du(x.shape());
  blur_axis_transpose(taps, ds, tmp, true);
  blur_axis_transpose(taps, tmp, du, false);
  Tensor dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    dx[i] = x[i] > 0.0 ? du[i] * op.gamma * std::pow(x[i], op.gamma - 1.0) : 0.0;
  return dx;
}

} // namespace

ForwardOperator::ForwardOperator(MriOperator op) : op_(std::move(op)) {
  const auto &m = std::get<MriOperator>(op_);
  require(m.mask.width() == m.maps.width(), "mask width does not match sensitivity map width");
  id_ = make_id(m);
}

ForwardOperator::ForwardOperator(SrOperator op) : op_(op) {
  if (op.factor < 1)
    throw ConfigError("super-resolution factor must be >= 1");
  id_ = make_id(op);
}

ForwardOperator::ForwardOperator(NdbOperator op) : op_(op) {
  if (!(op.gamma > 0.0) || !(op.blur_sigma > 0.0) || op.kernel_radius < 1)
    throw ConfigError("deblur operator needs gamma > 0, blur sigma > 0, and kernel radius >= 1");
  id_ = make_id(op);
}

OperatorKind ForwardOperator::kind() const {
  return static_cast<OperatorKind>(op_.index());
}

Shape ForwardOperator::measurement_shape(const Shape &s) const {
  require(s.size() == 3, "forward operator expects a (C, H, W) image, got " + shape_string(s));
  switch (kind()) {
  case OperatorKind::mri: {
    const auto &m = std::get<MriOperator>(op_);
    require(s[0] == 2 && s[1] == m.maps.height() && s[2] == m.maps.width(),
            "MRI operator expects image shape (2, " + std::to_string(m.maps.height()) + ", " +
                std::to_string(m.maps.width()) + "), got " + shape_string(s));
    return {m.maps.coils(), 2, s[1], s[2]};
  }
  case OperatorKind::sr: {
    const std::size_t f = std::get<SrOperator>(op_).factor;
    require(s[1] % f == 0 && s[2] % f == 0,
            "super-resolution factor " + std::to_string(f) + " does not divide " + shape_string(s));
    return {s[0], s[1] / f, s[2] / f};
  }
  case OperatorKind::ndb:
    return s;
  }
  return s;
}

Shape ForwardOperator::image_shape(const Shape &s) const {
  switch (kind()) {
  case OperatorKind::mri: {
    const auto &m = std::get<MriOperator>(op_);
    require(s.size() == 4 && s[0] == m.maps.coils() && s[1] == 2 && s[2] == m.maps.height() && s[3] == m.maps.width(),
            "MRI measurement has shape " + shape_string(s) + ", expected (" + std::to_string(m.maps.coils()) +
                ", 2, " + std::to_string(m.maps.height()) + ", " + std::to_string(m.maps.width()) + ")");
    return {2, s[2], s[3]};
  }
  case OperatorKind::sr: {
    require(s.size() == 3, "super-resolution measurement must be rank 3, got " + shape_string(s));
    const std::size_t f = std::get<SrOperator>(op_).factor;
    return {s[0], s[1] * f, s[2] * f};
  }
  case OperatorKind::ndb:
    require(s.size() == 3, "deblur measurement must be rank 3, got " + shape_string(s));
    return s;
  }
  return s;
}

Tensor ForwardOperator::apply(const Tensor &x) const {
  measurement_shape(x.shape());
  return std::visit(
      [&](const auto &op) -> Tensor {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, MriOperator>)
          return mri_apply(op, x);
        else if constexpr (std::is_same_v<T, SrOperator>)
          return sr_apply(op, x);
        else
          return ndb_apply(op, x);
      },
      op_);
}

Tensor ForwardOperator::adjoint(const Tensor &y) const {
  image_shape(y.shape());
  return std::visit(
      [&](const auto &op) -> Tensor {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, MriOperator>)
          return mri_adjoint(op, y);
        else if constexpr (std::is_same_v<T, SrOperator>)
          return sr_adjoint(op, y);
        else
          return y;
      },
      op_);
}

Tensor ForwardOperator::pullback(const Tensor &x, const Tensor &g) const {
  require(g.shape() == measurement_shape(x.shape()), "pullback cotangent has the wrong shape");
  if (kind() == OperatorKind::ndb)
    return ndb_pullback(std::get<NdbOperator>(op_), x, g);
  return adjoint(g);
}

Measurement apply_forward(const ForwardOperator &op, const Tensor &x) {
  return Measurement{op.apply(x), 0.0, op.id()};
}

Tensor apply_adjoint(const ForwardOperator &op, const Measurement &y) {
  require(y.operator_id.empty() || y.operator_id == op.id(),
          "measurement was produced by operator " + y.operator_id + ", not " + op.id());
  return op.adjoint(y.y);
}

Measurement simulate_measurement(const Tensor &x_star, const ForwardOperator &op, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0))
    throw ConfigError("noise sigma must be >= 0");
  Measurement m = apply_forward(op, x_star);
  m.noise_sigma = sigma;
  if (sigma == 0.0)
    return m;
  Rng rng(derive_seed(seed, "measurement-noise"));
  Tensor &y = m.y;
  if (op.kind() == OperatorKind::mri) {
    const auto &mask = std::get<MriOperator>(op.params()).mask;
    const std::size_t w = y.dim(3);
    for (std::size_t i = 0; i < y.size(); ++i)
      if (mask.sampled_columns[i % w])
        y[i] += sigma * rng.normal();
  } else {
    for (double &v : y.storage())
      v += sigma * rng.normal();
  }
  return m;
}

} // namespace ugodit
