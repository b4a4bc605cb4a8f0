#include "ugodit/data.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>

#include "ugodit/error.hpp"
#include "ugodit/rng.hpp"

namespace ugodit {

std::string to_string(PhantomFamily family) { return family == PhantomFamily::ellipses ? "ellipses" : "texture"; }

PhantomFamily parse_phantom_family(const std::string &name) {
  if (name == "ellipses")
    return PhantomFamily::ellipses;
  if (name == "texture")
    return PhantomFamily::texture;
  throw ConfigError("unknown phantom family '" + name + "' (expected ellipses or texture)");
}

namespace {

constexpr double kPi = std::numbers::pi;

Tensor ellipse_phantom(Rng &rng, int complexity, std::size_t size) {
  Tensor img = Tensor::image(2, size, size);
  const double edge = 0.04;
  struct Ellipse {
    double cx, cy, a, b, cos_t, sin_t, value;
  };
  std::vector<Ellipse> shapes;
  // A body ellipse, then inner structures that add or remove intensity.
  shapes.push_back({rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(0.65, 0.85),
                    rng.uniform(0.7, 0.9), 1.0, 0.0, rng.uniform(0.45, 0.65)});
  const int inner = 2 + 2 * complexity;
  for (int i = 0; i < inner; ++i) {
    const double t = rng.uniform(0.0, kPi);
    const double sign = rng.uniform() < 0.65 ? 1.0 : -1.0;
    shapes.push_back({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0.06, 0.3), rng.uniform(0.06, 0.3),
                      std::cos(t), std::sin(t), sign * rng.uniform(0.15, 0.4)});
  }
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double u = (2.0 * x + 1.0) / size - 1.0;
      const double v = (2.0 * y + 1.0) / size - 1.0;
      double acc = 0.0;
      for (const auto &e : shapes) {
        const double du = u - e.cx, dv = v - e.cy;
        const double p = (du * e.cos_t + dv * e.sin_t) / e.a;
        const double q = (-du * e.sin_t + dv * e.cos_t) / e.b;
        const double r = std::sqrt(p * p + q * q);
        acc += e.value / (1.0 + std::exp((r - 1.0) / edge));
      }
      img.at(0, y, x) = std::clamp(acc, 0.0, 1.0);
    }
  }
  return img;
}

Tensor texture_phantom(Rng &rng, int complexity, std::size_t size) {
  const int kmax = 2 + complexity;
  const int terms = 6 + 4 * complexity;
  struct Wave {
    double kx, ky, phase, amp;
  };
  auto draw = [&](double scale) {
    std::vector<Wave> w;
    for (int j = 0; j < terms; ++j) {
      const int kx = static_cast<int>(std::floor(rng.uniform(-kmax, kmax + 1)));
      const int ky = static_cast<int>(std::floor(rng.uniform(0, kmax + 1)));
      const double mag = std::hypot(kx, ky);
      w.push_back({double(kx), double(ky), rng.uniform(0.0, 2.0 * kPi), scale * rng.uniform(0.5, 1.0) / (1.0 + mag)});
    }
    return w;
  };
  const auto luminance = draw(1.0);
  std::vector<std::vector<Wave>> chroma{draw(0.35), draw(0.35), draw(0.35)};
  const double tint[3] = {rng.uniform(0.8, 1.2), rng.uniform(0.8, 1.2), rng.uniform(0.8, 1.2)};

  auto field = [&](const std::vector<Wave> &ws, double x, double y) {
    double s = 0.0;
    for (const auto &w : ws)
      s += w.amp * std::cos(2.0 * kPi * (w.kx * x + w.ky * y) + w.phase);
    return s;
  };
  Tensor img = Tensor::image(3, size, size);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const double u = double(x) / size, v = double(y) / size;
      const double l = field(luminance, u, v);
      for (std::size_t c = 0; c < 3; ++c)
        img.at(c, y, x) = tint[c] * l + field(chroma[c], u, v);
    }
  const auto [lo, hi] = std::minmax_element(img.storage().begin(), img.storage().end());
  const double a = *lo, span = std::max(*hi - *lo, 1e-12);
  for (double &p : img.storage())
    p = std::clamp(0.05 + 0.9 * (p - a) / span, 0.0, 1.0);
  return img;
}

double luminance(const Tensor &img, std::size_t y, std::size_t x) {
  return 0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) + 0.114 * img.at(2, y, x);
}

// Separable resampling of a square (C, S, S) image to (C, n, n): area
// averaging when shrinking, bilinear when enlarging.
std::vector<double> resample_1d(const std::vector<double> &in, std::size_t n) {
  const std::size_t m = in.size();
  std::vector<double> out(n, 0.0);
  if (n <= m) {
    const double scale = double(m) / n;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = i * scale, b = (i + 1) * scale;
      double acc = 0.0;
      for (std::size_t j = static_cast<std::size_t>(a); j < m && j < b; ++j)
        acc += in[j] * (std::min<double>(b, j + 1) - std::max<double>(a, j));
      out[i] = acc / scale;
    }
  } else {
    const double scale = double(m) / n;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = std::clamp((i + 0.5) * scale - 0.5, 0.0, double(m - 1));
      const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(s), m - 1);
      const std::size_t k = std::min(j + 1, m - 1);
      out[i] = in[j] + (s - j) * (in[k] - in[j]);
    }
  }
  return out;
}

Tensor crop_and_resize(const Tensor &img, std::size_t n) {
  const std::size_t h = img.height(), w = img.width(), s = std::min(h, w);
  const std::size_t oy = (h - s) / 2, ox = (w - s) / 2;
  Tensor out = Tensor::image(img.channels(), n, n);
  std::vector<double> line(s);
  for (std::size_t c = 0; c < img.channels(); ++c) {
    std::vector<std::vector<double>> rows(s);
    for (std::size_t y = 0; y < s; ++y) {
      for (std::size_t x = 0; x < s; ++x)
        line[x] = img.at(c, oy + y, ox + x);
      rows[y] = resample_1d(line, n);
    }
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = 0; y < s; ++y)
        line[y] = rows[y][x];
      const auto col = resample_1d(line, n);
      for (std::size_t y = 0; y < n; ++y)
        out.at(c, y, x) = col[y];
    }
  }
  return out;
}

Tensor to_rgb(const Tensor &img) {
  if (img.channels() == 3)
    return img;
  Tensor out = Tensor::image(3, img.height(), img.width());
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < img.height(); ++y)
      for (std::size_t x = 0; x < img.width(); ++x)
        out.at(c, y, x) = img.at(0, y, x);
  return out;
}

Tensor read_png_file(const std::filesystem::path &path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw InputError("cannot read PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw InputError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  Tensor out = Tensor::image(3, image.height, image.width);
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        out.at(c, y, x) = buffer[(y * image.width + x) * 3 + c] / 255.0;
  return out;
}

// Binary and ASCII PGM / PPM.
Tensor read_pnm_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open " + path.string());
  auto token = [&]() {
    std::string t;
    char ch;
    while (in.get(ch)) {
      if (ch == '#') {
        std::string rest;
        std::getline(in, rest);
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!t.empty())
          break;
      } else {
        t.push_back(ch);
      }
    }
    return t;
  };
  const std::string magic = token();
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6")
    throw InputError(path.string() + " is not a PGM/PPM file");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(token());
    h = std::stoul(token());
    maxval = std::stoul(token());
  } catch (const std::exception &) {
    throw InputError("malformed PNM header in " + path.string());
  }
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535)
    throw InputError("malformed PNM header in " + path.string());
  const std::size_t ch = (magic == "P3" || magic == "P6") ? 3 : 1;
  Tensor out = Tensor::image(ch, h, w);
  const bool binary = magic == "P5" || magic == "P6";
  const std::size_t bytes = maxval > 255 ? 2 : 1;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < ch; ++c) {
        std::size_t v = 0;
        if (binary) {
          unsigned char b[2] = {0, 0};
          in.read(reinterpret_cast<char *>(b), static_cast<std::streamsize>(bytes));
          v = bytes == 2 ? (std::size_t(b[0]) << 8) | b[1] : b[0];
        } else {
          const std::string t = token();
          if (t.empty())
            throw InputError("truncated PNM data in " + path.string());
          v = std::stoul(t);
        }
        if (!in && !(in.eof() && y + 1 == h && x + 1 == w))
          throw InputError("truncated PNM data in " + path.string());
        out.at(c, y, x) = std::min(1.0, double(v) / maxval);
      }
  return out;
}

bool is_supported(const std::filesystem::path &p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

} // namespace

std::vector<Tensor> synthesize_dataset(const PhantomSpec &spec, std::size_t count, std::size_t size) {
  require(spec.complexity >= 1, "phantom complexity must be >= 1");
  require(size >= 4, "phantom size must be >= 4");
  std::vector<Tensor> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(spec.seed, "phantom-" + to_string(spec.family), i));
    out.push_back(spec.family == PhantomFamily::ellipses ? ellipse_phantom(rng, spec.complexity, size)
                                                         : texture_phantom(rng, spec.complexity, size));
  }
  return out;
}

Tensor to_task_layout(const Tensor &image, OperatorKind task) {
  require(image.rank() == 3, "image must be (channels, height, width)");
  const std::size_t c = image.channels(), h = image.height(), w = image.width();
  if (task == OperatorKind::mri) {
    if (c == 2)
      return image;
    Tensor out = Tensor::image(2, h, w);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        out.at(0, y, x) = c == 3 ? luminance(image, y, x) : image.at(0, y, x);
    return out;
  }
  if (c == 3)
    return image;
  require(c == 1 || c == 2, "unsupported channel count " + std::to_string(c));
  Tensor mono = Tensor::image(1, h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      mono.at(0, y, x) =
          c == 2 ? std::min(1.0, std::hypot(image.at(0, y, x), image.at(1, y, x))) : image.at(0, y, x);
  return to_rgb(mono);
}

Tensor read_image(const std::filesystem::path &path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" ? read_png_file(path) : read_pnm_file(path);
}

std::vector<Tensor> ingest_directory(const std::filesystem::path &path, std::size_t size, std::size_t count) {
  std::error_code ec;
  if (!std::filesystem::is_directory(path, ec))
    throw InputError("image directory " + path.string() + " does not exist or is not readable");
  std::vector<std::filesystem::path> files;
  for (const auto &entry : std::filesystem::directory_iterator(path, ec))
    if (entry.is_regular_file() && is_supported(entry.path()))
      files.push_back(entry.path());
  if (ec)
    throw InputError("cannot list " + path.string() + ": " + ec.message());
  std::sort(files.begin(), files.end(),
            [](const auto &a, const auto &b) { return a.filename().string() < b.filename().string(); });
  if (files.size() < count)
    throw InputError("directory " + path.string() + " holds " + std::to_string(files.size()) +
                     " images, " + std::to_string(count) + " requested");
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(to_rgb(crop_and_resize(read_image(files[i]), size)));
  return out;
}

void write_png(const std::filesystem::path &path, const Tensor &image) {
  require(image.rank() == 3, "write_png expects (channels, height, width)");
  const std::size_t c = image.channels(), h = image.height(), w = image.width();
  require(c >= 1 && c <= 3, "write_png supports 1 to 3 channels");
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(w);
  png.height = static_cast<png_uint_32>(h);
  png.format = c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t out_c = c == 3 ? 3 : 1;
  std::vector<png_byte> buffer(h * w * out_c);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t k = 0; k < out_c; ++k) {
        double v = c == 2 ? std::hypot(image.at(0, y, x), image.at(1, y, x)) : image.at(k, y, x);
        if (!std::isfinite(v))
          v = 0.0;
        buffer[(y * w + x) * out_c + k] = static_cast<png_byte>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
  if (!png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr))
    throw InputError("cannot write PNG " + path.string() + ": " + png.message);
}

} // namespace ugodit
