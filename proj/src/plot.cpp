#include "ugodit/plot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>

#include "ugodit/data.hpp"
#include "ugodit/error.hpp"

namespace ugodit {

namespace {

// Each glyph is 7 rows of 5 bits, most significant bit on the left.
const std::map<char, std::array<std::uint8_t, 7>> &font() {
  static const std::map<char, std::array<std::uint8_t, 7>> f{
      {' ', {0, 0, 0, 0, 0, 0, 0}},
      {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
      {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
      {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
      {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
      {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
      {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
      {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
      {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
      {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
      {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
      {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
      {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
      {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
      {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
      {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
      {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
      {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
      {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
      {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
      {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
      {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
      {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
      {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
      {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
      {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
      {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
      {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
      {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}},
      {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
      {'.', {0, 0, 0, 0, 0, 0x0C, 0x0C}},
      {',', {0, 0, 0, 0, 0x0C, 0x04, 0x08}},
      {'-', {0, 0, 0, 0x1F, 0, 0, 0}},
      {'+', {0, 0x04, 0x04, 0x1F, 0x04, 0x04, 0}},
      {'_', {0, 0, 0, 0, 0, 0, 0x1F}},
      {'=', {0, 0, 0x1F, 0, 0x1F, 0, 0}},
      {':', {0, 0x0C, 0x0C, 0, 0x0C, 0x0C, 0}},
      {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
      {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
      {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
      {'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}},
      {'*', {0, 0x04, 0x15, 0x0E, 0x15, 0x04, 0}},
      {'?', {0x0E, 0x11, 0x01, 0x02, 0x04, 0, 0x04}},
  };
  return f;
}

constexpr Rgb kPalette[] = {{31, 119, 180}, {214, 39, 40},  {44, 160, 44},  {255, 127, 14}, {148, 103, 189},
                            {140, 86, 75},  {227, 119, 194}, {127, 127, 127}, {188, 189, 34}, {23, 190, 207}};

std::string format_tick(double v) {
  char buf[32];
  if (std::abs(v) >= 1000 || v == std::floor(v))
    std::snprintf(buf, sizeof buf, "%.0f", v);
  else
    std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

// Roughly five round-numbered ticks covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double span = std::max(hi - lo, 1e-12);
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step)
    out.push_back(t);
  return out;
}

} // namespace

Canvas::Canvas(std::size_t width, std::size_t height, Rgb background)
    : width_(width), height_(height), pixels_(width * height, background) {}

void Canvas::set(long x, long y, Rgb c) {
  if (x >= 0 && y >= 0 && static_cast<std::size_t>(x) < width_ && static_cast<std::size_t>(y) < height_)
    pixels_[static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x)] = c;
}

void Canvas::line(double x0, double y0, double x1, double y1, Rgb c, int thickness) {
  const double len = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
  const int steps = std::max(1, static_cast<int>(std::ceil(len)));
  for (int i = 0; i <= steps; ++i) {
    const double t = double(i) / steps;
    const long x = std::lround(x0 + t * (x1 - x0)), y = std::lround(y0 + t * (y1 - y0));
    for (int dy = 0; dy < thickness; ++dy)
      for (int dx = 0; dx < thickness; ++dx)
        set(x + dx - thickness / 2, y + dy - thickness / 2, c);
  }
}

void Canvas::rect(long x0, long y0, long x1, long y1, Rgb c) {
  line(x0, y0, x1, y0, c);
  line(x1, y0, x1, y1, c);
  line(x1, y1, x0, y1, c);
  line(x0, y1, x0, y0, c);
}

void Canvas::fill_rect(long x0, long y0, long x1, long y1, Rgb c) {
  for (long y = y0; y <= y1; ++y)
    for (long x = x0; x <= x1; ++x)
      set(x, y, c);
}

long Canvas::text_width(const std::string &s, int scale) { return static_cast<long>(s.size()) * 6 * scale; }

void Canvas::text(long x, long y, const std::string &s, Rgb c, int scale) {
  const auto &f = font();
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto it = f.find(static_cast<char>(std::toupper(static_cast<unsigned char>(s[i]))));
    if (it == f.end())
      it = f.find('?');
    for (int row = 0; row < 7; ++row)
      for (int col = 0; col < 5; ++col)
        if (it->second[row] & (0x10 >> col))
          fill_rect(x + (long(i) * 6 + col) * scale, y + row * scale, x + (long(i) * 6 + col) * scale + scale - 1,
                    y + row * scale + scale - 1, c);
  }
}

void Canvas::blit(const Tensor &image, long x, long y, int scale) {
  const std::size_t ch = image.channels(), h = image.height(), w = image.width();
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t q = 0; q < w; ++q) {
      Rgb c;
      for (std::size_t k = 0; k < 3; ++k) {
        double v = ch == 2 ? std::hypot(image.at(0, r, q), image.at(1, r, q)) : image.at(ch == 3 ? k : 0, r, q);
        if (!std::isfinite(v))
          v = 0.0;
        c[k] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
      fill_rect(x + long(q) * scale, y + long(r) * scale, x + long(q) * scale + scale - 1,
                y + long(r) * scale + scale - 1, c);
    }
}

Tensor Canvas::to_tensor() const {
  Tensor t = Tensor::image(3, height_, width_);
  for (std::size_t y = 0; y < height_; ++y)
    for (std::size_t x = 0; x < width_; ++x)
      for (std::size_t k = 0; k < 3; ++k)
        t.at(k, y, x) = pixels_[y * width_ + x][k] / 255.0;
  return t;
}

void Canvas::save_png(const std::filesystem::path &path) const { write_png(path, to_tensor()); }

void plot_lines(const std::filesystem::path &path, const std::vector<Series> &series, const std::string &title,
                const std::string &x_label, const std::string &y_label) {
  const long W = 720, H = 480, left = 70, right = 20, top = 40, bottom = 60;
  Canvas cv(W, H);
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto &s : series) {
    require(s.x.size() == s.y.size(), "series '" + s.label + "' has mismatched x and y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]))
        continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax - xmin < 1e-12)
    xmax = xmin + 1;
  const double pad = std::max(1e-6, 0.05 * (ymax - ymin));
  ymin -= pad;
  ymax += pad;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

  const Rgb axis{0, 0, 0}, grid{225, 225, 225};
  for (double t : ticks(ymin, ymax)) {
    cv.line(left, py(t), left + pw, py(t), grid);
    const std::string s = format_tick(t);
    cv.text(left - 6 - Canvas::text_width(s), std::lround(py(t)) - 3, s, axis);
  }
  for (double t : ticks(xmin, xmax)) {
    cv.line(px(t), top, px(t), top + ph, grid);
    const std::string s = format_tick(t);
    cv.text(std::lround(px(t)) - Canvas::text_width(s) / 2, top + long(ph) + 6, s, axis);
  }
  cv.rect(left, top, left + long(pw), top + long(ph), axis);
  cv.text(W / 2 - Canvas::text_width(title, 2) / 2, 10, title, axis, 2);
  cv.text(left + long(pw) / 2 - Canvas::text_width(x_label) / 2, H - 22, x_label, axis);
  cv.text(6, top - 14, y_label, axis);

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Rgb c = kPalette[k % std::size(kPalette)];
    const auto &s = series[k];
    for (std::size_t i = 1; i < s.x.size(); ++i)
      if (std::isfinite(s.y[i - 1]) && std::isfinite(s.y[i]))
        cv.line(px(s.x[i - 1]), py(s.y[i - 1]), px(s.x[i]), py(s.y[i]), c, 2);
    const long ly = top + 8 + long(k) * 12;
    const long lx = left + long(pw) - 10 - Canvas::text_width(s.label) - 20;
    cv.fill_rect(lx, ly + 2, lx + 14, ly + 4, c);
    cv.text(lx + 20, ly, s.label, axis);
  }
  cv.save_png(path);
}

void plot_image_row(const std::filesystem::path &path, const std::vector<GridCell> &cells, int scale) {
  require(!cells.empty(), "image row needs at least one image");
  long cell_w = 0, cell_h = 0;
  for (const auto &c : cells) {
    cell_w = std::max(cell_w, long(c.image.width()) * scale);
    cell_h = std::max(cell_h, long(c.image.height()) * scale);
    cell_w = std::max(cell_w, Canvas::text_width(c.label));
  }
  const long gap = 8, label_h = 14;
  Canvas cv(static_cast<std::size_t>(gap + long(cells.size()) * (cell_w + gap)),
            static_cast<std::size_t>(gap + label_h + cell_h + gap));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const long x = gap + long(i) * (cell_w + gap);
    cv.text(x, gap, cells[i].label, {0, 0, 0});
    cv.blit(cells[i].image, x, gap + label_h, scale);
  }
  cv.save_png(path);
}

} // namespace ugodit
