#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ugodit/tensor.hpp"

namespace ugodit {

using Rgb = std::array<std::uint8_t, 3>;

// Minimal raster canvas with a built-in 5x7 font (upper-case letters,
// digits and a little punctuation; lower case is drawn as upper case).
class Canvas {
public:
  Canvas(std::size_t width, std::size_t height, Rgb background = {255, 255, 255});

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }

  void set(long x, long y, Rgb c);
  void line(double x0, double y0, double x1, double y1, Rgb c, int thickness = 1);
  void rect(long x0, long y0, long x1, long y1, Rgb c);
  void fill_rect(long x0, long y0, long x1, long y1, Rgb c);
  void text(long x, long y, const std::string &s, Rgb c, int scale = 1);
  static long text_width(const std::string &s, int scale = 1);
  // Blits an image (1-3 channels, values clamped to [0, 1]; two channels are
  // shown as magnitude) scaled by an integer factor.
  void blit(const Tensor &image, long x, long y, int scale = 1);

  Tensor to_tensor() const;
  void save_png(const std::filesystem::path &path) const;

private:
  std::size_t width_, height_;
  std::vector<Rgb> pixels_;
};

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

void plot_lines(const std::filesystem::path &path, const std::vector<Series> &series, const std::string &title,
                const std::string &x_label, const std::string &y_label);

struct GridCell {
  std::string label;
  Tensor image;
};

// One row of labelled images.
void plot_image_row(const std::filesystem::path &path, const std::vector<GridCell> &cells, int scale = 2);

} // namespace ugodit
