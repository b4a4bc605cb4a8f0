#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ugodit/operators.hpp"
#include "ugodit/tensor.hpp"

namespace ugodit {

enum class PhantomFamily { ellipses, texture };

std::string to_string(PhantomFamily family);
PhantomFamily parse_phantom_family(const std::string &name);

struct PhantomSpec {
  PhantomFamily family = PhantomFamily::ellipses;
  int complexity = 3; // >= 1; more shapes / higher frequencies
  std::uint64_t seed = 0;
};

// ellipses: smooth overlapping ellipses, returned as (2, size, size) complex
// images with zero imaginary part. texture: band-limited RGB fields, (3,
// size, size). Values lie in [0, 1]; the result depends only on the
// arguments.
std::vector<Tensor> synthesize_dataset(const PhantomSpec &spec, std::size_t count, std::size_t size);

// Converts an image to the channel layout a task expects: MRI uses (real,
// imaginary) with the luminance as real part, SR and NDB use RGB.
Tensor to_task_layout(const Tensor &image, OperatorKind task);

// Reads PNG / PNM files in lexicographic order, center-crops each to a square,
// resizes to size x size (area averaging / bilinear) and returns (3, size,
// size) images in [0, 1]. Throws InputError when the directory is missing or
// holds fewer than count readable images.
std::vector<Tensor> ingest_directory(const std::filesystem::path &path, std::size_t size, std::size_t count);

// Raster I/O for (1|2|3, H, W) images in [0, 1]; two-channel images are
// written as magnitude.
Tensor read_image(const std::filesystem::path &path);
void write_png(const std::filesystem::path &path, const Tensor &image);

} // namespace ugodit
