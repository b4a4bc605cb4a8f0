#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace ugodit {

using Complex = std::complex<double>;

// In-place 2-D DFT of a row-major (height, width) complex plane with unitary
// normalization (1/sqrt(height*width) in both directions). Thread-safe.
void fft2_unitary(std::span<Complex> plane, std::size_t height, std::size_t width, bool inverse = false);

// Move the zero frequency from index 0 to index floor(n/2) along both axes.
void fftshift2(std::span<Complex> plane, std::size_t height, std::size_t width);

} // namespace ugodit
