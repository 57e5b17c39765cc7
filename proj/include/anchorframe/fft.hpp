#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace anchorframe {

using Complex = std::complex<double>;

/// Square N x N array, row-major.
template <class T>
struct Grid {
  std::size_t n = 0;
  std::vector<T> data;

  Grid() = default;
  explicit Grid(std::size_t size, T fill = T{}) : n(size), data(size * size, fill) {}

  T& operator()(std::size_t row, std::size_t col) { return data[row * n + col]; }
  const T& operator()(std::size_t row, std::size_t col) const {
    return data[row * n + col];
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

using RealGrid = Grid<double>;
using ComplexGrid = Grid<Complex>;

bool is_power_of_two(std::size_t n);

/// Unnormalized forward 2-D DFT (radix-2). Throws kSize unless N is a power
/// of two.
ComplexGrid fft2(const RealGrid& x);
ComplexGrid fft2(const ComplexGrid& x);

/// Inverse 2-D DFT including the 1/N^2 factor.
ComplexGrid ifft2_complex(const ComplexGrid& spectrum);

/// Real part of ifft2_complex.
RealGrid ifft2(const ComplexGrid& spectrum);

}  // namespace anchorframe
