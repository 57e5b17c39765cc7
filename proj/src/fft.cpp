#include "anchorframe/fft.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "anchorframe/error.hpp"

namespace anchorframe {

namespace {

void require_pow2(std::size_t n) {
  if (!is_power_of_two(n)) {
    throw Error(ErrorCode::kSize,
                "FFT size " + std::to_string(n) + " is not a power of two");
  }
}

// In-place iterative Cooley-Tukey on a strided line.
void fft_line(Complex* data, std::size_t n, std::size_t stride, bool inverse,
              const std::vector<Complex>& twiddles) {
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i * stride], data[j * stride]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const double wr = twiddles[k * step].real();
        const double wi = inverse ? -twiddles[k * step].imag() : twiddles[k * step].imag();
        Complex& a = data[(start + k) * stride];
        Complex& b = data[(start + k + half) * stride];
        // Plain product; operator* on std::complex takes the slow Annex G path.
        const Complex t{b.real() * wr - b.imag() * wi, b.real() * wi + b.imag() * wr};
        b = a - t;
        a += t;
      }
    }
  }
}

void transform(ComplexGrid& g, bool inverse) {
  require_pow2(g.n);
  const std::size_t n = g.n;
  std::vector<Complex> twiddles(n / 2 + 1);
  for (std::size_t k = 0; k < twiddles.size(); ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(n);
    twiddles[k] = {std::cos(angle), std::sin(angle)};
  }
  for (std::size_t r = 0; r < n; ++r) fft_line(&g(r, 0), n, 1, inverse, twiddles);
  for (std::size_t c = 0; c < n; ++c) fft_line(&g(0, c), n, n, inverse, twiddles);
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

ComplexGrid fft2(const ComplexGrid& x) {
  ComplexGrid out = x;
  transform(out, false);
  return out;
}

ComplexGrid fft2(const RealGrid& x) {
  require_pow2(x.n);
  ComplexGrid out(x.n);
  for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = x.data[i];
  transform(out, false);
  return out;
}

ComplexGrid ifft2_complex(const ComplexGrid& spectrum) {
  ComplexGrid out = spectrum;
  transform(out, true);
  const double scale = 1.0 / static_cast<double>(out.n * out.n);
  for (auto& v : out.data) v *= scale;
  return out;
}

RealGrid ifft2(const ComplexGrid& spectrum) {
  const ComplexGrid full = ifft2_complex(spectrum);
  RealGrid out(full.n);
  for (std::size_t i = 0; i < full.data.size(); ++i) out.data[i] = full.data[i].real();
  return out;
}

}  // namespace anchorframe
