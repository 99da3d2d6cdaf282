#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "hartgeom/error.hpp"

namespace hartgeom {

using Complex = std::complex<double>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place radix-2 Cooley-Tukey on a strided line. Unnormalized forward
/// (sign -1); inverse uses sign +1 and the caller divides by N once.
inline void fft_line(Complex* data, std::size_t n, std::size_t stride, int sign) {
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i * stride], data[j * stride]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = sign * 2.0 * 3.14159265358979323846 / double(len);
    Complex wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      Complex w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        Complex u = data[(i + k) * stride];
        Complex v = data[(i + k + len / 2) * stride] * w;
        data[(i + k) * stride] = u + v;
        data[(i + k + len / 2) * stride] = u - v;
        w *= wlen;
      }
    }
  }
}

/// 3D FFT over an r*r*r grid stored with index (x*r + y)*r + z.
/// Forward: sign=-1, unnormalized. Inverse: sign=+1, then scaled by 1/r^3.
inline void fft3(std::vector<Complex>& grid, std::size_t r, int sign) {
  if (!is_power_of_two(r))
    throw ResolutionNotSupported("FFT resolution must be a power of two, got " +
                                 std::to_string(r));
  if (grid.size() != r * r * r) throw Error("fft3: grid size mismatch");
  // z lines (contiguous)
  for (std::size_t x = 0; x < r; ++x)
    for (std::size_t y = 0; y < r; ++y)
      fft_line(grid.data() + (x * r + y) * r, r, 1, sign);
  // y lines
  for (std::size_t x = 0; x < r; ++x)
    for (std::size_t z = 0; z < r; ++z)
      fft_line(grid.data() + x * r * r + z, r, r, sign);
  // x lines
  for (std::size_t y = 0; y < r; ++y)
    for (std::size_t z = 0; z < r; ++z)
      fft_line(grid.data() + y * r + z, r, r * r, sign);
  if (sign > 0) {
    double inv = 1.0 / double(r * r * r);
    for (auto& c : grid) c *= inv;
  }
}

/// Signed integer frequency for index k of an N-point transform.
inline long fft_freq(std::size_t k, std::size_t n) {
  return k <= n / 2 ? static_cast<long>(k)
                    : static_cast<long>(k) - static_cast<long>(n);
}

}  // namespace hartgeom
