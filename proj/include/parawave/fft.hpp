#pragma once
// Minimal power-of-two FFT, one- and multi-dimensional, for the small
// periodized grids used in spectrum localization and grid resampling.

#include <complex>
#include <vector>

#include "parawave/errors.hpp"

namespace parawave {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place radix-2 transform of `data[offset + k*stride]`, k = 0..n-1.
// sign = -1: forward (e^{-2 pi i jk/n}); sign = +1: inverse WITHOUT the 1/n.
inline void fft_strided(std::complex<double>* data, std::size_t n, std::size_t stride, int sign) {
  if (!is_pow2(n)) throw InvalidConfig("fft: length must be a power of two");
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i * stride], data[j * stride]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * 3.14159265358979323846 / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        auto& a = data[(i + k) * stride];
        auto& b = data[(i + k + len / 2) * stride];
        const std::complex<double> v = b * w;
        b = a - v;
        a += v;
        w *= wl;
      }
    }
  }
}

// Multi-dimensional transform over a row-major array with extents dims
// (slowest-varying first).  sign as in fft_strided; no normalization.
inline void fft_nd(std::vector<std::complex<double>>& data, const std::vector<std::size_t>& dims,
                   int sign) {
  std::size_t total = 1;
  for (auto d : dims) total *= d;
  if (data.size() != total) throw InvalidInput("fft_nd: data size does not match dims");
  std::size_t stride = 1;
  for (std::size_t axis = dims.size(); axis-- > 0;) {
    const std::size_t len = dims[axis];
    const std::size_t block = len * stride;
    for (std::size_t base = 0; base < total; base += block) {
      for (std::size_t off = 0; off < stride; ++off) {
        fft_strided(data.data() + base + off, len, stride, sign);
      }
    }
    stride *= len;
  }
}

}  // namespace parawave
