#pragma once

#include <complex>
#include <cstdint>
#include <cstddef>

namespace ergosim {
namespace detail {

// Butterfly passes for bits [bit_lo, bit_hi) of an in-place Walsh-Hadamard
// transform (unnormalized: x -> (a+b, a-b) per bit).
template <typename T>
void wht_passes(T* v, std::uint64_t dim, int bit_lo, int bit_hi) {
  for (int j = bit_lo; j < bit_hi; ++j) {
    const std::uint64_t s = std::uint64_t{1} << j;
    for (std::uint64_t base = 0; base < dim; base += 2 * s) {
      T* lo = v + base;
      T* hi = v + base + s;
      for (std::uint64_t i = 0; i < s; ++i) {
        const T a = lo[i];
        const T b = hi[i];
        lo[i] = a + b;
        hi[i] = a - b;
      }
    }
  }
}

// Low bits are transformed block-by-block so each 2^kBlockBits chunk stays in
// cache; remaining high bits get one strided pass each.
inline constexpr int kWhtBlockBits = 13;

template <typename T>
void wht_unnormalized(T* v, int num_bits) {
  const std::uint64_t dim = std::uint64_t{1} << num_bits;
  const int nb = num_bits < kWhtBlockBits ? num_bits : kWhtBlockBits;
  const std::uint64_t block = std::uint64_t{1} << nb;
  for (std::uint64_t base = 0; base < dim; base += block) {
    wht_passes(v + base, block, 0, nb);
  }
  wht_passes(v, dim, nb, num_bits);
}

}  // namespace detail

// In-place unnormalized transform over the sign characters (-1)^{b.x}:
// out[b] = sum_x (-1)^{popcount(b&x)} in[x].
inline void wht_real_unnormalized(double* v, int num_bits) {
  detail::wht_unnormalized(v, num_bits);
}

inline void wht_complex_unnormalized(std::complex<double>* v, int num_bits) {
  detail::wht_unnormalized(v, num_bits);
}

}  // namespace ergosim
