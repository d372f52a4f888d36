#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergosim/wht.hpp"

namespace ergosim {

using cplx = std::complex<double>;

// 2x2 and 4x4 gate matrices, row-major.
struct Mat2 {
  std::array<cplx, 4> m{};
  cplx& operator()(int r, int c) { return m[2 * r + c]; }
  const cplx& operator()(int r, int c) const { return m[2 * r + c]; }
};

struct Mat4 {
  std::array<cplx, 16> m{};
  cplx& operator()(int r, int c) { return m[4 * r + c]; }
  const cplx& operator()(int r, int c) const { return m[4 * r + c]; }
};

// Opt-in per-gate unitarity / finiteness validation (debug aid; samplers are
// responsible for producing unitary gates in production runs).
inline std::atomic<bool> g_validate_gates{false};
inline void set_gate_validation(bool on) { g_validate_gates.store(on); }

inline constexpr double kUnitarityTol = 1e-10;

namespace detail {

inline void check_unitary2(const Mat2& g) {
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      cplx dot = 0;
      for (int k = 0; k < 2; ++k) dot += std::conj(g(k, i)) * g(k, j);
      if (std::abs(dot - (i == j ? 1.0 : 0.0)) > kUnitarityTol)
        throw std::invalid_argument("apply_single_qubit_gate: gate is not unitary");
    }
  }
}

inline void check_unitary4(const Mat4& g) {
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      cplx dot = 0;
      for (int k = 0; k < 4; ++k) dot += std::conj(g(k, i)) * g(k, j);
      if (std::abs(dot - (i == j ? 1.0 : 0.0)) > kUnitarityTol)
        throw std::invalid_argument("apply_two_qubit_gate: gate is not unitary");
    }
  }
}

}  // namespace detail

/// Dense pure state of N qubits over the computational basis.
///
/// Bit convention (used everywhere in this library): basis index x encodes
/// qubit j as bit j, i.e. the value of qubit j in |x> is (x >> j) & 1.
class StateVector {
 public:
  explicit StateVector(int num_qubits)
      : num_qubits_(num_qubits), amps_(std::uint64_t{1} << check_n(num_qubits)) {
    amps_[0] = 1.0;
  }

  static StateVector basis_state(int num_qubits, std::uint64_t x) {
    StateVector psi(num_qubits);
    if (x >= psi.dim()) throw std::invalid_argument("basis_state: label out of range");
    psi.amps_[0] = 0.0;
    psi.amps_[x] = 1.0;
    return psi;
  }

  int num_qubits() const { return num_qubits_; }
  std::uint64_t dim() const { return amps_.size(); }

  cplx* data() { return amps_.data(); }
  const cplx* data() const { return amps_.data(); }
  std::span<cplx> amplitudes() { return amps_; }
  std::span<const cplx> amplitudes() const { return amps_; }
  cplx amplitude(std::uint64_t x) const { return amps_[x]; }

  /// Applies a 2x2 gate to `site`.
  void apply_single_qubit_gate(int site, const Mat2& g) {
    check_site(site);
    if (g_validate_gates.load(std::memory_order_relaxed)) detail::check_unitary2(g);
    const std::uint64_t s = std::uint64_t{1} << site;
    const cplx g00 = g(0, 0), g01 = g(0, 1), g10 = g(1, 0), g11 = g(1, 1);
    for (std::uint64_t base = 0; base < dim(); base += 2 * s) {
      for (std::uint64_t i = base; i < base + s; ++i) {
        const cplx a0 = amps_[i];
        const cplx a1 = amps_[i + s];
        amps_[i] = g00 * a0 + g01 * a1;
        amps_[i + s] = g10 * a0 + g11 * a1;
      }
    }
  }

  /// Applies a 4x4 gate to (site_a, site_b). The gate's 4-dimensional index is
  /// 2*(bit of site_a) + (bit of site_b), so site_a is the high bit.
  void apply_two_qubit_gate(int site_a, int site_b, const Mat4& g) {
    check_site(site_a);
    check_site(site_b);
    if (site_a == site_b)
      throw std::invalid_argument("apply_two_qubit_gate: coincident sites");
    if (g_validate_gates.load(std::memory_order_relaxed)) detail::check_unitary4(g);
    const std::uint64_t sa = std::uint64_t{1} << site_a;
    const std::uint64_t sb = std::uint64_t{1} << site_b;
    const std::uint64_t mask = sa | sb;
    for (std::uint64_t x = 0; x < dim(); ++x) {
      if (x & mask) continue;
      const std::uint64_t i0 = x;          // a=0 b=0
      const std::uint64_t i1 = x | sb;     // a=0 b=1
      const std::uint64_t i2 = x | sa;     // a=1 b=0
      const std::uint64_t i3 = x | mask;   // a=1 b=1
      const cplx a0 = amps_[i0], a1 = amps_[i1], a2 = amps_[i2], a3 = amps_[i3];
      amps_[i0] = g(0, 0) * a0 + g(0, 1) * a1 + g(0, 2) * a2 + g(0, 3) * a3;
      amps_[i1] = g(1, 0) * a0 + g(1, 1) * a1 + g(1, 2) * a2 + g(1, 3) * a3;
      amps_[i2] = g(2, 0) * a0 + g(2, 1) * a1 + g(2, 2) * a2 + g(2, 3) * a3;
      amps_[i3] = g(3, 0) * a0 + g(3, 1) * a1 + g(3, 2) * a2 + g(3, 3) * a3;
    }
  }

  /// H^{tensor N} in O(N 2^N) time and O(1) auxiliary memory. Involutive.
  void global_walsh_hadamard() {
    wht_complex_unnormalized(amps_.data(), num_qubits_);
    const double scale = std::pow(2.0, -0.5 * num_qubits_);
    for (auto& a : amps_) a *= scale;
  }

  /// Multiplies amplitude x by e^{-i phases[x]}. Norm-preserving.
  void apply_diagonal_phase(std::span<const double> phases) {
    check_table_size(phases.size());
    if (g_validate_gates.load(std::memory_order_relaxed)) {
      for (double p : phases)
        if (!std::isfinite(p))
          throw std::invalid_argument("apply_diagonal_phase: non-finite phase");
    }
    for (std::uint64_t x = 0; x < dim(); ++x)
      amps_[x] *= std::polar(1.0, -phases[x]);
  }

  /// Same contract with the unit factors e^{-i phase(x)} precomputed.
  void apply_phase_factors(std::span<const cplx> factors) {
    check_table_size(factors.size());
    for (std::uint64_t x = 0; x < dim(); ++x) amps_[x] *= factors[x];
  }

  std::vector<double> probabilities() const {
    std::vector<double> p(dim());
    for (std::uint64_t x = 0; x < dim(); ++x) p[x] = std::norm(amps_[x]);
    return p;
  }

  double norm_squared() const {
    double s = 0;
    for (const auto& a : amps_) s += std::norm(a);
    return s;
  }
  double norm() const { return std::sqrt(norm_squared()); }

  void normalize() {
    const double n = norm();
    if (n == 0.0) throw std::runtime_error("normalize: zero state");
    for (auto& a : amps_) a /= n;
  }

  /// Binary dump: int64 N (little-endian), then 2^N interleaved float64
  /// (re, im) pairs in basis order.
  void save(std::ostream& out) const {
    const std::int64_t n = num_qubits_;
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(amps_.data()),
              static_cast<std::streamsize>(dim() * sizeof(cplx)));
    if (!out) throw std::runtime_error("StateVector::save: write failed");
  }

  static StateVector load(std::istream& in) {
    std::int64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!in || n < 1 || n > 40)
      throw std::runtime_error("StateVector::load: bad header");
    StateVector psi(static_cast<int>(n));
    in.read(reinterpret_cast<char*>(psi.amps_.data()),
            static_cast<std::streamsize>(psi.dim() * sizeof(cplx)));
    if (!in) throw std::runtime_error("StateVector::load: truncated amplitudes");
    return psi;
  }

 private:
  static int check_n(int n) {
    if (n < 1 || n > 30) throw std::invalid_argument("StateVector: need 1 <= N <= 30");
    return n;
  }
  void check_site(int site) const {
    if (site < 0 || site >= num_qubits_)
      throw std::invalid_argument("site index out of range");
  }
  void check_table_size(std::size_t sz) const {
    if (sz != dim())
      throw std::invalid_argument("diagonal table size does not match 2^N");
  }

  int num_qubits_;
  std::vector<cplx> amps_;
};

inline cplx inner_product(const StateVector& a, const StateVector& b) {
  if (a.num_qubits() != b.num_qubits())
    throw std::invalid_argument("inner_product: qubit count mismatch");
  cplx s = 0;
  const cplx* pa = a.data();
  const cplx* pb = b.data();
  for (std::uint64_t x = 0; x < a.dim(); ++x) s += std::conj(pa[x]) * pb[x];
  return s;
}

}  // namespace ergosim
