#pragma once

#include <cstdint>
#include <stdexcept>

#include "ergosim/rng.hpp"
#include "ergosim/state_vector.hpp"

namespace ergosim {

namespace detail {

// Haar sampling via QR of a complex Ginibre matrix, phase-fixed so the R
// diagonal is real positive (modified Gram-Schmidt gives exactly that).
template <int Dim, typename Mat>
Mat haar_unitary(Rng& rng) {
  cplx g[Dim][Dim];
  for (int c = 0; c < Dim; ++c)
    for (int r = 0; r < Dim; ++r) g[r][c] = cplx(gaussian(rng), gaussian(rng));
  for (int c = 0; c < Dim; ++c) {
    for (int p = 0; p < c; ++p) {
      cplx dot = 0;
      for (int r = 0; r < Dim; ++r) dot += std::conj(g[r][p]) * g[r][c];
      for (int r = 0; r < Dim; ++r) g[r][c] -= dot * g[r][p];
    }
    double n = 0;
    for (int r = 0; r < Dim; ++r) n += std::norm(g[r][c]);
    n = std::sqrt(n);
    for (int r = 0; r < Dim; ++r) g[r][c] /= n;
  }
  Mat u;
  for (int r = 0; r < Dim; ++r)
    for (int c = 0; c < Dim; ++c) u(r, c) = g[r][c];
  return u;
}

}  // namespace detail

inline Mat2 sample_haar_u2(Rng& rng) { return detail::haar_unitary<2, Mat2>(rng); }
inline Mat4 sample_haar_u4(Rng& rng) { return detail::haar_unitary<4, Mat4>(rng); }

/// Haar measure on the U(1)-symmetric subgroup of U(4): block-diagonal in the
/// total-Z sectors {|00>}, {|01>,|10>}, {|11>} of the two-qubit space —
/// random phases on the corners, Haar U(2) on the middle block.
inline Mat4 sample_u1_block(Rng& rng) {
  Mat4 u;
  u(0, 0) = std::polar(1.0, uniform(rng, 0.0, 2.0 * M_PI));
  const Mat2 mid = sample_haar_u2(rng);
  const cplx block_phase = std::polar(1.0, uniform(rng, 0.0, 2.0 * M_PI));
  u(1, 1) = block_phase * mid(0, 0);
  u(1, 2) = block_phase * mid(0, 1);
  u(2, 1) = block_phase * mid(1, 0);
  u(2, 2) = block_phase * mid(1, 1);
  u(3, 3) = std::polar(1.0, uniform(rng, 0.0, 2.0 * M_PI));
  return u;
}

enum class GateKind { haar_u4, u1_block };

/// Distribution over two-qubit gates for brick-wall circuits. Each gate is
/// reproducible from (stream_seed, layer, bond) alone, so circuits do not
/// depend on evaluation order.
struct GateSampler {
  GateKind kind = GateKind::haar_u4;
  std::uint64_t stream_seed = 0;

  Mat4 sample(std::uint64_t layer, std::uint64_t bond) const {
    Rng rng = make_rng(derive_gate_seed(stream_seed, layer, bond));
    return kind == GateKind::haar_u4 ? sample_haar_u4(rng) : sample_u1_block(rng);
  }
};

/// Which bond pattern the first layer (layer_index = 1) uses. "full" couples
/// (0,1),(2,3),...  (N/2 gates); "offset" couples (1,2),(3,4),... (N/2 - 1
/// gates, open boundary).
enum class FirstLayer { full, offset };

/// Applies brick-wall layer `layer_index` (1-based; alternating parity) with
/// fresh independent gates from the sampler.
inline void brickwall_step(StateVector& psi, std::uint64_t layer_index,
                           const GateSampler& sampler,
                           FirstLayer first = FirstLayer::full) {
  const int n = psi.num_qubits();
  if (n % 2 != 0) throw std::invalid_argument("brickwall_step: N must be even");
  const bool odd_layer = (layer_index % 2) == 1;
  const bool full = (first == FirstLayer::full) ? odd_layer : !odd_layer;
  const int start = full ? 0 : 1;
  std::uint64_t bond = 0;
  for (int q = start; q + 1 < n; q += 2, ++bond) {
    const Mat4 g = sampler.sample(layer_index, bond);
    psi.apply_two_qubit_gate(q, q + 1, g);
  }
}

}  // namespace ergosim
