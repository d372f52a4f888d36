#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "ergosim/chebyshev.hpp"
#include "ergosim/models.hpp"
#include "ergosim/rng.hpp"
#include "ergosim/state_vector.hpp"

namespace ergosim {

/// Haar-random single-qubit unitary: first column from a normalized complex
/// Gaussian pair, completed as [[a, -b*],[b, a*]].
inline Mat2 haar_single_qubit(Rng& rng) {
  cplx a(gaussian(rng), gaussian(rng));
  cplx b(gaussian(rng), gaussian(rng));
  const double n = std::sqrt(std::norm(a) + std::norm(b));
  a /= n;
  b /= n;
  Mat2 u;
  u(0, 0) = a;
  u(1, 0) = b;
  u(0, 1) = -std::conj(b);
  u(1, 1) = std::conj(a);
  return u;
}

/// Product state prod_j U_j |0>^N with independent Haar U_j per site.
inline StateVector random_product_state(int num_qubits, Rng& rng) {
  std::vector<cplx> site_amp0(static_cast<std::size_t>(num_qubits));
  std::vector<cplx> site_amp1(static_cast<std::size_t>(num_qubits));
  for (int j = 0; j < num_qubits; ++j) {
    const Mat2 u = haar_single_qubit(rng);
    site_amp0[static_cast<std::size_t>(j)] = u(0, 0);
    site_amp1[static_cast<std::size_t>(j)] = u(1, 0);
  }
  StateVector psi(num_qubits);
  cplx* a = psi.data();
  a[0] = 1.0;
  std::uint64_t filled = 1;
  for (int j = 0; j < num_qubits; ++j) {
    const cplx a0 = site_amp0[static_cast<std::size_t>(j)];
    const cplx a1 = site_amp1[static_cast<std::size_t>(j)];
    for (std::uint64_t x = 0; x < filled; ++x) {
      a[x | filled] = a[x] * a1;
      a[x] *= a0;
    }
    filled <<= 1;
  }
  return psi;
}

/// Haar-random state of the full 2^N-dimensional space (normalized complex
/// Gaussian vector). Used for baselines and threshold calibration.
inline StateVector haar_random_state(int num_qubits, Rng& rng) {
  StateVector psi(num_qubits);
  for (auto& a : psi.amplitudes()) a = cplx(gaussian(rng), gaussian(rng));
  psi.normalize();
  return psi;
}

struct EnergyFilter {
  double window = 0.05;
  // The literal reading of the selection rule pins <H> to the lower spectral
  // edge: |<H> - E_min| / (E_max - E_min) <= window. The default centers the
  // window mid-spectrum instead: |<H> - E_mid| / (E_max - E_min) <= window.
  bool literal_lower_edge = false;
  int max_tries = 100000;
};

/// Rejection-samples random product states until the normalized energy lands
/// inside the filter window.
inline StateVector energy_filtered_state(const MfimAction& h,
                                         const SpectralBounds& bounds, Rng& rng,
                                         const EnergyFilter& filter = {}) {
  const double span = bounds.e_max - bounds.e_min;
  if (span <= 0.0)
    throw std::invalid_argument("energy_filtered_state: empty spectral bracket");
  const double target = filter.literal_lower_edge
                            ? bounds.e_min
                            : 0.5 * (bounds.e_min + bounds.e_max);
  std::vector<cplx> scratch(h.dim());
  for (int attempt = 0; attempt < filter.max_tries; ++attempt) {
    StateVector psi = random_product_state(h.num_qubits(), rng);
    h(psi.amplitudes(), scratch);
    cplx dot = 0.0;
    const cplx* a = psi.data();
    for (std::uint64_t x = 0; x < h.dim(); ++x) dot += std::conj(a[x]) * scratch[x];
    if (std::abs(dot.real() - target) / span <= filter.window) return psi;
  }
  throw std::runtime_error(
      "energy_filtered_state: max_tries exceeded (window too tight)");
}

/// Uniformly random computational basis state with exactly N/2 bits set.
inline StateVector half_filling_basis_state(int num_qubits, Rng& rng) {
  if (num_qubits % 2 != 0)
    throw std::invalid_argument("half_filling_basis_state: N must be even");
  std::vector<int> sites(static_cast<std::size_t>(num_qubits));
  std::iota(sites.begin(), sites.end(), 0);
  std::uint64_t x = 0;
  for (int k = 0; k < num_qubits / 2; ++k) {  // partial Fisher-Yates
    const int pick = k + static_cast<int>(rng() % (static_cast<std::uint64_t>(
                                              num_qubits - k)));
    std::swap(sites[static_cast<std::size_t>(k)],
              sites[static_cast<std::size_t>(pick)]);
    x |= std::uint64_t{1} << sites[static_cast<std::size_t>(k)];
  }
  return StateVector::basis_state(num_qubits, x);
}

}  // namespace ergosim
