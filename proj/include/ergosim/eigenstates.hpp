#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#ifdef ERGOSIM_HAVE_LAPACKE
#include <lapacke.h>
#endif

#include "ergosim/complexity.hpp"
#include "ergosim/models.hpp"
#include "ergosim/state_vector.hpp"

namespace ergosim {

/// Dense H_MFIM in the computational basis: real symmetric (Z terms diagonal,
/// X terms real off-diagonal bit flips).
inline Eigen::MatrixXd dense_hamiltonian(const IsingParams& params) {
  const int n = params.num_qubits();
  if (n > 14)
    throw std::invalid_argument("dense_hamiltonian: N > 14 exceeds memory budget");
  const auto diag = ising_energy_table(params);
  const Eigen::Index dim = Eigen::Index{1} << n;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index x = 0; x < dim; ++x) h(x, x) = diag[static_cast<std::size_t>(x)];
  for (int j = 0; j < n; ++j) {
    const Eigen::Index s = Eigen::Index{1} << j;
    for (Eigen::Index x = 0; x < dim; ++x) h(x, x ^ s) += params.b;
  }
  return h;
}

struct EigenSystem {
  Eigen::VectorXd energies;   // ascending
  Eigen::MatrixXd vectors;    // column i = eigenstate i
};

/// Full symmetric diagonalization (LAPACK dsyevd when available).
inline EigenSystem diagonalize_symmetric(Eigen::MatrixXd h) {
#ifdef ERGOSIM_HAVE_LAPACKE
  const lapack_int n = static_cast<lapack_int>(h.rows());
  Eigen::VectorXd w(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                         h.data(), n, w.data());
  if (info != 0) throw std::runtime_error("diagonalize_symmetric: dsyevd failed");
  return {std::move(w), std::move(h)};
#else
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("diagonalize_symmetric: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
#endif
}

/// Per-eigenstate participation and stabilizer entropies across the spectrum.
struct SpectrumScan {
  int num_qubits = 0;
  std::vector<double> energies;      // sorted ascending
  std::vector<double> per_state_pe;  // S_2 per eigenstate
  std::vector<double> per_state_se;  // M_2 per eigenstate
};

inline SpectrumScan eigenstate_complexity_scan(const IsingParams& params) {
  const int n = params.num_qubits();
  if (n > 12)
    throw std::invalid_argument(
        "eigenstate_complexity_scan: N > 12 exceeds the SE time budget");
  const EigenSystem sys = diagonalize_symmetric(dense_hamiltonian(params));
  const std::int64_t dim = sys.energies.size();
  SpectrumScan scan;
  scan.num_qubits = n;
  scan.energies.assign(sys.energies.data(), sys.energies.data() + dim);
  scan.per_state_pe.resize(static_cast<std::size_t>(dim));
  scan.per_state_se.resize(static_cast<std::size_t>(dim));
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < dim; ++i) {
    StateVector psi(n);
    for (std::int64_t x = 0; x < dim; ++x) psi.data()[x] = sys.vectors(x, i);
    scan.per_state_pe[static_cast<std::size_t>(i)] = participation_entropy(psi, 2.0);
    const auto summary = pauli_spectrum_summary(psi, {2});
    scan.per_state_se[static_cast<std::size_t>(i)] = stabilizer_entropy(summary, 2);
  }
  return scan;
}

/// Mean consecutive-gap ratio r = <min(s_n, s_{n+1}) / max(s_n, s_{n+1})>
/// with `trim_fraction` of levels dropped at each spectral edge. Invariant
/// under affine rescaling of the energies.
inline double gap_ratio_statistic(std::span<const double> energies,
                                  double trim_fraction = 0.1) {
  std::vector<double> e(energies.begin(), energies.end());
  std::sort(e.begin(), e.end());
  const std::size_t cut = static_cast<std::size_t>(trim_fraction *
                                                   static_cast<double>(e.size()));
  if (e.size() < 2 * cut + 102)
    throw std::invalid_argument(
        "gap_ratio_statistic: need >= 100 energies after trimming");
  const std::span<const double> kept(e.data() + cut, e.size() - 2 * cut);
  const double spread = kept.back() - kept.front();
  const double degenerate_tol = 1e-12 * std::max(spread, 1.0);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + 2 < kept.size(); ++i) {
    const double s0 = kept[i + 1] - kept[i];
    const double s1 = kept[i + 2] - kept[i + 1];
    const double lo = std::min(s0, s1);
    const double hi = std::max(s0, s1);
    if (hi < degenerate_tol)
      throw std::runtime_error("gap_ratio_statistic: degenerate spectrum");
    sum += lo / hi;
    ++count;
  }
  return sum / static_cast<double>(count);
}

/// <n|R|n> for the site-reversal operator R (bit reversal of the N-bit basis
/// label). The uniform-field open chain commutes with R, so eigenstates come
/// in parity sectors; gap-ratio statistics against GOE must be taken within
/// one sector.
inline double reflection_overlap(std::span<const double> eigvec, int num_qubits) {
  const std::uint64_t dim = std::uint64_t{1} << num_qubits;
  if (eigvec.size() != dim)
    throw std::invalid_argument("reflection_overlap: size mismatch");
  double s = 0.0;
  for (std::uint64_t x = 0; x < dim; ++x) {
    std::uint64_t r = 0;
    for (int j = 0; j < num_qubits; ++j) r |= ((x >> j) & 1) << (num_qubits - 1 - j);
    s += eigvec[x] * eigvec[r];
  }
  return s;
}

}  // namespace ergosim
