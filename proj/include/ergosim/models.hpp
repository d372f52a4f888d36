#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ergosim/rng.hpp"
#include "ergosim/state_vector.hpp"

namespace ergosim {

/// Couplings of the Ising chain (open boundary): transverse field b,
/// nearest-neighbour coupling J, longitudinal fields h_j (possibly disordered).
struct IsingParams {
  double b = 0.0;
  double coupling_j = 1.0;
  std::vector<double> h;  // length N
  double disorder_width = 0.0;

  int num_qubits() const { return static_cast<int>(h.size()); }

  static double default_b() { return (std::sqrt(5.0) + 5.0) / 8.0; }
  static double default_h() { return (std::sqrt(5.0) + 1.0) / 4.0; }

  static IsingParams defaults(int num_qubits, double disorder_width = 0.0) {
    IsingParams p;
    p.b = default_b();
    p.coupling_j = 1.0;
    p.h.assign(static_cast<std::size_t>(num_qubits), default_h());
    p.disorder_width = disorder_width;
    return p;
  }

  /// Draws h_j = default + delta_j, delta_j uniform on [-W, W]. Quenched:
  /// call once per realization and keep the result for the whole trajectory.
  void apply_disorder(Rng& rng) {
    for (auto& hj : h) {
      hj = default_h();
      if (disorder_width > 0.0)
        hj += uniform(rng, -disorder_width, disorder_width);
    }
  }
};

/// Classical Ising energies E(x) = sum_j h_j z_j + J sum_j z_j z_{j+1} with
/// z_j = 1 - 2*bit_j(x), open boundary.
inline std::vector<double> ising_energy_table(const IsingParams& p) {
  const int n = p.num_qubits();
  const std::uint64_t dim = std::uint64_t{1} << n;
  std::vector<double> e(dim);
  for (std::uint64_t x = 0; x < dim; ++x) {
    double s = 0.0;
    int z_prev = 0;
    for (int j = 0; j < n; ++j) {
      const int z = 1 - 2 * static_cast<int>((x >> j) & 1);
      s += p.h[static_cast<std::size_t>(j)] * z;
      if (j > 0) s += p.coupling_j * z_prev * z;
      z_prev = z;
    }
    e[x] = s;
  }
  return e;
}

/// Precomputed per-step tables for the kicked Ising Floquet operator
///   U = exp(-i b sum_j X_j) exp(-i [sum_j h_j Z_j + J sum_j Z_j Z_{j+1}]).
/// The X kick is applied as WHT . diag(e^{-i b (N - 2 popcount)}) . WHT.
struct KimTables {
  int num_qubits = 0;
  std::vector<cplx> ising_phase;       // e^{-i E(x)}, length 2^N
  std::vector<cplx> kick_by_popcount;  // e^{-i b (N - 2m)}, length N+1

  explicit KimTables(const IsingParams& p) : num_qubits(p.num_qubits()) {
    const auto energies = ising_energy_table(p);
    ising_phase.resize(energies.size());
    for (std::size_t x = 0; x < energies.size(); ++x) {
      if (!std::isfinite(energies[x]))
        throw std::invalid_argument("KimTables: non-finite Ising phase");
      ising_phase[x] = std::polar(1.0, -energies[x]);
    }
    kick_by_popcount.resize(static_cast<std::size_t>(num_qubits) + 1);
    for (int m = 0; m <= num_qubits; ++m)
      kick_by_popcount[static_cast<std::size_t>(m)] =
          std::polar(1.0, -p.b * (num_qubits - 2 * m));
  }
};

/// One Floquet period of the KIM: Z-phase layer, then the global X kick.
inline void kim_step(StateVector& psi, const KimTables& tables) {
  if (psi.num_qubits() != tables.num_qubits)
    throw std::invalid_argument("kim_step: qubit count mismatch");
  psi.apply_phase_factors(tables.ising_phase);
  psi.global_walsh_hadamard();
  cplx* a = psi.data();
  for (std::uint64_t x = 0; x < psi.dim(); ++x)
    a[x] *= tables.kick_by_popcount[static_cast<std::size_t>(std::popcount(x))];
  psi.global_walsh_hadamard();
}

/// Matrix-free action of H = b sum_j X_j + sum_j h_j Z_j + J sum_j Z_j Z_{j+1}.
/// The diagonal part is tabulated once; the X part is N bit-flip gathers.
class MfimAction {
 public:
  explicit MfimAction(const IsingParams& p)
      : num_qubits_(p.num_qubits()), b_(p.b), diag_(ising_energy_table(p)) {}

  int num_qubits() const { return num_qubits_; }
  std::uint64_t dim() const { return diag_.size(); }
  std::span<const double> diagonal() const { return diag_; }

  void operator()(std::span<const cplx> in, std::span<cplx> out) const {
    if (in.size() != dim() || out.size() != dim())
      throw std::invalid_argument("MfimAction: dimension mismatch");
    const cplx* v = in.data();
    cplx* w = out.data();
    for (std::uint64_t x = 0; x < dim(); ++x) w[x] = diag_[x] * v[x];
    if (b_ != 0.0) {
      for (int j = 0; j < num_qubits_; ++j) {
        const std::uint64_t s = std::uint64_t{1} << j;
        for (std::uint64_t x = 0; x < dim(); ++x) w[x] += b_ * v[x ^ s];
      }
    }
  }

 private:
  int num_qubits_;
  double b_;
  std::vector<double> diag_;
};

/// H_MFIM |psi> as a fresh state (not unitary, not normalized).
inline StateVector mfim_apply(const StateVector& psi, const MfimAction& h) {
  if (psi.num_qubits() != h.num_qubits())
    throw std::invalid_argument("mfim_apply: qubit count mismatch");
  StateVector out(psi.num_qubits());
  h(psi.amplitudes(), out.amplitudes());
  return out;
}

inline StateVector mfim_apply(const StateVector& psi, const IsingParams& p) {
  return mfim_apply(psi, MfimAction(p));
}

/// Real part of <psi|H|psi> (H Hermitian).
inline double energy_expectation(const StateVector& psi, const MfimAction& h) {
  StateVector tmp = mfim_apply(psi, h);
  return inner_product(psi, tmp).real();
}

/// Interpolating Floquet family
///   U_F = exp(-i[theta H_x + (1-theta) H_z]) exp(-i[(1-theta) H_x + theta H_z])
/// with H_x = b sum X_j and H_z = sum h_j Z_j + J sum Z_j Z_{j+1}; the right
/// factor acts first. theta = 0 gives the two KIM layers in reversed order
/// (same Floquet spectrum as the KIM); theta = 1/2 gives exp(-i H_MFIM).
struct FloquetFamilySpec {
  IsingParams params;
  double theta = 0.0;

  /// Mixed-field parameters of one exponential factor: x-weight on the kick
  /// part, z-weight on the Ising part.
  IsingParams factor_params(double x_weight, double z_weight) const {
    IsingParams f = params;
    f.b = x_weight * params.b;
    f.coupling_j = z_weight * params.coupling_j;
    for (auto& hj : f.h) hj *= z_weight;
    return f;
  }

  IsingParams right_factor() const { return factor_params(1.0 - theta, theta); }
  IsingParams left_factor() const { return factor_params(theta, 1.0 - theta); }
};

}  // namespace ergosim
