#pragma once

// Dense reference implementations: brute-force Pauli moments, dense operator
// products and matrix exponentials, partial traces, and random-matrix
// baselines. Slow by construction and independent of the fast kernels; used
// as oracles by the test suites and the `oracle-check` command.

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "ergosim/complexity.hpp"
#include "ergosim/eigenstates.hpp"
#include "ergosim/models.hpp"
#include "ergosim/rng.hpp"
#include "ergosim/state_vector.hpp"

namespace ergosim::dense {

inline Eigen::Matrix2cd pauli_site(bool x_bit, bool z_bit) {
  Eigen::Matrix2cd m;
  const cplx i(0.0, 1.0);
  if (!x_bit && !z_bit) m << 1, 0, 0, 1;                  // I
  else if (x_bit && !z_bit) m << 0, 1, 1, 0;              // X
  else if (!x_bit && z_bit) m << 1, 0, 0, -1;             // Z
  else m << 0, -i, i, 0;                                  // Y = i X Z
  return m;
}

/// Hermitian Pauli string i^{|a&b|} X^a Z^b as a dense matrix; bit j of a/b
/// selects the factor on qubit j (qubit 0 = fastest index).
inline Eigen::MatrixXcd pauli_string(int num_qubits, std::uint64_t a,
                                     std::uint64_t b) {
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(1, 1);
  for (int j = num_qubits - 1; j >= 0; --j) {
    const Eigen::Matrix2cd site = pauli_site((a >> j) & 1, (b >> j) & 1);
    Eigen::MatrixXcd next(p.rows() * 2, p.cols() * 2);
    next.topLeftCorner(p.rows(), p.cols()) = site(0, 0) * p;
    next.topRightCorner(p.rows(), p.cols()) = site(0, 1) * p;
    next.bottomLeftCorner(p.rows(), p.cols()) = site(1, 0) * p;
    next.bottomRightCorner(p.rows(), p.cols()) = site(1, 1) * p;
    p = std::move(next);
  }
  return p;
}

/// Pauli-spectrum moments by looping over all 4^N dense Pauli matrices.
inline PauliSpectrumSummary brute_force_pauli_moments(const StateVector& psi) {
  const int n = psi.num_qubits();
  const std::uint64_t dim = psi.dim();
  Eigen::Map<const Eigen::VectorXcd> v(psi.data(), static_cast<Eigen::Index>(dim));
  double m1 = 0, m2 = 0, m3 = 0, shannon = 0, max_imag = 0;
  for (std::uint64_t a = 0; a < dim; ++a) {
    for (std::uint64_t b = 0; b < dim; ++b) {
      const Eigen::MatrixXcd p = pauli_string(n, a, b);
      const cplx exp_val = v.dot(p * v);  // <psi|P|psi>
      max_imag = std::max(max_imag, std::abs(exp_val.imag()));
      const double s = exp_val.real() * exp_val.real();
      m1 += s;
      m2 += s * s;
      m3 += s * s * s;
      if (s > 0) shannon += s * std::log2(s);
    }
  }
  PauliSpectrumSummary out;
  out.num_qubits = n;
  const double d = static_cast<double>(dim);
  out.moment_sums[1] = m1 / d;
  out.moment_sums[2] = m2 / d;
  out.moment_sums[3] = m3 / d;
  out.shannon_term = shannon / d;
  out.max_imag_residual = max_imag;
  return out;
}

/// Exact evolution exp(-i H t)|psi> through full diagonalization of a real
/// symmetric Hamiltonian. Reusable across times.
class DenseEvolver {
 public:
  explicit DenseEvolver(const Eigen::MatrixXd& h) : sys_(diagonalize_symmetric(h)) {}

  StateVector evolve(const StateVector& psi, double t) const {
    const Eigen::Index dim = sys_.energies.size();
    Eigen::Map<const Eigen::VectorXcd> v(psi.data(), dim);
    Eigen::VectorXcd coeff = sys_.vectors.transpose() * v;
    for (Eigen::Index i = 0; i < dim; ++i)
      coeff(i) *= std::polar(1.0, -sys_.energies(i) * t);
    const Eigen::VectorXcd out = sys_.vectors * coeff;
    StateVector result(psi.num_qubits());
    for (Eigen::Index x = 0; x < dim; ++x) result.data()[x] = out(x);
    return result;
  }

  double e_min() const { return sys_.energies(0); }
  double e_max() const { return sys_.energies(sys_.energies.size() - 1); }

 private:
  EigenSystem sys_;
};

/// One KIM period as an explicit dense operator product:
/// kron^N of exp(-i b X) applied after the diagonal Ising phase.
inline StateVector dense_kim_step(const StateVector& psi, const IsingParams& p) {
  const int n = psi.num_qubits();
  const Eigen::Index dim = static_cast<Eigen::Index>(psi.dim());
  Eigen::Matrix2cd kick;
  const cplx i(0.0, 1.0);
  kick << std::cos(p.b), -i * std::sin(p.b), -i * std::sin(p.b), std::cos(p.b);
  Eigen::MatrixXcd u_kick = Eigen::MatrixXcd::Identity(1, 1);
  for (int j = 0; j < n; ++j) {
    Eigen::MatrixXcd next(u_kick.rows() * 2, u_kick.cols() * 2);
    next.topLeftCorner(u_kick.rows(), u_kick.cols()) = kick(0, 0) * u_kick;
    next.topRightCorner(u_kick.rows(), u_kick.cols()) = kick(0, 1) * u_kick;
    next.bottomLeftCorner(u_kick.rows(), u_kick.cols()) = kick(1, 0) * u_kick;
    next.bottomRightCorner(u_kick.rows(), u_kick.cols()) = kick(1, 1) * u_kick;
    u_kick = std::move(next);
  }
  const auto energies = ising_energy_table(p);
  Eigen::VectorXcd v(dim);
  for (Eigen::Index x = 0; x < dim; ++x)
    v(x) = psi.data()[x] * std::polar(1.0, -energies[static_cast<std::size_t>(x)]);
  const Eigen::VectorXcd out = u_kick * v;
  StateVector result(n);
  for (Eigen::Index x = 0; x < dim; ++x) result.data()[x] = out(x);
  return result;
}

/// tr(rho_A^2) through the explicit reduced density matrix of the low
/// `num_a` qubits.
inline double reduced_density_purity(const StateVector& psi, int num_a) {
  const Eigen::Index da = Eigen::Index{1} << num_a;
  const Eigen::Index db = static_cast<Eigen::Index>(psi.dim()) / da;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(da, da);
  for (Eigen::Index bb = 0; bb < db; ++bb)
    for (Eigen::Index aa = 0; aa < da; ++aa)
      for (Eigen::Index ap = 0; ap < da; ++ap)
        rho(aa, ap) += psi.data()[aa + (bb << num_a)] *
                       std::conj(psi.data()[ap + (bb << num_a)]);
  return (rho * rho).trace().real();
}

/// Mean gap ratio of sampled GOE matrices (reference value for ergodic
/// spectra, asymptotically ~0.5307).
inline double goe_gap_ratio_oracle(int dim, int samples, Rng& rng,
                                   double trim_fraction = 0.1) {
  double acc = 0.0;
  for (int s = 0; s < samples; ++s) {
    Eigen::MatrixXd a(dim, dim);
    for (int jc = 0; jc < dim; ++jc)
      for (int jr = 0; jr < dim; ++jr) a(jr, jc) = gaussian(rng);
    const Eigen::MatrixXd g = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& e = es.eigenvalues();
    acc += gap_ratio_statistic(std::span<const double>(e.data(),
                                                       static_cast<std::size_t>(e.size())),
                               trim_fraction);
  }
  return acc / samples;
}

/// Mean gap ratio of independent uniform energies (Poisson reference, ~0.386).
inline double poisson_gap_ratio_oracle(int count, int samples, Rng& rng,
                                       double trim_fraction = 0.1) {
  double acc = 0.0;
  for (int s = 0; s < samples; ++s) {
    std::vector<double> e(static_cast<std::size_t>(count));
    for (auto& x : e) x = uniform(rng, 0.0, 1.0);
    acc += gap_ratio_statistic(e, trim_fraction);
  }
  return acc / samples;
}

}  // namespace ergosim::dense
