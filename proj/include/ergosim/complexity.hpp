#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ergosim/state_vector.hpp"
#include "ergosim/wht.hpp"

namespace ergosim {

/// Participation (Renyi) entropy of the computational-basis distribution:
/// S_k = log2[sum_x p_x^k] / (1-k); S_1 is the Shannon limit, S_0 counts the
/// support. Always >= 0, zero exactly on basis states.
inline double participation_entropy(const StateVector& psi, double k) {
  if (k < 0.0) throw std::invalid_argument("participation_entropy: k >= 0");
  const cplx* a = psi.data();
  const std::uint64_t dim = psi.dim();
  if (k == 1.0) {
    double h = 0.0;
    for (std::uint64_t x = 0; x < dim; ++x) {
      const double p = std::norm(a[x]);
      if (p > 0.0) h -= p * std::log2(p);
    }
    return std::max(h, 0.0);
  }
  if (k == 0.0) {
    std::uint64_t support = 0;
    for (std::uint64_t x = 0; x < dim; ++x)
      if (std::norm(a[x]) > 0.0) ++support;
    return std::log2(static_cast<double>(support));
  }
  double s = 0.0;
  if (k == 2.0) {
    for (std::uint64_t x = 0; x < dim; ++x) {
      const double p = std::norm(a[x]);
      s += p * p;
    }
  } else if (k == 3.0) {
    for (std::uint64_t x = 0; x < dim; ++x) {
      const double p = std::norm(a[x]);
      s += p * p * p;
    }
  } else {
    for (std::uint64_t x = 0; x < dim; ++x) s += std::pow(std::norm(a[x]), k);
  }
  return std::log2(s) / (1.0 - k);
}

/// p_col = sum_x p_x^2 = 2^{-S_2}.
inline double collision_probability(const StateVector& psi) {
  const cplx* a = psi.data();
  double s = 0.0;
  for (std::uint64_t x = 0; x < psi.dim(); ++x) {
    const double p = std::norm(a[x]);
    s += p * p;
  }
  return s;
}

/// Anticoncentration criterion p_col <= 2^{-N} / a for a constant 0 < a <= 1.
inline bool anticoncentration_check(const StateVector& psi, double a = 1.0) {
  if (a <= 0.0 || a > 1.0)
    throw std::invalid_argument("anticoncentration_check: need 0 < a <= 1");
  return collision_probability(psi) <=
         std::pow(2.0, -psi.num_qubits()) / a;
}

/// Moments of the Pauli spectrum Xi_P = <P>^2 / D of a pure state.
/// moment_sums[k] = sum_P D^{k-1} Xi_P^k (equals 1 at k = 1 for pure states);
/// shannon_term = sum_P Xi_P log2(D Xi_P), the k -> 1 ingredient.
struct PauliSpectrumSummary {
  int num_qubits = 0;
  std::map<int, double> moment_sums;
  double shannon_term = 0.0;
  double max_imag_residual = 0.0;
};

/// Fast Pauli-spectrum accumulation in O(N 4^N) time, O(2^N) extra memory.
///
/// For each X-part bitstring a, f_a(x) = conj(psi_{x xor a}) psi_x; a signed
/// Walsh-Hadamard transform over x yields g(a,b) = sum_x (-1)^{b.x} f_a(x) =
/// <X^a Z^b>. The Hermitian string P(a,b) = i^{|a & b|} X^a Z^b then has
/// <P>^2 = |g(a,b)|^2 up to an imaginary residual that must vanish; the
/// residual is monitored as max_b min(Re g^2, Im g^2) and the run aborts if
/// it exceeds 1e-8, since a nonzero value means g picked up a component of
/// the wrong parity.
inline PauliSpectrumSummary pauli_spectrum_summary(const StateVector& psi,
                                                   std::span<const int> ks) {
  for (int k : ks)
    if (k < 1 || k > 3)
      throw std::invalid_argument("pauli_spectrum_summary: supported k are 1,2,3");
  const bool want_shannon =
      std::find(ks.begin(), ks.end(), 1) != ks.end();
  const int n = psi.num_qubits();
  const std::uint64_t dim = psi.dim();
  const cplx* v = psi.data();

  double m1 = 0.0, m2 = 0.0, m3 = 0.0, shannon = 0.0, resid2 = 0.0;
#pragma omp parallel reduction(+ : m1, m2, m3, shannon) reduction(max : resid2)
  {
    std::vector<double> re(dim), im(dim);
#pragma omp for schedule(dynamic, 16)
    for (std::int64_t ai = 0; ai < static_cast<std::int64_t>(dim); ++ai) {
      const std::uint64_t a = static_cast<std::uint64_t>(ai);
      for (std::uint64_t x = 0; x < dim; ++x) {
        const cplx f = std::conj(v[x ^ a]) * v[x];
        re[x] = f.real();
        im[x] = f.imag();
      }
      wht_real_unnormalized(re.data(), n);
      wht_real_unnormalized(im.data(), n);
      double lm1 = 0.0, lm2 = 0.0, lm3 = 0.0, lsh = 0.0, lres = 0.0;
      for (std::uint64_t bx = 0; bx < dim; ++bx) {
        const double r2 = re[bx] * re[bx];
        const double i2 = im[bx] * im[bx];
        const double s = r2 + i2;  // <P>^2 (+ negligible residual^2)
        lm1 += s;
        lm2 += s * s;
        lm3 += s * s * s;
        lres = std::max(lres, std::min(r2, i2));
      }
      if (want_shannon) {
        for (std::uint64_t bx = 0; bx < dim; ++bx) {
          const double s = re[bx] * re[bx] + im[bx] * im[bx];
          if (s > 0.0) lsh += s * std::log2(s);
        }
      }
      m1 += lm1;
      m2 += lm2;
      m3 += lm3;
      shannon += lsh;
      resid2 = std::max(resid2, lres);
    }
  }

  PauliSpectrumSummary out;
  out.num_qubits = n;
  out.max_imag_residual = std::sqrt(resid2);
  if (out.max_imag_residual > 1e-8)
    throw std::runtime_error(
        "pauli_spectrum_summary: imaginary residual of <P> exceeds 1e-8");
  const double d = static_cast<double>(dim);
  for (int k : ks) {
    if (k == 1) out.moment_sums[1] = m1 / d;
    if (k == 2) out.moment_sums[2] = m2 / d;
    if (k == 3) out.moment_sums[3] = m3 / d;
  }
  if (out.moment_sums.empty()) out.moment_sums[2] = m2 / d;
  out.shannon_term = shannon / d;
  return out;
}

/// Stabilizer Renyi entropy from an accumulated Pauli-spectrum summary.
/// k = 1 uses the analytic limit M_1 = -sum_P Xi_P log2(D Xi_P).
inline double stabilizer_entropy(const PauliSpectrumSummary& summary, int k) {
  if (k == 1) return std::max(-summary.shannon_term, 0.0);
  const auto it = summary.moment_sums.find(k);
  if (it == summary.moment_sums.end())
    throw std::invalid_argument("stabilizer_entropy: moment not accumulated");
  return std::log2(it->second) / (1.0 - k);
}

inline PauliSpectrumSummary pauli_spectrum_summary(const StateVector& psi,
                                                   std::initializer_list<int> ks) {
  return pauli_spectrum_summary(psi, std::span<const int>(ks.begin(), ks.size()));
}

/// Haar-state values at k = 2: S_2 = log2(D+1) - 1, M_2 = log2(D+3) - 2.
inline double haar_pe_k2(int num_qubits) {
  return std::log2(std::pow(2.0, num_qubits) + 1.0) - 1.0;
}
inline double haar_se_k2(int num_qubits) {
  return std::log2(std::pow(2.0, num_qubits) + 3.0) - 2.0;
}

/// Kolmogorov-Smirnov distance between the empirical CDF of y = D p_x and
/// the Porter-Thomas (unit exponential) CDF 1 - e^{-y}.
inline double porter_thomas_distance(const StateVector& psi) {
  const std::uint64_t dim = psi.dim();
  std::vector<double> y(dim);
  const cplx* a = psi.data();
  for (std::uint64_t x = 0; x < dim; ++x)
    y[x] = static_cast<double>(dim) * std::norm(a[x]);
  std::sort(y.begin(), y.end());
  double ks = 0.0;
  const double n = static_cast<double>(dim);
  for (std::uint64_t i = 0; i < dim; ++i) {
    const double f = 1.0 - std::exp(-y[i]);
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
    ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return ks;
}

/// Renyi-2 entanglement entropy -log2 tr(rho_A^2) of the half cut, A = first
/// floor(N/2) qubits (the low bits). Via the Gram matrix of the amplitude
/// reshape, no explicit partial trace.
inline double renyi2_entanglement_halfcut(const StateVector& psi) {
  const int n = psi.num_qubits();
  if (n < 2)
    throw std::invalid_argument("renyi2_entanglement_halfcut: need N >= 2");
  const int na = n / 2;
  const Eigen::Index da = Eigen::Index{1} << na;
  const Eigen::Index db = Eigen::Index{1} << (n - na);
  Eigen::Map<const Eigen::MatrixXcd> m(psi.data(), da, db);
  const Eigen::MatrixXcd gram = m * m.adjoint();
  const double purity = gram.squaredNorm();
  return std::max(-std::log2(purity), 0.0);
}

/// One row of observables at a fixed time.
struct ComplexityRecord {
  double time = 0.0;
  std::map<int, double> pe;  // k -> S_k
  std::map<int, double> se;  // k -> M_k
  double collision_probability = 0.0;
  double entanglement_renyi2 = 0.0;
  double porter_thomas_ks = 0.0;
};

}  // namespace ergosim
