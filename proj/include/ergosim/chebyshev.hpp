#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ergosim/rng.hpp"
#include "ergosim/state_vector.hpp"

namespace ergosim {

/// Bracket of the spectrum of a Hermitian operator, inflated by a relative
/// safety margin. Chebyshev propagation diverges if the true spectrum leaks
/// outside [e_min, e_max].
struct SpectralBounds {
  double e_min = 0.0;
  double e_max = 0.0;
  double margin = 0.01;

  double center() const { return 0.5 * (e_max + e_min); }
  double halfwidth() const { return 0.5 * (e_max - e_min); }
};

struct ChebyshevConfig {
  double coefficient_tolerance = 1e-12;
  int max_order = 10000;
};

namespace detail {

/// J_0..J_nmax by Miller's backward recurrence (stable for n > x where the
/// forward recurrence overflows). Normalized via J_0 + 2 sum_k J_{2k} = 1.
inline std::vector<double> bessel_j_backward(double x, int nmax) {
  std::vector<double> j(static_cast<std::size_t>(nmax) + 1, 0.0);
  if (x == 0.0) {
    j[0] = 1.0;
    return j;
  }
  const int start = nmax + 16 +
                    static_cast<int>(2.0 * std::sqrt(static_cast<double>(nmax) + x));
  double fp1 = 0.0;          // J_{n+1}
  double f = 1e-280;         // J_n (arbitrary seed)
  double norm_acc = 0.0;     // accumulates J_0 + 2 sum J_{2k}
  for (int n = start; n >= 1; --n) {
    const double fm1 = (2.0 * n / x) * f - fp1;
    fp1 = f;
    f = fm1;
    if (n - 1 <= nmax) j[static_cast<std::size_t>(n - 1)] = f;
    if ((n - 1) % 2 == 0) norm_acc += (n - 1 == 0) ? f : 2.0 * f;
    if (std::abs(f) > 1e250) {
      const double s = 1e-250;
      f *= s;
      fp1 *= s;
      norm_acc *= s;
      for (auto& v : j) v *= s;
    }
  }
  for (auto& v : j) v /= norm_acc;
  return j;
}

/// Truncation order m for exp(-i delta_t H~): smallest m such that
/// |c_n| = 2|J_n(delta_t)| stays below the tolerance for 3 consecutive n
/// ending at m. Returns the Bessel array up to m.
inline std::vector<double> chebyshev_bessel_coeffs(double delta_t,
                                                   const ChebyshevConfig& cfg) {
  int guess = static_cast<int>(std::ceil(delta_t)) + 20 +
              static_cast<int>(12.0 * std::cbrt(delta_t + 1.0));
  while (true) {
    if (guess > cfg.max_order) guess = cfg.max_order;
    auto j = bessel_j_backward(delta_t, guess);
    int run = 0;
    for (int n = 1; n <= guess; ++n) {
      run = (2.0 * std::abs(j[static_cast<std::size_t>(n)]) <
             cfg.coefficient_tolerance)
                ? run + 1
                : 0;
      if (run == 3) {
        j.resize(static_cast<std::size_t>(n) + 1);
        return j;
      }
    }
    if (guess >= cfg.max_order)
      throw std::runtime_error(
          "chebyshev_evolve: max_order reached before coefficient tolerance; "
          "split the time step");
    guess *= 2;
  }
}

}  // namespace detail

/// Extremal eigenvalue bracket via Lanczos (no reorthogonalization), inflated
/// by margin * spread on each side. Deterministic given `seed`. Breakdown
/// (vanishing beta) restarts with a fresh random vector; extremes are merged
/// across restarts.
template <typename HAction>
SpectralBounds lanczos_bounds(const HAction& apply_h, int num_qubits,
                              int iterations = 60, double margin = 0.01,
                              std::uint64_t seed = 0x5eed5eedULL) {
  const std::uint64_t dim = std::uint64_t{1} << num_qubits;
  const int m_max = static_cast<int>(
      std::min<std::uint64_t>(static_cast<std::uint64_t>(iterations), dim));

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  Rng rng = make_rng(seed);

  const int max_attempts = 3;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<cplx> v(dim), v_prev(dim, 0.0), w(dim);
    for (auto& a : v) a = cplx(gaussian(rng), gaussian(rng));
    double nv = 0.0;
    for (const auto& a : v) nv += std::norm(a);
    nv = std::sqrt(nv);
    for (auto& a : v) a /= nv;

    std::vector<double> alpha, beta;
    bool breakdown = false;
    for (int it = 0; it < m_max; ++it) {
      apply_h(std::span<const cplx>(v), std::span<cplx>(w));
      cplx dot = 0.0;
      for (std::uint64_t x = 0; x < dim; ++x) dot += std::conj(v[x]) * w[x];
      const double a_it = dot.real();
      alpha.push_back(a_it);
      const double b_prev = beta.empty() ? 0.0 : beta.back();
      for (std::uint64_t x = 0; x < dim; ++x)
        w[x] -= a_it * v[x] + b_prev * v_prev[x];
      double nw = 0.0;
      for (const auto& a : w) nw += std::norm(a);
      nw = std::sqrt(nw);
      if (it + 1 == m_max) break;
      if (nw < 1e-12 * (std::abs(a_it) + 1.0)) {
        breakdown = true;  // invariant subspace; Ritz values of it are exact
        break;
      }
      beta.push_back(nw);
      v_prev.swap(v);
      v.swap(w);
      for (auto& a : v) a /= nw;
    }

    const int m = static_cast<int>(alpha.size());
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      tri(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < m)
        tri(i, i + 1) = tri(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri,
                                                      Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
    hi = std::max(hi, es.eigenvalues().maxCoeff());
    if (!breakdown) break;  // a full-length run is enough
  }

  SpectralBounds bounds;
  bounds.margin = margin;
  const double spread = hi - lo;
  const double pad = margin * spread + 1e-9 * (std::abs(lo) + std::abs(hi) + 1.0);
  bounds.e_min = lo - pad;
  bounds.e_max = hi + pad;
  return bounds;
}

/// psi <- exp(-i H t) psi by Chebyshev expansion of the rescaled operator
/// H~ = (H - c)/delta, c = center, delta = halfwidth of `bounds`:
///   exp(-i H t) = e^{-i c t} sum_n (2 - delta_{n0}) (-i)^n J_n(delta t) T_n(H~).
template <typename HAction>
void chebyshev_evolve(StateVector& psi, const HAction& apply_h,
                      const SpectralBounds& bounds, double t,
                      const ChebyshevConfig& cfg = {}) {
  if (t < 0.0) throw std::invalid_argument("chebyshev_evolve: t must be >= 0");
  if (t == 0.0) return;
  const double c = bounds.center();
  const double delta = bounds.halfwidth();
  if (delta <= 0.0) {
    // H proportional to identity within the bracket: pure phase.
    const cplx ph = std::polar(1.0, -c * t);
    for (auto& a : psi.amplitudes()) a *= ph;
    return;
  }
  const auto bessel = detail::chebyshev_bessel_coeffs(delta * t, cfg);
  const std::uint64_t dim = psi.dim();

  std::vector<cplx> t_prev(psi.data(), psi.data() + dim);  // T_0 psi
  std::vector<cplx> t_cur(dim), h_buf(dim), acc(dim);

  // n = 0 term
  for (std::uint64_t x = 0; x < dim; ++x) acc[x] = bessel[0] * t_prev[x];

  // T_1 psi = H~ psi
  apply_h(std::span<const cplx>(t_prev), std::span<cplx>(h_buf));
  for (std::uint64_t x = 0; x < dim; ++x)
    t_cur[x] = (h_buf[x] - c * t_prev[x]) / delta;

  const cplx minus_i(0.0, -1.0);
  cplx in_phase = minus_i;  // (-i)^n
  for (std::size_t n = 1; n < bessel.size(); ++n) {
    const cplx coeff = 2.0 * in_phase * bessel[n];
    for (std::uint64_t x = 0; x < dim; ++x) acc[x] += coeff * t_cur[x];
    if (n + 1 < bessel.size()) {
      apply_h(std::span<const cplx>(t_cur), std::span<cplx>(h_buf));
      for (std::uint64_t x = 0; x < dim; ++x) {
        const cplx next = 2.0 * (h_buf[x] - c * t_cur[x]) / delta - t_prev[x];
        t_prev[x] = t_cur[x];
        t_cur[x] = next;
      }
    }
    in_phase *= minus_i;
  }

  const cplx global = std::polar(1.0, -c * t);
  cplx* out = psi.data();
  for (std::uint64_t x = 0; x < dim; ++x) out[x] = global * acc[x];
}

/// Splits t into equal chunks small enough for cfg.max_order when a single
/// Chebyshev step cannot reach the requested time.
template <typename HAction>
void chebyshev_evolve_split(StateVector& psi, const HAction& apply_h,
                            const SpectralBounds& bounds, double t,
                            const ChebyshevConfig& cfg = {}) {
  if (t == 0.0) return;
  // Truncation order grows like x + 12 x^{1/3} + O(20) in x = delta*t; invert
  // that for the largest step the order budget allows.
  double x = static_cast<double>(cfg.max_order);
  for (int it = 0; it < 8; ++it)
    x = std::max(0.25, 0.9 * cfg.max_order - 12.0 * std::cbrt(x) - 25.0);
  const double max_dt = x / std::max(bounds.halfwidth(), 1e-12);
  const int chunks = std::max(1, static_cast<int>(std::ceil(t / max_dt)));
  const double dt = t / chunks;
  for (int i = 0; i < chunks; ++i) chebyshev_evolve(psi, apply_h, bounds, dt, cfg);
}

}  // namespace ergosim
