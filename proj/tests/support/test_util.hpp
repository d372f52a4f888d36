#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "ergosim/initial_states.hpp"
#include "ergosim/rng.hpp"
#include "ergosim/state_vector.hpp"

namespace ergotest {

using ergosim::cplx;
using ergosim::Mat2;
using ergosim::Mat4;

inline Mat2 make_mat2(cplx a, cplx b, cplx c, cplx d) {
  Mat2 m;
  m(0, 0) = a; m(0, 1) = b;
  m(1, 0) = c; m(1, 1) = d;
  return m;
}

inline Mat2 gate_identity2() { return make_mat2(1, 0, 0, 1); }
inline Mat2 gate_x() { return make_mat2(0, 1, 1, 0); }
inline Mat2 gate_h() {
  const double s = 1.0 / std::sqrt(2.0);
  return make_mat2(s, s, s, -s);
}
inline Mat2 gate_s() { return make_mat2(1, 0, 0, cplx(0, 1)); }

inline Mat4 gate_identity4() {
  Mat4 m;
  for (int i = 0; i < 4; ++i) m(i, i) = 1;
  return m;
}

// 4-dim index convention: 2*bit(site_a) + bit(site_b).
inline Mat4 gate_swap() {
  Mat4 m;
  m(0, 0) = 1; m(1, 2) = 1; m(2, 1) = 1; m(3, 3) = 1;
  return m;
}

// control = site_a (high bit of the gate index), target = site_b.
inline Mat4 gate_cnot() {
  Mat4 m;
  m(0, 0) = 1; m(1, 1) = 1; m(2, 3) = 1; m(3, 2) = 1;
  return m;
}

inline double max_amp_diff(const ergosim::StateVector& a,
                           const ergosim::StateVector& b) {
  double worst = 0.0;
  for (std::uint64_t x = 0; x < a.dim(); ++x)
    worst = std::max(worst, std::abs(a.data()[x] - b.data()[x]));
  return worst;
}

inline double marginal_one(const ergosim::StateVector& psi, int site) {
  double p = 0.0;
  const std::uint64_t s = std::uint64_t{1} << site;
  for (std::uint64_t x = 0; x < psi.dim(); ++x)
    if (x & s) p += std::norm(psi.data()[x]);
  return p;
}

// Uniformly random element of the 24-element single-qubit Clifford group,
// generated as a short random word in H and S.
inline Mat2 random_clifford1(ergosim::Rng& rng) {
  Mat2 u = gate_identity2();
  const auto mul = [](const Mat2& a, const Mat2& b) {
    Mat2 c;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        c(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j);
    return c;
  };
  for (int w = 0; w < 12; ++w) u = mul(rng() % 2 ? gate_h() : gate_s(), u);
  return u;
}

}  // namespace ergotest
