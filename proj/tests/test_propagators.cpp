#include <catch2/catch_amalgamated.hpp>

#include "ergosim/chebyshev.hpp"
#include "ergosim/dense_reference.hpp"
#include "ergosim/initial_states.hpp"
#include "ergosim/models.hpp"
#include "support/test_util.hpp"

using namespace ergosim;
using namespace ergotest;

TEST_CASE("lanczos_bounds brackets the spectrum") {
  SECTION("diagonal Hamiltonian (b = 0): exact classical extremes") {
    IsingParams p = IsingParams::defaults(10);
    p.b = 0.0;
    const auto table = ising_energy_table(p);
    const double e_min = *std::min_element(table.begin(), table.end());
    const double e_max = *std::max_element(table.begin(), table.end());
    const MfimAction h(p);
    const auto bounds = lanczos_bounds(h, 10);
    REQUIRE(bounds.e_min <= e_min);
    REQUIRE(bounds.e_max >= e_max);
    REQUIRE(bounds.e_max - e_max < 0.2 * (e_max - e_min));
  }
  SECTION("dense diagonalization at N <= 10 is bracketed, including disorder") {
    for (double w : {0.0, 0.5}) {
      IsingParams p = IsingParams::defaults(9, w);
      Rng rng = make_rng(81);
      if (w > 0) p.apply_disorder(rng);
      const MfimAction h(p);
      const auto bounds = lanczos_bounds(h, 9);
      const dense::DenseEvolver exact(dense_hamiltonian(p));
      REQUIRE(bounds.e_min <= exact.e_min());
      REQUIRE(bounds.e_max >= exact.e_max());
    }
  }
  SECTION("free spins (h = J = 0): spectrum [-bN, bN]") {
    IsingParams p = IsingParams::defaults(8);
    p.coupling_j = 0.0;
    p.h.assign(8, 0.0);
    const MfimAction h(p);
    const auto bounds = lanczos_bounds(h, 8);
    REQUIRE(bounds.e_min <= -p.b * 8);
    REQUIRE(bounds.e_max >= p.b * 8);
  }
  SECTION("deterministic given the seed") {
    IsingParams p = IsingParams::defaults(8);
    const MfimAction h(p);
    const auto b1 = lanczos_bounds(h, 8, 60, 0.01, 12345);
    const auto b2 = lanczos_bounds(h, 8, 60, 0.01, 12345);
    REQUIRE(b1.e_min == b2.e_min);
    REQUIRE(b1.e_max == b2.e_max);
  }
}

TEST_CASE("chebyshev_evolve") {
  IsingParams p = IsingParams::defaults(10);
  const MfimAction h(p);
  const auto bounds = lanczos_bounds(h, 10);
  Rng rng = make_rng(91);
  const StateVector psi0 = random_product_state(10, rng);

  SECTION("t = 0 is the identity") {
    StateVector psi = psi0;
    chebyshev_evolve(psi, h, bounds, 0.0);
    REQUIRE(max_amp_diff(psi, psi0) < 1e-13);
  }
  SECTION("fidelity vs dense matrix exponential at t = 1 and t = 10") {
    const dense::DenseEvolver exact(dense_hamiltonian(p));
    for (double t : {1.0, 10.0}) {
      StateVector psi = psi0;
      chebyshev_evolve(psi, h, bounds, t);
      const StateVector want = exact.evolve(psi0, t);
      REQUIRE(1.0 - std::abs(inner_product(want, psi)) < 1e-10);
    }
  }
  SECTION("group composition: evolve(t1) then (t2) equals evolve(t1 + t2)") {
    StateVector split = psi0;
    chebyshev_evolve(split, h, bounds, 3.0);
    chebyshev_evolve(split, h, bounds, 4.0);
    StateVector whole = psi0;
    chebyshev_evolve(whole, h, bounds, 7.0);
    REQUIRE(1.0 - std::abs(inner_product(whole, split)) < 1e-9);
  }
  SECTION("energy is conserved over t = 100 in unit steps") {
    StateVector psi = psi0;
    const double e0 = energy_expectation(psi, h);
    for (int t = 0; t < 100; ++t) chebyshev_evolve(psi, h, bounds, 1.0);
    REQUIRE(std::abs(energy_expectation(psi, h) - e0) < 1e-8);
    REQUIRE(std::abs(psi.norm_squared() - 1.0) < 1e-10);
  }
  SECTION("disordered Hamiltonian keeps oracle fidelity") {
    IsingParams pd = IsingParams::defaults(8, 0.5);
    Rng drng = make_rng(92);
    pd.apply_disorder(drng);
    const MfimAction hd(pd);
    const auto bd = lanczos_bounds(hd, 8);
    const dense::DenseEvolver exact(dense_hamiltonian(pd));
    Rng rng2 = make_rng(93);
    const StateVector phi0 = random_product_state(8, rng2);
    StateVector phi = phi0;
    chebyshev_evolve(phi, hd, bd, 10.0);
    REQUIRE(1.0 - std::abs(inner_product(exact.evolve(phi0, 10.0), phi)) < 1e-10);
  }
  SECTION("max_order too small signals the caller to split") {
    ChebyshevConfig tight;
    tight.max_order = 60;
    StateVector psi = psi0;
    REQUIRE_THROWS_AS(chebyshev_evolve(psi, h, bounds, 50.0, tight),
                      std::runtime_error);
    StateVector psi2 = psi0;
    REQUIRE_NOTHROW(chebyshev_evolve_split(psi2, h, bounds, 50.0, tight));
    REQUIRE(std::abs(psi2.norm_squared() - 1.0) < 1e-8);
    const dense::DenseEvolver exact(dense_hamiltonian(p));
    REQUIRE(1.0 - std::abs(inner_product(exact.evolve(psi0, 50.0), psi2)) < 1e-8);
  }
}

TEST_CASE("backward-recurrence Bessel coefficients match std::cyl_bessel_j") {
  for (double x : {0.5, 3.0, 17.5, 40.0}) {
    const auto j = ergosim::detail::bessel_j_backward(x, 60);
    for (int n : {0, 1, 2, 5, 12, 30}) {
      const double want = std::cyl_bessel_j(n, x);
      REQUIRE(j[static_cast<std::size_t>(n)] == Catch::Approx(want).margin(1e-12));
    }
  }
}
