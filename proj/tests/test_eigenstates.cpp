#include <catch2/catch_amalgamated.hpp>

#include "ergosim/dense_reference.hpp"
#include "ergosim/eigenstates.hpp"
#include "ergosim/initial_states.hpp"
#include "support/test_util.hpp"

using namespace ergosim;
using namespace ergotest;

TEST_CASE("dense_hamiltonian") {
  SECTION("b = 0 is the diagonal matrix of classical Ising energies") {
    IsingParams p = IsingParams::defaults(6);
    p.b = 0.0;
    const auto h = dense_hamiltonian(p);
    const auto table = ising_energy_table(p);
    for (Eigen::Index x = 0; x < h.rows(); ++x)
      for (Eigen::Index y = 0; y < h.cols(); ++y)
        REQUIRE(h(x, y) == Catch::Approx(x == y ? table[static_cast<std::size_t>(x)]
                                                : 0.0)
                               .margin(1e-14));
  }
  SECTION("symmetric by construction") {
    const auto h = dense_hamiltonian(IsingParams::defaults(7));
    REQUIRE((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("agrees with the matrix-free action on random vectors") {
    IsingParams p = IsingParams::defaults(8, 0.5);
    Rng drng = make_rng(211);
    p.apply_disorder(drng);
    const auto h = dense_hamiltonian(p);
    const MfimAction action(p);
    Rng rng = make_rng(212);
    for (int rep = 0; rep < 50; ++rep) {
      const StateVector psi = haar_random_state(8, rng);
      const StateVector fast = mfim_apply(psi, action);
      Eigen::Map<const Eigen::VectorXcd> v(psi.data(), 256);
      const Eigen::VectorXcd want = h * v;
      for (int x = 0; x < 256; ++x)
        REQUIRE(std::abs(fast.data()[x] - want(x)) < 1e-12);
    }
  }
  SECTION("N above the memory ceiling throws") {
    REQUIRE_THROWS_AS(dense_hamiltonian(IsingParams::defaults(15)),
                      std::invalid_argument);
  }
}

TEST_CASE("diagonalization reconstructs H and resolves completeness") {
  IsingParams p = IsingParams::defaults(8);
  const auto h = dense_hamiltonian(p);
  const EigenSystem sys = diagonalize_symmetric(h);
  SECTION("spectral reconstruction within 1e-9") {
    const Eigen::MatrixXd rebuilt =
        sys.vectors * sys.energies.asDiagonal() * sys.vectors.transpose();
    REQUIRE((rebuilt - h).cwiseAbs().maxCoeff() < 1e-9);
  }
  SECTION("completeness: sum_n |<n|phi>|^2 = 1") {
    Rng rng = make_rng(221);
    const StateVector phi = haar_random_state(8, rng);
    Eigen::Map<const Eigen::VectorXcd> v(phi.data(), 256);
    const Eigen::VectorXcd overlaps = sys.vectors.transpose() * v;
    REQUIRE(overlaps.squaredNorm() == Catch::Approx(1.0).margin(1e-10));
  }
  SECTION("energies ascend") {
    for (Eigen::Index i = 1; i < sys.energies.size(); ++i)
      REQUIRE(sys.energies(i) >= sys.energies(i - 1));
  }
}

TEST_CASE("eigenstate complexity scan at small N") {
  SECTION("classical limit b = 0: every eigenstate is a basis state with S_2 = 0") {
    IsingParams p = IsingParams::defaults(6);
    p.b = 0.0;
    const auto scan = eigenstate_complexity_scan(p);
    for (double s2 : scan.per_state_pe)
      REQUIRE(s2 == Catch::Approx(0.0).margin(1e-9));
  }
  SECTION("edge eigenstates are less complex than mid-spectrum ones (N = 8)") {
    const auto scan = eigenstate_complexity_scan(IsingParams::defaults(8));
    const std::size_t dim = scan.energies.size();
    const std::size_t n_edge = dim / 50;    // lowest 2%
    const std::size_t n_central = dim / 10; // central 10%
    const std::size_t c0 = (dim - n_central) / 2;
    double edge_pe = 0, central_pe = 0, edge_se = 0, central_se = 0;
    for (std::size_t i = 0; i < n_edge; ++i) {
      edge_pe += scan.per_state_pe[i];
      edge_se += scan.per_state_se[i];
    }
    for (std::size_t i = c0; i < c0 + n_central; ++i) {
      central_pe += scan.per_state_pe[i];
      central_se += scan.per_state_se[i];
    }
    edge_pe /= n_edge;
    edge_se /= n_edge;
    central_pe /= n_central;
    central_se /= n_central;
    REQUIRE(central_pe > edge_pe);
    REQUIRE(central_se > edge_se);
  }
}

TEST_CASE("gap ratio statistic") {
  SECTION("affine rescaling leaves r invariant to rounding") {
    Rng rng = make_rng(231);
    std::vector<double> e(500);
    for (auto& x : e) x = uniform(rng, 0.0, 10.0);
    std::vector<double> scaled(e);
    for (auto& x : scaled) x = 3.7 * x - 11.0;
    REQUIRE(gap_ratio_statistic(e) ==
            Catch::Approx(gap_ratio_statistic(scaled)).margin(1e-12));
    std::vector<double> doubled(e);
    for (auto& x : doubled) x *= 2.0;  // power-of-two scale: bit exact
    REQUIRE(gap_ratio_statistic(e) == gap_ratio_statistic(doubled));
  }
  SECTION("Poisson spectra give r ~ 0.386") {
    Rng rng = make_rng(232);
    const double r = dense::poisson_gap_ratio_oracle(2000, 20, rng);
    REQUIRE(r == Catch::Approx(0.3863).margin(0.01));
  }
  SECTION("sampled GOE matrices give r ~ 0.5307") {
    Rng rng = make_rng(233);
    const double r = dense::goe_gap_ratio_oracle(400, 6, rng);
    REQUIRE(r == Catch::Approx(0.5307).margin(0.012));
  }
  SECTION("too few energies throws") {
    std::vector<double> e(50, 0.0);
    REQUIRE_THROWS_AS(gap_ratio_statistic(e), std::invalid_argument);
  }
  SECTION("degenerate spectrum throws") {
    std::vector<double> e(300, 5.0);
    REQUIRE_THROWS_AS(gap_ratio_statistic(e, 0.0), std::runtime_error);
  }
}

TEST_CASE("reflection parity splits the clean MFIM spectrum into GOE sectors") {
  // The uniform-field open chain commutes with site reversal; each eigenstate
  // has <n|R|n> = +-1 and the gap ratio is GOE-like only within a sector.
  IsingParams p = IsingParams::defaults(10);
  const EigenSystem sys = diagonalize_symmetric(dense_hamiltonian(p));
  const Eigen::Index dim = sys.energies.size();
  std::vector<double> even, odd;
  for (Eigen::Index i = 0; i < dim; ++i) {
    const std::span<const double> col(sys.vectors.col(i).data(),
                                      static_cast<std::size_t>(dim));
    const double par = reflection_overlap(col, 10);
    REQUIRE(std::abs(std::abs(par) - 1.0) < 1e-8);
    (par > 0 ? even : odd).push_back(sys.energies(i));
  }
  REQUIRE(even.size() + odd.size() == static_cast<std::size_t>(dim));
  const double r_even = gap_ratio_statistic(even);
  const double r_full = gap_ratio_statistic(
      std::span<const double>(sys.energies.data(), static_cast<std::size_t>(dim)));
  REQUIRE(r_even > 0.48);   // GOE-like within the sector
  REQUIRE(r_full < 0.47);   // superposed sectors drift towards Poisson
}
