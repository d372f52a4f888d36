#pragma once

#include "ergosim/chebyshev.hpp"
#include "ergosim/models.hpp"

namespace ergosim {

/// Applies one period of the interpolating Floquet operator U_F. Both factors
/// are mixed-field Ising Hamiltonians evolved for unit time by Chebyshev
/// propagation; their spectral brackets are computed once at construction.
class UfStepper {
 public:
  UfStepper(const FloquetFamilySpec& spec, ChebyshevConfig cfg = {},
            std::uint64_t bounds_seed = 0x5eed5eedULL)
      : right_(spec.right_factor()),
        left_(spec.left_factor()),
        cfg_(cfg),
        bounds_right_(lanczos_bounds(right_, right_.num_qubits(), 60, 0.01,
                                     bounds_seed)),
        bounds_left_(lanczos_bounds(left_, left_.num_qubits(), 60, 0.01,
                                    bounds_seed ^ 0x9e3779b97f4a7c15ull)) {}

  void step(StateVector& psi) const {
    chebyshev_evolve(psi, right_, bounds_right_, 1.0, cfg_);
    chebyshev_evolve(psi, left_, bounds_left_, 1.0, cfg_);
  }

  const MfimAction& right_factor() const { return right_; }
  const MfimAction& left_factor() const { return left_; }

 private:
  MfimAction right_;
  MfimAction left_;
  ChebyshevConfig cfg_;
  SpectralBounds bounds_right_;
  SpectralBounds bounds_left_;
};

inline void uf_step(StateVector& psi, const UfStepper& stepper) {
  stepper.step(psi);
}

}  // namespace ergosim
