#pragma once

#include <vector>

#include "backreact/fft.hpp"
#include "backreact/model.hpp"
#include "backreact/wavefunction.hpp"

namespace backreact {

// Strang split-operator propagator for the quantum sector with the classical
// coordinate frozen as a parameter:
//   exp(-i V dt/2) F^-1 exp(-i hbar k^2 dt / 2m) F exp(-i V dt/2),
//   V(x) = V_q(x) + V_int(x, X_frozen).
// Phase tables depending only on (model, grid, dt) are computed once.
class QuantumPropagator {
 public:
  QuantumPropagator(const HybridModel& model, const SpatialGrid& grid, double dt);

  double dt() const noexcept { return dt_; }

  WaveFunction step(const WaveFunction& psi, double frozen_big_x) const;

  // The two halves of one Strang step: (half kick, half kinetic drift) and
  // (half kinetic drift, half kick). Applying both equals step().
  WaveFunction first_half(const WaveFunction& psi, double frozen_big_x) const;
  WaveFunction second_half(const WaveFunction& psi, double frozen_big_x) const;

 private:
  void kick(std::vector<Complex>& amp, double frozen_big_x) const;
  void drift(std::vector<Complex>& amp, const std::vector<Complex>& phase) const;
  void check(const WaveFunction& in, const WaveFunction& out) const;

  HybridModel model_;
  SpatialGrid grid_;
  double dt_;
  Fft1d fft_;
  std::vector<Complex> potential_half_kick_;
  std::vector<Complex> kinetic_full_;
  std::vector<Complex> kinetic_half_;
};

WaveFunction propagate_quantum(const WaveFunction& psi, double frozen_big_x, double dt,
                               const HybridModel& model);

// d psi / dx by spectral differentiation (Nyquist mode dropped).
std::vector<Complex> spectral_derivative(const WaveFunction& psi);

struct QuantumExpectations {
  double position = 0.0;
  double position_squared = 0.0;
  double momentum = 0.0;
  double kinetic = 0.0;
  double quantum_potential = 0.0;
  double coupling = 0.0;
};

QuantumExpectations quantum_expectations(const WaveFunction& psi, double big_x,
                                         const HybridModel& model);

// <p> from central finite differences; independent check of the spectral route.
double finite_difference_momentum(const WaveFunction& psi, const HybridModel& model);

}  // namespace backreact
