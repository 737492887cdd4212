#pragma once

#include "backreact/model.hpp"

namespace backreact {

// Classical phase-space point u = (X, K).
struct ClassicalState {
  double position = 0.0;
  double momentum = 0.0;

  bool operator==(const ClassicalState&) const = default;
};

// F = -dV_c/dX - dV_int(y, X)/dX, the Bohmian position y standing in for the
// quantum coordinate.
double classical_force(const HybridModel& model, double bohmian_y, double big_x);

double classical_energy(const HybridModel& model, const ClassicalState& state);

// One velocity-Verlet step (half kick, drift, half kick) with y held fixed.
ClassicalState advance_classical(const ClassicalState& state, double bohmian_y, double dt,
                                 const HybridModel& model);

// The two halves of a velocity-Verlet step, split at the mid-step position:
//   kick_drift: K += dt/2 F(X, y);  X += dt/2 K / M
//   drift_kick: X += dt/2 K / M;  K += dt/2 F(X, y)
// Composing them with the same y reproduces advance_classical up to rounding.
ClassicalState classical_kick_drift(const ClassicalState& state, double bohmian_y, double dt,
                                    const HybridModel& model);
ClassicalState classical_drift_kick(const ClassicalState& state, double bohmian_y, double dt,
                                    const HybridModel& model);

}  // namespace backreact
