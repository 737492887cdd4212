#include "backreact/classical.hpp"

#include <cmath>

#include "backreact/errors.hpp"

namespace backreact {

double classical_force(const HybridModel& model, double bohmian_y, double big_x) {
  if (!std::isfinite(bohmian_y) || !std::isfinite(big_x)) {
    throw InvalidArgument("classical_force: non-finite input");
  }
  return -model.classical_potential_derivative(big_x) -
         model.coupling_derivative_big_x(bohmian_y, big_x);
}

double classical_energy(const HybridModel& model, const ClassicalState& state) {
  return state.momentum * state.momentum / (2.0 * model.classical_mass()) +
         model.classical_potential(state.position);
}

ClassicalState advance_classical(const ClassicalState& state, double bohmian_y, double dt,
                                 const HybridModel& model) {
  const double big_m = model.classical_mass();
  double k = state.momentum + 0.5 * dt * classical_force(model, bohmian_y, state.position);
  const double x = state.position + dt * k / big_m;
  k += 0.5 * dt * classical_force(model, bohmian_y, x);
  if (!std::isfinite(x) || !std::isfinite(k)) {
    throw NumericalError("advance_classical: non-finite state");
  }
  return {x, k};
}

ClassicalState classical_kick_drift(const ClassicalState& state, double bohmian_y, double dt,
                                    const HybridModel& model) {
  const double k = state.momentum + 0.5 * dt * classical_force(model, bohmian_y, state.position);
  const double x = state.position + 0.5 * dt * k / model.classical_mass();
  return {x, k};
}

ClassicalState classical_drift_kick(const ClassicalState& state, double bohmian_y, double dt,
                                    const HybridModel& model) {
  const double x = state.position + 0.5 * dt * state.momentum / model.classical_mass();
  const double k = state.momentum + 0.5 * dt * classical_force(model, bohmian_y, x);
  if (!std::isfinite(x) || !std::isfinite(k)) {
    throw NumericalError("advance_classical: non-finite state");
  }
  return {x, k};
}

}  // namespace backreact
