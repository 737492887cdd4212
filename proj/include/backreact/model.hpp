#pragma once

#include <string>
#include <variant>

namespace backreact {

// V_q(x) = m * omega^2 * x^2 / 2
struct HarmonicWell {
  double omega;
};

// V_q(x) = barrier_height * ((x / a)^2 - 1)^2 with a = minima_separation / 2.
struct DoubleWell {
  double barrier_height;
  double minima_separation;
};

using QuantumPotential = std::variant<HarmonicWell, DoubleWell>;

// V_c(X) = M * omega^2 * X^2 / 2
struct ClassicalHarmonic {
  double omega;
};

// V_int(x, X) = strength * x * X
struct BilinearCoupling {
  double strength;
};

// Masses, hbar and the three potential pieces of the mixed quantum-classical
// Hamiltonian
//   H = p^2/2m + V_q(x) + K^2/2M + V_c(X) + V_int(x, X).
// Construction validates all parameters and checks each closed-form
// derivative against central finite differences.
class HybridModel {
 public:
  HybridModel(double quantum_mass, double classical_mass, double hbar, QuantumPotential v_q,
              ClassicalHarmonic v_c, BilinearCoupling v_int);

  double quantum_mass() const noexcept { return m_; }
  double classical_mass() const noexcept { return big_m_; }
  double hbar() const noexcept { return hbar_; }
  const QuantumPotential& quantum_potential_spec() const noexcept { return v_q_; }
  const ClassicalHarmonic& classical_potential_spec() const noexcept { return v_c_; }
  double coupling_strength() const noexcept { return v_int_.strength; }
  bool is_harmonic() const noexcept { return std::holds_alternative<HarmonicWell>(v_q_); }

  double quantum_potential(double x) const noexcept;
  double quantum_potential_derivative(double x) const noexcept;
  double classical_potential(double big_x) const noexcept;
  double classical_potential_derivative(double big_x) const noexcept;
  double coupling(double x, double big_x) const noexcept;
  double coupling_derivative_x(double x, double big_x) const noexcept;
  double coupling_derivative_big_x(double x, double big_x) const noexcept;

  // Copy with a different coupling strength (used for decoupled control arms).
  HybridModel with_coupling(double strength) const;

  std::string describe() const;

 private:
  void validate() const;
  void check_derivatives() const;

  double m_;
  double big_m_;
  double hbar_;
  QuantumPotential v_q_;
  ClassicalHarmonic v_c_;
  BilinearCoupling v_int_;
};

}  // namespace backreact
