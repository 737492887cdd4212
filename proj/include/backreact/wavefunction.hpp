#pragma once

#include <complex>
#include <span>
#include <vector>

#include "backreact/grid.hpp"
#include "backreact/model.hpp"

namespace backreact {

using Complex = std::complex<double>;

// Quantum-sector amplitudes on a SpatialGrid (units length^-1/2).
class WaveFunction {
 public:
  WaveFunction(SpatialGrid grid, std::vector<Complex> amplitudes);

  const SpatialGrid& grid() const noexcept { return grid_; }
  std::span<const Complex> amplitudes() const noexcept { return amplitudes_; }
  std::span<Complex> amplitudes() noexcept { return amplitudes_; }
  std::size_t size() const noexcept { return amplitudes_.size(); }
  Complex operator[](std::size_t j) const { return amplitudes_[j]; }

  // Discrete L2 norm squared, sum |psi_j|^2 * dx.
  double norm() const noexcept;
  double max_abs() const noexcept;
  // True when |psi| at either boundary point reaches 1e-6 of the peak.
  bool touches_boundary() const noexcept;
  std::vector<double> density() const;

  void normalize();

 private:
  SpatialGrid grid_;
  std::vector<Complex> amplitudes_;
};

// psi(x) ~ exp(-(x - center)^2 / (4 width^2) + i k x), normalized on the grid.
WaveFunction init_gaussian(const SpatialGrid& grid, double center, double width,
                           double wavenumber);

// Harmonic-oscillator eigenfunction phi_n (n = 0..4) for the model's quantum
// mass and omega_q, built by the normalized Hermite recurrence.
WaveFunction init_eigenstate(const SpatialGrid& grid, const HybridModel& model, int n);

// Normalized sum_n c_n phi_n over harmonic eigenstates.
WaveFunction init_eigen_superposition(const SpatialGrid& grid, const HybridModel& model,
                                      std::span<const double> coefficients);

// L2 distance sqrt(sum |a_j - b_j|^2 dx).
double l2_distance(const WaveFunction& a, const WaveFunction& b);

}  // namespace backreact
