#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "backreact/diagnostics.hpp"
#include "backreact/fft.hpp"
#include "backreact/grid.hpp"
#include "backreact/model.hpp"
#include "backreact/wavefunction.hpp"

namespace backreact {

// Both degrees of freedom treated quantum-mechanically: amplitudes
// psi(x_j, X_k) stored row-major, row index j on the quantum grid and
// column index k on the heavy grid.
class WaveFunction2D {
 public:
  WaveFunction2D(SpatialGrid grid_q, SpatialGrid grid_c, std::vector<Complex> amplitudes);

  const SpatialGrid& grid_q() const noexcept { return grid_q_; }
  const SpatialGrid& grid_c() const noexcept { return grid_c_; }
  std::size_t rows() const noexcept { return grid_q_.count(); }
  std::size_t cols() const noexcept { return grid_c_.count(); }

  Complex operator()(std::size_t j, std::size_t k) const { return amplitudes_[j * cols() + k]; }
  std::span<const Complex> amplitudes() const noexcept { return amplitudes_; }
  std::span<Complex> amplitudes() noexcept { return amplitudes_; }

  // sum |psi|^2 dx dX
  double norm() const noexcept;
  // |psi| on any of the four edges at or above 1e-6 of the peak.
  bool touches_boundary() const noexcept;
  void normalize();

 private:
  SpatialGrid grid_q_;
  SpatialGrid grid_c_;
  std::vector<Complex> amplitudes_;
};

WaveFunction2D product_state(const WaveFunction& quantum, const WaveFunction& heavy);

// Strang step for H = p^2/2m + P^2/2M + V_q(x) + V_c(X) + V_int(x, X).
class Propagator2D {
 public:
  Propagator2D(const HybridModel& model, const SpatialGrid& grid_q, const SpatialGrid& grid_c,
               double dt);

  WaveFunction2D step(const WaveFunction2D& psi) const;

 private:
  SpatialGrid grid_q_;
  SpatialGrid grid_c_;
  Fft2d fft_;
  std::vector<Complex> half_kick_;
  std::vector<Complex> kinetic_;
};

WaveFunction2D propagate_2d(const WaveFunction2D& psi, double dt, const HybridModel& model);

struct ExactMarginals {
  double position = 0.0;                // <x>
  double position_squared = 0.0;        // <x^2>
  double heavy_position = 0.0;          // <X>
  double heavy_position_squared = 0.0;  // <X^2>
  double heavy_momentum = 0.0;          // <P_X>
  Eigen::MatrixXcd reduced_quantum;     // rho_q(x_j, x_k), units length^-1
  double spacing = 0.0;
  double purity = 0.0;  // Tr rho_q^2
};

ExactMarginals exact_marginals(const WaveFunction2D& psi, double hbar);

// Expectation values of the two coupled oscillators.
struct OscillatorPair {
  double x = 0.0;
  double p = 0.0;
  double big_x = 0.0;
  double big_p = 0.0;
};

// Closed-form solution of m x'' = -m w_q^2 x - lambda X, M X'' = -M w_c^2 X - lambda x
// through the normal modes of the mass-weighted coupling matrix. Ehrenfest
// dynamics of a quadratic Hamiltonian, so it also gives the exact quantum
// expectation values.
OscillatorPair normal_mode_solution(const HybridModel& model, const OscillatorPair& initial,
                                    double t);

// sqrt(hbar / (2 M w_c)), ground-state position spread of the heavy oscillator.
double heavy_ground_width(const HybridModel& model);

struct ComparisonSeries {
  std::string name;
  std::vector<double> hybrid;
  std::vector<double> hybrid_error;  // standard error of the hybrid mean
  std::vector<double> exact;
  std::vector<double> absolute_error;
  // |hybrid - exact| / max_{s <= t} |exact(s)|; for <x> and <X> the scale is
  // at least the initial exact spread of that coordinate.
  std::vector<double> relative_error;
  std::optional<double> horizon;  // first time relative_error > tolerance
};

struct HybridExactComparison {
  std::vector<double> times;
  std::vector<ComparisonSeries> observables;  // x, X, x2
  double tolerance = 0.0;
  double heavy_width = 0.0;
  double exact_max_norm_deviation = 0.0;
  bool exact_boundary = false;
  std::size_t flagged = 0;

  const ComparisonSeries& series(const std::string& name) const;
};

struct ExactCompareSettings {
  SpatialGrid heavy_grid;
  std::size_t steps = 0;
  std::size_t record_every = 1;
  double tolerance = 0.05;
  unsigned threads = 1;
};

// The hybrid run's single mixture component must have a point classical
// start (X0, K0); the exact run replaces it by a heavy Gaussian of width
// heavy_ground_width() centred on X0 with mean momentum K0.
HybridExactComparison compare_hybrid_exact(const EnsembleSpec& spec,
                                           const ExactCompareSettings& settings);

}  // namespace backreact
