#pragma once

#include <Eigen/Dense>

#include "backreact/ensemble.hpp"

namespace backreact {

struct ClassicalMoments {
  double position = 0.0;
  double momentum = 0.0;
  double position_squared = 0.0;
  double momentum_squared = 0.0;
  double position_momentum = 0.0;
};

// Coarse-grained estimate of the hybrid density matrix: the grid reduced
// quantum density matrix rho(x_j, x_k) = (1/N) sum_i psi_i(x_j) psi_i(x_k)^*
// (units length^-1) together with classical phase-space moments.
struct DensityMatrixEstimate {
  Eigen::MatrixXcd reduced_quantum;
  double spacing = 0.0;
  ClassicalMoments classical;
  std::size_t replica_count = 0;

  double trace() const;
  double purity() const;
  // Smallest eigenvalue of rho * dx (the dimensionless operator).
  double min_eigenvalue() const;
  double hermiticity_defect() const;
};

DensityMatrixEstimate density_matrix_estimate(const Ensemble& e);

// Build an estimate directly from weighted wavefunctions (weights sum to 1).
DensityMatrixEstimate density_matrix_from(std::span<const WaveFunction> states,
                                          std::span<const double> weights);

// Trace-norm distance || (rho_a - rho_b) dx ||_1 between the quantum reductions.
double trace_distance(const DensityMatrixEstimate& a, const DensityMatrixEstimate& b);

}  // namespace backreact
