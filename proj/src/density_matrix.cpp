#include "backreact/density_matrix.hpp"

#include <cmath>
#include <unordered_map>

#include "backreact/errors.hpp"

namespace backreact {
namespace {

void add_outer(Eigen::MatrixXcd& rho, const WaveFunction& psi, double weight) {
  const auto n = static_cast<Eigen::Index>(psi.size());
  Eigen::Map<const Eigen::VectorXcd> v(psi.amplitudes().data(), n);
  rho.noalias() += weight * (v * v.adjoint());
}

}  // namespace

double DensityMatrixEstimate::trace() const { return reduced_quantum.diagonal().real().sum() * spacing; }

double DensityMatrixEstimate::purity() const {
  return reduced_quantum.cwiseAbs2().sum() * spacing * spacing;
}

double DensityMatrixEstimate::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(reduced_quantum * spacing,
                                                         Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double DensityMatrixEstimate::hermiticity_defect() const {
  return (reduced_quantum - reduced_quantum.adjoint()).cwiseAbs().maxCoeff();
}

DensityMatrixEstimate density_matrix_estimate(const Ensemble& e) {
  const std::size_t n = e.replicas.size();
  if (n < 2) throw InvalidArgument("density_matrix_estimate: need at least 2 replicas");
  // Accumulate one outer product per distinct wavefunction, in first-seen order.
  std::vector<const WaveFunction*> order;
  std::unordered_map<const WaveFunction*, std::size_t> counts;
  for (const auto& r : e.replicas) {
    auto [it, inserted] = counts.try_emplace(r.psi.get(), 0);
    if (inserted) order.push_back(r.psi.get());
    ++it->second;
  }
  const auto g = static_cast<Eigen::Index>(e.grid().count());
  DensityMatrixEstimate est;
  est.reduced_quantum = Eigen::MatrixXcd::Zero(g, g);
  est.spacing = e.grid().spacing();
  est.replica_count = n;
  for (const auto* psi : order) {
    add_outer(est.reduced_quantum, *psi, static_cast<double>(counts[psi]) / static_cast<double>(n));
  }
  auto& c = est.classical;
  for (const auto& r : e.replicas) {
    const double x = r.classical.position;
    const double k = r.classical.momentum;
    c.position += x;
    c.momentum += k;
    c.position_squared += x * x;
    c.momentum_squared += k * k;
    c.position_momentum += x * k;
  }
  const double inv = 1.0 / static_cast<double>(n);
  c.position *= inv;
  c.momentum *= inv;
  c.position_squared *= inv;
  c.momentum_squared *= inv;
  c.position_momentum *= inv;
  return est;
}

DensityMatrixEstimate density_matrix_from(std::span<const WaveFunction> states,
                                          std::span<const double> weights) {
  if (states.empty() || states.size() != weights.size()) {
    throw InvalidArgument("density_matrix_from: states and weights must match");
  }
  const auto g = static_cast<Eigen::Index>(states.front().size());
  DensityMatrixEstimate est;
  est.reduced_quantum = Eigen::MatrixXcd::Zero(g, g);
  est.spacing = states.front().grid().spacing();
  for (std::size_t i = 0; i < states.size(); ++i) add_outer(est.reduced_quantum, states[i], weights[i]);
  return est;
}

double trace_distance(const DensityMatrixEstimate& a, const DensityMatrixEstimate& b) {
  if (a.reduced_quantum.rows() != b.reduced_quantum.rows()) {
    throw InvalidArgument("trace_distance: grid mismatch");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      (a.reduced_quantum - b.reduced_quantum) * a.spacing, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().sum();
}

}  // namespace backreact
