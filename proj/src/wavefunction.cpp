#include "backreact/wavefunction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "backreact/errors.hpp"

namespace backreact {

WaveFunction::WaveFunction(SpatialGrid grid, std::vector<Complex> amplitudes)
    : grid_(std::move(grid)), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() != grid_.count()) {
    throw InvalidArgument("wavefunction: amplitude count does not match grid");
  }
}

double WaveFunction::norm() const noexcept {
  double s = 0.0;
  for (const auto& a : amplitudes_) s += std::norm(a);
  return s * grid_.spacing();
}

double WaveFunction::max_abs() const noexcept {
  double peak = 0.0;
  for (const auto& a : amplitudes_) peak = std::max(peak, std::norm(a));
  return std::sqrt(peak);
}

bool WaveFunction::touches_boundary() const noexcept {
  double peak = 0.0;
  for (const auto& a : amplitudes_) peak = std::max(peak, std::norm(a));
  const double limit = 1e-12 * peak;
  return std::norm(amplitudes_.front()) >= limit || std::norm(amplitudes_.back()) >= limit;
}

std::vector<double> WaveFunction::density() const {
  std::vector<double> rho(amplitudes_.size());
  std::transform(amplitudes_.begin(), amplitudes_.end(), rho.begin(),
                 [](const Complex& a) { return std::norm(a); });
  return rho;
}

void WaveFunction::normalize() {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("wavefunction: cannot normalize");
  const double s = 1.0 / std::sqrt(n);
  for (auto& a : amplitudes_) a *= s;
}

WaveFunction init_gaussian(const SpatialGrid& grid, double center, double width,
                           double wavenumber) {
  if (!(width > 2.0 * grid.spacing())) {
    throw InvalidArgument("init_gaussian: width " + std::to_string(width) +
                          " under-resolved (needs > 2 * spacing)");
  }
  if (center - 5.0 * width < grid.x_min() || center + 5.0 * width > grid.x_last()) {
    throw InvalidArgument("init_gaussian: packet at " + std::to_string(center) +
                          " touches the grid boundary");
  }
  std::vector<Complex> amp(grid.count());
  for (std::size_t j = 0; j < grid.count(); ++j) {
    const double d = grid.x(j) - center;
    amp[j] = std::polar(std::exp(-d * d / (4.0 * width * width)), wavenumber * grid.x(j));
  }
  WaveFunction psi(grid, std::move(amp));
  psi.normalize();
  return psi;
}

namespace {

// Normalized Hermite functions phi_0..phi_max at one point.
std::vector<double> hermite_functions(double xi, double prefactor, int max_n) {
  std::vector<double> phi(static_cast<std::size_t>(max_n) + 1);
  phi[0] = prefactor * std::exp(-0.5 * xi * xi);
  if (max_n >= 1) phi[1] = std::sqrt(2.0) * xi * phi[0];
  for (int n = 2; n <= max_n; ++n) {
    phi[n] = std::sqrt(2.0 / n) * xi * phi[n - 1] - std::sqrt((n - 1.0) / n) * phi[n - 2];
  }
  return phi;
}

WaveFunction harmonic_combination(const SpatialGrid& grid, const HybridModel& model,
                                  std::span<const double> coefficients) {
  const auto* well = std::get_if<HarmonicWell>(&model.quantum_potential_spec());
  if (well == nullptr) {
    throw InvalidArgument("init_eigenstate: quantum potential is not harmonic");
  }
  if (coefficients.empty() || coefficients.size() > 5) {
    throw InvalidArgument("init_eigenstate: quantum numbers must lie in 0..4");
  }
  const double alpha = std::sqrt(model.quantum_mass() * well->omega / model.hbar());
  const double prefactor = std::sqrt(alpha) / std::pow(std::numbers::pi, 0.25);
  const int max_n = static_cast<int>(coefficients.size()) - 1;
  std::vector<Complex> amp(grid.count());
  for (std::size_t j = 0; j < grid.count(); ++j) {
    const auto phi = hermite_functions(alpha * grid.x(j), prefactor, max_n);
    double v = 0.0;
    for (int n = 0; n <= max_n; ++n) v += coefficients[n] * phi[n];
    amp[j] = v;
  }
  double expected = 0.0;
  for (double c : coefficients) expected += c * c;
  WaveFunction psi(grid, std::move(amp));
  // An unresolved or truncated state loses norm on the grid before renormalization.
  if (std::abs(psi.norm() - expected) > 1e-6 * expected || psi.touches_boundary()) {
    throw InvalidArgument("init_eigenstate: state not resolved on grid");
  }
  psi.normalize();
  return psi;
}

}  // namespace

WaveFunction init_eigenstate(const SpatialGrid& grid, const HybridModel& model, int n) {
  if (n < 0 || n > 4) throw InvalidArgument("init_eigenstate: quantum number must lie in 0..4");
  std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
  c[n] = 1.0;
  return harmonic_combination(grid, model, c);
}

WaveFunction init_eigen_superposition(const SpatialGrid& grid, const HybridModel& model,
                                      std::span<const double> coefficients) {
  return harmonic_combination(grid, model, coefficients);
}

double l2_distance(const WaveFunction& a, const WaveFunction& b) {
  if (a.size() != b.size()) throw InvalidArgument("l2_distance: size mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += std::norm(a[j] - b[j]);
  return std::sqrt(s * a.grid().spacing());
}

}  // namespace backreact
