#include "backreact/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "backreact/errors.hpp"

namespace backreact {

QuantumPropagator::QuantumPropagator(const HybridModel& model, const SpatialGrid& grid, double dt)
    : model_(model), grid_(grid), dt_(dt), fft_(grid.count()) {
  if (!std::isfinite(dt) || dt == 0.0) {
    throw InvalidArgument("propagate_quantum: time step must be finite and non-zero");
  }
  const double hbar = model.hbar();
  const double kmax = grid.max_wavenumber();
  const double max_phase = std::abs(dt) * hbar * kmax * kmax / (2.0 * model.quantum_mass());
  if (!(max_phase < std::numbers::pi)) {
    throw InvalidArgument("propagate_quantum: dt=" + std::to_string(dt) +
                          " too large for grid (max kinetic phase " + std::to_string(max_phase) +
                          " >= pi)");
  }
  const std::size_t n = grid.count();
  potential_half_kick_.resize(n);
  kinetic_full_.resize(n);
  kinetic_half_.resize(n);
  const auto k = grid.wavenumbers();
  for (std::size_t j = 0; j < n; ++j) {
    potential_half_kick_[j] = std::polar(1.0, -model.quantum_potential(grid.x(j)) * dt / (2.0 * hbar));
    const double kin = hbar * k[j] * k[j] / (2.0 * model.quantum_mass());
    kinetic_full_[j] = std::polar(1.0, -kin * dt);
    kinetic_half_[j] = std::polar(1.0, -kin * dt / 2.0);
  }
}

void QuantumPropagator::kick(std::vector<Complex>& amp, double frozen_big_x) const {
  const double lambda = model_.coupling_strength();
  if (lambda == 0.0) {
    for (std::size_t j = 0; j < amp.size(); ++j) amp[j] *= potential_half_kick_[j];
    return;
  }
  // exp(-i lambda X x_j dt / 2 hbar): exact phase every kBlock points, a
  // geometric recurrence in between.
  constexpr std::size_t kBlock = 16;
  const double rate = -lambda * frozen_big_x * dt_ / (2.0 * model_.hbar());
  const Complex ratio = std::polar(1.0, rate * grid_.spacing());
  Complex phase;
  for (std::size_t j = 0; j < amp.size(); ++j) {
    phase = j % kBlock == 0 ? std::polar(1.0, rate * grid_.x(j)) : phase * ratio;
    amp[j] *= potential_half_kick_[j] * phase;
  }
}

void QuantumPropagator::drift(std::vector<Complex>& amp, const std::vector<Complex>& phase) const {
  fft_.forward(amp);
  for (std::size_t j = 0; j < amp.size(); ++j) amp[j] *= phase[j];
  fft_.inverse(amp);
}

void QuantumPropagator::check(const WaveFunction& in, const WaveFunction& out) const {
  const double before = in.norm();
  const double after = out.norm();
  if (!std::isfinite(after)) throw NumericalError("propagate_quantum: non-finite amplitudes");
  if (std::abs(after - before) > 1e-8) {
    throw NumericalError("propagate_quantum: norm drift " + std::to_string(after - before) +
                         " in one step");
  }
}

WaveFunction QuantumPropagator::step(const WaveFunction& psi, double frozen_big_x) const {
  std::vector<Complex> amp(psi.amplitudes().begin(), psi.amplitudes().end());
  kick(amp, frozen_big_x);
  drift(amp, kinetic_full_);
  kick(amp, frozen_big_x);
  WaveFunction out(psi.grid(), std::move(amp));
  check(psi, out);
  return out;
}

WaveFunction QuantumPropagator::first_half(const WaveFunction& psi, double frozen_big_x) const {
  std::vector<Complex> amp(psi.amplitudes().begin(), psi.amplitudes().end());
  kick(amp, frozen_big_x);
  drift(amp, kinetic_half_);
  WaveFunction out(psi.grid(), std::move(amp));
  check(psi, out);
  return out;
}

WaveFunction QuantumPropagator::second_half(const WaveFunction& psi, double frozen_big_x) const {
  std::vector<Complex> amp(psi.amplitudes().begin(), psi.amplitudes().end());
  drift(amp, kinetic_half_);
  kick(amp, frozen_big_x);
  WaveFunction out(psi.grid(), std::move(amp));
  check(psi, out);
  return out;
}

WaveFunction propagate_quantum(const WaveFunction& psi, double frozen_big_x, double dt,
                               const HybridModel& model) {
  return QuantumPropagator(model, psi.grid(), dt).step(psi, frozen_big_x);
}

namespace {

// Spectral derivative of a real signal; the Nyquist mode is dropped.
void real_derivative(const RealFft1d& fft, std::span<const double> k, std::vector<double>& signal,
                     std::vector<Complex>& scratch) {
  fft.forward(signal, scratch);
  for (std::size_t j = 0; j < scratch.size(); ++j) scratch[j] *= Complex(0.0, k[j]);
  scratch.back() = 0.0;
  fft.inverse(scratch, signal);
}

}  // namespace

std::vector<Complex> spectral_derivative(const WaveFunction& psi) {
  // Real and imaginary parts are differentiated separately so that a real
  // wavefunction has an exactly real derivative.
  const auto& grid = psi.grid();
  const std::size_t n = grid.count();
  const RealFft1d fft(n);
  std::vector<double> re(n), im(n);
  for (std::size_t j = 0; j < n; ++j) {
    re[j] = psi[j].real();
    im[j] = psi[j].imag();
  }
  std::vector<Complex> scratch(n / 2 + 1);
  real_derivative(fft, grid.wavenumbers(), re, scratch);
  if (std::any_of(im.begin(), im.end(), [](double v) { return v != 0.0; })) {
    real_derivative(fft, grid.wavenumbers(), im, scratch);
  }
  std::vector<Complex> d(n);
  for (std::size_t j = 0; j < n; ++j) d[j] = Complex(re[j], im[j]);
  return d;
}

QuantumExpectations quantum_expectations(const WaveFunction& psi, double big_x,
                                         const HybridModel& model) {
  const double norm = psi.norm();
  if (std::abs(norm - 1.0) > 1e-8) {
    throw InvalidArgument("quantum_expectations: wavefunction not normalized (norm " +
                          std::to_string(norm) + ")");
  }
  const auto& grid = psi.grid();
  const std::size_t n = grid.count();
  const double dx = grid.spacing();
  QuantumExpectations e;
  for (std::size_t j = 0; j < n; ++j) {
    const double x = grid.x(j);
    const double w = std::norm(psi[j]) * dx;
    e.position += w * x;
    e.position_squared += w * x * x;
    e.quantum_potential += w * model.quantum_potential(x);
    e.coupling += w * model.coupling(x, big_x);
  }
  // Parseval: sum_j |psi_j|^2 dx = (dx / n) sum_k |psi_k|^2.
  Fft1d fft(n);
  std::vector<Complex> spec(psi.amplitudes().begin(), psi.amplitudes().end());
  fft.forward(spec);
  const auto k = grid.wavenumbers();
  const double hbar = model.hbar();
  double p = 0.0;
  double k2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double w = std::norm(spec[j]);
    if (j != n / 2) p += w * k[j];
    k2 += w * k[j] * k[j];
  }
  const double scale = dx / static_cast<double>(n);
  e.momentum = hbar * p * scale;
  e.kinetic = hbar * hbar * k2 * scale / (2.0 * model.quantum_mass());
  return e;
}

double finite_difference_momentum(const WaveFunction& psi, const HybridModel& model) {
  const auto& grid = psi.grid();
  const std::size_t n = grid.count();
  const double dx = grid.spacing();
  Complex acc = 0.0;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const Complex d = (psi[j + 1] - psi[j - 1]) / (2.0 * dx);
    acc += std::conj(psi[j]) * Complex(0.0, -model.hbar()) * d;
  }
  return acc.real() * dx;
}

}  // namespace backreact
