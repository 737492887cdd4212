#include "backreact/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "backreact/errors.hpp"

namespace backreact {

HybridModel::HybridModel(double quantum_mass, double classical_mass, double hbar,
                         QuantumPotential v_q, ClassicalHarmonic v_c, BilinearCoupling v_int)
    : m_(quantum_mass), big_m_(classical_mass), hbar_(hbar), v_q_(v_q), v_c_(v_c), v_int_(v_int) {
  validate();
  check_derivatives();
}

void HybridModel::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(m_)) throw InvalidArgument("model: quantum mass must be positive");
  if (!positive(big_m_)) throw InvalidArgument("model: classical mass must be positive");
  if (!positive(hbar_)) throw InvalidArgument("model: hbar must be positive");
  if (!std::isfinite(v_c_.omega)) throw InvalidArgument("model: omega_c must be finite");
  if (!std::isfinite(v_int_.strength)) throw InvalidArgument("model: coupling must be finite");
  if (const auto* h = std::get_if<HarmonicWell>(&v_q_)) {
    if (!std::isfinite(h->omega)) throw InvalidArgument("model: omega_q must be finite");
  } else {
    const auto& dw = std::get<DoubleWell>(v_q_);
    if (!std::isfinite(dw.barrier_height)) {
      throw InvalidArgument("model: barrier height must be finite");
    }
    if (!positive(dw.minima_separation)) {
      throw InvalidArgument("model: minima separation must be positive");
    }
  }
}

void HybridModel::check_derivatives() const {
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> pick(-10.0, 10.0);
  auto agrees = [](double analytic, double fd) {
    return std::abs(analytic - fd) <= 1e-6 * std::max(1.0, std::abs(analytic));
  };
  auto central = [](auto&& f, double at) {
    const double h = 1e-5 * std::max(1.0, std::abs(at));
    return (f(at + h) - f(at - h)) / (2.0 * h);
  };
  for (int i = 0; i < 100; ++i) {
    const double x = pick(rng);
    const double big_x = pick(rng);
    const double fd_q = central([&](double s) { return quantum_potential(s); }, x);
    const double fd_c = central([&](double s) { return classical_potential(s); }, big_x);
    const double fd_ix = central([&](double s) { return coupling(s, big_x); }, x);
    const double fd_iX = central([&](double s) { return coupling(x, s); }, big_x);
    if (!agrees(quantum_potential_derivative(x), fd_q) ||
        !agrees(classical_potential_derivative(big_x), fd_c) ||
        !agrees(coupling_derivative_x(x, big_x), fd_ix) ||
        !agrees(coupling_derivative_big_x(x, big_x), fd_iX)) {
      throw NumericalError("model: analytic derivative disagrees with finite differences");
    }
  }
}

double HybridModel::quantum_potential(double x) const noexcept {
  if (const auto* h = std::get_if<HarmonicWell>(&v_q_)) {
    return 0.5 * m_ * h->omega * h->omega * x * x;
  }
  const auto& dw = std::get<DoubleWell>(v_q_);
  const double a = 0.5 * dw.minima_separation;
  const double s = (x / a) * (x / a) - 1.0;
  return dw.barrier_height * s * s;
}

double HybridModel::quantum_potential_derivative(double x) const noexcept {
  if (const auto* h = std::get_if<HarmonicWell>(&v_q_)) {
    return m_ * h->omega * h->omega * x;
  }
  const auto& dw = std::get<DoubleWell>(v_q_);
  const double a = 0.5 * dw.minima_separation;
  const double s = (x / a) * (x / a) - 1.0;
  return 4.0 * dw.barrier_height * s * x / (a * a);
}

double HybridModel::classical_potential(double big_x) const noexcept {
  return 0.5 * big_m_ * v_c_.omega * v_c_.omega * big_x * big_x;
}

double HybridModel::classical_potential_derivative(double big_x) const noexcept {
  return big_m_ * v_c_.omega * v_c_.omega * big_x;
}

double HybridModel::coupling(double x, double big_x) const noexcept {
  return v_int_.strength * x * big_x;
}

double HybridModel::coupling_derivative_x(double, double big_x) const noexcept {
  return v_int_.strength * big_x;
}

double HybridModel::coupling_derivative_big_x(double x, double) const noexcept {
  return v_int_.strength * x;
}

HybridModel HybridModel::with_coupling(double strength) const {
  return HybridModel(m_, big_m_, hbar_, v_q_, v_c_, BilinearCoupling{strength});
}

std::string HybridModel::describe() const {
  std::ostringstream os;
  os << "m=" << m_ << " M=" << big_m_ << " hbar=" << hbar_;
  if (const auto* h = std::get_if<HarmonicWell>(&v_q_)) {
    os << " V_q=harmonic(omega_q=" << h->omega << ")";
  } else {
    const auto& dw = std::get<DoubleWell>(v_q_);
    os << " V_q=double_well(barrier=" << dw.barrier_height
       << ", separation=" << dw.minima_separation << ")";
  }
  os << " omega_c=" << v_c_.omega << " lambda=" << v_int_.strength;
  return os.str();
}

}  // namespace backreact
