#include "backreact/exact_reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "backreact/errors.hpp"

namespace backreact {

WaveFunction2D::WaveFunction2D(SpatialGrid grid_q, SpatialGrid grid_c,
                               std::vector<Complex> amplitudes)
    : grid_q_(std::move(grid_q)), grid_c_(std::move(grid_c)), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() != rows() * cols()) {
    throw InvalidArgument("WaveFunction2D: amplitude count does not match the grids");
  }
}

double WaveFunction2D::norm() const noexcept {
  double sum = 0.0;
  for (const auto& a : amplitudes_) sum += std::norm(a);
  return sum * grid_q_.spacing() * grid_c_.spacing();
}

bool WaveFunction2D::touches_boundary() const noexcept {
  double peak = 0.0;
  for (const auto& a : amplitudes_) peak = std::max(peak, std::norm(a));
  const double limit = 1e-12 * peak;
  const std::size_t nr = rows(), nc = cols();
  for (std::size_t k = 0; k < nc; ++k) {
    if (std::norm((*this)(0, k)) >= limit || std::norm((*this)(nr - 1, k)) >= limit) return true;
  }
  for (std::size_t j = 0; j < nr; ++j) {
    if (std::norm((*this)(j, 0)) >= limit || std::norm((*this)(j, nc - 1)) >= limit) return true;
  }
  return false;
}

void WaveFunction2D::normalize() {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("WaveFunction2D: cannot normalize");
  const double s = 1.0 / std::sqrt(n);
  for (auto& a : amplitudes_) a *= s;
}

WaveFunction2D product_state(const WaveFunction& quantum, const WaveFunction& heavy) {
  const std::size_t nr = quantum.size(), nc = heavy.size();
  std::vector<Complex> amp(nr * nc);
  for (std::size_t j = 0; j < nr; ++j) {
    for (std::size_t k = 0; k < nc; ++k) amp[j * nc + k] = quantum[j] * heavy[k];
  }
  return WaveFunction2D(quantum.grid(), heavy.grid(), std::move(amp));
}

Propagator2D::Propagator2D(const HybridModel& model, const SpatialGrid& grid_q,
                           const SpatialGrid& grid_c, double dt)
    : grid_q_(grid_q), grid_c_(grid_c), fft_(grid_q.count(), grid_c.count()) {
  if (!std::isfinite(dt) || dt == 0.0) throw InvalidArgument("propagate_2d: dt must be non-zero");
  const double hbar = model.hbar();
  const double m = model.quantum_mass(), big_m = model.classical_mass();
  const double phase_limit = std::abs(dt) * hbar *
                             (std::pow(grid_q.max_wavenumber(), 2) / (2.0 * m) +
                              std::pow(grid_c.max_wavenumber(), 2) / (2.0 * big_m));
  if (!(phase_limit < std::numbers::pi)) {
    throw InvalidArgument("propagate_2d: dt too large for the grids (kinetic phase " +
                          std::to_string(phase_limit) + " >= pi)");
  }
  const std::size_t nr = grid_q.count(), nc = grid_c.count();
  half_kick_.resize(nr * nc);
  kinetic_.resize(nr * nc);
  const auto kq = grid_q.wavenumbers();
  const auto kc = grid_c.wavenumbers();
  for (std::size_t j = 0; j < nr; ++j) {
    const double x = grid_q.x(j);
    for (std::size_t k = 0; k < nc; ++k) {
      const double big_x = grid_c.x(k);
      const double v = model.quantum_potential(x) + model.classical_potential(big_x) +
                       model.coupling(x, big_x);
      half_kick_[j * nc + k] = std::polar(1.0, -v * dt / (2.0 * hbar));
      const double t = hbar * hbar * (kq[j] * kq[j] / (2.0 * m) + kc[k] * kc[k] / (2.0 * big_m));
      kinetic_[j * nc + k] = std::polar(1.0, -t * dt / hbar);
    }
  }
}

WaveFunction2D Propagator2D::step(const WaveFunction2D& psi) const {
  if (!(psi.grid_q() == grid_q_) || !(psi.grid_c() == grid_c_)) {
    throw InvalidArgument("propagate_2d: wavefunction grids differ from the propagator's");
  }
  std::vector<Complex> amp(psi.amplitudes().begin(), psi.amplitudes().end());
  for (std::size_t i = 0; i < amp.size(); ++i) amp[i] *= half_kick_[i];
  fft_.forward(amp);
  for (std::size_t i = 0; i < amp.size(); ++i) amp[i] *= kinetic_[i];
  fft_.inverse(amp);
  for (std::size_t i = 0; i < amp.size(); ++i) amp[i] *= half_kick_[i];
  WaveFunction2D out(grid_q_, grid_c_, std::move(amp));
  const double before = psi.norm();
  const double after = out.norm();
  if (!std::isfinite(after)) throw NumericalError("propagate_2d: non-finite amplitudes");
  if (std::abs(after - before) > 1e-8) {
    throw NumericalError("propagate_2d: norm drift " + std::to_string(after - before));
  }
  return out;
}

WaveFunction2D propagate_2d(const WaveFunction2D& psi, double dt, const HybridModel& model) {
  return Propagator2D(model, psi.grid_q(), psi.grid_c(), dt).step(psi);
}

namespace {

struct Moments {
  double x = 0.0, x2 = 0.0, big_x = 0.0, big_x2 = 0.0;
};

Moments position_moments(const WaveFunction2D& psi) {
  Moments mo;
  const auto& gq = psi.grid_q();
  const auto& gc = psi.grid_c();
  const double cell = gq.spacing() * gc.spacing();
  for (std::size_t j = 0; j < psi.rows(); ++j) {
    const double x = gq.x(j);
    double row = 0.0, row_big_x = 0.0, row_big_x2 = 0.0;
    for (std::size_t k = 0; k < psi.cols(); ++k) {
      const double p = std::norm(psi(j, k));
      const double big_x = gc.x(k);
      row += p;
      row_big_x += p * big_x;
      row_big_x2 += p * big_x * big_x;
    }
    mo.x += row * x;
    mo.x2 += row * x * x;
    mo.big_x += row_big_x;
    mo.big_x2 += row_big_x2;
  }
  mo.x *= cell;
  mo.x2 *= cell;
  mo.big_x *= cell;
  mo.big_x2 *= cell;
  return mo;
}

}  // namespace

ExactMarginals exact_marginals(const WaveFunction2D& psi, double hbar) {
  const double n = psi.norm();
  if (std::abs(n - 1.0) > 1e-8) {
    throw InvalidArgument("exact_marginals: wavefunction not normalized (norm " +
                          std::to_string(n) + ")");
  }
  ExactMarginals out;
  const auto mo = position_moments(psi);
  out.position = mo.x;
  out.position_squared = mo.x2;
  out.heavy_position = mo.big_x;
  out.heavy_position_squared = mo.big_x2;

  // <P_X> from the spectrum along both axes.
  std::vector<Complex> spectrum(psi.amplitudes().begin(), psi.amplitudes().end());
  Fft2d(psi.rows(), psi.cols()).forward(spectrum);
  const auto kc = psi.grid_c().wavenumbers();
  double total = 0.0, weighted = 0.0;
  for (std::size_t j = 0; j < psi.rows(); ++j) {
    for (std::size_t k = 0; k < psi.cols(); ++k) {
      const double p = std::norm(spectrum[j * psi.cols() + k]);
      total += p;
      weighted += p * kc[k];
    }
  }
  out.heavy_momentum = hbar * weighted / total;

  // rho_q(x_j, x_l) = sum_k psi(x_j, X_k) psi(x_l, X_k)^* dX
  Eigen::MatrixXcd a(psi.rows(), psi.cols());
  for (std::size_t j = 0; j < psi.rows(); ++j) {
    for (std::size_t k = 0; k < psi.cols(); ++k) {
      a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = psi(j, k);
    }
  }
  out.reduced_quantum = (a * a.adjoint()) * psi.grid_c().spacing();
  out.spacing = psi.grid_q().spacing();
  out.purity = out.reduced_quantum.cwiseAbs2().sum() * out.spacing * out.spacing;
  return out;
}

OscillatorPair normal_mode_solution(const HybridModel& model, const OscillatorPair& initial,
                                    double t) {
  const auto* well = std::get_if<HarmonicWell>(&model.quantum_potential_spec());
  if (!well) throw InvalidArgument("normal_mode_solution: quantum potential must be harmonic");
  const double m = model.quantum_mass(), big_m = model.classical_mass();
  const double wq = well->omega, wc = model.classical_potential_spec().omega;
  const double c = model.coupling_strength() / std::sqrt(m * big_m);

  Eigen::Matrix2d k;
  k << wq * wq, c, c, wc * wc;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(k);
  const Eigen::Vector2d w2 = solver.eigenvalues();
  if (!(w2.minCoeff() > 0.0)) {
    throw InvalidArgument("normal_mode_solution: coupling too strong, the quadratic form is not positive");
  }
  const Eigen::Matrix2d v = solver.eigenvectors();

  // Mass-weighted coordinates q = (sqrt(m) x, sqrt(M) X).
  const Eigen::Vector2d q0(std::sqrt(m) * initial.x, std::sqrt(big_m) * initial.big_x);
  const Eigen::Vector2d qdot0(initial.p / std::sqrt(m), initial.big_p / std::sqrt(big_m));
  const Eigen::Vector2d modes0 = v.transpose() * q0;
  const Eigen::Vector2d rates0 = v.transpose() * qdot0;
  Eigen::Vector2d modes, rates;
  for (int i = 0; i < 2; ++i) {
    const double w = std::sqrt(w2(i));
    modes(i) = modes0(i) * std::cos(w * t) + rates0(i) / w * std::sin(w * t);
    rates(i) = -modes0(i) * w * std::sin(w * t) + rates0(i) * std::cos(w * t);
  }
  const Eigen::Vector2d q = v * modes;
  const Eigen::Vector2d qdot = v * rates;
  return {q(0) / std::sqrt(m), qdot(0) * std::sqrt(m), q(1) / std::sqrt(big_m),
          qdot(1) * std::sqrt(big_m)};
}

double heavy_ground_width(const HybridModel& model) {
  return std::sqrt(model.hbar() /
                   (2.0 * model.classical_mass() * model.classical_potential_spec().omega));
}

const ComparisonSeries& HybridExactComparison::series(const std::string& name) const {
  for (const auto& s : observables) {
    if (s.name == name) return s;
  }
  throw InvalidArgument("HybridExactComparison: no series named " + name);
}

HybridExactComparison compare_hybrid_exact(const EnsembleSpec& spec,
                                           const ExactCompareSettings& settings) {
  const auto& components = spec.mixture.components();
  if (components.size() != 1) {
    throw InvalidArgument("compare_hybrid_exact: mapping mismatch, need a single mixture component");
  }
  const auto* point = std::get_if<ClassicalPoint>(&components.front().classical);
  if (!point) {
    throw InvalidArgument("compare_hybrid_exact: mapping mismatch, classical start must be a point");
  }
  if (settings.record_every == 0) {
    throw InvalidArgument("compare_hybrid_exact: record_every must be >= 1");
  }
  const auto& model = spec.model;
  HybridExactComparison out;
  out.tolerance = settings.tolerance;
  out.heavy_width = heavy_ground_width(model);

  const WaveFunction heavy = init_gaussian(settings.heavy_grid, point->position, out.heavy_width,
                                           point->momentum / model.hbar());
  WaveFunction2D exact = product_state(components.front().psi, heavy);
  const Propagator2D propagator(model, exact.grid_q(), exact.grid_c(), spec.dt);
  Ensemble hybrid = sample(spec);

  out.observables = {{"x", {}, {}, {}, {}, {}, {}},
                     {"X", {}, {}, {}, {}, {}, {}},
                     {"x2", {}, {}, {}, {}, {}, {}}};
  // Error scale: running max |exact|, floored for the two positions by their
  // initial spread so a packet starting at the origin is not judged against 0.
  std::vector<double> scale(3, 0.0);
  {
    const auto e0 = position_moments(exact);
    scale[0] = std::sqrt(std::max(0.0, e0.x2 - e0.x * e0.x));
    scale[1] = std::sqrt(std::max(0.0, e0.big_x2 - e0.big_x * e0.big_x));
  }
  auto record = [&] {
    const double t = hybrid.time;
    out.times.push_back(t);
    const auto h = ensemble_observables(hybrid);
    const auto e = position_moments(exact);
    const Estimate hv[3] = {h.quantum_position, h.classical_position, h.quantum_position_squared};
    const double ev[3] = {e.x, e.big_x, e.x2};
    for (int i = 0; i < 3; ++i) {
      auto& s = out.observables[i];
      scale[i] = std::max(scale[i], std::abs(ev[i]));
      const double err = std::abs(hv[i].mean - ev[i]);
      const double rel = scale[i] > 0.0 ? err / scale[i] : err;
      s.hybrid.push_back(hv[i].mean);
      s.hybrid_error.push_back(hv[i].standard_error);
      s.exact.push_back(ev[i]);
      s.absolute_error.push_back(err);
      s.relative_error.push_back(rel);
      if (!s.horizon && rel > settings.tolerance) s.horizon = t;
    }
    out.exact_max_norm_deviation =
        std::max(out.exact_max_norm_deviation, std::abs(exact.norm() - 1.0));
    out.exact_boundary = out.exact_boundary || exact.touches_boundary();
  };

  record();
  std::size_t done = 0;
  while (done < settings.steps) {
    const std::size_t next = std::min(settings.steps, done + settings.record_every);
    for (std::size_t s = done; s < next; ++s) exact = propagator.step(exact);
    hybrid = evolve(hybrid, spec.start_time + static_cast<double>(next) * spec.dt, settings.threads);
    done = next;
    record();
  }
  out.flagged = hybrid.flagged_count();
  return out;
}

}  // namespace backreact
