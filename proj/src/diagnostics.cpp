#include "backreact/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "backreact/density_matrix.hpp"
#include "backreact/errors.hpp"
#include "backreact/sampling.hpp"
#include "backreact/statistics.hpp"

namespace backreact {

Ensemble sample(const EnsembleSpec& spec) {
  Ensemble e = sample_initial_ensemble(spec.mixture, spec.replicas, spec.seed, spec.model, spec.dt,
                                       spec.guidance);
  e.time = spec.start_time;
  return e;
}

EnsembleSpec with_coupling(EnsembleSpec spec, double strength) {
  spec.model = spec.model.with_coupling(strength);
  return spec;
}

double relative_drift(const std::vector<double>& series) {
  if (series.empty()) return 0.0;
  const double e0 = series.front();
  double worst = 0.0;
  for (double v : series) worst = std::max(worst, std::abs(v - e0));
  return e0 != 0.0 ? worst / std::abs(e0) : worst;
}

namespace {

double norm_deviation(const Ensemble& e) {
  std::unordered_set<const WaveFunction*> seen;
  double worst = 0.0;
  for (const auto& r : e.replicas) {
    if (seen.insert(r.psi.get()).second) worst = std::max(worst, std::abs(r.psi->norm() - 1.0));
  }
  return worst;
}

void record(EnergyAudit& a, const Ensemble& e) {
  const auto o = ensemble_observables(e);
  a.times.push_back(e.time);
  a.energy_expectation.push_back(o.energy_expectation.mean);
  a.energy_point.push_back(o.energy_point.mean);
  auto& c = a.components;
  c.quantum_kinetic.push_back(o.quantum_kinetic);
  c.quantum_potential.push_back(o.quantum_potential);
  c.coupling_expectation.push_back(o.coupling_expectation);
  c.coupling_point.push_back(o.coupling_point);
  c.classical_kinetic.push_back(o.classical_kinetic);
  c.classical_potential.push_back(o.classical_potential);
  a.norm_deviation.push_back(norm_deviation(e));
  a.classical_energy.push_back(o.classical_kinetic + o.classical_potential);

  const double shared = o.quantum_kinetic + o.quantum_potential + o.classical_kinetic +
                        o.classical_potential;
  a.component_sum_defect =
      std::max({a.component_sum_defect,
                std::abs(shared + o.coupling_expectation - o.energy_expectation.mean),
                std::abs(shared + o.coupling_point - o.energy_point.mean)});
}

std::vector<double> positions(const Ensemble& e) {
  std::vector<double> ys;
  ys.reserve(e.size());
  for (const auto& r : e.replicas) ys.push_back(r.y);
  return ys;
}

std::vector<NamedScore> z_scores(const EnsembleObservables& a, const EnsembleObservables& b,
                                 double& max_abs) {
  std::vector<NamedScore> out;
  const auto na = a.named();
  const auto nb = b.named();
  max_abs = 0.0;
  for (std::size_t i = 0; i < na.size(); ++i) {
    const double z = z_score(na[i].second, nb[i].second);
    out.emplace_back(na[i].first, z);
    max_abs = std::max(max_abs, std::abs(z));
  }
  return out;
}

bool same_replicas(const Ensemble& a, const Ensemble& b) {
  if (a.size() != b.size() || a.time != b.time) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!identical(a.replicas[i], b.replicas[i])) return false;
  }
  return true;
}

ComposabilityArms run_composability(const EnsembleSpec& spec, double t1, double t2,
                                    const ComposabilityOptions& options) {
  ComposabilityArms arms;
  const Ensemble start = sample(spec);
  const Ensemble one_shot = evolve(start, t2, options.threads);
  const Ensemble middle = evolve(start, t1, options.threads);
  const Ensemble redrawn = resample_bohmian(middle, options.resample_seed);
  const Ensemble two_stage = evolve(redrawn, t2, options.threads);

  arms.resample_ks = ks_two_sample(positions(middle), positions(redrawn));
  arms.resample_ks_threshold = ks_threshold_two_sample(middle.size(), redrawn.size());
  if (options.check_identity) {
    arms.no_resample_identical = same_replicas(one_shot, evolve(middle, t2, options.threads));
  }
  arms.one_shot = ensemble_observables(one_shot);
  arms.two_stage = ensemble_observables(two_stage);
  arms.z_scores = z_scores(arms.one_shot, arms.two_stage, arms.max_abs_z);
  if (one_shot.size() >= 1000) arms.equivariance_one_shot = equivariance_metric(one_shot);
  arms.flagged = std::max(one_shot.flagged_count(), two_stage.flagged_count());
  return arms;
}

using MarginalKey = std::tuple<int, double, double, double, double>;

std::map<MarginalKey, double> classical_marginal(const InitialMixture& mixture) {
  std::map<MarginalKey, double> out;
  for (const auto& c : mixture.components()) {
    MarginalKey key;
    if (const auto* p = std::get_if<ClassicalPoint>(&c.classical)) {
      key = {0, p->position, p->momentum, 0.0, 0.0};
    } else {
      const auto& g = std::get<ClassicalGaussian>(c.classical);
      key = {1, g.mean_position, g.mean_momentum, g.sd_position, g.sd_momentum};
    }
    out[key] += c.weight;
  }
  return out;
}

bool same_classical_marginal(const InitialMixture& a, const InitialMixture& b) {
  const auto ma = classical_marginal(a);
  const auto mb = classical_marginal(b);
  if (ma.size() != mb.size()) return false;
  for (auto ia = ma.begin(), ib = mb.begin(); ia != ma.end(); ++ia, ++ib) {
    if (ia->first != ib->first || std::abs(ia->second - ib->second) > 1e-12) return false;
  }
  return true;
}

RhoArmsResult run_rho_arms(const EnsembleSpec& first, const EnsembleSpec& second,
                           double final_time, double tolerance, unsigned threads) {
  RhoArmsResult r;
  const Ensemble a0 = sample(first);
  const Ensemble b0 = sample(second);
  r.initial_distance = trace_distance(density_matrix_estimate(a0), density_matrix_estimate(b0));
  if (!(r.initial_distance <= tolerance)) {
    throw PreconditionFailure("rho_equivalence_test: initial density matrices differ by " +
                              std::to_string(r.initial_distance) + " > " +
                              std::to_string(tolerance));
  }
  const Ensemble a1 = evolve(a0, final_time, threads);
  const Ensemble b1 = evolve(b0, final_time, threads);
  r.final_distance = trace_distance(density_matrix_estimate(a1), density_matrix_estimate(b1));
  r.z_scores = z_scores(ensemble_observables(a1), ensemble_observables(b1), r.max_abs_z);
  r.flagged = std::max(a1.flagged_count(), b1.flagged_count());
  return r;
}

}  // namespace

EnergyAudit energy_audit(const Ensemble& initial, const AuditSettings& settings) {
  if (settings.record_every == 0) throw InvalidArgument("energy_audit: record_every must be >= 1");
  EnergyAudit audit;
  audit.replicas = initial.size();
  Ensemble e = initial;
  record(audit, e);
  if (settings.observer) settings.observer(e);
  std::size_t done = 0;
  while (done < settings.steps) {
    done = std::min(settings.steps, done + settings.record_every);
    e = evolve(e, initial.time + static_cast<double>(done) * initial.dt, settings.threads);
    record(audit, e);
    if (settings.observer) settings.observer(e);
  }
  audit.drift_expectation = relative_drift(audit.energy_expectation);
  audit.drift_point = relative_drift(audit.energy_point);
  audit.classical_energy_drift = relative_drift(audit.classical_energy);
  audit.max_norm_deviation =
      *std::max_element(audit.norm_deviation.begin(), audit.norm_deviation.end());
  audit.flagged = e.flagged_count();
  audit.contaminated = static_cast<double>(audit.flagged) >
                       settings.contamination_fraction * static_cast<double>(audit.replicas);

  if (settings.with_baseline) {
    if (initial.model.coupling_strength() == 0.0) {
      audit.baseline_drift_expectation = audit.drift_expectation;
      audit.baseline_drift_point = audit.drift_point;
    } else {
      Ensemble decoupled = initial;
      decoupled.model = initial.model.with_coupling(0.0);
      AuditSettings companion = settings;
      companion.with_baseline = false;
      companion.observer = nullptr;
      const auto base = energy_audit(decoupled, companion);
      audit.baseline_drift_expectation = base.drift_expectation;
      audit.baseline_drift_point = base.drift_point;
    }
  }
  return audit;
}

EquivarianceResult equivariance_metric(const Ensemble& e) {
  const std::size_t n = e.size();
  if (n < 1000) throw InvalidArgument("equivariance_metric: need at least 1000 replicas");
  // Accumulate each distinct wavefunction once, weighted by its multiplicity,
  // in first-seen order.
  std::unordered_map<const WaveFunction*, std::size_t> slot;
  std::vector<std::pair<const WaveFunction*, std::size_t>> distinct;
  for (const auto& r : e.replicas) {
    auto [it, inserted] = slot.try_emplace(r.psi.get(), distinct.size());
    if (inserted) distinct.emplace_back(r.psi.get(), 0);
    ++distinct[it->second].second;
  }
  const auto& grid = e.grid();
  std::vector<double> mean(grid.count(), 0.0);
  for (const auto& [psi, count] : distinct) {
    const double w = static_cast<double>(count) / static_cast<double>(n);
    for (std::size_t j = 0; j < grid.count(); ++j) mean[j] += w * std::norm((*psi)[j]);
  }
  const GridCdf cdf(grid, mean);
  return {ks_one_sample(positions(e), [&](double x) { return cdf(x); }),
          ks_threshold_one_sample(n)};
}

ComposabilityReport composability_test(const EnsembleSpec& spec, double t1, double t2,
                                       const ComposabilityOptions& options) {
  const double t0 = spec.start_time;
  if (!(t0 < t1 && t1 < t2)) {
    throw InvalidArgument("composability_test: need t0 < t1 < t2");
  }
  ComposabilityReport report;
  report.t0 = t0;
  report.t1 = t1;
  report.t2 = t2;
  report.replicas = spec.replicas;
  report.coupled = run_composability(spec, t1, t2, options);
  report.demonstrated = report.coupled.max_abs_z >= options.z_threshold;
  if (options.run_control) {
    report.control = run_composability(with_coupling(spec, 0.0), t1, t2, options);
    report.control_passed = report.control.max_abs_z <= options.control_z_threshold &&
                            report.control.no_resample_identical.value_or(true);
  }
  return report;
}

RhoEquivalenceReport rho_equivalence_test(const EnsembleSpec& first, const InitialMixture& second,
                                          double final_time, const RhoOptions& options) {
  if (!same_classical_marginal(first.mixture, second)) {
    throw PreconditionFailure("rho_equivalence_test: the mixtures have different classical marginals");
  }
  if (!(final_time > first.start_time)) {
    throw InvalidArgument("rho_equivalence_test: final time must follow the start time");
  }
  EnsembleSpec other = first;
  other.mixture = second;

  RhoEquivalenceReport report;
  report.final_time = final_time;
  report.replicas = first.replicas;
  report.tolerance = 5.0 / std::sqrt(static_cast<double>(first.replicas));
  report.coupled = run_rho_arms(first, other, final_time, report.tolerance, options.threads);
  report.demonstrated = report.coupled.final_distance >= 3.0 * report.tolerance ||
                        report.coupled.max_abs_z >= options.z_threshold;
  if (options.run_control) {
    report.control = run_rho_arms(with_coupling(first, 0.0), with_coupling(other, 0.0), final_time,
                                  report.tolerance, options.threads);
    report.control_passed = report.control->final_distance <= report.tolerance;
  }
  return report;
}

DeterminismReport determinism_check(const Replica& replica, const HybridModel& model, double dt,
                                    std::size_t steps, GuidanceSettings guidance) {
  const ReplicaStepper stepper(model, replica.psi->grid(), dt, guidance);
  DeterminismReport report;
  report.steps = steps;
  Replica a = replica;
  Replica b = replica;
  Replica perturbed = replica;
  perturbed.y += 1e-12;
  for (std::size_t s = 1; s <= steps; ++s) {
    a = stepper.step(a);
    b = stepper.step(b);
    perturbed = stepper.step(perturbed);
    if (!report.first_mismatch && !identical(a, b)) report.first_mismatch = s;
    if (!identical(a, perturbed)) report.perturbation_detected = true;
    const double separation =
        std::max({std::abs(perturbed.y - a.y), std::abs(perturbed.classical.position - a.classical.position),
                  std::abs(perturbed.classical.momentum - a.classical.momentum)});
    report.max_separation = std::max(report.max_separation, separation);
    if (!report.divergence_time && separation > 1e-6) {
      report.divergence_time = static_cast<double>(s) * dt;
    }
  }
  report.identical = !report.first_mismatch.has_value();
  return report;
}

}  // namespace backreact
