#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "backreact/ensemble.hpp"

namespace backreact {

// Everything needed to draw an initial ensemble.
struct EnsembleSpec {
  InitialMixture mixture;
  HybridModel model;
  double dt;
  std::size_t replicas;
  std::uint64_t seed;
  GuidanceSettings guidance{};
  double start_time = 0.0;
};

Ensemble sample(const EnsembleSpec& spec);
EnsembleSpec with_coupling(EnsembleSpec spec, double strength);

// Relative drift max_t |E(t) - E(0)| / |E(0)|.
double relative_drift(const std::vector<double>& series);

struct EnergyComponents {
  std::vector<double> quantum_kinetic;
  std::vector<double> quantum_potential;
  std::vector<double> coupling_expectation;
  std::vector<double> coupling_point;
  std::vector<double> classical_kinetic;
  std::vector<double> classical_potential;
};

struct EnergyAudit {
  std::vector<double> times;
  std::vector<double> energy_expectation;  // E_qexp
  std::vector<double> energy_point;        // E_point
  EnergyComponents components;
  // max over distinct wavefunctions of |norm - 1|, per record
  std::vector<double> norm_deviation;
  // ensemble-mean classical energy T_c + V_c, per record
  std::vector<double> classical_energy;

  double drift_expectation = 0.0;
  double drift_point = 0.0;
  double classical_energy_drift = 0.0;
  double max_norm_deviation = 0.0;
  // Largest |component sum - total| over all records.
  double component_sum_defect = 0.0;

  // Companion run with the coupling switched off, same ensemble and dt.
  std::optional<double> baseline_drift_expectation;
  std::optional<double> baseline_drift_point;

  std::size_t replicas = 0;
  std::size_t flagged = 0;
  bool contaminated = false;  // more than contamination_fraction of replicas flagged
};

struct AuditSettings {
  std::size_t steps = 0;
  std::size_t record_every = 1;
  unsigned threads = 1;
  bool with_baseline = true;
  double contamination_fraction = 0.01;
  // Called with the ensemble at every record (including t = t0).
  std::function<void(const Ensemble&)> observer;
};

EnergyAudit energy_audit(const Ensemble& initial, const AuditSettings& settings);

struct EquivarianceResult {
  double ks_distance = 0.0;
  double threshold = 0.0;
};

// KS distance between the empirical CDF of {y_i} and the CDF of the
// ensemble-mean density (1/N) sum_i |psi_i|^2.
EquivarianceResult equivariance_metric(const Ensemble& e);

using NamedScore = std::pair<std::string, double>;

struct ComposabilityArms {
  EnsembleObservables one_shot;   // U(t2, t0)
  EnsembleObservables two_stage;  // U(t2, t1) R U(t1, t0), R = re-sampling
  std::vector<NamedScore> z_scores;
  double max_abs_z = 0.0;
  // U(t2, t1) U(t1, t0) without re-sampling, compared bitwise with U(t2, t0).
  std::optional<bool> no_resample_identical;
  // Bohmian positions at t1 before and after re-sampling.
  double resample_ks = 0.0;
  double resample_ks_threshold = 0.0;
  EquivarianceResult equivariance_one_shot;
  std::size_t flagged = 0;
};

struct ComposabilityReport {
  double t0 = 0.0, t1 = 0.0, t2 = 0.0;
  std::size_t replicas = 0;
  ComposabilityArms coupled;
  ComposabilityArms control;  // same configuration at lambda = 0
  bool control_passed = false;
  bool demonstrated = false;  // some |z| >= z_threshold in the coupled arms
};

struct ComposabilityOptions {
  std::uint64_t resample_seed = 0;
  unsigned threads = 1;
  bool check_identity = true;
  bool run_control = true;
  double z_threshold = 5.0;          // "differs"
  double control_z_threshold = 3.0;  // control arm must stay within this
};

ComposabilityReport composability_test(const EnsembleSpec& spec, double t1, double t2,
                                       const ComposabilityOptions& options);

struct RhoArmsResult {
  double initial_distance = 0.0;
  double final_distance = 0.0;
  std::vector<NamedScore> z_scores;
  double max_abs_z = 0.0;
  std::size_t flagged = 0;
};

struct RhoEquivalenceReport {
  double final_time = 0.0;
  std::size_t replicas = 0;
  double tolerance = 0.0;  // 5 / sqrt(N)
  RhoArmsResult coupled;
  std::optional<RhoArmsResult> control;
  bool control_passed = false;
  bool demonstrated = false;  // final distance >= 3 tolerance or some |z| >= z_threshold
};

struct RhoOptions {
  unsigned threads = 1;
  bool run_control = true;
  double z_threshold = 5.0;
};

// `first` supplies model, dt, N, seed and the first mixture; both arms are
// sampled with the same seed. Throws PreconditionFailure when the sampled
// initial reduced density matrices differ by more than 5/sqrt(N) or the
// classical marginals of the two mixtures are not identical.
RhoEquivalenceReport rho_equivalence_test(const EnsembleSpec& first, const InitialMixture& second,
                                          double final_time, const RhoOptions& options = {});

struct DeterminismReport {
  std::size_t steps = 0;
  bool identical = false;
  std::optional<std::size_t> first_mismatch;
  // Companion copy with y shifted by 1e-12.
  bool perturbation_detected = false;
  double max_separation = 0.0;
  std::optional<double> divergence_time;  // separation first above 1e-6
};

DeterminismReport determinism_check(const Replica& replica, const HybridModel& model, double dt,
                                    std::size_t steps, GuidanceSettings guidance = {});

}  // namespace backreact
