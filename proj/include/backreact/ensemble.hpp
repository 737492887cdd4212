#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "backreact/bohmian.hpp"
#include "backreact/classical.hpp"
#include "backreact/model.hpp"
#include "backreact/propagator.hpp"
#include "backreact/wavefunction.hpp"

namespace backreact {

struct ReplicaFlags {
  bool node_proximity = false;
  bool boundary = false;

  bool any() const noexcept { return node_proximity || boundary; }
  bool operator==(const ReplicaFlags&) const = default;
};

// One copy of the combined system: classical point u, wavefunction psi and
// Bohmian position y. Wavefunctions are immutable and may be shared between
// replicas whose psi is bit-identical; `guidance` caches the velocity field
// of psi and is recomputed when absent.
struct Replica {
  ClassicalState classical;
  std::shared_ptr<const WaveFunction> psi;
  double y = 0.0;
  ReplicaFlags flags;
  std::shared_ptr<const VelocityField> guidance;
};

// Bitwise equality of (u, psi, y, flags).
bool identical(const Replica& a, const Replica& b);

struct ClassicalPoint {
  double position;
  double momentum;
};

struct ClassicalGaussian {
  double mean_position;
  double mean_momentum;
  double sd_position;
  double sd_momentum;
};

using ClassicalDistribution = std::variant<ClassicalPoint, ClassicalGaussian>;

struct MixtureComponent {
  double weight;
  ClassicalDistribution classical;
  WaveFunction psi;
};

// Finite representation of the initial distribution n(u, psi): weighted
// components, each a classical distribution times a fixed wavefunction.
class InitialMixture {
 public:
  explicit InitialMixture(std::vector<MixtureComponent> components);

  const std::vector<MixtureComponent>& components() const noexcept { return components_; }
  const SpatialGrid& grid() const { return components_.front().psi.grid(); }

 private:
  std::vector<MixtureComponent> components_;
};

struct Ensemble {
  std::vector<Replica> replicas;
  double time = 0.0;
  std::uint64_t seed = 0;
  HybridModel model;
  double dt;
  GuidanceSettings guidance;

  std::size_t size() const noexcept { return replicas.size(); }
  std::size_t flagged_count() const noexcept;
  const SpatialGrid& grid() const { return replicas.front().psi->grid(); }
};

Ensemble sample_initial_ensemble(const InitialMixture& mixture, std::size_t count,
                                 std::uint64_t seed, const HybridModel& model, double dt,
                                 GuidanceSettings guidance = {});

// Advances replicas by one coupled step:
//   (a) classical half step (half kick with y, half drift),
//   (b) quantum half step at the new (mid-step) X,
//   (c) Heun Bohmian step using the fields before and after the quantum
//       step, (d) second quantum half step, (e) classical half step (half
//       drift, half kick with the updated y).
// (b) and (d) together form one Strang step at the mid-step X; (a) and (e)
// form one velocity-Verlet step.
class ReplicaStepper {
 public:
  ReplicaStepper(const HybridModel& model, const SpatialGrid& grid, double dt,
                 GuidanceSettings guidance);

  Replica step(const Replica& r) const;

  struct QuantumUpdate {
    std::shared_ptr<const VelocityField> field_now;
    std::shared_ptr<const WaveFunction> psi_next;
    std::shared_ptr<const VelocityField> field_next;
    bool boundary;
  };
  ClassicalState classical_half(const Replica& r) const;
  QuantumUpdate quantum(const Replica& r, double mid_big_x) const;
  QuantumUpdate quantum(const WaveFunction& psi,
                        const std::shared_ptr<const VelocityField>& guidance,
                        double mid_big_x) const;
  Replica finish(const Replica& r, const ClassicalState& half, const QuantumUpdate& q) const;
  // finish() without touching r.psi / r.guidance.
  void finish_in_place(Replica& r, const ClassicalState& half, const QuantumUpdate& q) const;
  // The same with the two guidance fields already wrapped in views.
  void finish_in_place(Replica& r, const ClassicalState& half, const FieldView& now,
                       const FieldView& next, bool boundary) const;
  int interpolation_order() const noexcept { return guidance_.interpolation_order; }

 private:
  HybridModel model_;
  double dt_;
  GuidanceSettings guidance_;
  QuantumPropagator propagator_;
};

Replica step_replica(const Replica& r, double dt, const HybridModel& model,
                     GuidanceSettings guidance = {});

// U(t_target, e.time). Replicas sharing (psi, guidance, mid-step X) share
// their quantum update; every replica receives exactly what step_replica
// would compute for it.
Ensemble evolve(const Ensemble& e, double t_target, unsigned threads = 1);

// Redraw every y from its replica's current |psi|^2; (u, psi) kept, flags cleared.
Ensemble resample_bohmian(const Ensemble& e, std::uint64_t seed);

struct Estimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

struct EnsembleObservables {
  Estimate quantum_position;
  Estimate quantum_position_squared;
  Estimate classical_position;
  Estimate classical_momentum;
  Estimate classical_position_squared;
  Estimate energy_expectation;  // coupling <psi|V_int(x, X)|psi>
  Estimate energy_point;        // coupling V_int(y, X)

  // Ensemble means of the energy terms.
  double quantum_kinetic = 0.0;
  double quantum_potential = 0.0;
  double coupling_expectation = 0.0;
  double coupling_point = 0.0;
  double classical_kinetic = 0.0;
  double classical_potential = 0.0;

  std::size_t count = 0;

  std::vector<std::pair<std::string, Estimate>> named() const;
};

EnsembleObservables ensemble_observables(const Ensemble& e);

// Estimate with (sample std) / sqrt(N); sequential summation.
Estimate mean_and_error(const std::vector<double>& samples);

}  // namespace backreact
