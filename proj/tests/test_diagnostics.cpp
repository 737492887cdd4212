#include <doctest.h>

#include <cmath>
#include <numbers>

#include "backreact/diagnostics.hpp"
#include "backreact/errors.hpp"

using namespace backreact;

namespace {

HybridModel harmonic(double lambda, double big_m = 1.0, double omega_c = 1.0) {
  return HybridModel(1, big_m, 1, HarmonicWell{1}, ClassicalHarmonic{omega_c}, BilinearCoupling{lambda});
}

EnsembleSpec spec_for(const HybridModel& m, std::size_t n, double dt = 0.01) {
  const auto grid = build_grid(-8, 8, 64);
  return {InitialMixture({{1.0, ClassicalPoint{1.0, 0.0}, init_gaussian(grid, 0.3, 0.6, 0.0)}}), m, dt, n, 9};
}

}  // namespace

TEST_CASE("relative drift") {
  CHECK(relative_drift({2.0, 2.1, 1.8, 2.05}) == doctest::Approx(0.1));
  CHECK(relative_drift({-1.0, -1.5}) == doctest::Approx(0.5));
  CHECK(relative_drift({3.0}) == 0.0);
}

TEST_CASE("decoupled energy audit") {
  const auto spec = spec_for(harmonic(0.0), 100);
  AuditSettings s;
  s.steps = 200;
  s.record_every = 20;
  std::size_t calls = 0;
  s.observer = [&](const Ensemble&) { ++calls; };
  const auto a = energy_audit(sample(spec), s);
  CHECK(calls == 11);
  CHECK(a.times.size() == 11);
  CHECK(a.times.back() == doctest::Approx(2.0));
  CHECK(a.max_norm_deviation < 1e-10);
  CHECK(a.component_sum_defect < 1e-12);
  // No coupling: the run is its own baseline and both energies coincide.
  REQUIRE(a.baseline_drift_expectation);
  CHECK(*a.baseline_drift_expectation == a.drift_expectation);
  CHECK(a.drift_expectation == a.drift_point);
  CHECK(a.drift_expectation < 1e-3);
  CHECK_FALSE(a.contaminated);
}

TEST_CASE("energy components sum to the totals") {
  const auto spec = spec_for(harmonic(0.3), 100);
  AuditSettings s;
  s.steps = 50;
  s.record_every = 10;
  const auto a = energy_audit(sample(spec), s);
  const auto& k = a.components;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    const double classical = k.classical_kinetic[i] + k.classical_potential[i];
    CHECK(a.energy_expectation[i] ==
          doctest::Approx(k.quantum_kinetic[i] + k.quantum_potential[i] + k.coupling_expectation[i] + classical));
    CHECK(a.energy_point[i] ==
          doctest::Approx(k.quantum_kinetic[i] + k.quantum_potential[i] + k.coupling_point[i] + classical));
  }
  CHECK(a.baseline_drift_expectation.has_value());
}

TEST_CASE("equivariance metric needs enough replicas") {
  const auto spec = spec_for(harmonic(0.0), 200);
  CHECK_THROWS_AS(equivariance_metric(sample(spec)), InvalidArgument);
  auto big = spec;
  big.replicas = 2000;
  const auto r = equivariance_metric(sample(big));
  CHECK(r.threshold == doctest::Approx(1.63 / std::sqrt(2000.0)));
  CHECK(r.ks_distance < r.threshold);
}

TEST_CASE("decoupled composability is a null result") {
  const auto spec = spec_for(harmonic(0.0), 400);
  ComposabilityOptions opt;
  opt.resample_seed = 5;
  opt.run_control = false;
  const auto r = composability_test(spec, 0.5, 1.0, opt);
  REQUIRE(r.coupled.no_resample_identical);
  CHECK(*r.coupled.no_resample_identical);
  // Without coupling the classical sector never sees y: X and K agree exactly.
  for (const auto& [name, z] : r.coupled.z_scores) {
    if (name == "X" || name == "K" || name == "X2") CHECK(z == 0.0);
  }
  CHECK(r.coupled.max_abs_z < 5.0);
  CHECK_THROWS_AS(composability_test(spec, 1.0, 1.0, opt), InvalidArgument);
}

TEST_CASE("rho test preconditions") {
  const auto grid = build_grid(-8, 8, 64);
  const auto m = harmonic(0.25);
  const EnsembleSpec first{InitialMixture({{1.0, ClassicalPoint{0, 0}, init_eigenstate(grid, m, 0)}}), m, 0.01, 400, 3};
  const InitialMixture different({{1.0, ClassicalPoint{0, 0}, init_eigenstate(grid, m, 2)}});
  CHECK_THROWS_AS(rho_equivalence_test(first, different, 0.1), PreconditionFailure);
  const InitialMixture moved({{1.0, ClassicalPoint{0.5, 0}, init_eigenstate(grid, m, 0)}});
  CHECK_THROWS_AS(rho_equivalence_test(first, moved, 0.1), PreconditionFailure);

  // The same mixture twice: identical arms.
  const auto r = rho_equivalence_test(first, first.mixture, 0.5);
  CHECK(r.coupled.final_distance == 0.0);
  CHECK(r.coupled.max_abs_z == 0.0);
  CHECK(r.control_passed);
  CHECK_FALSE(r.demonstrated);
}

TEST_CASE("determinism check") {
  const auto grid = build_grid(-8, 8, 64);
  const auto m = harmonic(0.25);
  const Replica r{{1, 0}, std::make_shared<const WaveFunction>(init_gaussian(grid, 0.2, 0.6, 0)), 0.4, {}, nullptr};
  const auto d = determinism_check(r, m, 0.01, 500);
  CHECK(d.identical);
  CHECK_FALSE(d.first_mismatch);
  CHECK(d.perturbation_detected);
  CHECK(d.max_separation > 0.0);
}
