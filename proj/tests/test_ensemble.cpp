#include <doctest.h>

#include <bit>
#include <cmath>

#include "backreact/ensemble.hpp"
#include "backreact/errors.hpp"
#include "backreact/statistics.hpp"

using namespace backreact;

namespace {

HybridModel harmonic(double lambda, double big_m = 1.0, double omega_c = 1.0) {
  return HybridModel(1, big_m, 1, HarmonicWell{1}, ClassicalHarmonic{omega_c},
                     BilinearCoupling{lambda});
}

bool same(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool ensembles_identical(const Ensemble& a, const Ensemble& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!identical(a.replicas[i], b.replicas[i])) return false;
  }
  return true;
}

// Two point components plus one Gaussian-classical component.
InitialMixture mixed(const SpatialGrid& grid, const HybridModel& m) {
  return InitialMixture({
      {0.3, ClassicalPoint{1.0, 0.0}, init_gaussian(grid, 0.5, 0.7, 0.0)},
      {0.3, ClassicalPoint{-0.5, 0.2}, init_eigenstate(grid, m, 1)},
      {0.4, ClassicalGaussian{0.5, 0.0, 0.2, 0.3}, init_gaussian(grid, -0.5, 0.8, 0.4)},
  });
}

}  // namespace

TEST_CASE("initial positions follow |psi|^2") {
  const auto grid = build_grid(-10, 10, 256);
  const auto m = harmonic(0);
  InitialMixture mix({{1.0, ClassicalPoint{1, 0}, init_eigenstate(grid, m, 0)}});
  const auto e = sample_initial_ensemble(mix, 4000, 7, m, 0.002);
  std::vector<double> ys;
  for (const auto& r : e.replicas) ys.push_back(r.y);
  // |phi_0|^2 = exp(-x^2)/sqrt(pi) has CDF (1 + erf x) / 2.
  const double ks = ks_one_sample(ys, [](double x) { return 0.5 * (1 + std::erf(x)); });
  CHECK(ks <= ks_threshold_one_sample(4000));
  for (const auto& r : e.replicas) {
    CHECK(r.classical == ClassicalState{1, 0});
    CHECK(r.psi == e.replicas.front().psi);
  }
}

TEST_CASE("component selection is binomial") {
  const auto grid = build_grid(-10, 10, 64);
  const auto m = harmonic(0);
  InitialMixture mix({{0.5, ClassicalPoint{0, 0}, init_eigenstate(grid, m, 0)},
                      {0.5, ClassicalPoint{0, 0}, init_eigenstate(grid, m, 1)}});
  const std::size_t n = 100000;
  const auto e = sample_initial_ensemble(mix, n, 3, m, 0.01);
  const auto first = e.replicas.front().psi;
  std::size_t count = 0;
  for (const auto& r : e.replicas) count += r.psi == first ? 1 : 0;
  const double other = static_cast<double>(n - count);
  CHECK(std::abs(static_cast<double>(count) - n / 2.0) <= 3 * std::sqrt(n / 4.0));
  CHECK(std::abs(other - n / 2.0) <= 3 * std::sqrt(n / 4.0));
}

TEST_CASE("sampling is seed-deterministic and validates its input") {
  const auto grid = build_grid(-10, 10, 128);
  const auto m = harmonic(0.25);
  const auto a = sample_initial_ensemble(mixed(grid, m), 500, 42, m, 0.01);
  const auto b = sample_initial_ensemble(mixed(grid, m), 500, 42, m, 0.01);
  CHECK(ensembles_identical(a, b));
  const auto c = sample_initial_ensemble(mixed(grid, m), 500, 43, m, 0.01);
  CHECK_FALSE(ensembles_identical(a, c));

  CHECK_THROWS_AS(InitialMixture({}), InvalidArgument);
  CHECK_THROWS_AS(InitialMixture({{0.6, ClassicalPoint{0, 0}, init_eigenstate(grid, m, 0)}}),
                  InvalidArgument);
  CHECK_THROWS_AS(sample_initial_ensemble(mixed(grid, m), 1, 1, m, 0.01), InvalidArgument);
}

TEST_CASE("decoupled replica step reduces to the sector integrators") {
  const auto grid = build_grid(-10, 10, 128);
  const auto m = harmonic(0.0);
  const double dt = 0.01;
  Replica r;
  r.classical = {0.8, -0.3};
  r.psi = std::make_shared<const WaveFunction>(init_gaussian(grid, 0.4, 0.7, 0.5));
  r.y = 0.2;
  const auto next = step_replica(r, dt, m);
  CHECK(l2_distance(*next.psi, propagate_quantum(*r.psi, 0.8, dt, m)) < 1e-12);
  const auto verlet = advance_classical(r.classical, r.y, dt, m);
  CHECK(std::abs(next.classical.position - verlet.position) < 1e-12);
  CHECK(std::abs(next.classical.momentum - verlet.momentum) < 1e-12);
}

TEST_CASE("coupled replica step converges at second order") {
  const auto grid = build_grid(-10, 10, 128);
  const auto m = harmonic(0.25);
  Replica r0;
  r0.classical = {1.0, 0.0};
  r0.psi = std::make_shared<const WaveFunction>(init_gaussian(grid, 0.5, 0.7, 0.0));
  r0.y = 0.9;
  auto run = [&](int steps) {
    const double dt = 1.0 / steps;
    Replica r = r0;
    for (int s = 0; s < steps; ++s) r = step_replica(r, dt, m);
    return r;
  };
  auto distance = [](const Replica& a, const Replica& b) {
    return std::abs(a.classical.position - b.classical.position) +
           std::abs(a.classical.momentum - b.classical.momentum) + std::abs(a.y - b.y) +
           l2_distance(*a.psi, *b.psi);
  };
  const auto s1 = run(100);
  const auto s2 = run(200);
  const auto s4 = run(400);
  CHECK(distance(s1, s2) / distance(s2, s4) == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("replica stepping is a pure function") {
  const auto grid = build_grid(-10, 10, 128);
  const auto m = harmonic(0.25);
  Replica r;
  r.classical = {1.0, 0.1};
  r.psi = std::make_shared<const WaveFunction>(init_gaussian(grid, 0.5, 0.7, 0.0));
  r.y = 0.3;
  Replica a = r;
  Replica b = r;
  b.psi = std::make_shared<const WaveFunction>(*r.psi);
  for (int s = 0; s < 200; ++s) {
    a = step_replica(a, 0.01, m);
    b = step_replica(b, 0.01, m);
    REQUIRE(identical(a, b));
  }
}

TEST_CASE("evolve: identity, commensurability, chaining, grouping") {
  const auto grid = build_grid(-10, 10, 128);
  const auto m = harmonic(0.25);
  const auto e0 = sample_initial_ensemble(mixed(grid, m), 60, 5, m, 0.01);

  CHECK(ensembles_identical(evolve(e0, 0.0), e0));
  CHECK_THROWS_AS(evolve(e0, 0.015), InvalidArgument);
  CHECK_THROWS_AS(evolve(e0, -0.01), InvalidArgument);

  const auto one_shot = evolve(e0, 0.3);
  CHECK(one_shot.time == 0.3);
  const auto chained = evolve(evolve(e0, 0.1), 0.3);
  CHECK(ensembles_identical(one_shot, chained));

  // Shared quantum updates give exactly what per-replica stepping gives.
  for (std::size_t i = 0; i < e0.size(); ++i) {
    Replica r = e0.replicas[i];
    for (int s = 0; s < 30; ++s) r = step_replica(r, 0.01, m);
    CHECK(identical(r, one_shot.replicas[i]));
  }

  // Thread count does not change a single bit.
  CHECK(ensembles_identical(evolve(e0, 0.3, 3), one_shot));

  // Dropping replicas leaves the rest untouched.
  Ensemble subset = e0;
  subset.replicas.erase(subset.replicas.begin(), subset.replicas.begin() + 25);
  const auto evolved_subset = evolve(subset, 0.3);
  for (std::size_t i = 0; i < evolved_subset.size(); ++i) {
    CHECK(identical(evolved_subset.replicas[i], one_shot.replicas[i + 25]));
  }
}

TEST_CASE("decoupled classical mean follows the oscillator") {
  const auto grid = build_grid(-10, 10, 128);
  const auto m = harmonic(0.0, 2.0, 1.0);
  InitialMixture mix({{1.0, ClassicalPoint{1.0, 0.0}, init_gaussian(grid, 0.5, 0.7, 0.0)}});
  auto e = sample_initial_ensemble(mix, 100, 1, m, 0.001);
  for (double t : {0.5, 1.0, 2.0}) {
    e = evolve(e, t);
    CHECK(std::abs(ensemble_observables(e).classical_position.mean - std::cos(t)) < 1e-6);
  }
}

TEST_CASE("resampling") {
  const auto grid = build_grid(-10, 10, 128);
  const auto m = harmonic(0.25);
  const auto e = sample_initial_ensemble(mixed(grid, m), 4000, 9, m, 0.01);
  const auto r1 = resample_bohmian(e, 77);
  const auto r2 = resample_bohmian(e, 77);
  CHECK(ensembles_identical(r1, r2));
  std::vector<double> before, after;
  for (std::size_t i = 0; i < e.size(); ++i) {
    before.push_back(e.replicas[i].y);
    after.push_back(r1.replicas[i].y);
    CHECK(r1.replicas[i].psi == e.replicas[i].psi);
    CHECK(r1.replicas[i].classical == e.replicas[i].classical);
  }
  CHECK(ks_two_sample(before, after) <= ks_threshold_two_sample(4000, 4000));

  Ensemble flagged = e;
  flagged.replicas[0].flags.boundary = true;
  flagged.replicas[1].flags.node_proximity = true;
  CHECK(flagged.flagged_count() == 2);
  CHECK(resample_bohmian(flagged, 1).flagged_count() == 0);
}

TEST_CASE("ensemble observables") {
  const auto grid = build_grid(-10, 10, 256);
  const auto m = harmonic(0.0);
  InitialMixture mix({{1.0, ClassicalPoint{1.0, 0.0}, init_eigenstate(grid, m, 0)}});
  auto e = sample_initial_ensemble(mix, 50, 2, m, 0.002);
  auto o = ensemble_observables(e);
  // E_0 = 1/2 plus classical M omega_c^2 X0^2 / 2 = 1/2.
  CHECK(std::abs(o.energy_expectation.mean - 1.0) < 1e-6);
  CHECK(o.energy_expectation.standard_error == 0.0);
  CHECK(o.energy_point.mean == o.energy_expectation.mean);
  CHECK(o.classical_position.standard_error == 0.0);
  const double sum = o.quantum_kinetic + o.quantum_potential + o.coupling_expectation +
                     o.classical_kinetic + o.classical_potential;
  CHECK(std::abs(sum - o.energy_expectation.mean) < 1e-12);

  for (auto& r : e.replicas) r.y = 0.0;
  o = ensemble_observables(e);
  for (const auto& [name, est] : o.named()) CHECK(est.standard_error == 0.0);
}
