#include "backreact/selftest.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "backreact/bohmian.hpp"
#include "backreact/classical.hpp"
#include "backreact/density_matrix.hpp"
#include "backreact/exact_reference.hpp"
#include "backreact/propagator.hpp"
#include "backreact/sampling.hpp"
#include "backreact/statistics.hpp"

namespace backreact {

namespace {

// Collects named checks; each body returns a detail string and records
// failures through expect().
class Battery {
 public:
  void run(const std::string& name, const std::function<void()>& body) {
    SelfCheck c;
    c.name = name;
    failures_.clear();
    notes_.str("");
    const auto start = std::chrono::steady_clock::now();
    try {
      body();
      c.passed = failures_.empty();
      c.detail = c.passed ? notes_.str() : failures_;
    } catch (const std::exception& e) {
      c.passed = false;
      c.detail = std::string("exception: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    checks_.push_back(std::move(c));
  }

  void expect(bool ok, const std::string& what) {
    if (!ok) failures_ += (failures_.empty() ? "" : "; ") + what;
  }

  // |value - target| <= tol, recorded with the numbers.
  void near(const std::string& what, double value, double target, double tol) {
    std::ostringstream s;
    s.precision(3);
    s << what << " = " << value << " (target " << target << " +/- " << tol << ")";
    expect(std::abs(value - target) <= tol, s.str());
    notes_ << (notes_.tellp() > 0 ? "; " : "") << s.str();
  }

  void below(const std::string& what, double value, double limit) {
    std::ostringstream s;
    s.precision(3);
    s << what << " = " << value << " (limit " << limit << ")";
    expect(value <= limit, s.str());
    notes_ << (notes_.tellp() > 0 ? "; " : "") << s.str();
  }

  template <typename Fn>
  void throws(const std::string& what, Fn&& fn) {
    bool threw = false;
    try {
      fn();
    } catch (const std::exception&) {
      threw = true;
    }
    expect(threw, what + " did not raise an error");
  }

  std::vector<SelfCheck> take() { return std::move(checks_); }

 private:
  std::vector<SelfCheck> checks_;
  std::string failures_;
  std::ostringstream notes_;
};

HybridModel harmonic(double lambda = 0.0, double omega_c = 1.0) {
  return HybridModel(1, 1, 1, HarmonicWell{1}, ClassicalHarmonic{omega_c}, BilinearCoupling{lambda});
}

HybridModel free_particle() {
  return HybridModel(1, 10, 1, HarmonicWell{0}, ClassicalHarmonic{1}, BilinearCoupling{0});
}

HybridModel double_well(double lambda) {
  return HybridModel(1, 1, 1, DoubleWell{1, 3}, ClassicalHarmonic{1}, BilinearCoupling{lambda});
}

double free_width(double sigma0, double t) {
  return sigma0 * std::sqrt(1 + std::pow(t / (2 * sigma0 * sigma0), 2));
}

double packet_width(const WaveFunction& psi, const HybridModel& m) {
  const auto q = quantum_expectations(psi, 0.0, m);
  return std::sqrt(q.position_squared - q.position * q.position);
}

bool same_ensembles(const Ensemble& a, const Ensemble& b) {
  if (a.size() != b.size() || a.time != b.time) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!identical(a.replicas[i], b.replicas[i])) return false;
  }
  return true;
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

std::vector<SelfCheck> run_selftest(const std::optional<RunConfig>& config, unsigned threads) {
  Battery b;

  b.run("grid construction", [&] {
    b.near("spacing(-10, 10, 256)", build_grid(-10, 10, 256).spacing(), 0.078125, 0);
    b.near("k_1(-8, 8, 512)", build_grid(-8, 8, 512).wavenumbers()[1], 2 * std::numbers::pi / 16, 1e-15);
    b.throws("count 100", [] { build_grid(-10, 10, 100); });
    b.throws("empty interval", [] { build_grid(1, 1, 64); });
  });

  b.run("gaussian packets", [&] {
    const auto grid = build_grid(-10, 10, 512);
    const auto m = harmonic();
    const auto centred = init_gaussian(grid, 0, 1, 0);
    b.near("norm", centred.norm(), 1, 1e-10);
    b.near("<x> centred", quantum_expectations(centred, 0, m).position, 0, 1e-9);
    const auto moving = quantum_expectations(init_gaussian(grid, 1, 0.5, 2), 0, m);
    b.near("<x> moving", moving.position, 1, 1e-6);
    b.near("<p> moving", moving.momentum, 2, 1e-6);
    b.throws("packet at the boundary", [&] { init_gaussian(grid, 9.5, 1, 0); });
  });

  b.run("harmonic eigenstates", [&] {
    const auto grid = build_grid(-10, 10, 256);
    const auto m = harmonic();
    const auto phi0 = init_eigenstate(grid, m, 0);
    const auto q0 = quantum_expectations(phi0, 0, m);
    b.near("<x^2> ground", q0.position_squared, 0.5, 1e-6);
    b.near("<T + V_q> ground", q0.kinetic + q0.quantum_potential, 0.5, 1e-6);
    b.near("<x> first excited", quantum_expectations(init_eigenstate(grid, m, 1), 0, m).position, 0, 1e-9);
    double vmax = 0.0;
    for (double v : velocity_field(phi0, m).values) vmax = std::max(vmax, std::abs(v));
    b.below("max |v| for the real ground state", vmax, 1e-10);
    b.throws("eigenstate of a double well", [&] { init_eigenstate(grid, double_well(0), 0); });
  });

  b.run("quantum propagation", [&] {
    const auto grid = build_grid(-40, 40, 1024);
    const auto m = free_particle();
    const double dt = 0.002;
    auto psi = init_gaussian(grid, 0, 1, 0);
    const QuantumPropagator prop(m, grid, dt);
    for (int s = 0; s < 1000; ++s) psi = prop.step(psi, 0.0);
    b.near("free width after 1000 steps", packet_width(psi, m), free_width(1, 1000 * dt), 1e-4);
    b.near("norm", psi.norm(), 1, 1e-10);

    const auto hgrid = build_grid(-12, 12, 512);
    const auto h = harmonic();
    const double hdt = 1e-3;
    const QuantumPropagator hprop(h, hgrid, hdt);
    auto coherent = init_gaussian(hgrid, 1, std::sqrt(0.5), 0);
    double worst = 0.0;
    const int period = static_cast<int>(std::round(2 * std::numbers::pi / hdt));
    for (int s = 1; s <= period; ++s) {
      coherent = hprop.step(coherent, 0.0);
      if (s % 50 == 0) {
        worst = std::max(worst, std::abs(quantum_expectations(coherent, 0, h).position - std::cos(s * hdt)));
      }
    }
    b.below("coherent <x> error over a period", worst, 1e-4);
    const auto start = init_gaussian(hgrid, 1, 0.5, 0);
    b.below("tiny-dt step change", l2_distance(propagate_quantum(start, 0, 1e-15, h), start), 1e-12);
  });

  b.run("expectation values", [&] {
    const auto grid = build_grid(-10, 10, 512);
    const auto m = harmonic(0.1);
    b.near("<p> of a real packet", quantum_expectations(init_gaussian(grid, 1, 0.7, 0), 0, m).momentum, 0, 1e-10);
    b.near("<V_int> at X = 2", quantum_expectations(init_gaussian(grid, 1, 0.7, 0), 2, m).coupling, 0.2, 1e-6);
  });

  b.run("bohmian trajectories", [&] {
    const auto grid = build_grid(-10, 10, 512);
    const auto m = harmonic();
    b.near("v for k0 = 2", velocity_at(velocity_field(init_gaussian(grid, 1, 1, 2), m), 1.0).velocity, 2, 1e-4);

    const auto fgrid = build_grid(-16, 16, 256);
    const auto f = free_particle();
    const double dt = 0.005, sigma0 = 0.6;
    const QuantumPropagator prop(f, fgrid, dt);
    auto psi = init_gaussian(fgrid, 0, sigma0, 0);
    auto field = velocity_field(psi, f);
    double y = 0.8;
    for (int s = 0; s < 400; ++s) {
      psi = prop.step(psi, 0.0);
      auto next = velocity_field(psi, f);
      y = advance_bohmian(y, field, next, dt).y;
      field = std::move(next);
    }
    b.near("free trajectory y(2)", y, 0.8 * free_width(sigma0, 2.0) / sigma0, 1e-3);
  });

  b.run("classical sector", [&] {
    const HybridModel m(1, 10, 1, HarmonicWell{1}, ClassicalHarmonic{0.15}, BilinearCoupling{0});
    ClassicalState s{1, 0};
    const double e0 = classical_energy(m, s);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      s = advance_classical(s, 0.0, 1e-3, m);
      worst = std::max(worst, std::abs(classical_energy(m, s) - e0) / e0);
    }
    b.below("relative energy drift over 1e4 steps", worst, 1e-8);
    b.near("force from V_int at y = 2", classical_force(harmonic(0.25), 2.0, 0.0), -0.5, 1e-15);
  });

  b.run("initial sampling", [&] {
    const auto grid = build_grid(-10, 10, 256);
    const auto m = harmonic();
    const InitialMixture mix({{1.0, ClassicalPoint{1, 0}, init_eigenstate(grid, m, 0)}});
    const auto e = sample_initial_ensemble(mix, 4000, 11, m, 0.01);
    std::vector<double> ys;
    for (const auto& r : e.replicas) ys.push_back(r.y);
    b.below("KS vs |phi_0|^2", ks_one_sample(ys, [](double x) { return std_normal_cdf(x * std::numbers::sqrt2); }),
            ks_threshold_one_sample(4000));
    b.expect(same_ensembles(e, sample_initial_ensemble(mix, 4000, 11, m, 0.01)), "same seed differs");

    const InitialMixture halves({{0.5, ClassicalPoint{0, 0}, init_eigenstate(grid, m, 0)},
                                 {0.5, ClassicalPoint{0, 0}, init_eigenstate(grid, m, 1)}});
    const auto big = sample_initial_ensemble(halves, 100000, 3, m, 0.01);
    std::size_t first = 0;
    const auto* phi0 = big.replicas.front().psi.get();
    for (const auto& r : big.replicas) first += r.psi->amplitudes()[128] == phi0->amplitudes()[128];
    b.below("component count deviation", std::abs(static_cast<double>(first) - 50000.0),
            3 * std::sqrt(100000.0 / 4));
  });

  b.run("replica stepping", [&] {
    const auto grid = build_grid(-6, 6, 64);
    const auto m0 = double_well(0.0);
    const Replica r{{1, 0.3}, std::make_shared<const WaveFunction>(init_gaussian(grid, 0.2, 0.5, 0)), 0.4, {}, nullptr};
    const double dt = 0.01;
    const auto stepped = step_replica(r, dt, m0);
    b.below("lambda = 0 quantum vs propagate_quantum",
            l2_distance(*stepped.psi, propagate_quantum(*r.psi, 0, dt, m0)), 1e-12);
    const auto verlet = advance_classical(r.classical, r.y, dt, m0);
    b.below("lambda = 0 classical vs advance_classical",
            std::max(std::abs(stepped.classical.position - verlet.position),
                     std::abs(stepped.classical.momentum - verlet.momentum)),
            1e-12);
    const auto m = double_well(0.25);
    b.expect(identical(step_replica(r, dt, m), step_replica(r, dt, m)), "identical replicas diverged");
  });

  b.run("ensemble evolution", [&] {
    const auto grid = build_grid(-6, 6, 64);
    const auto m = double_well(0.25);
    const InitialMixture mix({{1.0, ClassicalPoint{1, 0}, init_gaussian(grid, 0, 0.5, 0)}});
    const auto e = sample_initial_ensemble(mix, 200, 5, m, 0.01);
    b.expect(same_ensembles(evolve(e, 0.0), e), "zero-step evolve is not the identity");
    const auto direct = evolve(e, 1.0);
    b.expect(same_ensembles(evolve(evolve(e, 0.5), 1.0), direct), "chained evolve differs");
    b.expect(same_ensembles(evolve(e, 1.0, 3), direct), "thread count changed the result");
    b.throws("non-commensurate target", [&] { evolve(e, 0.0123); });

    const HybridModel decoupled(1, 1, 1, HarmonicWell{1}, ClassicalHarmonic{1}, BilinearCoupling{0});
    const InitialMixture ground({{1.0, ClassicalPoint{1, 0}, init_eigenstate(build_grid(-10, 10, 128), decoupled, 0)}});
    const auto g = sample_initial_ensemble(ground, 50, 1, decoupled, 0.01);
    const auto o = ensemble_observables(g);
    b.near("E_qexp at t = 0", o.energy_expectation.mean, 1.0, 1e-6);
    b.near("standard error, identical quantities", o.classical_position.standard_error, 0, 0);
    b.near("E_qexp - E_point at lambda = 0", o.energy_expectation.mean - o.energy_point.mean, 0, 1e-15);
    const auto later = ensemble_observables(evolve(g, 1.0));
    b.near("<X>(1) decoupled", later.classical_position.mean, std::cos(1.0), 1e-4);
  });

  b.run("re-sampling", [&] {
    const auto grid = build_grid(-10, 10, 256);
    const auto m = harmonic();
    const InitialMixture mix({{1.0, ClassicalPoint{0, 0}, init_gaussian(grid, 0.5, 0.8, 0)}});
    const auto e = sample_initial_ensemble(mix, 4000, 21, m, 0.01);
    const auto r = resample_bohmian(e, 77);
    std::vector<double> a, c;
    for (std::size_t i = 0; i < e.size(); ++i) {
      a.push_back(e.replicas[i].y);
      c.push_back(r.replicas[i].y);
    }
    b.below("two-sample KS old vs redrawn", ks_two_sample(a, c), ks_threshold_two_sample(4000, 4000));
    b.expect(same_ensembles(r, resample_bohmian(e, 77)), "same resample seed differs");
    b.below("equivariance at t = 0", equivariance_metric(e).ks_distance, equivariance_metric(e).threshold);
  });

  b.run("density matrices", [&] {
    const auto grid = build_grid(-8, 8, 64);
    const auto m = harmonic();
    const std::size_t n = 4000;
    const double r2 = 1 / std::numbers::sqrt2;
    const InitialMixture fock({{0.5, ClassicalPoint{0, 0}, init_eigenstate(grid, m, 0)},
                               {0.5, ClassicalPoint{0, 0}, init_eigenstate(grid, m, 1)}});
    const InitialMixture cat({{0.5, ClassicalPoint{0, 0}, init_eigen_superposition(grid, m, std::vector{r2, r2})},
                              {0.5, ClassicalPoint{0, 0}, init_eigen_superposition(grid, m, std::vector{r2, -r2})}});
    const auto rho_f = density_matrix_estimate(sample_initial_ensemble(fock, n, 1, m, 0.01));
    const auto rho_c = density_matrix_estimate(sample_initial_ensemble(cat, n, 1, m, 0.01));
    b.near("purity of the Fock mixture", rho_f.purity(), 0.5, 2 / std::sqrt(double(n)));
    b.near("trace", rho_f.trace(), 1, 1e-10);
    b.below("L1(Fock, superposition)", trace_distance(rho_f, rho_c), 5 / std::sqrt(double(n)));
    const InitialMixture pure({{1.0, ClassicalPoint{0, 0}, init_eigenstate(grid, m, 2)}});
    b.near("purity with one shared psi",
           density_matrix_estimate(sample_initial_ensemble(pure, 10, 1, m, 0.01)).purity(), 1, 1e-10);
  });

  b.run("determinism", [&] {
    const auto grid = build_grid(-6, 6, 64);
    const Replica r{{1, 0}, std::make_shared<const WaveFunction>(init_gaussian(grid, 0, 0.5, 0)), 0.3, {}, nullptr};
    const auto report = determinism_check(r, double_well(0.25), 0.01, 10000);
    b.expect(report.identical, "copies diverged");
    b.expect(report.perturbation_detected, "a 1e-12 shift in y went unnoticed");
  });

  b.run("exact reference", [&] {
    const auto gq = build_grid(-8, 8, 64);
    const auto gc = build_grid(-4, 4, 64);
    const HybridModel m0(1, 10, 1, HarmonicWell{1}, ClassicalHarmonic{0.5}, BilinearCoupling{0});
    const auto a = init_gaussian(gq, 0.5, 0.6, 0.3);
    const auto c = init_gaussian(gc, 1.0, heavy_ground_width(m0), 0);
    auto psi = product_state(a, c);
    const double dt = 0.01;
    const Propagator2D prop(m0, gq, gc, dt);
    auto qa = a;
    for (int s = 0; s < 100; ++s) {
      psi = prop.step(psi);
      qa = propagate_quantum(qa, 0.0, dt, m0);
    }
    const auto marg = exact_marginals(psi, 1.0);
    b.near("Schmidt purity, lambda = 0", marg.purity, 1, 1e-8);
    b.near("<x> vs 1D propagator", marg.position, quantum_expectations(qa, 0, m0).position, 1e-8);

    const auto m = m0.with_coupling(0.25);
    auto coupled = product_state(init_gaussian(gq, 0.5, std::sqrt(0.5), 0), c);
    const Propagator2D cprop(m, gq, gc, dt);
    double worst = 0.0;
    for (int s = 1; s <= 300; ++s) {
      coupled = cprop.step(coupled);
      if (s % 30 == 0) {
        const auto nm = normal_mode_solution(m, {0.5, 0, 1.0, 0}, s * dt);
        const auto em = exact_marginals(coupled, 1.0);
        worst = std::max({worst, std::abs(em.position - nm.x), std::abs(em.heavy_position - nm.big_x)});
      }
    }
    b.below("exact vs normal modes, lambda = 0.25", worst, 1e-3);
  });

  if (config) {
    b.run("reference scenario (" + config->source + ")", [&] {
      const auto spec = make_spec(*config);
      const std::size_t steps = 10000;
      const auto e = sample(spec);
      const double target = static_cast<double>(steps) * spec.dt;
      const auto serial = evolve(e, target, 1);
      const auto parallel = evolve(e, target, threads == 1 ? 2 : threads);
      b.expect(same_ensembles(serial, parallel), "result depends on the thread count");
      double norm_dev = 0.0;
      for (const auto& r : serial.replicas) norm_dev = std::max(norm_dev, std::abs(r.psi->norm() - 1));
      b.below("norm deviation after 1e4 steps", norm_dev, 1e-8);
      b.below("flagged fraction", static_cast<double>(serial.flagged_count()) / serial.size(),
              config->contamination_fraction);
    });
  }
  return b.take();
}

}  // namespace backreact
