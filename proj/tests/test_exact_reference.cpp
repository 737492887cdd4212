#include <doctest.h>

#include <cmath>
#include <numbers>

#include "backreact/exact_reference.hpp"
#include "backreact/errors.hpp"

using namespace backreact;

namespace {

HybridModel oscillators(double lambda, double big_m = 10.0, double omega_c = 0.5) {
  return HybridModel(1, big_m, 1, HarmonicWell{1}, ClassicalHarmonic{omega_c}, BilinearCoupling{lambda});
}

// Independent closed form for equal frequencies and masses: the modes
// x +/- X decouple with frequencies sqrt(w^2 +/- lambda / m).
OscillatorPair symmetric_pair(double lambda, double x0, double big_x0, double t) {
  const double wp = std::sqrt(1 + lambda), wm = std::sqrt(1 - lambda);
  const double s = 0.5 * (x0 + big_x0) * std::cos(wp * t);
  const double d = 0.5 * (x0 - big_x0) * std::cos(wm * t);
  return {s + d, 0.0, s - d, 0.0};
}

}  // namespace

TEST_CASE("normal modes against the symmetric closed form") {
  const HybridModel m(1, 1, 1, HarmonicWell{1}, ClassicalHarmonic{1}, BilinearCoupling{0.3});
  for (double t : {0.0, 0.7, 3.1, 10.0}) {
    const auto a = normal_mode_solution(m, {0.4, 0.0, -1.0, 0.0}, t);
    const auto b = symmetric_pair(0.3, 0.4, -1.0, t);
    CHECK(a.x == doctest::Approx(b.x).epsilon(1e-12));
    CHECK(a.big_x == doctest::Approx(b.big_x).epsilon(1e-12));
  }
  const HybridModel dw(1, 1, 1, DoubleWell{1, 3}, ClassicalHarmonic{1}, BilinearCoupling{0.3});
  CHECK_THROWS_AS(normal_mode_solution(dw, {}, 1.0), InvalidArgument);
}

TEST_CASE("decoupled 2D evolution stays a product state") {
  const auto gq = build_grid(-8, 8, 64);
  const auto gc = build_grid(-4, 4, 64);
  const auto m = oscillators(0.0);
  const auto a = init_gaussian(gq, 0.5, 0.6, 0.3);
  const auto c = init_gaussian(gc, 1.0, heavy_ground_width(m), 0);
  auto psi = product_state(a, c);
  CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
  const Propagator2D prop(m, gq, gc, 0.01);
  auto qa = a;
  for (int s = 0; s < 200; ++s) {
    psi = prop.step(psi);
    qa = propagate_quantum(qa, 0.0, 0.01, m);
  }
  const auto marg = exact_marginals(psi, 1.0);
  const auto q = quantum_expectations(qa, 0.0, m);
  CHECK(marg.purity == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(marg.position - q.position) < 1e-8);
  CHECK(std::abs(marg.position_squared - q.position_squared) < 1e-8);
  CHECK(std::abs(psi.norm() - 1) < 1e-10);
  CHECK_FALSE(psi.touches_boundary());
}

TEST_CASE("coupled 2D evolution follows the normal modes and entangles") {
  const auto gq = build_grid(-8, 8, 64);
  const auto gc = build_grid(-4, 4, 128);
  const auto m = oscillators(0.25);
  auto psi = product_state(init_gaussian(gq, 0.5, std::sqrt(0.5), 0), init_gaussian(gc, 1.0, heavy_ground_width(m), 0.5));
  const Propagator2D prop(m, gq, gc, 0.01);
  double worst = 0.0;
  for (int s = 1; s <= 600; ++s) {
    psi = prop.step(psi);
    if (s % 60 == 0) {
      const auto nm = normal_mode_solution(m, {0.5, 0.0, 1.0, 0.5}, s * 0.01);
      const auto e = exact_marginals(psi, 1.0);
      worst = std::max({worst, std::abs(e.position - nm.x), std::abs(e.heavy_position - nm.big_x),
                        std::abs(e.heavy_momentum - nm.big_p)});
    }
  }
  CHECK(worst < 1e-3);
  CHECK(exact_marginals(psi, 1.0).purity < 1.0 - 1e-6);
}

TEST_CASE("2D step is second order") {
  const auto gq = build_grid(-8, 8, 64);
  const auto gc = build_grid(-4, 4, 64);
  const auto m = oscillators(0.25);
  const auto start = product_state(init_gaussian(gq, 0.5, 0.7, 0), init_gaussian(gc, 1.0, heavy_ground_width(m), 0));
  auto run = [&](double dt, int steps) {
    const Propagator2D prop(m, gq, gc, dt);
    auto p = start;
    for (int s = 0; s < steps; ++s) p = prop.step(p);
    return exact_marginals(p, 1.0).position;
  };
  const double fine = run(0.0025, 400);
  const double e1 = std::abs(run(0.02, 50) - fine);
  const double e2 = std::abs(run(0.01, 100) - fine);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("hybrid comparison needs a point classical start") {
  const auto grid = build_grid(-8, 8, 64);
  const auto m = oscillators(0.1);
  const EnsembleSpec spec{InitialMixture({{1.0, ClassicalGaussian{1, 0, 0.1, 0.1}, init_gaussian(grid, 0.5, 0.7, 0)}}),
                          m, 0.01, 50, 1};
  ExactCompareSettings s{build_grid(-4, 4, 64), 10, 5};
  CHECK_THROWS_AS(compare_hybrid_exact(spec, s), InvalidArgument);
}

TEST_CASE("hybrid agrees with exact for a heavy partner over a short time") {
  const auto grid = build_grid(-8, 8, 64);
  const auto m = oscillators(0.1);
  const EnsembleSpec spec{InitialMixture({{1.0, ClassicalPoint{1, 0}, init_gaussian(grid, 0.5, std::sqrt(0.5), 0)}}),
                          m, 0.01, 400, 1};
  ExactCompareSettings s{build_grid(-4, 4, 128), 100, 20};
  const auto r = compare_hybrid_exact(spec, s);
  CHECK(r.times.size() == 6);
  const auto& big_x = r.series("X");
  for (double e : big_x.relative_error) CHECK(e < 0.05);
  CHECK_FALSE(big_x.horizon);
  CHECK(r.exact_max_norm_deviation < 1e-10);
}
