#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "backreact/density_matrix.hpp"

using namespace backreact;

namespace {

HybridModel harmonic(double lambda = 0.0) {
  return HybridModel(1, 1, 1, HarmonicWell{1}, ClassicalHarmonic{1}, BilinearCoupling{lambda});
}

Complex overlap(const WaveFunction& a, const WaveFunction& b) {
  Complex s{0, 0};
  for (std::size_t j = 0; j < a.size(); ++j) s += std::conj(a[j]) * b[j];
  return s * a.grid().spacing();
}

}  // namespace

TEST_CASE("Fock and superposition mixtures give the same operator") {
  const auto grid = build_grid(-8, 8, 64);
  const auto m = harmonic();
  const double r = 1 / std::numbers::sqrt2;
  const std::vector<WaveFunction> fock{init_eigenstate(grid, m, 0), init_eigenstate(grid, m, 1)};
  const std::vector<WaveFunction> cat{init_eigen_superposition(grid, m, std::vector{r, r}),
                                      init_eigen_superposition(grid, m, std::vector{r, -r})};
  const std::vector<double> w{0.5, 0.5};
  const auto a = density_matrix_from(fock, w);
  const auto b = density_matrix_from(cat, w);
  CHECK(trace_distance(a, b) < 1e-12);
  CHECK(a.trace() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(a.purity() == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(a.hermiticity_defect() < 1e-14);
  CHECK(a.min_eigenvalue() > -1e-12);
}

TEST_CASE("trace distance between pure states") {
  const auto grid = build_grid(-10, 10, 128);
  const auto m = harmonic();
  const std::vector<WaveFunction> one{init_eigenstate(grid, m, 0)};
  const std::vector<WaveFunction> two{init_gaussian(grid, 0.7, std::sqrt(0.5), 0.3)};
  const std::vector<double> w{1.0};
  // || |a><a| - |b><b| ||_1 = 2 sqrt(1 - |<a|b>|^2)
  const double expected = 2 * std::sqrt(1 - std::norm(overlap(one[0], two[0])));
  CHECK(trace_distance(density_matrix_from(one, w), density_matrix_from(two, w)) ==
        doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("ensemble estimate") {
  const auto grid = build_grid(-8, 8, 64);
  const auto m = harmonic(0.2);
  const InitialMixture mix({{0.5, ClassicalPoint{1.0, -0.5}, init_eigenstate(grid, m, 0)},
                            {0.5, ClassicalPoint{-1.0, 0.5}, init_eigenstate(grid, m, 1)}});
  const auto e = sample_initial_ensemble(mix, 2000, 4, m, 0.01);
  const auto rho = density_matrix_estimate(e);
  CHECK(rho.replica_count == 2000);
  CHECK(rho.trace() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(rho.purity() == doctest::Approx(0.5).epsilon(0.05));

  double x = 0, k = 0, x2 = 0, xk = 0;
  for (const auto& r : e.replicas) {
    x += r.classical.position;
    k += r.classical.momentum;
    x2 += r.classical.position * r.classical.position;
    xk += r.classical.position * r.classical.momentum;
  }
  CHECK(rho.classical.position == doctest::Approx(x / 2000));
  CHECK(rho.classical.momentum == doctest::Approx(k / 2000));
  CHECK(rho.classical.position_squared == doctest::Approx(x2 / 2000));
  CHECK(rho.classical.position_momentum == doctest::Approx(xk / 2000));
}
