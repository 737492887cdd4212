#include <doctest.h>

#include <cmath>
#include <random>

#include "backreact/statistics.hpp"

using namespace backreact;

TEST_CASE("one-sample KS on a hand-worked example") {
  // Uniform CDF, samples 0.1, 0.5, 0.9: the largest gap is 1/3 - 0.1.
  const double d = ks_one_sample({0.9, 0.1, 0.5}, [](double x) { return x; });
  CHECK(d == doctest::Approx(1.0 / 3.0 - 0.1).epsilon(1e-14));
}

TEST_CASE("two-sample KS") {
  CHECK(ks_two_sample({1, 2, 3}, {4, 5}) == doctest::Approx(1.0));
  CHECK(ks_two_sample({1, 2, 3, 4}, {1, 2, 3, 4}) == doctest::Approx(0.0));
  // {1,3} vs {2,4}: after 1 the empirical CDFs differ by 1/2.
  CHECK(ks_two_sample({1, 3}, {2, 4}) == doctest::Approx(0.5));
}

TEST_CASE("99% thresholds") {
  CHECK(ks_threshold_one_sample(4000) == doctest::Approx(1.63 / std::sqrt(4000.0)));
  CHECK(ks_threshold_two_sample(100, 400) == doctest::Approx(1.63 * std::sqrt(500.0 / 40000.0)));
}

TEST_CASE("KS false-rejection rate near 1%") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int rejected = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> s(1000);
    for (auto& x : s) x = u(rng);
    if (ks_one_sample(s, [](double x) { return x; }) > ks_threshold_one_sample(s.size())) ++rejected;
  }
  CHECK(rejected <= 12);
}

TEST_CASE("z scores") {
  CHECK(z_score({1.0, 0.1}, {0.0, 0.1}) == doctest::Approx(1.0 / std::sqrt(0.02)));
  CHECK(z_score({2.0, 0.0}, {2.0, 0.0}) == 0.0);
  CHECK(std::isfinite(z_score({2.0, 0.0}, {1.0, 0.0})));
  CHECK(std::abs(z_score({2.0, 0.0}, {1.0, 0.0})) > 1e6);
  CHECK(z_score({0.0, 0.3}, {1.0, 0.4}) == doctest::Approx(-2.0));
}

TEST_CASE("mean and standard error") {
  const auto e = mean_and_error({1, 2, 3, 4});
  CHECK(e.mean == doctest::Approx(2.5));
  // sample variance 5/3
  CHECK(e.standard_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
}
