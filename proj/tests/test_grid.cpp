#include <doctest.h>

#include <cmath>
#include <numbers>

#include "backreact/errors.hpp"
#include "backreact/grid.hpp"

using namespace backreact;

TEST_CASE("grid spacing and wavenumbers") {
  const auto g = build_grid(-10, 10, 256);
  CHECK(g.spacing() == 0.078125);
  CHECK(g.count() == 256);
  CHECK(g.wavenumbers()[0] == 0.0);
  CHECK(g.x(0) == -10.0);
  CHECK(g.x_last() == doctest::Approx(10.0 - 0.078125));

  const auto h = build_grid(-8, 8, 512);
  CHECK(h.wavenumbers()[1] == doctest::Approx(2 * std::numbers::pi / 16).epsilon(1e-14));
  CHECK(h.wavenumbers()[1] == doctest::Approx(0.3927).epsilon(1e-4));
  // Standard DFT ordering: the upper half holds negative wavenumbers.
  CHECK(h.wavenumbers()[511] == doctest::Approx(-2 * std::numbers::pi / 16));
  CHECK(h.wavenumbers()[256] < 0.0);
}

TEST_CASE("grid rejects bad shapes") {
  CHECK_THROWS_AS(build_grid(-10, 10, 100), InvalidArgument);
  CHECK_THROWS_AS(build_grid(-10, 10, 32), InvalidArgument);
  CHECK_THROWS_AS(build_grid(1, 1, 256), InvalidArgument);
  CHECK_THROWS_AS(build_grid(2, 1, 256), InvalidArgument);
}

TEST_CASE("grid copies share storage and compare equal") {
  const auto g = build_grid(-4, 4, 64);
  const auto copy = g;
  CHECK(copy == g);
  CHECK(copy.positions().data() == g.positions().data());
  CHECK_FALSE(build_grid(-4, 4, 128) == g);
}
