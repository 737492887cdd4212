#include "backreact/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "backreact/errors.hpp"

namespace backreact {
namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

SpatialGrid::SpatialGrid(double x_min, double x_max, std::size_t count) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min)) {
    throw InvalidArgument("grid: degenerate interval [" + std::to_string(x_min) + ", " +
                          std::to_string(x_max) + "]");
  }
  if (!is_power_of_two(count) || count < 64) {
    throw InvalidArgument("grid: count must be a power of two >= 64, got " +
                          std::to_string(count));
  }
  Data d;
  d.x_min = x_min;
  d.x_max = x_max;
  d.spacing = (x_max - x_min) / static_cast<double>(count);
  d.inverse_spacing = 1.0 / d.spacing;
  d.positions.resize(count);
  d.wavenumbers.resize(count);
  const double dk = 2.0 * std::numbers::pi / (x_max - x_min);
  const auto n = static_cast<std::ptrdiff_t>(count);
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    d.positions[j] = x_min + static_cast<double>(j) * d.spacing;
    const std::ptrdiff_t m = j < n / 2 ? j : j - n;
    d.wavenumbers[j] = dk * static_cast<double>(m);
  }
  data_ = std::make_shared<const Data>(std::move(d));
}

double SpatialGrid::max_wavenumber() const noexcept { return std::numbers::pi / spacing(); }

bool SpatialGrid::operator==(const SpatialGrid& other) const noexcept {
  return data_ == other.data_ ||
         (x_min() == other.x_min() && x_max() == other.x_max() && count() == other.count());
}

SpatialGrid build_grid(double x_min, double x_max, std::size_t count) {
  return SpatialGrid(x_min, x_max, count);
}

}  // namespace backreact
