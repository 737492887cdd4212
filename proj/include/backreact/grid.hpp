#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace backreact {

// Uniform periodic grid x_j = x_min + j * spacing, j = 0..count-1, together
// with the matching discrete-Fourier wavenumbers. Copies share storage.
class SpatialGrid {
 public:
  SpatialGrid(double x_min, double x_max, std::size_t count);

  double x_min() const noexcept { return data_->x_min; }
  double x_max() const noexcept { return data_->x_max; }
  std::size_t count() const noexcept { return data_->positions.size(); }
  double spacing() const noexcept { return data_->spacing; }
  double inverse_spacing() const noexcept { return data_->inverse_spacing; }
  double length() const noexcept { return data_->x_max - data_->x_min; }

  // Last representable point, x_min + (count-1) * spacing.
  double x_last() const noexcept { return data_->positions.back(); }
  bool contains(double x) const noexcept { return x >= x_min() && x <= x_last(); }

  double x(std::size_t j) const { return data_->positions[j]; }
  std::span<const double> positions() const noexcept { return data_->positions; }
  std::span<const double> wavenumbers() const noexcept { return data_->wavenumbers; }
  double max_wavenumber() const noexcept;

  bool operator==(const SpatialGrid& other) const noexcept;

 private:
  struct Data {
    double x_min;
    double x_max;
    double spacing;
    double inverse_spacing;
    std::vector<double> positions;
    std::vector<double> wavenumbers;
  };
  std::shared_ptr<const Data> data_;
};

SpatialGrid build_grid(double x_min, double x_max, std::size_t count);

}  // namespace backreact
