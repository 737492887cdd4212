#include "backreact/bohmian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "backreact/errors.hpp"
#include "backreact/propagator.hpp"

namespace backreact {

VelocityField velocity_field(const WaveFunction& psi, const HybridModel& model,
                             double node_threshold) {
  const std::size_t n = psi.size();
  const double peak = psi.max_abs();
  if (!(peak > 0.0)) throw InvalidArgument("velocity_field: zero wavefunction");

  const auto dpsi = spectral_derivative(psi);
  const double scale = model.hbar() / model.quantum_mass();
  const double cutoff = node_threshold * peak * node_threshold * peak;

  VelocityField field{psi.grid(), std::vector<double>(n, 0.0),
                      std::vector<unsigned char>(n, 0)};
  for (std::size_t j = 0; j < n; ++j) {
    if (std::norm(psi[j]) < cutoff) {
      field.node_mask[j] = 1;
    } else {
      field.values[j] = scale * (psi[j].real() * dpsi[j].imag() - psi[j].imag() * dpsi[j].real()) /
                        std::norm(psi[j]);
    }
  }

  // Fill masked runs from the nearest unmasked neighbours.
  std::ptrdiff_t last_good = -1;
  for (std::size_t j = 0; j <= n; ++j) {
    if (j < n && !field.node_mask[j]) {
      const auto gap_start = static_cast<std::size_t>(last_good + 1);
      if (gap_start < j) {
        const double right = field.values[j];
        const double left = last_good >= 0 ? field.values[last_good] : right;
        const double span = static_cast<double>(j - static_cast<std::size_t>(last_good));
        for (std::size_t i = gap_start; i < j; ++i) {
          const double f = last_good >= 0 ? static_cast<double>(i - last_good) / span : 1.0;
          field.values[i] = left + f * (right - left);
        }
      }
      last_good = static_cast<std::ptrdiff_t>(j);
    } else if (j == n) {
      if (last_good < 0) throw InvalidArgument("velocity_field: every grid point is a node");
      for (std::size_t i = static_cast<std::size_t>(last_good) + 1; i < n; ++i) {
        field.values[i] = field.values[last_good];
      }
    }
  }
  return field;
}

FieldView::FieldView(const VelocityField& field, int order)
    : x_min_(field.grid.x_min()),
      x_last_(field.grid.x_last()),
      inverse_spacing_(field.grid.inverse_spacing()),
      n_(static_cast<std::ptrdiff_t>(field.grid.count())),
      v_(field.values.data()),
      mask_(field.node_mask.data()),
      order_(order) {
  if (order != 1 && order != 3) {
    throw InvalidArgument("velocity_at: interpolation order must be 1 or 3");
  }
}

void FieldView::outside(double y) {
  throw InvalidArgument("velocity_at: position " + std::to_string(y) + " outside grid");
}

VelocitySample velocity_at(const VelocityField& field, double y, int order) {
  return FieldView(field, order).sample(y);
}

BohmianStep advance_bohmian(double y, const VelocityField& field_now,
                            const VelocityField& field_next, double dt, int order) {
  return advance_bohmian(y, FieldView(field_now, order), FieldView(field_next, order), dt);
}

}  // namespace backreact
