#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "backreact/errors.hpp"
#include "backreact/model.hpp"
#include "backreact/wavefunction.hpp"

namespace backreact {

inline constexpr double kDefaultNodeThreshold = 1e-6;

// Guidance settings shared by every replica of a run.
struct GuidanceSettings {
  double node_threshold = kDefaultNodeThreshold;  // relative to max |psi|
  int interpolation_order = 3;                    // 1 (linear) or 3 (cubic)
};

// de Broglie-Bohm velocity v = (hbar/m) Im(psi'/psi) sampled on the grid.
// Where |psi| < node_threshold * max|psi| the ratio is meaningless; those
// points are masked and filled by linear interpolation from the nearest
// unmasked neighbours.
struct VelocityField {
  SpatialGrid grid;
  std::vector<double> values;
  std::vector<unsigned char> node_mask;
};

VelocityField velocity_field(const WaveFunction& psi, const HybridModel& model,
                             double node_threshold = kDefaultNodeThreshold);

struct VelocitySample {
  double velocity;
  bool near_node;
};

struct BohmianStep {
  double y;
  bool near_node;
  bool escaped;
};

// Grid constants and data pointers of a velocity field, read once and
// reused for many evaluations. The field must outlive the view.
class FieldView {
 public:
  FieldView(const VelocityField& field, int order);

  bool contains(double y) const noexcept { return y >= x_min_ && y <= x_last_; }
  double clamp(double y) const noexcept { return std::clamp(y, x_min_, x_last_); }

  // Throws if y lies outside [x_min, x_last].
  VelocitySample sample(double y) const {
    if (!contains(y)) outside(y);
    const double s = (y - x_min_) * inverse_spacing_;
    // s >= 0 here, so truncation is floor.
    const auto below = static_cast<std::ptrdiff_t>(s);
    const double frac = s - static_cast<double>(below);
    if (frac < 1e-12 || (frac > 1.0 - 1e-12 && below + 1 < n_)) {
      const auto nearest = frac < 1e-12 ? below : below + 1;
      return {v_[nearest], mask_[nearest] != 0};
    }
    auto j = std::min(below, n_ - 2);
    const bool near_node = mask_[j] != 0 || mask_[j + 1] != 0;
    if (order_ == 1) {
      const double t = s - static_cast<double>(j);
      return {(1.0 - t) * v_[j] + t * v_[j + 1], near_node};
    }
    // Stencil j-1..j+2, shifted inward at the edges.
    j = std::clamp(j, std::ptrdiff_t{1}, n_ - 3);
    const double t = s - static_cast<double>(j);
    constexpr double sixth = 1.0 / 6.0;
    const double tp = t + 1.0, tm = t - 1.0, tmm = t - 2.0;
    const double wm = -sixth * t * tm * tmm;
    const double w0 = 0.5 * tp * tm * tmm;
    const double w1 = -0.5 * tp * t * tmm;
    const double w2 = sixth * tp * t * tm;
    return {wm * v_[j - 1] + w0 * v_[j] + w1 * v_[j + 1] + w2 * v_[j + 2], near_node};
  }

 private:
  [[noreturn]] static void outside(double y);

  double x_min_, x_last_, inverse_spacing_;
  std::ptrdiff_t n_;
  const double* v_;
  const unsigned char* mask_;
  int order_;
};

// Heun step: y* = y + dt v_t(y); y' = y + dt/2 (v_t(y) + v_{t+dt}(y*)).
// A position leaving the grid is clamped to the boundary and reported as an
// escape.
inline BohmianStep advance_bohmian(double y, const FieldView& now, const FieldView& next, double dt) {
  bool escaped = false;
  auto confine = [&](double p) {
    if (!now.contains(p)) {
      escaped = true;
      return now.clamp(p);
    }
    return p;
  };
  const auto v0 = now.sample(confine(y));
  const double predictor = confine(y + dt * v0.velocity);
  const auto v1 = next.sample(predictor);
  const double out = confine(y + 0.5 * dt * (v0.velocity + v1.velocity));
  if (!std::isfinite(out)) throw NumericalError("advance_bohmian: non-finite position");
  return {out, v0.near_node || v1.near_node, escaped};
}

// Off-grid evaluation by cubic (or linear) Lagrange interpolation. Throws if
// y lies outside [x_min, x_last].
VelocitySample velocity_at(const VelocityField& field, double y, int order = 3);

BohmianStep advance_bohmian(double y, const VelocityField& field_now,
                            const VelocityField& field_next, double dt, int order = 3);

}  // namespace backreact
