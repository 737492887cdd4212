#include "backreact/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "backreact/errors.hpp"

namespace backreact {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

ReplicaRng::ReplicaRng(std::uint64_t master_seed, std::uint64_t index, std::uint64_t purpose)
    : engine_(splitmix64(splitmix64(master_seed ^ splitmix64(purpose)) + index)) {}

double ReplicaRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double ReplicaRng::normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

GridCdf::GridCdf(const SpatialGrid& grid, std::span<const double> density)
    : grid_(grid), cumulative_(grid.count(), 0.0) {
  if (density.size() != grid.count()) throw InvalidArgument("GridCdf: size mismatch");
  for (std::size_t j = 1; j < density.size(); ++j) {
    cumulative_[j] = cumulative_[j - 1] + 0.5 * (density[j - 1] + density[j]) * grid.spacing();
  }
  const double total = cumulative_.back();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw InvalidArgument("GridCdf: density has no mass");
  }
  for (auto& c : cumulative_) c /= total;
  cumulative_.back() = 1.0;
}

double GridCdf::operator()(double x) const {
  if (x <= grid_.x_min()) return 0.0;
  if (x >= grid_.x_last()) return 1.0;
  const double s = (x - grid_.x_min()) / grid_.spacing();
  const auto j = std::min(static_cast<std::size_t>(s), cumulative_.size() - 2);
  const double t = s - static_cast<double>(j);
  return cumulative_[j] + t * (cumulative_[j + 1] - cumulative_[j]);
}

double GridCdf::inverse(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) return grid_.x_last();
  const auto hi = static_cast<std::size_t>(it - cumulative_.begin());
  const std::size_t lo = hi - 1;
  const double width = cumulative_[hi] - cumulative_[lo];
  const double t = width > 0.0 ? (u - cumulative_[lo]) / width : 0.0;
  return grid_.x(lo) + t * grid_.spacing();
}

}  // namespace backreact
