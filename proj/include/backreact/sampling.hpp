#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "backreact/grid.hpp"

namespace backreact {

// Independent stream for (master seed, replica index, purpose). The
// conversion to doubles is written out explicitly so draws are identical
// across standard libraries.
class ReplicaRng {
 public:
  ReplicaRng(std::uint64_t master_seed, std::uint64_t index, std::uint64_t purpose);

  double uniform();  // [0, 1)
  double normal();   // standard normal, Box-Muller

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Piecewise-linear CDF of a density sampled on a grid (trapezoid cell masses,
// linear between nodes). Zero below x_0 and one above x_last.
class GridCdf {
 public:
  GridCdf(const SpatialGrid& grid, std::span<const double> density);

  double operator()(double x) const;
  double inverse(double u) const;

 private:
  SpatialGrid grid_;
  std::vector<double> cumulative_;
};

}  // namespace backreact
