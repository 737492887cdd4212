#pragma once

#include <functional>
#include <vector>

#include "backreact/ensemble.hpp"

namespace backreact {

// sup |F_empirical - F| over the samples (copied and sorted internally).
double ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf);

double ks_two_sample(std::vector<double> a, std::vector<double> b);

// Asymptotic 99% critical values of the Kolmogorov-Smirnov statistic.
double ks_threshold_one_sample(std::size_t n);
double ks_threshold_two_sample(std::size_t n, std::size_t m);

// (a - b) / sqrt(se_a^2 + se_b^2). Zero difference gives 0; a non-zero
// difference with vanishing error is scored against a round-off floor so
// the result stays finite.
double z_score(const Estimate& a, const Estimate& b);

}  // namespace backreact
