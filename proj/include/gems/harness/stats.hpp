#pragma once

// Summary statistics for comparing runs across seeds.

#include <span>

namespace gems::harness {

struct ConfidenceInterval {
  double mean = 0.0;
  double half_width = 0.0;  // 95% two-sided, Student t with n-1 dof
};

/// Needs at least one sample; a single sample gives half-width 0.
ConfidenceInterval confidence_interval(std::span<const double> samples, double level = 0.95);

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;  // two-sided
};

/// Welch's unequal-variance t-test. Both samples need n >= 2. When both
/// variances vanish the result is t=0, p=1 for equal means and t=+-inf, p=0
/// otherwise.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

double sample_mean(std::span<const double> x);
/// Unbiased (n-1) variance; 0 for a single sample.
double sample_variance(std::span<const double> x);

}  // namespace gems::harness
