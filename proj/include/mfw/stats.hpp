#pragma once

#include <span>

namespace mfw::stats {

double mean(std::span<const double> xs);
/// Unbiased sample variance; 0 for fewer than two values.
double variance(std::span<const double> xs);
/// Standard error of the mean.
double standard_error(std::span<const double> xs);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
};

/// Ordinary least squares y = intercept + slope * x. Needs two distinct x.
LinearFit ols(std::span<const double> x, std::span<const double> y);

struct NormalityTest {
  double statistic = 0.0;   // A^2 with the small-sample correction
  double p_value = 1.0;
};

/// Anderson-Darling test of normality with mean and variance estimated from
/// the data. Needs at least 8 values.
NormalityTest anderson_darling(std::span<const double> xs);

/// Two-sided p-value of a standard normal z statistic.
double two_sided_p(double z);

double normal_cdf(double z);

}  // namespace mfw::stats
