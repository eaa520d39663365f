#include "mfw/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mfw/errors.hpp"

namespace mfw::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw ArgumentError("mean of an empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

double standard_error(std::span<const double> xs) {
  if (xs.empty()) throw ArgumentError("standard error of an empty sample");
  return std::sqrt(variance(xs) / static_cast<double>(xs.size()));
}

LinearFit ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("ols: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw ArgumentError("ols needs at least two points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ArgumentError("ols needs two distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    const double s2 = rss / static_cast<double>(n - 2);
    fit.slope_se = std::sqrt(s2 / sxx);
    fit.intercept_se = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
  }
  return fit;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

NormalityTest anderson_darling(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 8) throw ArgumentError("Anderson-Darling needs at least 8 values");
  const double m = mean(xs);
  const double sd = std::sqrt(variance(xs));
  NormalityTest out;
  if (!(sd > 0.0)) {
    // A constant sample is as far from a fitted normal as it gets.
    out.statistic = INFINITY;
    out.p_value = 0.0;
    return out;
  }
  std::vector<double> z(xs.begin(), xs.end());
  std::sort(z.begin(), z.end());
  const double nn = static_cast<double>(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = std::clamp(normal_cdf((z[i] - m) / sd), 1e-300, 1.0 - 1e-16);
    const double hi = std::clamp(normal_cdf((z[n - 1 - i] - m) / sd), 1e-300, 1.0 - 1e-16);
    s += (2.0 * static_cast<double>(i) + 1.0) * (std::log(lo) + std::log1p(-hi));
  }
  const double a2 = -nn - s / nn;
  const double a = a2 * (1.0 + 0.75 / nn + 2.25 / (nn * nn));
  out.statistic = a;
  // D'Agostino and Stephens (1986), case of estimated mean and variance.
  double p;
  if (a >= 0.6)
    p = std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
  else if (a >= 0.34)
    p = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
  else if (a >= 0.2)
    p = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
  else
    p = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
  out.p_value = std::clamp(p, 0.0, 1.0);
  return out;
}

}  // namespace mfw::stats
