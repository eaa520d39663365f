#include <doctest.h>

#include <cmath>
#include <vector>

#include "mfw/rng.hpp"
#include "mfw/stats.hpp"

using namespace mfw;

TEST_CASE("moments") {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  CHECK(stats::mean(xs) == 2.5);
  CHECK(stats::variance(xs) == doctest::Approx(5.0 / 3.0));
  CHECK(stats::standard_error(xs) == doctest::Approx(std::sqrt(5.0 / 12.0)));
  CHECK(stats::variance(std::vector<double>{7.0}) == 0.0);
}

TEST_CASE("least squares") {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0}, y{1.0, 3.0, 5.0, 7.0};
  const auto fit = stats::ols(x, y);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.slope_se == doctest::Approx(0.0).epsilon(1e-12));

  // Noisy line: the true slope lies within a few standard errors.
  RngStream rng(1);
  std::vector<double> xs, ys;
  for (int i = 0; i < 200; ++i) {
    xs.push_back(i / 20.0);
    ys.push_back(-0.7 * xs.back() + 0.3 + 0.1 * rng.normal());
  }
  const auto noisy = stats::ols(xs, ys);
  CHECK(std::abs(noisy.slope + 0.7) <= 4.0 * noisy.slope_se);
  CHECK(noisy.slope_se > 0.0);
  CHECK_THROWS(stats::ols(std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 1.0}));
}

TEST_CASE("normal tail probabilities") {
  CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(stats::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(stats::two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(stats::two_sided_p(-3.0) == doctest::Approx(0.0026997960632601866).epsilon(1e-10));
}

TEST_CASE("Anderson-Darling separates normal from skewed samples") {
  int rejected_normal = 0, rejected_exp = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    RngStream rng(2, s);
    std::vector<double> n, e;
    for (int i = 0; i < 200; ++i) {
      n.push_back(3.0 + 2.0 * rng.normal());
      e.push_back(-std::log(1.0 - rng.uniform()));
    }
    rejected_normal += stats::anderson_darling(n).p_value < 0.01;
    rejected_exp += stats::anderson_darling(e).p_value < 0.01;
  }
  CHECK(rejected_normal <= 3);
  CHECK(rejected_exp == 50);
  const auto flat = stats::anderson_darling(std::vector<double>(10, 1.0));
  CHECK(flat.p_value == 0.0);
  CHECK_THROWS(stats::anderson_darling(std::vector<double>{1.0, 2.0, 3.0}));
}

TEST_CASE("Anderson-Darling statistic on a fixed sample") {
  // Symmetric normal scores give a small A^2 and a large p-value.
  const std::vector<double> xs{-1.534, -0.887, -0.489, -0.157, 0.157, 0.489, 0.887, 1.534};
  const auto t = stats::anderson_darling(xs);
  CHECK(t.statistic < 0.2);
  CHECK(t.p_value > 0.5);
}
