#include <doctest.h>

#include <cmath>
#include <vector>

#include "mfw/instances.hpp"
#include "mfw/oracle.hpp"
#include "mfw/stats.hpp"

using namespace mfw;

namespace {

ProblemInstance calibration() { return make_instance("calibration", {}); }
ProblemInstance pmeans_single() { return make_instance("pmeans", {}); }
ProblemInstance pmeans_pair() { return make_instance("pmeans", {{"demands", "0.25; 0.75"}}); }

const BoxDomain unit(0.0, 1.0);

}  // namespace

TEST_CASE("calibration oracles at the origin Dirac") {
  const auto inst = calibration();
  const auto d0 = dirac(Point(0.0), unit);
  CHECK(objective(inst, d0) == doctest::Approx(0.09).epsilon(1e-15));
  for (double x : {0.0, 0.25, 1.0}) CHECK(influence(inst, d0, Point(x)) == doctest::Approx(-0.6 * x));
  // J is quadratic along the segment, so the quotient is exact up to rounding.
  CHECK(fd_influence(inst, d0, Point(1.0), 1e-4) == doctest::Approx(-0.6 + 1e-4).epsilon(1e-9));
  CHECK(von_mises(inst, d0, dirac(Point(1.0), unit)) == doctest::Approx(-0.6));
  CHECK(fw_gap(inst, d0) == doctest::Approx(0.6).epsilon(1e-12));
  const auto opt = AtomicMeasure(unit, {Point(1.0), Point(0.0)}, {0.3, 0.7});
  CHECK(objective(inst, opt) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(fw_gap(inst, opt) <= 1e-6);
}

TEST_CASE("missing oracles raise capability errors") {
  const auto inst = calibration();
  RngStream rng(1);
  const auto d0 = dirac(Point(0.0), unit);
  CHECK_THROWS_AS(mc_influence(inst, d0, Point(0.5), 10, rng), CapabilityError);
  CHECK_THROWS_AS(mc_objective(inst, d0, 10, rng), CapabilityError);
  ProblemInstance bare("bare", unit);
  CHECK_THROWS_AS(objective(bare, d0), CapabilityError);
  CHECK_THROWS_AS(influence(bare, d0, Point(0.5)), CapabilityError);
  CHECK_THROWS_AS(mc_influence(pmeans_single(), d0, Point(0.5), 0, rng), ArgumentError);
}

TEST_CASE("p-means closed forms") {
  const auto inst = pmeans_single();
  CHECK(objective(inst, dirac(Point(0.5), unit)) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(objective(inst, dirac(Point(0.0), unit)) ==
        doctest::Approx(0.5 + 0.5 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(fw_gap(inst, dirac(Point(0.5), unit)) <= 1e-6);
}

TEST_CASE("p-means Monte Carlo objective is unbiased") {
  const auto inst = pmeans_single();
  for (double at : {0.0, 0.5}) {
    const auto mu = dirac(Point(at), unit);
    RngStream rng(7, static_cast<std::uint64_t>(at * 10));
    std::vector<double> f;
    for (int j = 0; j < 100000; ++j) f.push_back(mc_objective(inst, mu, 1, rng));
    // F is constant at the optimum, so allow rounding on top of 3 SE.
    CHECK(std::abs(stats::mean(f) - objective(inst, mu)) <= 3.0 * stats::standard_error(f) + 1e-12);
  }
}

TEST_CASE("p-means Monte Carlo influence is unbiased") {
  const auto inst = pmeans_pair();
  const auto mu = AtomicMeasure(unit, {Point(0.1), Point(0.6)}, {0.3, 0.7});
  for (double x : {0.0, 0.3, 0.8}) {
    RngStream rng(8, static_cast<std::uint64_t>(x * 10));
    std::vector<double> h;
    for (int j = 0; j < 100000; ++j) h.push_back(mc_influence(inst, mu, Point(x), 1, rng));
    const double z = (stats::mean(h) - influence(inst, mu, Point(x))) / stats::standard_error(h);
    CHECK(std::abs(z) <= 3.0);
  }
}

TEST_CASE("Monte Carlo oracles are reproducible and average single draws") {
  const auto inst = pmeans_pair();
  const auto mu = AtomicMeasure(unit, {Point(0.2), Point(0.9)}, {0.5, 0.5});
  RngStream a(3, 1, 2), b(3, 1, 2);
  CHECK(mc_influence(inst, mu, Point(0.4), 50, a) == mc_influence(inst, mu, Point(0.4), 50, b));
  CHECK(mc_objective(inst, mu, 50, a) == mc_objective(inst, mu, 50, b));

  RngStream c(4), d(4);
  const Draw y = draw_batch(inst, 1, c).front();
  CHECK(mc_influence(inst, mu, Point(0.4), 1, d) == inst.sample_influence(mu)(Point(0.4), y));
  RngStream e(4), g(4);
  const Draw y2 = draw_batch(inst, 1, e).front();
  CHECK(mc_objective(inst, mu, 1, g) == inst.sample_objective(mu, y2));
}

TEST_CASE("frozen sample influence") {
  const auto inst = pmeans_pair();
  const auto mu = AtomicMeasure(unit, {Point(0.2), Point(0.9)}, {0.5, 0.5});
  RngStream rng(12);
  const auto batch = draw_batch(inst, 40, rng);
  const auto H = mc_influence_fn(inst, mu, batch);
  for (double x : {0.0, 0.31, 0.77}) CHECK(H(Point(x)) == H(Point(x)));

  // Batch fast path agrees with the generic per-draw average.
  const auto per_draw = inst.sample_influence(mu);
  for (double x : {0.0, 0.12, 0.31, 0.5, 0.77, 1.0}) {
    double s = 0.0;
    for (const Draw& y : batch) s += per_draw(Point(x), y);
    CHECK(H(Point(x)) == doctest::Approx(s / 40.0).epsilon(1e-12));
  }

  // Piecewise constant: changes only where |l_i - x| crosses a draw.
  std::vector<double> breaks;
  for (double l : {0.25, 0.75})
    for (const Draw& y : batch) {
      breaks.push_back(l - y[0]);
      breaks.push_back(l + y[0]);
    }
  std::sort(breaks.begin(), breaks.end());
  int checked = 0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = std::max(0.0, breaks[i]), hi = std::min(1.0, breaks[i + 1]);
    if (hi - lo < 1e-6) continue;
    const double a = lo + 0.25 * (hi - lo), b = lo + 0.75 * (hi - lo);
    CHECK(H(Point(a)) == doctest::Approx(H(Point(b))).epsilon(1e-12));
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("frozen sample influence is unbiased over batches") {
  const auto inst = pmeans_pair();
  const auto mu = AtomicMeasure(unit, {Point(0.1), Point(0.6)}, {0.3, 0.7});
  std::vector<double> v;
  for (std::uint64_t r = 0; r < 4000; ++r) {
    RngStream rng(13, 0, r);
    v.push_back(mc_influence_fn(inst, mu, 8, rng)(Point(0.45)));
  }
  const double z = (stats::mean(v) - influence(inst, mu, Point(0.45))) / stats::standard_error(v);
  CHECK(std::abs(z) <= 3.0);
}

TEST_CASE("variance of the sample objective falls as 1/m") {
  const auto inst = pmeans_pair();
  const auto mu = AtomicMeasure(unit, {Point(0.1), Point(0.6)}, {0.3, 0.7});
  std::vector<double> logm, logv;
  for (std::size_t m : {4, 16, 64, 256}) {
    std::vector<double> j;
    for (std::uint64_t r = 0; r < 2000; ++r) {
      RngStream rng(14, m, r);
      j.push_back(mc_objective(inst, mu, m, rng));
    }
    logm.push_back(std::log(static_cast<double>(m)));
    logv.push_back(std::log(stats::variance(j)));
  }
  CHECK(stats::ols(logm, logv).slope == doctest::Approx(-1.0).epsilon(0.1));
}

TEST_CASE("von Mises derivative") {
  const auto inst = pmeans_pair();
  RngStream rng(15);
  for (int r = 0; r < 20; ++r) {
    const auto mu = random_measure(inst, rng);
    const auto nu = random_measure(inst, rng);
    CHECK(std::abs(von_mises(inst, mu, mu)) <= 1e-8);
    // Convexity: J(nu) >= J(mu) + J'_mu(nu - mu).
    CHECK(objective(inst, nu) >= objective(inst, mu) + von_mises(inst, mu, nu) - 1e-10);
    CHECK(fw_gap(inst, mu) >= 0.0);
  }
}

TEST_CASE("finite differences converge to the influence") {
  const auto inst = pmeans_pair();
  RngStream rng(16);
  const auto mu = random_measure(inst, rng);
  for (double x : {0.05, 0.4, 0.95}) {
    const double h = influence(inst, mu, Point(x));
    const double e2 = std::abs(fd_influence(inst, mu, Point(x), 1e-2) - h);
    const double e4 = std::abs(fd_influence(inst, mu, Point(x), 1e-4) - h);
    CHECK(e4 <= 0.05 * e2 + 1e-9);
  }
  CHECK_THROWS_AS(fd_influence(inst, mu, Point(0.5), 0.0), ArgumentError);
  CHECK_THROWS_AS(fd_influence(inst, mu, Point(0.5), 0.6), ArgumentError);
}

TEST_CASE("exact oracles wrapped as stochastic have no sampling error") {
  const auto inst = exact_as_stochastic(calibration());
  REQUIRE(inst.has_stochastic_influence());
  const auto d0 = dirac(Point(0.0), unit);
  RngStream rng(17);
  CHECK(mc_influence(inst, d0, Point(0.7), 5, rng) == doctest::Approx(-0.42));
  CHECK(mc_objective(inst, d0, 5, rng) == doctest::Approx(0.09));
  CHECK(estimate_clt_constant(inst, d0, 16, 5, 1).c0 <= 1e-12);
}

TEST_CASE("smoothness estimate is below the analytic constant on calibration") {
  const auto inst = calibration();
  const auto est = estimate_smoothness(inst, 100, 18, 1.0);
  CHECK(est.pairs_used > 0);
  CHECK(est.raw_ratio <= *inst.truth->smoothness_L * (1.0 + 1e-9));
  CHECK(est.raw_ratio > 0.0);
}
