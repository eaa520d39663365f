#include <doctest.h>

#include <cmath>
#include <limits>

#include "mfw/instances.hpp"
#include "mfw/oracle.hpp"
#include "mfw/solvers.hpp"

using namespace mfw;

namespace {

const BoxDomain unit(0.0, 1.0);

SolverConfig config(Variant v, int K) {
  SolverConfig cfg;
  cfg.variant = v;
  cfg.max_iters = K;
  return cfg;
}

void check_rows(const Trace& t, int K) {
  REQUIRE(t.rows.size() == static_cast<std::size_t>(K + 1));
  for (int k = 0; k <= K; ++k) CHECK(t.rows[static_cast<std::size_t>(k)].k == k);
}

}  // namespace

TEST_CASE("schedules") {
  SolverConfig cfg;
  CHECK(cfg.step(0) == 1.0);
  CHECK(cfg.step(1) == doctest::Approx(2.0 / 3.0));
  CHECK(cfg.step(0, 2.0 / 3.0) == doctest::Approx(2.0 / 3.0));
  cfg.eta_max = 0.5;
  CHECK(cfg.step(0) == 0.5);
  CHECK(cfg.step(10) == doctest::Approx(2.0 / 12.0));
  cfg.c_m = 0.5;
  std::size_t prev = 0;
  for (int k = 0; k < 50; ++k) {
    const std::size_t m = cfg.sample_size(k);
    CHECK(m == static_cast<std::size_t>(std::ceil(0.5 * (k + 2.0) * (k + 2.0))));
    CHECK(m >= prev);
    prev = m;
  }
  cfg.sample_schedule = SampleSchedule::fixed;
  cfg.fixed_m = 7;
  CHECK(cfg.sample_size(30) == 7);
  cfg.step_schedule = StepSchedule::fixed;
  cfg.fixed_eta = 0.2;
  CHECK(cfg.step(0) == 0.2);

  SolverConfig bad;
  bad.max_iters = 0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = {};
  bad.fixed_eta = 1.5;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = {};
  bad.c_m = 0.0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  CHECK(parse_variant("fc_sfw") == Variant::fc_sfw);
  CHECK_THROWS_AS(parse_variant("away_step"), ArgumentError);
}

TEST_CASE("two dFW steps by hand on calibration") {
  const auto inst = make_instance("calibration", {});
  const auto t = run_dfw(inst, dirac(Point(0.0), unit), config(Variant::dfw, 2));
  check_rows(t, 2);
  CHECK(t.rows[0].objective == doctest::Approx(0.09));
  CHECK(t.rows[1].eta == 1.0);
  CHECK((*t.rows[1].minimizer)[0] == 1.0);
  CHECK(t.rows[1].objective == doctest::Approx(0.49));
  CHECK((*t.rows[2].minimizer)[0] == 0.0);
  CHECK(t.rows[2].objective == doctest::Approx((1.0 / 3.0 - 0.3) * (1.0 / 3.0 - 0.3)).epsilon(1e-12));
  const auto& mu2 = *t.final_measure;
  CHECK(tv_distance(mu2, AtomicMeasure(unit, {Point(1.0), Point(0.0)}, {1.0 / 3.0, 2.0 / 3.0})) <= 1e-15);
  CHECK(t.rows[0].fw_gap);
  CHECK(*t.rows[0].fw_gap == doctest::Approx(0.6));
  CHECK(t.rows[2].fw_gap);  // last row always carries a gap
  CHECK_FALSE(t.rows[1].fw_gap);
}

TEST_CASE("dFW on the response-time instance picks the same atom every step") {
  const auto inst = make_instance("response_time_a", {});
  const auto t = run_dfw(inst, inst.start_measure(), config(Variant::dfw, 12));
  for (std::size_t k = 1; k < t.rows.size(); ++k)
    CHECK((*t.rows[k].minimizer)[0] == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("dFW envelope on convex instances with a smoothness constant") {
  for (const char* name : {"calibration", "doptimal"}) {
    const auto inst = make_instance(name, {});
    const double L = *inst.truth->smoothness_L, R = inst.domain.diameter();
    const auto t = run_dfw(inst, inst.start_measure(), config(Variant::dfw, 200));
    for (const auto& row : t.rows)
      if (row.k >= 1) CHECK((row.k + 2.0) * *row.obj_gap <= 2.0 * L * R * R);
  }
}

TEST_CASE("every iterate is feasible and atom counts never fall") {
  for (const char* name : {"calibration", "pmeans", "deconvolution", "nn_risk", "cre"}) {
    const auto inst = make_instance(name, {});
    auto cfg = config(Variant::dfw, 25);
    cfg.keep_iterates = true;
    const auto t = run_dfw(inst, inst.start_measure(), cfg);
    check_rows(t, 25);
    for (std::size_t k = 0; k < t.iterates.size(); ++k) {
      const auto& mu = t.iterates[k];
      CHECK(mu.weight_sum() == doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t i = 0; i < mu.size(); ++i) {
        CHECK(inst.domain.contains(mu.atom(i)));
        CHECK(mu.weight(i) >= 0.0);
      }
    }
    for (std::size_t k = 2; k < t.rows.size(); ++k) CHECK(t.rows[k].atoms >= t.rows[k - 1].atoms);
  }
}

TEST_CASE("sFW is reproducible and follows the sample schedule") {
  const auto inst = make_instance("pmeans", {{"demands", "0.25; 0.75"}});
  auto cfg = config(Variant::sfw, 20);
  cfg.seed = 99;
  cfg.c_m = 0.5;
  const auto a = run_sfw(inst, inst.start_measure(), cfg);
  const auto b = run_sfw(inst, inst.start_measure(), cfg);
  check_rows(a, 20);
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    CHECK(a.rows[k].objective == b.rows[k].objective);
    CHECK(a.rows[k].atoms == b.rows[k].atoms);
  }
  CHECK(a.rows[0].m == 0);
  for (int k = 0; k < 20; ++k)
    CHECK(a.rows[static_cast<std::size_t>(k + 1)].m == static_cast<std::size_t>(std::ceil(0.5 * (k + 2.0) * (k + 2.0))));
  cfg.replication = 1;
  const auto c = run_sfw(inst, inst.start_measure(), cfg);
  bool differs = false;
  for (std::size_t k = 0; k < a.rows.size(); ++k) differs |= a.rows[k].objective != c.rows[k].objective;
  CHECK(differs);
}

TEST_CASE("sFW decays on average on single-demand p-means") {
  const auto inst = make_instance("pmeans", {});
  double at16 = 0.0, at64 = 0.0;
  for (std::uint64_t s = 0; s < 30; ++s) {
    auto cfg = config(Variant::sfw, 64);
    cfg.seed = s;
    cfg.gap_every = 0;
    const auto t = run_sfw(inst, inst.start_measure(), cfg);
    at16 += *t.rows[16].obj_gap / 30.0;
    at64 += *t.rows[64].obj_gap / 30.0;
  }
  CHECK(at64 <= at16);
}

TEST_CASE("fixed-step run with zero-variance samples stays in the envelope") {
  const auto inst = make_instance("calibration", {{"exact_samples", "true"}});
  const double L = *inst.truth->smoothness_L, R = inst.domain.diameter();
  for (double eta : {0.1, 1.0}) {
    auto cfg = config(Variant::fixed_sfw, 100);
    cfg.fixed_eta = eta;
    cfg.fixed_m = 1;
    const auto t = run_fixed_sfw(inst, dirac(Point(0.0), unit), cfg);
    const double d1 = *t.rows[1].obj_gap;
    for (const auto& row : t.rows) {
      if (row.k < 1) continue;
      CHECK(row.eta == eta);
      CHECK(row.m == 1);
      CHECK(*row.obj_gap <= std::pow(1.0 - eta, row.k - 1) * d1 + L * R * R * eta + 1e-15);
    }
  }
}

TEST_CASE("inexact fixed-step subsolves are audited") {
  const auto inst = make_instance("pmeans", {{"demands", "0.25; 0.75"}});
  auto cfg = config(Variant::fixed_sfw, 30);
  cfg.fixed_eta = 0.1;
  cfg.fixed_m = 50;
  cfg.epsilon_tilde = 0.01;
  cfg.audit_every = 10;
  const auto t = run_fixed_sfw(inst, inst.start_measure(), cfg);
  REQUIRE(t.audits.size() == 3);
  for (const auto& a : t.audits) CHECK(a.suboptimality() >= 0.0);
}

TEST_CASE("simplex reweighting") {
  const auto inst = make_instance("calibration", {});
  FCConfig fc;
  const auto w = simplex_reweight(inst, {Point(0.0), Point(1.0)}, {0.5, 0.5}, fc);
  CHECK(w[0] == doctest::Approx(0.7).epsilon(1e-5));
  CHECK(w[1] == doctest::Approx(0.3).epsilon(1e-5));
  CHECK(simplex_reweight(inst, {Point(0.4)}, {1.0}, fc) == std::vector<double>{1.0});
  const auto same = simplex_reweight(inst, {Point(0.0), Point(1.0)}, {0.7, 0.3}, fc);
  CHECK(std::abs(same[0] - 0.7) <= 1e-10);

  // No closed-form influence: falls back to finite differences.
  ProblemInstance bare("bare", unit);
  bare.objective = inst.objective;
  const auto fd = simplex_reweight(bare, {Point(0.0), Point(1.0)}, {0.5, 0.5}, fc);
  CHECK(fd[1] == doctest::Approx(0.3).epsilon(1e-4));
}

TEST_CASE("fully corrective calibration reaches the optimum in three steps") {
  const auto inst = make_instance("calibration", {});
  const auto t = run_fully_corrective(inst, inst.start_measure(), config(Variant::fc_dfw, 3));
  CHECK(t.rows.back().objective <= 1e-10);
  CHECK_THROWS_AS(run_fully_corrective(inst, inst.start_measure(), config(Variant::dfw, 3)), ArgumentError);
}

TEST_CASE("fully corrective steps dominate plain steps") {
  for (const char* name : {"calibration", "cre", "pmeans"}) {
    const auto inst = make_instance(name, {});
    auto cfg = config(Variant::dfw, 15);
    cfg.keep_iterates = true;
    const auto plain = run_dfw(inst, inst.start_measure(), cfg);
    // Reweighting each plain iterate over its own atoms never raises J.
    for (const auto& mu : plain.iterates) {
      std::vector<Point> atoms(mu.atoms().begin(), mu.atoms().end());
      const auto w = simplex_reweight(inst, atoms, {mu.weights().begin(), mu.weights().end()}, {});
      const auto fc = AtomicMeasure::normalized(inst.domain, atoms, w);
      CHECK(objective(inst, fc) <= objective(inst, mu) + 1e-12 * (1.0 + std::abs(objective(inst, mu))));
    }
    cfg.variant = Variant::fc_dfw;
    const auto corrective = run_fully_corrective(inst, inst.start_measure(), cfg);
    CHECK(corrective.rows.back().objective <= plain.rows.back().objective + 1e-12);
  }
}

TEST_CASE("fully corrective CRE settles on the two endpoints") {
  const auto inst = make_instance("cre", {});
  const auto t = run_fully_corrective(inst, inst.start_measure(), config(Variant::fc_dfw, 50));
  const auto mu = consolidate(*t.final_measure, 1e-6, 1e-8);
  CHECK(t.rows.back().objective == doctest::Approx(-std::exp(-1.0)).epsilon(1e-6));
  CHECK(ball_mass(mu, Point(1.0), 1e-6) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-4));
}

TEST_CASE("capability mismatches") {
  const auto inst = make_instance("calibration", {});
  CHECK_THROWS_AS(run_sfw(inst, inst.start_measure(), config(Variant::sfw, 3)), CapabilityError);
  CHECK_THROWS_AS(run_solver(inst, inst.start_measure(), config(Variant::fc_sfw, 3)), CapabilityError);
  ProblemInstance bare("bare", unit);
  CHECK_THROWS_AS(run_dfw(bare, dirac(Point(0.5), unit), config(Variant::dfw, 3)), CapabilityError);
  CHECK_THROWS_AS(run_dfw(inst, dirac(Point(0.5), BoxDomain(0.0, 2.0)), config(Variant::dfw, 3)), ArgumentError);
}

TEST_CASE("an oracle failure aborts with the partial trace") {
  auto inst = make_instance("calibration", {});
  const auto inner = inst.influence;
  inst.influence = [inner](const AtomicMeasure& mu) -> ScalarField {
    if (mu.size() >= 2) return [](const Point&) { return std::numeric_limits<double>::quiet_NaN(); };
    return inner(mu);
  };
  auto cfg = config(Variant::dfw, 10);
  cfg.gap_every = 0;
  try {
    run_dfw(inst, dirac(Point(0.5), unit), cfg);
    FAIL("expected an abort");
  } catch (const SolverAborted& e) {
    CHECK(e.partial().rows.size() == 3);
    CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
  }
}
