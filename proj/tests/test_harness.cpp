#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mfw/harness.hpp"
#include "mfw/instances.hpp"

using namespace mfw;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mfw_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse(
      "[instance]\nname = pmeans\ndemands = 0.25; 0.75\n"
      "[solver]\nvariant = sfw\nmax_iters = 40\nc_m = 0.5\nseed = 7\n"
      "[experiment]\nreplications = 30\nchecks = bound_sfw, invariants\ncheck_iters = 8 32\n");
  CHECK(cfg.instance == "pmeans");
  CHECK(cfg.instance_params.at("demands") == "0.25; 0.75");
  CHECK(cfg.solver.variant == Variant::sfw);
  CHECK(cfg.solver.max_iters == 40);
  CHECK(cfg.solver.c_m == 0.5);
  CHECK(cfg.solver.seed == 7);
  CHECK(cfg.replications == 30);
  CHECK(cfg.wants(CheckKind::bound_sfw));
  CHECK(cfg.wants(CheckKind::invariants));
  CHECK_FALSE(cfg.wants(CheckKind::clt));
  CHECK(cfg.check_iters == std::vector<int>{8, 32});
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config errors") {
  const std::string head = "[instance]\nname = calibration\n";
  CHECK_THROWS_AS(parse(head + "[solver]\nvariant = dfw\nmax_iter = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse(head + "[solverz]\nvariant = dfw\n"), ConfigError);
  CHECK_THROWS_AS(parse(head + "[solver]\nmax_iters = ten\n"), ConfigError);
  CHECK_THROWS_AS(parse(head + "[experiment]\nchecks = bogus\n"), ConfigError);
  CHECK_THROWS_AS(parse("[solver]\nvariant = dfw\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse("[instance]\nname = pmeans\n[solver]\nvariant = sfw\n"
                        "[experiment]\nreplications = 10\nchecks = clt\n").validate(),
                  ConfigError);
  CHECK_THROWS_AS(parse(head + "[solver]\nvariant = sfw\n[experiment]\nchecks = bound_dfw\n").validate(),
                  ConfigError);
  CHECK_THROWS_AS(parse(head + "[experiment]\nclt_sizes = 64 16\n").validate(), ConfigError);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exit");
  std::ostringstream log;
  auto write = [&](const std::string& name, const std::string& text) {
    const auto p = dir / name;
    std::ofstream(p) << text;
    return p.string();
  };
  CHECK(run_experiment(write("bad.ini", "[instance]\nname = calibration\n[solver]\nbogus = 1\n"), log) == kExitParse);
  CHECK(run_experiment((dir / "missing.ini").string(), log) == kExitParse);
  const std::string out = "output = " + (dir / "out").string() + "\n";
  CHECK(run_experiment(write("cap.ini", "[instance]\nname = calibration\n[solver]\nvariant = sfw\nmax_iters = 3\n"
                                        "[experiment]\n" + out), log) == kExitCapability);
  CHECK(run_experiment(write("ok.ini", "[instance]\nname = calibration\n[solver]\nvariant = dfw\nmax_iters = 50\n"
                                       "[experiment]\nchecks = bound_dfw\n" + out), log) == 0);
  CHECK(fs::exists(dir / "out" / "summary.csv"));
  CHECK(fs::exists(dir / "out" / "traces" / "rep_0000.csv"));
}

TEST_CASE("trace csv") {
  const auto inst = make_instance("calibration", {});
  SolverConfig cfg;
  cfg.max_iters = 3;
  cfg.seed = 5;
  const auto t = run_dfw(inst, inst.start_measure(), cfg);
  std::ostringstream os;
  write_trace_csv(os, t);
  std::istringstream lines(os.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "k,objective,obj_gap,fw_gap,atoms,eta,m,elapsed_ms,seed");
  std::getline(lines, line);
  CHECK(line == "0,0.040000000000000008,0.040000000000000008,0.20000000000000001,1,0,0,,5");
  int rows = 1;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("atomic file writes") {
  const auto dir = scratch("atomic");
  const auto path = (dir / "a.txt").string();
  write_file_atomic(path, "first\n");
  write_file_atomic(path, "second\n");
  CHECK(slurp(path) == "second\n");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  CHECK(files == 1);
}

TEST_CASE("rate fits") {
  std::vector<double> k, gap;
  for (int i = 1; i <= 100; ++i) {
    k.push_back(i);
    gap.push_back(3.0 / (i + 2.0));
  }
  const auto fit = fit_rate(k, gap);
  REQUIRE(fit.fit);
  CHECK(fit.fit->slope == doctest::Approx(-1.0).epsilon(0.1));
  CHECK_FALSE(fit.exact_at);

  // Zero from k = 3 on: exact convergence, no slope.
  std::vector<double> exact{0.5, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  std::vector<double> ks{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto e = fit_rate(ks, exact);
  REQUIRE(e.exact_at);
  CHECK(*e.exact_at == 3.0);
  // A transient zero is not exact convergence.
  std::vector<double> transient(gap.begin(), gap.begin() + 20);
  transient[5] = 0.0;
  const auto t = fit_rate(std::vector<double>(k.begin(), k.begin() + 20), transient);
  CHECK_FALSE(t.exact_at);
  CHECK(t.points == 19);

  const auto inst = make_instance("calibration", {});
  SolverConfig cfg;
  cfg.variant = Variant::fc_dfw;
  cfg.max_iters = 10;
  const auto fc = fit_rate(std::vector<Trace>{run_solver(inst, inst.start_measure(), cfg)});
  CHECK(fc.exact_at);
}

TEST_CASE("report format") {
  const std::vector<CheckResult> r{{"bound_dfw", Status::pass, "max 1.5"}, {"clt", Status::skip, ""}};
  CHECK(format_report(r) == "bound_dfw: PASS max 1.5\nclt: SKIP\n");
  CHECK(parse_check("gap_nonconvex") == CheckKind::gap_nonconvex);
  CHECK(is_statistical(CheckKind::clt));
  CHECK_FALSE(is_statistical(CheckKind::bound_dfw));
  CHECK(parse_command("audit") == Command::audit);
  CHECK_THROWS(parse_command("plot"));
}

TEST_CASE("replications do not depend on the worker count") {
  const auto inst = make_instance("pmeans", {{"demands", "0.25; 0.75"}});
  SolverConfig cfg;
  cfg.variant = Variant::sfw;
  cfg.max_iters = 12;
  cfg.gap_every = 0;
  cfg.seed = 40;
  setenv("MFW_WORKERS", "1", 1);
  const auto one = run_replications(inst, cfg, 6);
  setenv("MFW_WORKERS", "4", 1);
  const auto four = run_replications(inst, cfg, 6);
  unsetenv("MFW_WORKERS");
  REQUIRE(one.size() == 6);
  for (std::size_t r = 0; r < 6; ++r) {
    CHECK(one[r].seed == 40 + r);
    for (std::size_t k = 0; k < one[r].rows.size(); ++k) CHECK(one[r].rows[k].objective == four[r].rows[k].objective);
  }
  CHECK(one[0].rows.back().objective != one[1].rows.back().objective);
}

TEST_CASE("bound checks") {
  const auto inst = make_instance("calibration", {});
  SolverConfig cfg;
  cfg.max_iters = 100;
  const std::vector<Trace> traces{run_dfw(inst, inst.start_measure(), cfg)};
  const double L = *inst.truth->smoothness_L, R = inst.domain.diameter();
  CHECK(check_bound_dfw(inst, traces, L, R, 0.0).status == Status::pass);
  CHECK(check_bound_dfw(inst, traces, 1e-6, R, 0.0).status == Status::fail);
  CHECK(check_bound_sfw(traces, {8, 32}, L, R).status == Status::pass);
  CHECK(check_bound_sfw(traces, {500}, L, R).status == Status::skip);
}

TEST_CASE("invariant suite on calibration") {
  const auto results = invariant_suite(make_instance("calibration", {}), 3);
  CHECK(results.size() == 6);
  for (const auto& r : results) {
    INFO(r.name << " " << r.detail);
    CHECK(r.status != Status::fail);
  }
}

TEST_CASE("clt iteration coupling") {
  CHECK(clt_iterations(4096) == 64);
  CHECK(clt_iterations(4097) == 65);
  CHECK(clt_iterations(1000, 0.7) == static_cast<int>(std::ceil(std::pow(1000.0, 0.7))));
}

TEST_CASE("oracle audit flags a biased oracle") {
  auto inst = make_instance("pmeans", {{"demands", "0.25; 0.75"}});
  CHECK(oracle_audit(inst, 10, 2000, 1, 10).unbiased());
  const auto sample = inst.sample_influence;
  inst.sample_influence = [sample](const AtomicMeasure& mu) {
    const auto H = sample(mu);
    return std::function<double(const Point&, const Draw&)>(
        [H](const Point& x, const Draw& y) { return H(x, y) + 0.05; });
  };
  CHECK_FALSE(oracle_audit(inst, 10, 2000, 1, 10).unbiased());
}
