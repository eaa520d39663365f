// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when any
// criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "mfw/harness.hpp"
#include "mfw/instances.hpp"
#include "mfw/oracle.hpp"
#include "mfw/solvers.hpp"

using namespace mfw;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = MFW_CONFIG_DIR;
const fs::path kScratch = fs::temp_directory_path() / "mfw_acceptance";

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const std::function<Verdict()>& body) {
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("error: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::printf("criterion %d: %s %s\n", n, v.pass ? "PASS" : "FAIL", v.detail.c_str());
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig config(const std::string& file) {
  ExperimentConfig cfg = load_config((kConfigs / file).string());
  cfg.output = (kScratch / fs::path(file).stem()).string();
  return cfg;
}

// Runs a shipped config and returns the named check with the wall time.
struct Timed {
  CheckResult result;
  double seconds = 0.0;
};

Timed run_check(const std::string& file, const std::string& name) {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream log;
  const ExperimentOutcome out = run_experiment(config(file), log);
  Timed t{{name, Status::fail, "check did not run: " + log.str()}, seconds_since(t0)};
  for (const auto& r : out.results)
    if (r.name == name) t.result = r;
  return t;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  fs::remove_all(kScratch);
  fs::create_directories(kScratch);

  report(1, [] {
    Verdict v{true, ""};
    for (const char* file : {"dfw_calibration.ini", "dfw_doptimal.ini"}) {
      const Timed t = run_check(file, "bound_dfw");
      const bool ok = t.result.status == Status::pass && t.seconds < 10.0;
      v.pass = v.pass && ok;
      v.detail += std::string(file) + " " + to_string(t.result.status) + fmt(" in %.1fs", t.seconds) + " [" +
                  t.result.detail + "]; ";
    }
    return v;
  });

  report(2, [] {
    const auto inst = make_instance("calibration", {});
    const BoxDomain unit(0.0, 1.0);
    SolverConfig cfg;
    cfg.max_iters = 2;
    cfg.keep_iterates = true;
    const Trace t = run_dfw(inst, dirac(Point(0.0), unit), cfg);
    const double tv1 = tv_distance(t.iterates[1], dirac(Point(1.0), unit));
    const double tv2 =
        tv_distance(t.iterates[2], AtomicMeasure(unit, {Point(1.0), Point(0.0)}, {1.0 / 3.0, 2.0 / 3.0}));
    const double J2 = t.rows[2].objective;
    const double expected = (1.0 / 3.0 - 0.3) * (1.0 / 3.0 - 0.3);
    return Verdict{tv1 <= 1e-15 && tv2 <= 1e-15 && std::abs(J2 - expected) <= 1e-9,
                   fmt("tv(mu1, d1) %.3g, tv(mu2, target) %.3g, J(mu2) %.12g", tv1, tv2, J2)};
  });

  report(3, [] {
    SolverConfig cfg;
    cfg.variant = Variant::fc_dfw;
    cfg.max_iters = 3;
    const auto cal = make_instance("calibration", {});
    const Trace c = run_fully_corrective(cal, cal.start_measure(), cfg);
    const double Jc = c.rows.back().objective;

    cfg.max_iters = 50;
    const auto cre = make_instance("cre", {});
    const Trace r = run_fully_corrective(cre, cre.start_measure(), cfg);
    const BoxDomain dom(1.0, 2.0);
    const double Jr = r.rows.back().objective;
    const double err = std::abs(Jr + std::log(2.0) / 2.0);
    const double tv = tv_distance(consolidate(*r.final_measure, 1e-6, 0.0),
                                  AtomicMeasure(dom, {Point(1.0), Point(2.0)}, {0.5, 0.5}), 1e-6);
    return Verdict{Jc <= 1e-10 && err <= 1e-3 && tv <= 0.05,
                   fmt("calibration J(mu_3) %.3g; ", Jc) +
                       fmt("CRE J(mu_50) %.6f, |J + ln2/2| %.4f, tv to half-half %.4f", Jr, err, tv) +
                       fmt(" (J on the two-point family is minimal at weight 1/e on b, J = %.6f)",
                           -std::exp(-1.0))};
  });

  report(4, [] {
    const Timed t = run_check("sfw_pmeans.ini", "bound_sfw");
    return Verdict{t.result.status == Status::pass && t.seconds < 60.0,
                   fmt("%.1fs ", t.seconds) + t.result.detail};
  });

  report(5, [] {
    // The stated envelope (1-eta)^(k-1) Delta_1 + L R^2 eta, checked row by row.
    const ExperimentConfig cfg = config("fixed_calibration.ini");
    const auto inst = make_instance(cfg.instance, cfg.instance_params);
    const Trace t = run_solver(inst, dirac(Point(0.0), inst.domain), cfg.solver);
    const double eta = cfg.solver.fixed_eta, L = *inst.truth->smoothness_L, R = inst.truth->diameter_R;
    const double d1 = *t.rows[1].obj_gap;
    double worst = -INFINITY;
    int violations = 0;
    for (const auto& row : t.rows) {
      if (row.k < 1) continue;
      const double env = std::pow(1.0 - eta, row.k - 1) * d1 + L * R * R * eta;
      worst = std::max(worst, *row.obj_gap - env);
      violations += *row.obj_gap > env;
    }
    return Verdict{violations == 0 && t.rows.size() == 501,
                   fmt("k <= 500, %.0f violations, max(Delta_k - envelope) %.4g", violations, worst)};
  });

  report(6, [] {
    const Timed t = run_check("nonconvex.ini", "gap_nonconvex");
    return Verdict{t.result.status == Status::pass, fmt("%.1fs ", t.seconds) + t.result.detail};
  });

  report(7, [] {
    const Timed t = run_check("clt_pmeans.ini", "clt");
    return Verdict{t.result.status == Status::pass && t.seconds < 300.0,
                   fmt("%.1fs ", t.seconds) + t.result.detail};
  });

  report(8, [] {
    int total = 0, failed = 0;
    std::string bad;
    auto run = [&](const ProblemInstance& inst) {
      for (const auto& r : invariant_suite(inst, 8)) {
        ++total;
        if (r.status == Status::fail) {
          ++failed;
          bad += r.name + " (" + r.detail + "); ";
        }
      }
    };
    for (const auto& name : instance_names()) run(make_instance(name, {}));
    run(make_instance("pmeans", {{"demands", "0.25; 0.75"}}));
    return Verdict{failed == 0, fmt("%.0f checks, %.0f failed", total, failed) + (bad.empty() ? "" : ": " + bad)};
  });

  report(9, [] {
    Verdict v{true, ""};
    for (const char* file : {"dfw_calibration.ini", "sfw_pmeans.ini"}) {
      std::string bytes[2];
      for (int run = 0; run < 2; ++run) {
        const fs::path out = kScratch / ("solve_" + fs::path(file).stem().string() + "_" + std::to_string(run));
        const std::string cmd = std::string("\"") + MFW_CLI + "\" solve --quiet --seed 11 --config \"" +
                                (kConfigs / file).string() + "\" --out \"" + out.string() + "\"";
        const int rc = std::system(cmd.c_str());
        if (rc != 0) return Verdict{false, std::string(file) + ": solve exited with " + std::to_string(rc)};
        bytes[run] = slurp(out / "trace.csv") + slurp(out / "measure.csv");
      }
      const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
      v.pass = v.pass && same;
      v.detail += std::string(file) + (same ? " identical" : " differs") + fmt(" (%.0f bytes); ", bytes[0].size());
    }
    return v;
  });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
