#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "mfw/harness.hpp"
#include "mfw/oracle.hpp"

namespace fs = std::filesystem;

namespace mfw {

const char* to_string(Status s) {
  switch (s) {
    case Status::pass: return "PASS";
    case Status::fail: return "FAIL";
    case Status::skip: return "SKIP";
  }
  return "?";
}

std::string format_report(const std::vector<CheckResult>& results) {
  std::string out;
  for (const CheckResult& r : results) {
    out += r.name + ": " + to_string(r.status);
    if (!r.detail.empty()) out += " " + r.detail;
    out += "\n";
  }
  return out;
}

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string opt(const std::optional<double>& x) { return x ? num(*x) : std::string(); }

}  // namespace

void write_trace_csv(std::ostream& os, const Trace& t) {
  os << "k,objective,obj_gap,fw_gap,atoms,eta,m,elapsed_ms,seed\n";
  for (const TraceRow& r : t.rows) {
    os << r.k << ',' << num(r.objective) << ',' << opt(r.obj_gap) << ',' << opt(r.fw_gap) << ','
       << r.atoms << ',' << num(r.eta) << ',' << r.m << ','
       << (t.timed ? num(r.elapsed_ms) : std::string()) << ',' << t.seed << '\n';
  }
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

Command parse_command(const std::string& s) {
  if (s == "solve") return Command::solve;
  if (s == "sweep") return Command::sweep;
  if (s == "clt") return Command::clt;
  if (s == "audit") return Command::audit;
  if (s == "check") return Command::check;
  throw ArgumentError("unknown command '" + s + "'");
}

namespace {

std::string trace_text(const Trace& t) {
  std::ostringstream os;
  write_trace_csv(os, t);
  return os.str();
}

std::string measure_text(const AtomicMeasure& mu) {
  std::ostringstream os;
  write_measure_csv(os, mu);
  return os.str();
}

std::string path_in(const ExperimentConfig& cfg, const std::string& name) {
  return (fs::path(cfg.output) / name).string();
}

std::string summary_text(const std::vector<Trace>& traces) {
  std::ostringstream os;
  os << "k,replications,mean_objective,se_objective,mean_obj_gap,se_obj_gap,mean_fw_gap,mean_atoms\n";
  std::size_t rows = 0;
  for (const Trace& t : traces) rows = std::max(rows, t.rows.size());
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> obj, gap, fw, atoms;
    int k = 0;
    for (const Trace& t : traces) {
      if (i >= t.rows.size()) continue;
      const TraceRow& r = t.rows[i];
      k = r.k;
      obj.push_back(r.objective);
      if (r.obj_gap) gap.push_back(*r.obj_gap);
      if (r.fw_gap) fw.push_back(*r.fw_gap);
      atoms.push_back(static_cast<double>(r.atoms));
    }
    os << k << ',' << obj.size() << ',' << num(stats::mean(obj)) << ','
       << num(stats::standard_error(obj)) << ','
       << (gap.size() == obj.size() ? num(stats::mean(gap)) : std::string()) << ','
       << (gap.size() == obj.size() ? num(stats::standard_error(gap)) : std::string()) << ','
       << (fw.size() == obj.size() ? num(stats::mean(fw)) : std::string()) << ','
       << num(stats::mean(atoms)) << '\n';
  }
  return os.str();
}

void write_traces(const ExperimentConfig& cfg, const std::vector<Trace>& traces) {
  for (std::size_t r = 0; r < traces.size(); ++r) {
    char name[64];
    std::snprintf(name, sizeof name, "traces/rep_%04zu.csv", r);
    write_file_atomic(path_in(cfg, name), trace_text(traces[r]));
  }
  write_file_atomic(path_in(cfg, "summary.csv"), summary_text(traces));
}

struct Smoothness {
  double L;
  std::string source;
};

Smoothness smoothness_for(const ProblemInstance& inst, const ExperimentConfig& cfg,
                          bool stochastic) {
  const bool have = inst.truth && inst.truth->smoothness_L;
  const bool use_truth = cfg.smoothness == SmoothnessSource::truth ||
                         (cfg.smoothness == SmoothnessSource::automatic && have && !stochastic);
  if (use_truth) {
    if (!have) throw CapabilityError("instance '" + inst.name + "' has no analytic L");
    return {*inst.truth->smoothness_L, "analytic"};
  }
  return {estimate_smoothness(inst, cfg.smoothness_pairs, cfg.solver.seed).L, "estimated"};
}

double diameter(const ProblemInstance& inst) { return inst.truth ? inst.truth->diameter_R : 2.0; }

std::string clt_csv(const CltReport& rep) {
  std::ostringstream os;
  os << "n,iterations,mean,variance,se,drift,target_variance,ad_statistic,ad_p_value,mean_ok,"
        "variance_ok,normal_ok\n";
  for (const CltPoint& p : rep.points)
    os << p.n << ',' << p.iterations << ',' << num(p.mean) << ',' << num(p.variance) << ','
       << num(p.se) << ',' << num(p.drift) << ',' << num(rep.target_variance) << ',' << num(p.normality.statistic) << ','
       << num(p.normality.p_value) << ',' << rep.mean_ok(p) << ',' << rep.variance_ok(p) << ','
       << rep.normal_ok(p) << '\n';
  return os.str();
}

CheckResult clt_result(const CltReport& rep) {
  std::string detail;
  for (const CltPoint& p : rep.points) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "n=%zu k=%d mean %.4g (se %.3g, optimization drift %.4g) var %.4g vs target %.4g, "
                  "AD p=%.3g; ",
                  p.n, p.iterations, p.mean, p.se, p.drift, p.variance, rep.target_variance,
                  p.normality.p_value);
    detail += buf;
  }
  detail += rep.estimated_optimum ? "numerical optimum" : "known optimum";
  return {"clt", rep.pass() ? Status::pass : Status::fail, detail};
}

std::string audit_csv(const OracleAuditReport& rep) {
  std::ostringstream os;
  os << "kind,index,estimate,exact,se,z\n";
  for (std::size_t i = 0; i < rep.influence.size(); ++i) {
    const ZTest& t = rep.influence[i];
    os << "influence," << i << ',' << num(t.estimate) << ',' << num(t.exact) << ',' << num(t.se)
       << ',' << num(t.z) << '\n';
  }
  for (std::size_t i = 0; i < rep.objective.size(); ++i) {
    const ZTest& t = rep.objective[i];
    os << "objective," << i << ',' << num(t.estimate) << ',' << num(t.exact) << ',' << num(t.se)
       << ',' << num(t.z) << '\n';
  }
  for (const C0Point& p : rep.c0)
    os << "c0," << p.m << ',' << num(p.c0) << ",," << num(p.se) << ",\n";
  return os.str();
}

std::vector<CheckResult> audit_results(const OracleAuditReport& rep) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "max |z| %.3f over %zu tests, limit %.3f", rep.max_abs_z(),
                rep.influence.size() + rep.objective.size(), rep.z_limit);
  std::vector<CheckResult> out{{"oracle_audit/unbiased", rep.unbiased() ? Status::pass : Status::fail, buf}};
  std::string c0;
  for (const C0Point& p : rep.c0) {
    std::snprintf(buf, sizeof buf, "m=%zu c0 %.4g (se %.3g); ", p.m, p.c0, p.se);
    c0 += buf;
  }
  out.push_back({"oracle_audit/c0_flat", rep.flat() ? Status::pass : Status::fail, c0});
  return out;
}

int exit_for(const std::vector<CheckResult>& results) {
  for (const CheckResult& r : results)
    if (r.status == Status::fail) return kExitCheckFailed;
  return 0;
}

void finish_report(const ExperimentConfig& cfg, const std::vector<CheckResult>& results,
                   std::ostream& log) {
  const std::string text = format_report(results);
  write_file_atomic(path_in(cfg, "report.txt"), text);
  log << text;
}

std::vector<CheckResult> run_checks(const ExperimentConfig& cfg, const ProblemInstance& inst,
                                    const std::vector<Trace>& traces, std::ostream& log) {
  std::vector<CheckResult> results;
  const double R = diameter(inst);
  const std::uint64_t seed = cfg.solver.seed;
  for (CheckKind kind : cfg.checks) {
    log << "running " << to_string(kind) << "\n";
    switch (kind) {
      case CheckKind::bound_dfw: {
        const Reference ref = reference_optimum(inst, cfg.solver.sub);
        const Smoothness s = smoothness_for(inst, cfg, false);
        CheckResult r = check_bound_dfw(inst, traces, s.L, R, ref.value);
        r.detail += ", L " + s.source;
        try {
          std::vector<Trace> shifted = traces;
          for (Trace& t : shifted)
            for (TraceRow& row : t.rows) row.obj_gap = row.objective - ref.value;
          r.detail += "; " + fit_rate(shifted).describe();
        } catch (const ArgumentError&) {
        }
        results.push_back(std::move(r));
        break;
      }
      case CheckKind::bound_sfw: {
        const Smoothness s = smoothness_for(inst, cfg, true);
        CheckResult r = check_bound_sfw(traces, cfg.check_iters, s.L, R);
        r.detail += " (" + s.source + ")";
        // The sample-size premise m_k >= (c0 (k+2) / (L R))^2 holds for all k iff c_m >= (c0/(LR))^2.
        const double c0 = estimate_c0_sup(inst, 64, cfg.c0_replications, seed);
        const double need = std::pow(c0 / (s.L * R), 2.0);
        char buf[160];
        std::snprintf(buf, sizeof buf, "; c0 %.4g, sample premise c_m >= %.4g %s", c0, need,
                      cfg.solver.c_m >= need ? "met" : "not met");
        r.detail += buf;
        results.push_back(std::move(r));
        results.push_back(check_as_rate(traces));
        break;
      }
      case CheckKind::bound_fixed: {
        const Smoothness s = smoothness_for(inst, cfg, false);
        const double eta = std::min(cfg.solver.fixed_eta, inst.step_cap);
        CheckResult r = check_bound_fixed(traces, eta, s.L, R);
        const double c0 = estimate_c0_sup(inst, cfg.solver.fixed_m, cfg.c0_replications, seed);
        const double need_m = std::pow(4.0 * c0 / (s.L * R * eta), 2.0);
        const double eps_cap = s.L * R * R * eta / 4.0;
        char buf[200];
        std::snprintf(buf, sizeof buf, "; L %s %.4g; m=%zu vs required %.4g (%s); eps %.3g vs cap %.3g (%s)",
                      s.source.c_str(), s.L, cfg.solver.fixed_m, need_m,
                      static_cast<double>(cfg.solver.fixed_m) >= need_m ? "met" : "not met",
                      cfg.solver.epsilon_tilde, eps_cap,
                      cfg.solver.epsilon_tilde <= eps_cap ? "met" : "not met");
        r.detail += buf;
        results.push_back(std::move(r));
        if (cfg.solver.epsilon_tilde > 0.0) {
          double worst = 0.0;
          std::size_t audits = 0;
          for (const Trace& t : traces)
            for (const InexactAudit& a : t.audits) {
              worst = std::max(worst, a.suboptimality());
              ++audits;
            }
          std::snprintf(buf, sizeof buf, "%zu audits, worst suboptimality %.3g vs eps %.3g",
                        audits, worst, cfg.solver.epsilon_tilde);
          results.push_back({"inexact_audit",
                             audits == 0 ? Status::skip
                             : worst <= cfg.solver.epsilon_tilde ? Status::pass
                                                                 : Status::fail,
                             buf});
        }
        break;
      }
      case CheckKind::gap_nonconvex: {
        const Smoothness s = smoothness_for(inst, cfg, true);
        const int T = *std::max_element(cfg.horizons.begin(), cfg.horizons.end());
        const double c0 = estimate_c0_sup(inst, static_cast<std::size_t>(T), cfg.c0_replications, seed);
        const NonconvexReport rep =
            nonconvex_experiment(inst, cfg.solver, cfg.horizons, cfg.replications, s.L, c0, seed);
        std::string detail;
        char buf[200];
        for (const NonconvexPoint& p : rep.points) {
          std::snprintf(buf, sizeof buf, "T=%d eta %.4g mean G %.4g (se %.2g) bound %.4g; ", p.T,
                        p.eta, p.mean, p.se, p.bound);
          detail += buf;
        }
        if (rep.fit) {
          std::snprintf(buf, sizeof buf, "slope %.3f; ", rep.fit->slope);
          detail += buf;
        }
        std::snprintf(buf, sizeof buf, "L %s %.4g, c0 %.4g, J0-J* %.4g", s.source.c_str(), rep.L,
                      rep.c0, rep.J0 - rep.J_star);
        detail += buf;
        results.push_back({"gap_nonconvex", rep.pass() ? Status::pass : Status::fail, detail});
        break;
      }
      case CheckKind::clt: {
        const CltReport rep = clt_experiment(inst, cfg.solver, cfg.clt_sizes, cfg.replications,
                                             seed, cfg.variance_draws, cfg.clt_iteration_power);
        write_file_atomic(path_in(cfg, "clt.csv"), clt_csv(rep));
        results.push_back(clt_result(rep));
        break;
      }
      case CheckKind::oracle_audit: {
        const OracleAuditReport rep =
            oracle_audit(inst, cfg.audit_pairs, cfg.audit_draws, seed, cfg.c0_replications);
        write_file_atomic(path_in(cfg, "audit.csv"), audit_csv(rep));
        for (auto& r : audit_results(rep)) results.push_back(std::move(r));
        break;
      }
      case CheckKind::invariants: {
        for (auto& r : invariant_suite(inst, seed)) {
          r.name = "invariants/" + r.name;
          results.push_back(std::move(r));
        }
        break;
      }
    }
  }
  return results;
}

template <class Body>
int guarded(std::ostream& log, Body body) {
  try {
    return body();
  } catch (const CapabilityError& e) {
    log << "capability error: " << e.what() << "\n";
    return kExitCapability;
  } catch (const ArgumentError& e) {
    log << "configuration error: " << e.what() << "\n";
    return kExitParse;
  } catch (const SolverAborted& e) {
    log << "solver aborted after " << e.partial().rows.size() << " rows: " << e.what() << "\n";
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
}

int solve(const ExperimentConfig& cfg, std::ostream& log) {
  const ProblemInstance inst = make_instance(cfg.instance, cfg.instance_params);
  try {
    const Trace t = run_solver(inst, inst.start_measure(), cfg.solver);
    write_file_atomic(path_in(cfg, "trace.csv"), trace_text(t));
    write_file_atomic(path_in(cfg, "measure.csv"), measure_text(*t.final_measure));
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s on %s: K=%d, J=%.10g, %zu atoms\n", to_string(cfg.solver.variant),
                  inst.name.c_str(), t.rows.back().k, t.rows.back().objective, t.rows.back().atoms);
    log << buf;
    return 0;
  } catch (const SolverAborted& e) {
    write_file_atomic(path_in(cfg, "trace.csv"), trace_text(e.partial()));
    throw;
  }
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  ExperimentOutcome out;
  out.exit_code = guarded(log, [&] {
    const ProblemInstance inst = make_instance(cfg.instance, cfg.instance_params);
    const auto traces = run_replications(inst, cfg.solver, cfg.replications);
    write_traces(cfg, traces);
    out.results = run_checks(cfg, inst, traces, log);
    finish_report(cfg, out.results, log);
    return exit_for(out.results);
  });
  return out;
}

int run_experiment(const std::string& cfg_file, std::ostream& log) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(cfg_file);
  } catch (const ArgumentError& e) {
    log << "configuration error: " << e.what() << "\n";
    return kExitParse;
  }
  return run_experiment(cfg, log).exit_code;
}

int run_command(Command cmd, const ExperimentConfig& cfg, std::ostream& log) {
  switch (cmd) {
    case Command::solve: return guarded(log, [&] { return solve(cfg, log); });
    case Command::sweep:
      return guarded(log, [&] {
        const ProblemInstance inst = make_instance(cfg.instance, cfg.instance_params);
        write_traces(cfg, run_replications(inst, cfg.solver, cfg.replications));
        log << "wrote " << cfg.replications << " traces under " << cfg.output << "\n";
        return 0;
      });
    case Command::clt:
      return guarded(log, [&] {
        const ProblemInstance inst = make_instance(cfg.instance, cfg.instance_params);
        const CltReport rep = clt_experiment(inst, cfg.solver, cfg.clt_sizes, cfg.replications,
                                             cfg.solver.seed, cfg.variance_draws,
                                             cfg.clt_iteration_power);
        write_file_atomic(path_in(cfg, "clt.csv"), clt_csv(rep));
        const std::vector<CheckResult> results{clt_result(rep)};
        finish_report(cfg, results, log);
        return exit_for(results);
      });
    case Command::audit:
      return guarded(log, [&] {
        const ProblemInstance inst = make_instance(cfg.instance, cfg.instance_params);
        const OracleAuditReport rep = oracle_audit(inst, cfg.audit_pairs, cfg.audit_draws,
                                                   cfg.solver.seed, cfg.c0_replications);
        write_file_atomic(path_in(cfg, "audit.csv"), audit_csv(rep));
        const auto results = audit_results(rep);
        finish_report(cfg, results, log);
        return exit_for(results);
      });
    case Command::check: return run_experiment(cfg, log).exit_code;
  }
  return kExitParse;
}

}  // namespace mfw
