#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfw/instances.hpp"
#include "mfw/solvers.hpp"
#include "mfw/stats.hpp"

namespace mfw {

/// Malformed or inconsistent experiment configuration.
class ConfigError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

enum class CheckKind { bound_dfw, bound_sfw, bound_fixed, gap_nonconvex, clt, oracle_audit, invariants };

const char* to_string(CheckKind c);
CheckKind parse_check(const std::string& s);
/// Checks that draw conclusions from a replication study.
bool is_statistical(CheckKind c);

/// Which smoothness constant the bound checks use. `automatic` takes the
/// instance's analytic L when it has one and estimates it otherwise, except
/// for the stochastic checks, which always estimate.
enum class SmoothnessSource { automatic, truth, estimate };

struct ExperimentConfig {
  std::string instance;
  ParamMap instance_params;
  SolverConfig solver;
  int replications = 1;
  std::string output = "mfw_out";
  std::vector<CheckKind> checks;

  std::vector<int> check_iters{8, 32, 128};
  std::vector<int> horizons{64, 256};
  std::vector<std::size_t> clt_sizes{4096};
  std::size_t variance_draws = 1000000;
  int smoothness_pairs = 200;
  int audit_pairs = 20;
  std::size_t audit_draws = 2000;
  int c0_replications = 40;
  double clt_iteration_power = 0.5;
  SmoothnessSource smoothness = SmoothnessSource::automatic;

  bool wants(CheckKind c) const;
  void validate() const;
};

/// INI text with sections [instance], [solver] and [experiment]. Unknown
/// sections or keys are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

enum class Status { pass, fail, skip };
const char* to_string(Status s);

struct CheckResult {
  std::string name;
  Status status = Status::skip;
  std::string detail;
};

/// One "NAME: PASS|FAIL|SKIP detail" line per result.
std::string format_report(const std::vector<CheckResult>& results);

/// Known optimum, or a long fully-corrective run when the instance has none.
struct Reference {
  std::optional<AtomicMeasure> measure;
  double value = 0.0;
  bool estimated = false;
};
Reference reference_optimum(const ProblemInstance& inst, const SubsolverConfig& sub = {});

/// Slope of log(mean gap) against log(k).
struct RateFit {
  std::optional<stats::LinearFit> fit;
  /// First k from which the gap stays at zero, when it does.
  std::optional<double> exact_at;
  int points = 0;
  double band_lo = 0.0, band_hi = 0.0;  // slope +- 2 SE
  std::string describe() const;
};
RateFit fit_rate(std::span<const double> k, std::span<const double> gap, int min_points = 8);
/// Mean obj_gap over traces at every k >= 1.
RateFit fit_rate(const std::vector<Trace>& traces, int min_points = 8);

struct CltPoint {
  std::size_t n = 0;
  int iterations = 0;
  std::vector<double> statistics;  // sqrt(n) (J_n(mu_n) - J*) per replication
  double mean = 0.0, variance = 0.0, se = 0.0;
  /// Mean of sqrt(n) (J(mu_n) - J*), the part of the statistic's mean that
  /// the optimization error contributes.
  double drift = 0.0;
  stats::NormalityTest normality;
};

struct CltReport {
  std::vector<CltPoint> points;
  double target_variance = 0.0;
  double optimal_value = 0.0;
  bool estimated_optimum = false;
  double significance = 0.01;
  double variance_tolerance = 0.2;

  bool mean_ok(const CltPoint& p) const;
  bool variance_ok(const CltPoint& p) const;
  bool normal_ok(const CltPoint& p) const;
  bool pass() const;
};

/// k(n) = ceil(n^power) sFW iterations before J_n is taken with n fresh
/// draws; power 0.5 by default.
int clt_iterations(std::size_t n, double power = 0.5);

CltReport clt_experiment(const ProblemInstance& inst, const SolverConfig& cfg,
                         std::vector<std::size_t> n_list, int replications, std::uint64_t seed,
                         std::size_t variance_draws = 1000000, double iteration_power = 0.5);

struct ZTest {
  double estimate = 0.0, exact = 0.0, se = 0.0, z = 0.0;
};

struct C0Point {
  std::size_t m = 0;
  double c0 = 0.0, se = 0.0;
};

struct OracleAuditReport {
  std::vector<ZTest> influence;
  std::vector<ZTest> objective;
  std::vector<C0Point> c0;
  double z_limit = 3.0;

  double max_abs_z() const;
  bool unbiased() const;
  /// The c0 estimates agree pairwise within 2 combined standard errors.
  bool flat() const;
  double c0_hat() const;  // largest estimate plus 2 SE
};

OracleAuditReport oracle_audit(const ProblemInstance& inst, int pairs, std::size_t draws,
                               std::uint64_t seed, int c0_replications = 40,
                               std::vector<std::size_t> c0_sizes = {16, 64, 256});

/// sup over random measures of the c0 estimate at m, plus 2 SE.
double estimate_c0_sup(const ProblemInstance& inst, std::size_t m, int replications,
                       std::uint64_t seed, int measures = 4);

/// Closed-form checks on one instance: finite-difference influence, zero
/// mean of h_mu under mu, optimality certificate, smooth inequality,
/// Monte Carlo unbiasedness and measure normalization.
std::vector<CheckResult> invariant_suite(const ProblemInstance& inst, std::uint64_t seed);

/// Deterministic bound, one trace: (k + 2) Delta_k <= 2 L R^2 for k >= 1.
CheckResult check_bound_dfw(const ProblemInstance& inst, const std::vector<Trace>& traces,
                            double L, double R, double optimal_value);
/// Replication means at each k in `at`: mean Delta_k <= 4 L R^2 / (k + 2) + 2 SE.
CheckResult check_bound_sfw(const std::vector<Trace>& traces, const std::vector<int>& at, double L,
                            double R);
/// k^0.9 Delta_k at 512 no larger than at 64 on at least 80% of traces.
CheckResult check_as_rate(const std::vector<Trace>& traces);
/// Delta_k <= (1-eta)^(k-1) Delta_1 + (1 - (1-eta)^(k-1)) L R^2 eta for every
/// k >= 1 (means + 2 SE when the traces differ).
CheckResult check_bound_fixed(const std::vector<Trace>& traces, double eta, double L, double R);

struct NonconvexPoint {
  int T = 0;
  double eta = 0.0;
  std::vector<double> gaps;  // per replication, mean of G over mu_0..mu_{T-1}
  double mean = 0.0, se = 0.0, bound = 0.0;
};
struct NonconvexReport {
  std::vector<NonconvexPoint> points;
  double L = 0.0, c0 = 0.0, J0 = 0.0, J_star = 0.0, R = 2.0;
  std::optional<stats::LinearFit> fit;
  bool pass(double max_slope = -0.4) const;
};
/// Runs sFW with eta = sqrt(2 (J0 - J*) / (L R^2 T)) and m = T for each T.
NonconvexReport nonconvex_experiment(const ProblemInstance& inst, const SolverConfig& base,
                                     const std::vector<int>& horizons, int replications,
                                     double L, double c0, std::uint64_t seed);

/// k,objective,obj_gap,fw_gap,atoms,eta,m,elapsed_ms,seed with %.17g numbers.
void write_trace_csv(std::ostream& os, const Trace& t);
/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

/// Worker count from MFW_WORKERS, else the OpenMP default.
int worker_count();

/// Runs `replications` seeds of the configured solver in parallel; results
/// are ordered by replication index.
std::vector<Trace> run_replications(const ProblemInstance& inst, const SolverConfig& cfg,
                                    int replications);

struct ExperimentOutcome {
  std::vector<CheckResult> results;
  int exit_code = 0;
};

inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitCapability = 3;

/// Traces, summary, and the requested checks; artifacts under cfg.output.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, std::ostream& log);
/// Loads the file first; parse errors give exit 2, capability errors exit 3.
int run_experiment(const std::string& cfg_file, std::ostream& log);

/// solve: one run, trace.csv and measure.csv. sweep: every replication plus
/// summary.csv. clt, audit: the corresponding study. check: run_experiment.
enum class Command { solve, sweep, clt, audit, check };
Command parse_command(const std::string& s);
int run_command(Command cmd, const ExperimentConfig& cfg, std::ostream& log);

}  // namespace mfw
