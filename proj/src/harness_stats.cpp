#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <numeric>

#include "mfw/harness.hpp"
#include "mfw/oracle.hpp"

namespace mfw {

namespace {

// Stream tags kept apart from solver iterations, which use small k.
constexpr std::uint64_t kCltEvalTag = 0xC17'0000'0000ULL;
constexpr std::uint64_t kCltVarianceTag = 0xC17'FFFF'FFFFULL;
constexpr std::uint64_t kAuditTag = 0xA0D1;

// Runs body(i) for i in [0, n) on the worker pool and rethrows the
// lowest-index failure afterwards.
template <class Body>
void parallel_for(int n, Body body) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

int worker_count() {
  if (const char* env = std::getenv("MFW_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1) return static_cast<int>(n);
  }
  return omp_get_max_threads();
}

std::vector<Trace> run_replications(const ProblemInstance& inst, const SolverConfig& cfg,
                                    int replications) {
  if (replications < 1) throw ArgumentError("replications must be >= 1");
  const AtomicMeasure mu0 = inst.start_measure();
  std::vector<Trace> out(static_cast<std::size_t>(replications));
  parallel_for(replications, [&](int r) {
    SolverConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(r);
    out[static_cast<std::size_t>(r)] = run_solver(inst, mu0, c);
  });
  return out;
}

Reference reference_optimum(const ProblemInstance& inst, const SubsolverConfig& sub) {
  Reference ref;
  if (inst.truth && inst.truth->optimal_value) {
    ref.measure = inst.truth->optimal_measure;
    ref.value = *inst.truth->optimal_value;
    ref.estimated = inst.truth->estimated;
    return ref;
  }
  if (!inst.has_influence() || !inst.has_objective() || inst.convexity != Convexity::convex)
    throw CapabilityError("instance '" + inst.name + "' has no known optimum to compare against");
  SolverConfig cfg;
  cfg.variant = Variant::fc_dfw;
  cfg.max_iters = 200;
  cfg.gap_every = 0;
  cfg.sub = sub;
  cfg.inner.inner_max_iters = 2000;
  cfg.inner.inner_gap_tol = 1e-14;
  const Trace t = run_fully_corrective(inst, inst.start_measure(), cfg);
  ref.measure = t.final_measure;
  ref.value = t.rows.back().objective;
  ref.estimated = true;
  return ref;
}

std::string RateFit::describe() const {
  char buf[160];
  if (exact_at) {
    std::snprintf(buf, sizeof buf, "exact convergence at k=%g", *exact_at);
  } else if (fit) {
    std::snprintf(buf, sizeof buf, "slope %.4g (band %.4g..%.4g, %d points)", fit->slope, band_lo,
                  band_hi, points);
  } else {
    std::snprintf(buf, sizeof buf, "no fit");
  }
  return buf;
}

RateFit fit_rate(std::span<const double> k, std::span<const double> gap, int min_points) {
  if (k.size() != gap.size()) throw ArgumentError("fit_rate: k and gap differ in length");
  // Gaps at the level of rounding noise count as exact convergence.
  constexpr double kZero = 1e-14;
  RateFit out;
  // Exact convergence means the gap stays at zero through the last k.
  std::size_t tail = k.size();
  while (tail > 0 && gap[tail - 1] <= kZero) --tail;
  if (tail < k.size()) out.exact_at = k[tail];
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < tail; ++i) {
    if (!(k[i] > 0.0) || !std::isfinite(gap[i]) || gap[i] <= kZero) continue;
    lx.push_back(std::log(k[i]));
    ly.push_back(std::log(gap[i]));
  }
  out.points = static_cast<int>(lx.size());
  if (out.exact_at) return out;
  if (out.points < min_points)
    throw ArgumentError("fit_rate needs at least " + std::to_string(min_points) +
                        " positive gaps, got " + std::to_string(out.points));
  out.fit = stats::ols(lx, ly);
  out.band_lo = out.fit->slope - 2.0 * out.fit->slope_se;
  out.band_hi = out.fit->slope + 2.0 * out.fit->slope_se;
  return out;
}

RateFit fit_rate(const std::vector<Trace>& traces, int min_points) {
  if (traces.empty()) throw ArgumentError("fit_rate: no traces");
  std::vector<double> ks, gaps;
  const std::size_t rows = traces.front().rows.size();
  for (std::size_t i = 1; i < rows; ++i) {
    double s = 0.0;
    for (const Trace& t : traces) {
      if (t.rows.size() != rows || !t.rows[i].obj_gap)
        throw ArgumentError("fit_rate: traces need optimality gaps of equal length");
      s += *t.rows[i].obj_gap;
    }
    ks.push_back(traces.front().rows[i].k);
    gaps.push_back(s / static_cast<double>(traces.size()));
  }
  return fit_rate(ks, gaps, min_points);
}

int clt_iterations(std::size_t n, double power) {
  if (!(power > 0.0 && power <= 1.0)) throw ArgumentError("iteration power must lie in (0, 1]");
  return std::max(1, static_cast<int>(std::ceil(std::pow(static_cast<double>(n), power) - 1e-9)));
}

bool CltReport::mean_ok(const CltPoint& p) const {
  if (p.se == 0.0) return std::abs(p.mean) <= 1e-12;
  return std::abs(p.mean) <= 3.0 * p.se;
}

bool CltReport::variance_ok(const CltPoint& p) const {
  if (target_variance == 0.0) return p.variance <= 1e-24;
  return std::abs(p.variance - target_variance) <= variance_tolerance * target_variance;
}

bool CltReport::normal_ok(const CltPoint& p) const {
  // A degenerate limit N(0, 0) is matched by a constant zero statistic.
  if (target_variance == 0.0 && p.variance == 0.0) return true;
  return p.normality.p_value >= significance;
}

bool CltReport::pass() const {
  if (points.empty()) return false;
  const CltPoint& last = points.back();
  return mean_ok(last) && variance_ok(last) && normal_ok(last);
}

CltReport clt_experiment(const ProblemInstance& inst, const SolverConfig& cfg,
                         std::vector<std::size_t> n_list, int replications, std::uint64_t seed,
                         std::size_t variance_draws, double iteration_power) {
  if (!inst.has_stochastic_objective())
    throw CapabilityError("instance '" + inst.name + "' has no sampled objective");
  if (n_list.empty()) throw ArgumentError("clt_experiment needs at least one sample size");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1]) throw ArgumentError("sample sizes must be strictly increasing");
  if (replications < 8) throw ArgumentError("clt_experiment needs at least 8 replications");
  if (variance_draws < 2) throw ArgumentError("variance_draws must be >= 2");

  const Reference ref = reference_optimum(inst, cfg.sub);
  if (!ref.measure) throw CapabilityError("instance '" + inst.name + "' has no optimal measure");

  CltReport report;
  report.optimal_value = ref.value;
  report.estimated_optimum = ref.estimated;
  {
    RngStream rng(seed, kCltVarianceTag, 0);
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < variance_draws; ++i) {
      const double f = inst.sample_objective(*ref.measure, inst.sampler(rng));
      const double d = f - mean;
      mean += d / static_cast<double>(i + 1);
      m2 += d * (f - mean);
    }
    report.target_variance = m2 / static_cast<double>(variance_draws - 1);
  }

  const AtomicMeasure mu0 = inst.start_measure();
  for (std::size_t n : n_list) {
    CltPoint p;
    p.n = n;
    p.iterations = clt_iterations(n, iteration_power);
    p.statistics.assign(static_cast<std::size_t>(replications), 0.0);
    std::vector<double> drift(static_cast<std::size_t>(replications), 0.0);
    parallel_for(replications, [&](int r) {
      SolverConfig c = cfg;
      c.variant = Variant::sfw;
      c.max_iters = p.iterations;
      c.gap_every = 0;
      c.seed = seed;
      c.replication = static_cast<std::uint64_t>(r);
      c.keep_iterates = false;
      c.sub.parallel = false;
      const Trace t = run_sfw(inst, mu0, c);
      RngStream rng(seed, kCltEvalTag + n, static_cast<std::uint64_t>(r));
      const double Jn = mc_objective(inst, *t.final_measure, n, rng);
      const double root_n = std::sqrt(static_cast<double>(n));
      p.statistics[static_cast<std::size_t>(r)] = root_n * (Jn - ref.value);
      if (inst.has_objective())
        drift[static_cast<std::size_t>(r)] = root_n * (objective(inst, *t.final_measure) - ref.value);
    });
    p.drift = stats::mean(drift);
    p.mean = stats::mean(p.statistics);
    p.variance = stats::variance(p.statistics);
    p.se = stats::standard_error(p.statistics);
    p.normality = stats::anderson_darling(p.statistics);
    report.points.push_back(std::move(p));
  }
  return report;
}

double OracleAuditReport::max_abs_z() const {
  double z = 0.0;
  for (const auto* tests : {&influence, &objective})
    for (const ZTest& t : *tests) z = std::max(z, std::abs(t.z));
  return z;
}

bool OracleAuditReport::unbiased() const { return max_abs_z() <= z_limit; }

bool OracleAuditReport::flat() const {
  for (std::size_t i = 0; i < c0.size(); ++i)
    for (std::size_t j = i + 1; j < c0.size(); ++j) {
      const double slack = 2.0 * std::hypot(c0[i].se, c0[j].se);
      if (std::abs(c0[i].c0 - c0[j].c0) > std::max(slack, 1e-12)) return false;
    }
  return true;
}

double OracleAuditReport::c0_hat() const {
  double c = 0.0;
  for (const C0Point& p : c0) c = std::max(c, p.c0 + 2.0 * p.se);
  return c;
}

namespace {

ZTest z_test(const std::vector<double>& xs, double exact) {
  ZTest t;
  t.estimate = stats::mean(xs);
  t.exact = exact;
  t.se = stats::standard_error(xs);
  const double diff = t.estimate - exact;
  if (t.se > 0.0)
    t.z = diff / t.se;
  else
    t.z = std::abs(diff) <= 1e-12 * (1.0 + std::abs(exact)) ? 0.0 : INFINITY;
  return t;
}

Point random_point(const BoxDomain& dom, RngStream& rng) {
  Point x = dom.lower();
  for (std::size_t c = 0; c < dom.dim(); ++c) x[c] = rng.uniform(dom.lower()[c], dom.upper()[c]);
  return x;
}

// Two-sided normal quantile at family-wise level alpha split over n tests.
double bonferroni_limit(double alpha, int n) {
  const double p = alpha / (2.0 * n);
  // Bisection on the upper tail; the tail is monotone and smooth.
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (1.0 - stats::normal_cdf(mid) > p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

OracleAuditReport oracle_audit(const ProblemInstance& inst, int pairs, std::size_t draws,
                               std::uint64_t seed, int c0_replications,
                               std::vector<std::size_t> c0_sizes) {
  if (!inst.has_stochastic_influence() || !inst.has_influence())
    throw CapabilityError("oracle audit needs exact and sampled influence oracles for '" +
                          inst.name + "'");
  if (pairs < 1 || draws < 2) throw ArgumentError("oracle audit needs pairs >= 1 and draws >= 2");

  OracleAuditReport report;
  const bool with_objective = inst.has_stochastic_objective() && inst.has_objective();
  const std::size_t P = static_cast<std::size_t>(pairs);
  report.influence.resize(P);
  if (with_objective) report.objective.resize(P);
  // Family-wise 3-sigma level over every z-test in the audit.
  const int tests = pairs * (with_objective ? 2 : 1);
  report.z_limit = bonferroni_limit(2.0 * (1.0 - stats::normal_cdf(3.0)), tests);

  parallel_for(pairs, [&](int i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i), kAuditTag);
    const AtomicMeasure mu = random_measure(inst, rng);
    const Point x = random_point(inst.domain, rng);
    const auto H = inst.sample_influence(mu);
    std::vector<double> hs(draws), fs(with_objective ? draws : 0);
    for (std::size_t j = 0; j < draws; ++j) {
      const Draw y = inst.sampler(rng);
      hs[j] = H(x, y);
      if (with_objective) fs[j] = inst.sample_objective(mu, y);
    }
    report.influence[static_cast<std::size_t>(i)] = z_test(hs, influence(inst, mu, x));
    if (with_objective) report.objective[static_cast<std::size_t>(i)] = z_test(fs, objective(inst, mu));
  });

  RngStream rng(seed, 0, kAuditTag + 1);
  const AtomicMeasure mu = random_measure(inst, rng);
  for (std::size_t m : c0_sizes) {
    const auto est = estimate_clt_constant(inst, mu, m, c0_replications, seed);
    report.c0.push_back({m, est.c0, est.se});
  }
  return report;
}

double estimate_c0_sup(const ProblemInstance& inst, std::size_t m, int replications,
                       std::uint64_t seed, int measures) {
  double best = 0.0;
  for (int i = 0; i < measures; ++i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i), kAuditTag + 2);
    const AtomicMeasure mu = i == 0 ? inst.start_measure() : random_measure(inst, rng);
    const auto est = estimate_clt_constant(inst, mu, m, replications, seed + static_cast<std::uint64_t>(i));
    best = std::max(best, est.c0 + 2.0 * est.se);
  }
  return best;
}

bool NonconvexReport::pass(double max_slope) const {
  if (points.empty()) return false;
  for (const NonconvexPoint& p : points)
    if (p.mean > p.bound + 2.0 * p.se) return false;
  return !fit || fit->slope <= max_slope;
}

NonconvexReport nonconvex_experiment(const ProblemInstance& inst, const SolverConfig& base,
                                     const std::vector<int>& horizons, int replications,
                                     double L, double c0, std::uint64_t seed) {
  if (horizons.empty()) throw ArgumentError("nonconvex_experiment needs at least one horizon");
  if (!inst.has_influence())
    throw CapabilityError("the FW gap needs the exact influence of '" + inst.name + "'");
  const Reference ref = reference_optimum(inst, base.sub);
  NonconvexReport report;
  report.L = L;
  report.c0 = c0;
  report.R = inst.truth ? inst.truth->diameter_R : 2.0;
  report.J0 = objective(inst, inst.start_measure());
  report.J_star = ref.value;
  const double drop = report.J0 - report.J_star;
  if (!(drop > 0.0)) throw ArgumentError("start measure is already optimal; nothing to measure");

  std::vector<double> lt, lg;
  for (int T : horizons) {
    NonconvexPoint p;
    p.T = T;
    p.eta = std::min(1.0, std::sqrt(2.0 * drop / (L * report.R * report.R * T)));
    SolverConfig c = base;
    c.variant = Variant::sfw;
    c.step_schedule = StepSchedule::fixed;
    c.fixed_eta = p.eta;
    c.eta_max = 1.0;
    c.sample_schedule = SampleSchedule::fixed;
    c.fixed_m = static_cast<std::size_t>(T);
    c.max_iters = T - 1;
    c.gap_every = 1;
    c.seed = seed;
    const auto traces = run_replications(inst, c, replications);
    // Averaging G over mu_0 .. mu_{T-1} is the expectation over a uniformly
    // drawn index.
    for (const Trace& t : traces) {
      double s = 0.0;
      for (const TraceRow& row : t.rows) s += *row.fw_gap;
      p.gaps.push_back(s / static_cast<double>(t.rows.size()));
    }
    p.mean = stats::mean(p.gaps);
    p.se = stats::standard_error(p.gaps);
    p.bound = report.R / std::sqrt(static_cast<double>(T)) * (c0 + std::sqrt(2.0 * L * drop));
    if (p.mean > 0.0) {
      lt.push_back(std::log(static_cast<double>(T)));
      lg.push_back(std::log(p.mean));
    }
    report.points.push_back(std::move(p));
  }
  if (lt.size() >= 2) report.fit = stats::ols(lt, lg);
  return report;
}

}  // namespace mfw
