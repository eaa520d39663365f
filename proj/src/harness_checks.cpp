#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "mfw/harness.hpp"
#include "mfw/oracle.hpp"

namespace mfw {

namespace {

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

CheckResult result(std::string name, bool ok, std::string detail) {
  return {std::move(name), ok ? Status::pass : Status::fail, std::move(detail)};
}

// Random measures the oracles can evaluate, i.e. with a finite objective.
std::vector<AtomicMeasure> sample_measures(const ProblemInstance& inst, int count,
                                           std::uint64_t seed, std::uint64_t tag) {
  std::vector<AtomicMeasure> out;
  for (std::uint64_t i = 0; out.size() < static_cast<std::size_t>(count) && i < 20u * count; ++i) {
    RngStream rng(seed, i, tag);
    AtomicMeasure mu = random_measure(inst, rng);
    try {
      if (std::isfinite(objective(inst, mu))) out.push_back(std::move(mu));
    } catch (const SingularityError&) {
    }
  }
  if (out.empty()) throw Error("no random measure with a finite objective on '" + inst.name + "'");
  return out;
}

Point random_point(const BoxDomain& dom, RngStream& rng) {
  Point x = dom.lower();
  for (std::size_t c = 0; c < dom.dim(); ++c) x[c] = rng.uniform(dom.lower()[c], dom.upper()[c]);
  return x;
}

bool valid_measure(const AtomicMeasure& mu, const BoxDomain& dom) {
  double s = 0.0;
  for (double w : mu.weights()) {
    if (!(w >= 0.0)) return false;
    s += w;
  }
  for (const Point& x : mu.atoms())
    if (!dom.contains(x)) return false;
  return std::abs(s - 1.0) <= 1e-12;
}

CheckResult fd_check(const ProblemInstance& inst, const std::vector<AtomicMeasure>& mus,
                     std::uint64_t seed) {
  // The difference quotient is biased by O(t): shrinking t by 100 must shrink
  // the error roughly as much, down to rounding.
  double worst_ratio = 0.0;
  int evaluated = 0;
  bool ok = true;
  for (std::size_t i = 0; i < mus.size(); ++i) {
    RngStream rng(seed, i, 0xFD);
    for (int j = 0; j < 2; ++j) {
      const Point x = random_point(inst.domain, rng);
      const double h = influence(inst, mus[i], x);
      if (!std::isfinite(h)) continue;
      const double J = objective(inst, mus[i]);
      const double e_big = std::abs(fd_influence(inst, mus[i], x, 1e-2) - h);
      const double e_small = std::abs(fd_influence(inst, mus[i], x, 1e-4) - h);
      const double floor = 1e-7 * (1.0 + std::abs(h) + std::abs(J));
      ++evaluated;
      if (e_small > 0.05 * e_big + floor) ok = false;
      if (e_big > floor) worst_ratio = std::max(worst_ratio, e_small / e_big);
    }
  }
  return result("fd_influence", ok && evaluated > 0,
                fmt("%d points, worst error ratio t=1e-4 vs 1e-2: %.3g", evaluated, worst_ratio));
}

CheckResult zero_mean_check(const ProblemInstance& inst, const std::vector<AtomicMeasure>& mus) {
  double worst = 0.0;
  bool ok = true;
  for (const AtomicMeasure& mu : mus) {
    const ScalarField h = inst.influence(mu);
    double s = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double v = h(mu.atom(i));
      s += mu.weight(i) * v;
      scale = std::max(scale, std::abs(v));
    }
    worst = std::max(worst, std::abs(s) / scale);
    if (!(std::abs(s) <= 1e-8 * scale)) ok = false;
  }
  return result("zero_mean", ok, fmt("%zu measures, worst |int h dmu| / scale %.3g", mus.size(), worst));
}

CheckResult certificate_check(const ProblemInstance& inst) {
  if (!inst.truth || !inst.truth->optimal_measure)
    return {"certificate", Status::skip, "no known optimal measure"};
  const AtomicMeasure& star = *inst.truth->optimal_measure;
  const double J = objective(inst, star);
  const double tol = 1e-7 * (1.0 + std::abs(J));
  SubsolverConfig fine;
  fine.grid_points_per_dim = inst.domain.dim() == 1 ? 1025 : 65;
  const double G = fw_gap(inst, star, fine);
  bool ok = G <= tol;
  std::string detail = fmt("G(mu*) = %.3g", G);
  if (inst.truth->optimal_value) {
    const double dv = std::abs(J - *inst.truth->optimal_value);
    detail += fmt(", |J(mu*) - J*| = %.3g", dv);
    if (dv > 1e-9 * (1.0 + std::abs(J))) ok = false;
  }
  // Complementary slackness: h vanishes on the support of mu*.
  const ScalarField h = inst.influence(star);
  double slack = 0.0;
  for (std::size_t i = 0; i < star.size(); ++i)
    if (star.weight(i) > 0.0) slack = std::max(slack, std::abs(h(star.atom(i))));
  detail += fmt(", max |h| on support %.3g", slack);
  if (slack > tol) ok = false;
  if (inst.truth->estimated) detail += " (numerical optimum)";
  return result("certificate", ok, detail);
}

CheckResult smooth_inequality_check(const ProblemInstance& inst, std::uint64_t seed) {
  if (inst.convexity != Convexity::convex)
    return {"smooth_inequality", Status::skip, std::string("convexity ") + to_string(inst.convexity)};
  double L;
  std::string source;
  if (inst.truth && inst.truth->smoothness_L) {
    L = *inst.truth->smoothness_L;
    source = "analytic";
  } else {
    L = estimate_smoothness(inst, 100, seed).L;
    source = "estimated";
  }
  const auto mus = sample_measures(inst, 40, seed, 0x51);
  int used = 0;
  double worst_low = 0.0, worst_high = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i + 1 < mus.size(); i += 2) {
    const AtomicMeasure& mu = mus[i];
    const AtomicMeasure& nu = mus[i + 1];
    if (inst.smoothness_region && !(inst.smoothness_region(mu) && inst.smoothness_region(nu)))
      continue;
    const double Jmu = objective(inst, mu), Jnu = objective(inst, nu);
    const double rem = Jnu - Jmu - von_mises(inst, mu, nu);
    const double tv = tv_distance(mu, nu);
    const double tol = 1e-9 * (1.0 + std::abs(Jmu) + std::abs(Jnu));
    const double upper = 0.5 * L * tv * tv;
    worst_low = std::min(worst_low, rem);
    if (upper > 0.0) worst_high = std::max(worst_high, rem / upper);
    if (rem < -tol || rem > upper + tol) ok = false;
    ++used;
  }
  if (used == 0) return {"smooth_inequality", Status::skip, "no pairs inside the smoothness region"};
  return result("smooth_inequality", ok,
                fmt("%d pairs, L=%.4g (%s), min remainder %.3g, max remainder/(L tv^2/2) %.3g",
                    used, L, source.c_str(), worst_low, worst_high));
}

CheckResult unbiasedness_check(const ProblemInstance& inst, std::uint64_t seed) {
  if (!inst.has_stochastic_influence())
    return {"mc_unbiased", Status::skip, "no Monte Carlo oracle"};
  const auto audit = oracle_audit(inst, 20, 2000, seed, 2, {});
  return result("mc_unbiased", audit.unbiased(),
                fmt("max |z| %.3f over %zu tests, limit %.3f", audit.max_abs_z(),
                    audit.influence.size() + audit.objective.size(), audit.z_limit));
}

CheckResult normalization_check(const ProblemInstance& inst, const std::vector<AtomicMeasure>& mus,
                                std::uint64_t seed) {
  const BoxDomain& dom = inst.domain;
  int checked = 0;
  bool ok = true;
  auto check = [&](const AtomicMeasure& mu) {
    ++checked;
    if (!valid_measure(mu, dom)) ok = false;
  };
  RngStream rng(seed, 0, 0x40);
  for (std::size_t i = 0; i < mus.size(); ++i) {
    const AtomicMeasure& mu = mus[i];
    const AtomicMeasure& nu = mus[(i + 1) % mus.size()];
    check(mu);
    check(mix(mu, nu, rng.uniform()));
    check(mix(mu, dirac(random_point(dom, rng), dom), rng.uniform()));
    check(consolidate(mix(mu, nu, 0.5), 1e-3, 0.05));
  }
  SolverConfig cfg;
  cfg.max_iters = 8;
  cfg.gap_every = 0;
  cfg.keep_iterates = true;
  cfg.seed = seed;
  for (Variant v : {Variant::dfw, Variant::sfw, Variant::fc_dfw}) {
    if (v == Variant::sfw && !inst.has_stochastic_influence()) continue;
    cfg.variant = v;
    const Trace t = run_solver(inst, inst.start_measure(), cfg);
    for (const AtomicMeasure& mu : t.iterates) check(mu);
  }
  return result("normalization", ok, fmt("%d measures checked", checked));
}

}  // namespace

std::vector<CheckResult> invariant_suite(const ProblemInstance& inst, std::uint64_t seed) {
  std::vector<CheckResult> out;
  auto guarded = [&](const char* name, const std::function<CheckResult()>& run) {
    try {
      CheckResult r = run();
      r.name = inst.name + "/" + r.name;
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      out.push_back({inst.name + "/" + name, Status::fail, std::string("error: ") + e.what()});
    }
  };
  const auto mus = sample_measures(inst, 6, seed, 0x1A);
  guarded("fd_influence", [&] { return fd_check(inst, mus, seed); });
  guarded("zero_mean", [&] { return zero_mean_check(inst, mus); });
  guarded("certificate", [&] { return certificate_check(inst); });
  guarded("smooth_inequality", [&] { return smooth_inequality_check(inst, seed); });
  guarded("mc_unbiased", [&] { return unbiasedness_check(inst, seed); });
  guarded("normalization", [&] { return normalization_check(inst, mus, seed); });
  return out;
}

CheckResult check_bound_dfw(const ProblemInstance& inst, const std::vector<Trace>& traces,
                            double L, double R, double optimal_value) {
  if (inst.convexity != Convexity::convex)
    return {"bound_dfw", Status::skip, "bound assumes a convex objective"};
  const double bound = 2.0 * L * R * R;
  double worst = -INFINITY;
  int worst_k = 0;
  std::size_t rows = 0;
  for (const Trace& t : traces)
    for (const TraceRow& row : t.rows) {
      if (row.k < 1) continue;
      const double v = (row.k + 2.0) * (row.objective - optimal_value);
      ++rows;
      if (v > worst) {
        worst = v;
        worst_k = row.k;
      }
    }
  if (rows == 0) return {"bound_dfw", Status::skip, "no iterations"};
  const bool ok = worst <= bound * (1.0 + 1e-12) + 1e-15;
  return result("bound_dfw", ok,
                fmt("max (k+2)*gap = %.6g at k=%d, 2LR^2 = %.6g (L=%.6g, R=%g)", worst, worst_k,
                    bound, L, R));
}

namespace {

// Mean and standard error of obj_gap at iteration k across traces.
bool gap_stats(const std::vector<Trace>& traces, int k, double& mean, double& se) {
  std::vector<double> v;
  for (const Trace& t : traces) {
    if (k >= static_cast<int>(t.rows.size()) || !t.rows[static_cast<std::size_t>(k)].obj_gap)
      return false;
    v.push_back(*t.rows[static_cast<std::size_t>(k)].obj_gap);
  }
  mean = stats::mean(v);
  se = stats::standard_error(v);
  return true;
}

}  // namespace

CheckResult check_bound_sfw(const std::vector<Trace>& traces, const std::vector<int>& at, double L,
                            double R) {
  std::string detail;
  bool ok = true;
  int tested = 0;
  for (int k : at) {
    double mean, se;
    if (!gap_stats(traces, k, mean, se)) continue;
    const double bound = 4.0 * L * R * R / (k + 2.0);
    if (mean > bound + 2.0 * se) ok = false;
    ++tested;
    detail += fmt("k=%d mean %.4g se %.2g bound %.4g; ", k, mean, se, bound);
  }
  if (tested == 0) return {"bound_sfw", Status::skip, "no requested iteration within the traces"};
  detail += fmt("%zu seeds, L=%.4g", traces.size(), L);
  return result("bound_sfw", ok, detail);
}

CheckResult check_as_rate(const std::vector<Trace>& traces) {
  int good = 0, total = 0;
  for (const Trace& t : traces) {
    if (t.rows.size() <= 512 || !t.rows[512].obj_gap || !t.rows[64].obj_gap) continue;
    ++total;
    if (std::pow(512.0, 0.9) * *t.rows[512].obj_gap <= std::pow(64.0, 0.9) * *t.rows[64].obj_gap)
      ++good;
  }
  if (total == 0) return {"as_rate", Status::skip, "needs traces reaching k=512"};
  return result("as_rate", good >= 0.8 * total,
                fmt("k^0.9 gap decreased from k=64 to k=512 on %d of %d seeds", good, total));
}

CheckResult check_bound_fixed(const std::vector<Trace>& traces, double eta, double L, double R) {
  if (traces.empty() || traces.front().rows.size() < 2)
    return {"bound_fixed", Status::skip, "needs at least one iteration"};
  double d1, se1;
  if (!gap_stats(traces, 1, d1, se1)) return {"bound_fixed", Status::skip, "no optimality gaps"};
  const double plateau = L * R * R * eta;
  bool ok = true, loose_ok = true;
  int worst_k = 1;
  double worst = -INFINITY;
  const int K = static_cast<int>(traces.front().rows.size()) - 1;
  for (int k = 1; k <= K; ++k) {
    double mean, se;
    if (!gap_stats(traces, k, mean, se)) break;
    const double decay = std::pow(1.0 - eta, k - 1);
    const double bound = decay * d1 + (1.0 - decay) * plateau;
    const double slack = 2.0 * se + 1e-12 * (1.0 + std::abs(bound));
    if (mean > bound + slack) ok = false;
    if (mean > decay * d1 + plateau + slack) loose_ok = false;
    if (mean - bound > worst) {
      worst = mean - bound;
      worst_k = k;
    }
  }
  return result("bound_fixed", ok,
                fmt("largest excess over the envelope %.3g at k=%d; LR^2 eta = %.4g; "
                    "looser form (1-eta)^(k-1) D1 + LR^2 eta %s",
                    worst, worst_k, plateau, loose_ok ? "holds" : "violated"));
}

}  // namespace mfw
