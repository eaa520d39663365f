#include "mfw/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace mfw {

const char* to_string(Convexity c) {
  switch (c) {
    case Convexity::convex: return "convex";
    case Convexity::nonconvex: return "nonconvex";
    case Convexity::unknown: break;
  }
  return "unknown";
}

namespace {

void require_influence(const ProblemInstance& inst) {
  if (!inst.has_influence())
    throw CapabilityError("instance '" + inst.name + "' has no exact influence function");
}

void require_objective(const ProblemInstance& inst) {
  if (!inst.has_objective())
    throw CapabilityError("instance '" + inst.name + "' has no exact objective");
}

void require_stochastic_influence(const ProblemInstance& inst) {
  if (!inst.has_stochastic_influence())
    throw CapabilityError("instance '" + inst.name + "' has no stochastic influence oracle");
}

double checked(double v, const Point& x, const char* what) {
  if (!std::isfinite(v)) throw OracleError(what, x);
  return v;
}

}  // namespace

double influence(const ProblemInstance& inst, const AtomicMeasure& mu, const Point& x) {
  require_influence(inst);
  if (!inst.domain.contains(x)) throw DomainError("influence queried outside the box");
  return inst.influence(mu)(x);
}

double objective(const ProblemInstance& inst, const AtomicMeasure& mu) {
  require_objective(inst);
  return inst.objective(mu);
}

std::vector<Draw> draw_batch(const ProblemInstance& inst, std::size_t m, RngStream& rng) {
  if (!inst.sampler) throw CapabilityError("instance '" + inst.name + "' has no sampler");
  if (m == 0) throw ArgumentError("sample size must be >= 1");
  std::vector<Draw> batch;
  batch.reserve(m);
  for (std::size_t j = 0; j < m; ++j) batch.push_back(inst.sampler(rng));
  return batch;
}

ScalarField mc_influence_fn(const ProblemInstance& inst, const AtomicMeasure& mu,
                            std::vector<Draw> batch) {
  require_stochastic_influence(inst);
  if (batch.empty()) throw ArgumentError("sample size must be >= 1");
  if (inst.batch_influence) {
    ScalarField fast = inst.batch_influence(mu, std::move(batch));
    return [fast](const Point& x) { return checked(fast(x), x, "sampled influence is non-finite"); };
  }
  auto draws = std::make_shared<const std::vector<Draw>>(std::move(batch));
  auto H = inst.sample_influence(mu);
  return [draws, H](const Point& x) {
    double s = 0.0;
    for (const Draw& y : *draws) s += checked(H(x, y), x, "sampled influence is non-finite");
    return s / static_cast<double>(draws->size());
  };
}

ScalarField mc_influence_fn(const ProblemInstance& inst, const AtomicMeasure& mu, std::size_t m,
                            RngStream& rng) {
  require_stochastic_influence(inst);
  return mc_influence_fn(inst, mu, draw_batch(inst, m, rng));
}

double mc_influence(const ProblemInstance& inst, const AtomicMeasure& mu, const Point& x,
                    std::size_t m, RngStream& rng) {
  require_stochastic_influence(inst);
  const auto batch = draw_batch(inst, m, rng);
  auto H = inst.sample_influence(mu);
  double s = 0.0;
  for (const Draw& y : batch) s += checked(H(x, y), x, "sampled influence is non-finite");
  return s / static_cast<double>(m);
}

double mc_objective(const ProblemInstance& inst, const AtomicMeasure& mu, std::size_t m,
                    RngStream& rng) {
  if (!inst.has_stochastic_objective())
    throw CapabilityError("instance '" + inst.name + "' has no stochastic objective oracle");
  const auto batch = draw_batch(inst, m, rng);
  const double s = kernels::map_sum(m, [&](std::size_t j) {
    return checked(inst.sample_objective(mu, batch[j]), batch[j], "sampled objective is non-finite");
  });
  return s / static_cast<double>(m);
}

double fd_influence(const ProblemInstance& inst, const AtomicMeasure& mu, const Point& x,
                    double t) {
  require_objective(inst);
  if (!(t > 0.0 && t <= 0.5)) throw ArgumentError("finite-difference step must lie in (0, 0.5]");
  const AtomicMeasure moved = mix(mu, dirac(x, inst.domain), t);
  return (inst.objective(moved) - inst.objective(mu)) / t;
}

ScalarField fd_influence_fn(const ProblemInstance& inst, const AtomicMeasure& mu, double t) {
  require_objective(inst);
  if (!(t > 0.0 && t <= 0.5)) throw ArgumentError("finite-difference step must lie in (0, 0.5]");
  const double base = inst.objective(mu);
  return [inst, mu, t, base](const Point& x) {
    return (inst.objective(mix(mu, dirac(x, inst.domain), t)) - base) / t;
  };
}

double von_mises(const ProblemInstance& inst, const AtomicMeasure& mu, const AtomicMeasure& nu) {
  require_influence(inst);
  return expect(nu, inst.influence(mu));
}

double fw_gap(const ProblemInstance& inst, const AtomicMeasure& mu, const SubsolverConfig& cfg) {
  require_influence(inst);
  const ScalarField h = inst.influence(mu);
  double lowest = minimize_over_box(h, inst.domain, cfg).min_value;
  for (const Point& x : mu.atoms()) lowest = std::min(lowest, h(x));
  return std::max(0.0, -lowest);
}

AtomicMeasure random_measure(const ProblemInstance& inst, RngStream& rng, std::size_t max_atoms) {
  const BoxDomain& dom = inst.domain;
  const std::size_t count = 1 + rng.index(std::max<std::size_t>(max_atoms, 1));
  std::vector<Point> atoms;
  std::vector<double> weights;
  for (std::size_t j = 0; j < count; ++j) {
    Point x = dom.lower();
    for (std::size_t c = 0; c < dom.dim(); ++c) x[c] = rng.uniform(dom.lower()[c], dom.upper()[c]);
    atoms.push_back(x);
    weights.push_back(-std::log1p(-rng.uniform()) + 1e-3);
  }
  if (inst.support_anchor) {
    atoms.push_back(*inst.support_anchor);
    weights.push_back(-std::log1p(-rng.uniform()) + 1e-3);
  }
  return AtomicMeasure::normalized(dom, std::move(atoms), std::move(weights));
}

SmoothnessEstimate estimate_smoothness(const ProblemInstance& inst, int pairs, std::uint64_t seed,
                                       double inflation, int grid_points) {
  require_influence(inst);
  SubsolverConfig grid_cfg;
  grid_cfg.grid_points_per_dim = grid_points;
  const int n = grid_cfg.points_per_dim(inst.domain.dim());
  std::size_t total = 1;
  for (std::size_t i = 0; i < inst.domain.dim(); ++i) total *= static_cast<std::size_t>(n);

  SmoothnessEstimate est;
  std::vector<double> v1(total), v2(total);
  for (int p = 0; p < pairs * 4 && est.pairs_used < pairs; ++p) {
    RngStream rng(seed, static_cast<std::uint64_t>(p), 0x5e);
    const AtomicMeasure mu1 = random_measure(inst, rng);
    // Alternate between independent pairs and small perturbations so that
    // both large and small TV distances are probed.
    AtomicMeasure mu2 = (p % 2 == 0) ? random_measure(inst, rng)
                                     : mix(mu1, random_measure(inst, rng), rng.uniform(0.01, 0.5));
    if (inst.smoothness_region && !(inst.smoothness_region(mu1) && inst.smoothness_region(mu2)))
      continue;
    const double tv = tv_distance(mu1, mu2);
    if (!(tv > 1e-9)) continue;
    try {
      kernels::evaluate_grid_serial(inst.influence(mu1), inst.domain, n, v1);
      kernels::evaluate_grid_serial(inst.influence(mu2), inst.domain, n, v2);
    } catch (const SingularityError&) {
      continue;
    }
    double sup = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < total; ++i) {
      if (!std::isfinite(v1[i]) || !std::isfinite(v2[i])) {
        finite = false;
        break;
      }
      sup = std::max(sup, std::abs(v1[i] - v2[i]));
    }
    if (!finite) continue;
    est.raw_ratio = std::max(est.raw_ratio, sup / tv);
    ++est.pairs_used;
  }
  est.L = inflation * est.raw_ratio;
  return est;
}

CltConstantEstimate estimate_clt_constant(const ProblemInstance& inst, const AtomicMeasure& mu,
                                          std::size_t m, int replications, std::uint64_t seed,
                                          int grid_points) {
  require_influence(inst);
  require_stochastic_influence(inst);
  SubsolverConfig grid_cfg;
  grid_cfg.grid_points_per_dim = grid_points;
  const int n = grid_cfg.points_per_dim(inst.domain.dim());
  std::size_t total = 1;
  for (std::size_t i = 0; i < inst.domain.dim(); ++i) total *= static_cast<std::size_t>(n);

  std::vector<double> exact(total);
  kernels::evaluate_grid_serial(inst.influence(mu), inst.domain, n, exact);

  std::vector<double> stats(static_cast<std::size_t>(replications));
  std::vector<double> sampled(total);
  for (int r = 0; r < replications; ++r) {
    RngStream rng(seed, m, static_cast<std::uint64_t>(r));
    kernels::evaluate_grid_serial(mc_influence_fn(inst, mu, m, rng), inst.domain, n, sampled);
    double sup = 0.0;
    for (std::size_t i = 0; i < total; ++i) sup = std::max(sup, std::abs(sampled[i] - exact[i]));
    stats[static_cast<std::size_t>(r)] = std::sqrt(static_cast<double>(m)) * sup;
  }
  CltConstantEstimate out;
  out.replications = replications;
  double mean = 0.0;
  for (double s : stats) mean += s;
  mean /= replications;
  double var = 0.0;
  for (double s : stats) var += (s - mean) * (s - mean);
  var = replications > 1 ? var / (replications - 1) : 0.0;
  out.c0 = mean;
  out.se = std::sqrt(var / replications);
  return out;
}

ProblemInstance exact_as_stochastic(ProblemInstance inst) {
  require_objective(inst);
  require_influence(inst);
  auto J = inst.objective;
  auto h = inst.influence;
  inst.name += "+exact_samples";
  inst.sampler = [](RngStream&) { return Draw(0.0); };
  inst.sample_objective = [J](const AtomicMeasure& mu, const Draw&) { return J(mu); };
  inst.sample_influence = [h](const AtomicMeasure& mu) {
    ScalarField bound = h(mu);
    return std::function<double(const Point&, const Draw&)>(
        [bound](const Point& x, const Draw&) { return bound(x); });
  };
  inst.batch_influence = [h](const AtomicMeasure& mu, std::vector<Draw>) { return h(mu); };
  return inst;
}

}  // namespace mfw
