#pragma once

#include <cstdint>
#include <vector>

#include "mfw/problem.hpp"

namespace mfw {

/// h_mu(x) from the instance's closed form.
double influence(const ProblemInstance& inst, const AtomicMeasure& mu, const Point& x);
double objective(const ProblemInstance& inst, const AtomicMeasure& mu);

/// m i.i.d. draws of Y from the instance sampler.
std::vector<Draw> draw_batch(const ProblemInstance& inst, std::size_t m, RngStream& rng);

/// H_{mu,m}(x) = (1/m) sum_j H_mu(x, Y_j) with m fresh draws.
double mc_influence(const ProblemInstance& inst, const AtomicMeasure& mu, const Point& x,
                    std::size_t m, RngStream& rng);

/// x -> H_{mu,m}(x) with one batch of m draws frozen for every x (common
/// random numbers), so a subsolver minimizes a single sampled function.
ScalarField mc_influence_fn(const ProblemInstance& inst, const AtomicMeasure& mu, std::size_t m,
                            RngStream& rng);
ScalarField mc_influence_fn(const ProblemInstance& inst, const AtomicMeasure& mu,
                            std::vector<Draw> batch);

/// J_m(mu) = (1/m) sum_j F(mu, Y_j).
double mc_objective(const ProblemInstance& inst, const AtomicMeasure& mu, std::size_t m,
                    RngStream& rng);

inline constexpr double kDefaultFdStep = 1e-5;

/// (J((1-t) mu + t delta_x) - J(mu)) / t. Biased by O(t).
double fd_influence(const ProblemInstance& inst, const AtomicMeasure& mu, const Point& x,
                    double t = kDefaultFdStep);
ScalarField fd_influence_fn(const ProblemInstance& inst, const AtomicMeasure& mu,
                            double t = kDefaultFdStep);

/// J'_mu(nu - mu) = E_{X ~ nu}[h_mu(X)].
double von_mises(const ProblemInstance& inst, const AtomicMeasure& mu, const AtomicMeasure& nu);

/// Frank-Wolfe gap G(mu) = max_nu J'_mu(mu - nu) = -min_x h_mu(x). Atoms of
/// mu are scanned alongside the box search, and nu = mu gives G >= 0.
double fw_gap(const ProblemInstance& inst, const AtomicMeasure& mu,
              const SubsolverConfig& cfg = {});

/// Random atomic measure with 1..max_atoms atoms (plus the instance's
/// support anchor, if it declares one); weights from normalized exponentials.
AtomicMeasure random_measure(const ProblemInstance& inst, RngStream& rng,
                             std::size_t max_atoms = 6);

struct SmoothnessEstimate {
  double L = 0.0;        // inflated estimate
  double raw_ratio = 0;  // largest observed sup|h1 - h2| / tv
  int pairs_used = 0;
};

/// Samples sup_x |h_mu1(x) - h_mu2(x)| / tv(mu1, mu2) over random pairs
/// (restricted to the instance's smoothness region) and inflates the largest
/// ratio by `inflation`.
SmoothnessEstimate estimate_smoothness(const ProblemInstance& inst, int pairs, std::uint64_t seed,
                                       double inflation = 1.5, int grid_points = 0);

struct CltConstantEstimate {
  double c0 = 0.0;
  double se = 0.0;
  int replications = 0;
};

/// Mean over replications of sqrt(m) * sup_grid |H_{mu,m} - h_mu|.
CltConstantEstimate estimate_clt_constant(const ProblemInstance& inst, const AtomicMeasure& mu,
                                          std::size_t m, int replications, std::uint64_t seed,
                                          int grid_points = 0);

/// Wraps exact oracles as zero-variance "stochastic" ones: F(mu, Y) = J(mu),
/// H_mu(x, Y) = h_mu(x).
ProblemInstance exact_as_stochastic(ProblemInstance inst);

}  // namespace mfw
