#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfw/measure.hpp"
#include "mfw/rng.hpp"
#include "mfw/subsolver.hpp"

namespace mfw {

/// One Monte Carlo draw Y. Scalar draws use a 1-d point.
using Draw = Point;

enum class Convexity { convex, nonconvex, unknown };

/// Known optimum and constants of an instance. `smoothness_L` is the
/// Lipschitz constant of mu -> h_mu (sup norm vs. total variation); when it
/// holds only on part of P(X), `smoothness_region` in ProblemInstance says
/// where.
struct InstanceTruth {
  std::optional<AtomicMeasure> optimal_measure;
  std::optional<double> optimal_value;
  std::optional<double> smoothness_L;
  double diameter_R = 2.0;
  /// Optimum located numerically rather than derived in closed form.
  bool estimated = false;
};

/// Objective, influence and Monte Carlo oracles for one problem on a box.
/// Immutable once built; every callable is pure and safe to call
/// concurrently.
struct ProblemInstance {
  using Objective = std::function<double(const AtomicMeasure&)>;
  /// Binds mu and returns x -> h_mu(x); binding does the per-measure work once.
  using Influence = std::function<ScalarField(const AtomicMeasure&)>;
  using SampleObjective = std::function<double(const AtomicMeasure&, const Draw&)>;
  using SampleInfluence =
      std::function<std::function<double(const Point&, const Draw&)>(const AtomicMeasure&)>;
  /// Optional fast path for x -> (1/m) sum_j H_mu(x, Y_j) over a fixed batch.
  using BatchInfluence = std::function<ScalarField(const AtomicMeasure&, std::vector<Draw>)>;
  using Sampler = std::function<Draw(RngStream&)>;

  ProblemInstance(std::string name_, BoxDomain domain_)
      : name(std::move(name_)), domain(std::move(domain_)) {}

  std::string name;
  BoxDomain domain;
  Objective objective;
  Influence influence;
  SampleObjective sample_objective;
  SampleInfluence sample_influence;
  BatchInfluence batch_influence;
  Sampler sampler;
  std::optional<InstanceTruth> truth;
  Convexity convexity = Convexity::unknown;
  /// Starting measure to use instead of the center Dirac, when that one is
  /// infeasible for the instance.
  std::optional<AtomicMeasure> default_start;
  /// Where truth->smoothness_L is valid; empty means everywhere.
  std::function<bool(const AtomicMeasure&)> smoothness_region;
  /// Atom that randomly generated test measures always carry (CRE influence
  /// is -inf to the right of the largest atom).
  std::optional<Point> support_anchor;
  /// Largest admissible step size; below 1 when a pure Dirac iterate is
  /// outside the objective's domain (D-optimal design).
  double step_cap = 1.0;

  bool has_objective() const { return static_cast<bool>(objective); }
  bool has_influence() const { return static_cast<bool>(influence); }
  bool has_stochastic_influence() const {
    return static_cast<bool>(sample_influence) && static_cast<bool>(sampler);
  }
  bool has_stochastic_objective() const {
    return static_cast<bool>(sample_objective) && static_cast<bool>(sampler);
  }
  AtomicMeasure start_measure() const {
    return default_start ? *default_start : dirac(domain.center(), domain);
  }
};

const char* to_string(Convexity c);

}  // namespace mfw
