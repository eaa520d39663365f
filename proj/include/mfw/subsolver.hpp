#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mfw/measure.hpp"

namespace mfw {

using ScalarField = std::function<double(const Point&)>;

/// Grid scan followed by multistart local refinement. Approximate global
/// minimization over a box, deterministic for fixed inputs.
struct SubsolverConfig {
  /// 0 selects the per-dimension default (64 for d = 1, 32 otherwise).
  int grid_points_per_dim = 0;
  int refine_candidates = 5;
  double refine_xtol = 1e-8;
  int refine_max_evals = 400;
  /// false: return the best grid point unrefined (used for inexact solves).
  bool refine = true;
  /// Evaluate the grid with OpenMP; results are identical either way.
  bool parallel = true;

  int points_per_dim(std::size_t dim) const;
  void validate() const;
};

struct SubsolverResult {
  Point minimizer;
  double min_value = 0.0;
  long evals = 0;
};

SubsolverResult minimize_over_box(const ScalarField& f, const BoxDomain& dom,
                                  const SubsolverConfig& cfg = {});

namespace kernels {

/// Row-major lattice point `flat` of an n^d grid spanning the box.
Point grid_point(const BoxDomain& dom, int n, std::size_t flat);

/// Evaluates f on every lattice point; values[flat] = f(grid_point(flat)).
void evaluate_grid(const ScalarField& f, const BoxDomain& dom, int n, std::span<double> values);
/// Serial reference for evaluate_grid.
void evaluate_grid_serial(const ScalarField& f, const BoxDomain& dom, int n,
                          std::span<double> values);

/// Sum of values[i] accumulated in index order after a parallel map.
double map_sum(std::size_t count, const std::function<double(std::size_t)>& term);
double map_sum_serial(std::size_t count, const std::function<double(std::size_t)>& term);

}  // namespace kernels

}  // namespace mfw
