#include "mfw/subsolver.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

namespace mfw {

int SubsolverConfig::points_per_dim(std::size_t dim) const {
  if (grid_points_per_dim > 0) return grid_points_per_dim;
  return dim == 1 ? 64 : 32;
}

void SubsolverConfig::validate() const {
  if (grid_points_per_dim != 0 && grid_points_per_dim < 2)
    throw ArgumentError("grid_points_per_dim must be >= 2");
  if (refine_candidates < 1) throw ArgumentError("refine_candidates must be >= 1");
  if (!(refine_xtol > 0.0)) throw ArgumentError("refine_xtol must be positive");
  if (refine_max_evals < 1) throw ArgumentError("refine_max_evals must be >= 1");
}

namespace kernels {

Point grid_point(const BoxDomain& dom, int n, std::size_t flat) {
  Point x = dom.lower();
  const auto un = static_cast<std::size_t>(n);
  for (std::size_t c = 0; c < dom.dim(); ++c) {
    const std::size_t idx = flat % un;
    flat /= un;
    if (idx + 1 == un) {
      x[c] = dom.upper()[c];
    } else {
      const double frac = static_cast<double>(idx) / static_cast<double>(n - 1);
      x[c] = dom.lower()[c] + frac * (dom.upper()[c] - dom.lower()[c]);
    }
  }
  return x;
}

void evaluate_grid_serial(const ScalarField& f, const BoxDomain& dom, int n,
                          std::span<double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = f(grid_point(dom, n, i));
}

void evaluate_grid(const ScalarField& f, const BoxDomain& dom, int n, std::span<double> values) {
  const auto count = static_cast<long>(values.size());
  // Exceptions may not cross the parallel region; keep the lowest-index one.
  long failed_at = count;
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < count; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      values[u] = f(grid_point(dom, n, u));
    } catch (...) {
#pragma omp critical(mfw_grid_failure)
      if (i < failed_at) {
        failed_at = i;
        failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
}

double map_sum_serial(std::size_t count, const std::function<double(std::size_t)>& term) {
  double s = 0.0;
  for (std::size_t i = 0; i < count; ++i) s += term(i);
  return s;
}

double map_sum(std::size_t count, const std::function<double(std::size_t)>& term) {
  std::vector<double> terms(count);
  const auto n = static_cast<long>(count);
  long failed_at = n;
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    try {
      terms[static_cast<std::size_t>(i)] = term(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(mfw_sum_failure)
      if (i < failed_at) {
        failed_at = i;
        failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

}  // namespace kernels

namespace {

struct Candidate {
  Point x;
  double value;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.value != b.value) return a.value < b.value;
  return lex_less(a.x, b.x);
}

class CountedField {
 public:
  CountedField(const ScalarField& f, long budget) : f_(f), budget_(budget) {}
  double operator()(const Point& x) {
    ++evals_;
    const double v = f_(x);
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity() ||
        v == -std::numeric_limits<double>::infinity())
      throw OracleError("objective returned a non-finite value", x);
    return v;
  }
  bool exhausted() const { return evals_ >= budget_; }
  long evals() const { return evals_; }

 private:
  const ScalarField& f_;
  long budget_;
  long evals_ = 0;
};

Candidate golden_section(CountedField& f, const BoxDomain& dom, const Candidate& start,
                         double half_width, double xtol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = std::max(dom.lower()[0], start.x[0] - half_width);
  double b = std::min(dom.upper()[0], start.x[0] + half_width);
  Candidate best = start;
  auto probe = [&](double x) {
    const double v = f(Point(x));
    const Candidate c{Point(x), v};
    if (better(c, best)) best = c;
    return v;
  };
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = probe(c);
  double fd = probe(d);
  while (b - a > xtol && !f.exhausted()) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = probe(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = probe(d);
    }
  }
  if (!f.exhausted()) probe(0.5 * (a + b));
  return best;
}

// Nelder-Mead on the box-clamped function.
Candidate nelder_mead(CountedField& f, const BoxDomain& dom, const Candidate& start,
                      double step, double xtol) {
  const std::size_t d = dom.dim();
  std::vector<Candidate> simplex;
  simplex.push_back(start);
  for (std::size_t i = 0; i < d; ++i) {
    Point x = start.x;
    x[i] += step;
    if (x[i] > dom.upper()[i]) x[i] = start.x[i] - step;
    x = dom.clamp(x);
    simplex.push_back({x, f(x)});
  }
  auto eval = [&](Point x) {
    x = dom.clamp(x);
    return Candidate{x, f(x)};
  };
  auto combine = [&](const Point& a, const Point& b, double t) {
    Point r = a;
    for (std::size_t i = 0; i < d; ++i) r[i] = a[i] + t * (b[i] - a[i]);
    return r;
  };

  while (!f.exhausted()) {
    std::sort(simplex.begin(), simplex.end(), better);
    double spread = 0.0;
    for (std::size_t i = 1; i <= d; ++i) spread = std::max(spread, distance(simplex[i].x, simplex[0].x));
    if (spread < xtol) break;

    Point centroid = simplex[0].x;
    for (std::size_t c = 0; c < d; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += simplex[i].x[c];
      centroid[c] = s / static_cast<double>(d);
    }
    const Candidate& worst = simplex[d];
    const Candidate reflected = eval(combine(centroid, worst.x, -1.0));
    if (better(reflected, simplex[0])) {
      const Candidate expanded = eval(combine(centroid, worst.x, -2.0));
      simplex[d] = better(expanded, reflected) ? expanded : reflected;
    } else if (better(reflected, simplex[d - 1])) {
      simplex[d] = reflected;
    } else {
      const Candidate contracted = better(reflected, worst)
                                       ? eval(combine(centroid, reflected.x, 0.5))
                                       : eval(combine(centroid, worst.x, 0.5));
      if (better(contracted, better(reflected, worst) ? reflected : worst)) {
        simplex[d] = contracted;
      } else {
        for (std::size_t i = 1; i <= d && !f.exhausted(); ++i)
          simplex[i] = eval(combine(simplex[0].x, simplex[i].x, 0.5));
      }
    }
  }
  return *std::min_element(simplex.begin(), simplex.end(), better);
}

}  // namespace

SubsolverResult minimize_over_box(const ScalarField& f, const BoxDomain& dom,
                                  const SubsolverConfig& cfg) {
  cfg.validate();
  const int n = cfg.points_per_dim(dom.dim());
  std::size_t total = 1;
  for (std::size_t i = 0; i < dom.dim(); ++i) total *= static_cast<std::size_t>(n);

  std::vector<double> values(total);
  if (cfg.parallel)
    kernels::evaluate_grid(f, dom, n, values);
  else
    kernels::evaluate_grid_serial(f, dom, n, values);
  for (std::size_t i = 0; i < total; ++i) {
    if (!std::isfinite(values[i]))
      throw OracleError("objective returned a non-finite value", kernels::grid_point(dom, n, i));
  }

  // Grid indices are generated with coordinate 0 fastest; ordering by
  // (value, lexicographic point) keeps ties deterministic.
  std::vector<Candidate> grid;
  grid.reserve(total);
  for (std::size_t i = 0; i < total; ++i) grid.push_back({kernels::grid_point(dom, n, i), values[i]});
  const std::size_t keep = std::min<std::size_t>(cfg.refine_candidates, total);
  std::partial_sort(grid.begin(), grid.begin() + static_cast<long>(keep), grid.end(), better);

  SubsolverResult result{grid[0].x, grid[0].value, static_cast<long>(total)};
  if (!cfg.refine) return result;

  Candidate best = grid[0];
  double spacing = 0.0;
  for (std::size_t c = 0; c < dom.dim(); ++c)
    spacing = std::max(spacing, (dom.upper()[c] - dom.lower()[c]) / (n - 1));

  for (std::size_t j = 0; j < keep; ++j) {
    CountedField counted(f, cfg.refine_max_evals);
    const Candidate refined =
        dom.dim() == 1 ? golden_section(counted, dom, grid[j], spacing, cfg.refine_xtol)
                       : nelder_mead(counted, dom, grid[j], 0.5 * spacing, cfg.refine_xtol);
    result.evals += counted.evals();
    if (better(refined, best)) best = refined;
  }
  result.minimizer = best.x;
  result.min_value = best.value;
  return result;
}

}  // namespace mfw
