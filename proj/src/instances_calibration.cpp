#include <algorithm>
#include <cmath>
#include <memory>

#include "mfw/instances.hpp"

namespace mfw {

NamedFunction named_function(const std::string& name) {
  if (name == "identity") return {name, [](double x) { return x; }};
  if (name == "square") return {name, [](double x) { return x * x; }};
  if (name == "cube") return {name, [](double x) { return x * x * x; }};
  if (name == "sin") return {name, [](double x) { return std::sin(x); }};
  if (name == "exp") return {name, [](double x) { return std::exp(x); }};
  throw ArgumentError("unknown function '" + name + "'");
}

namespace {

struct Extremes {
  double fmin, fmax;
  Point argmin, argmax;
};

Extremes extremes(const NamedFunction& f, const BoxDomain& interval) {
  if (interval.dim() != 1) throw ArgumentError("calibration needs a one-dimensional interval");
  SubsolverConfig cfg;
  cfg.grid_points_per_dim = 257;
  const auto fn = f.fn;
  const auto lo = minimize_over_box([fn](const Point& x) { return fn(x[0]); }, interval, cfg);
  const auto hi = minimize_over_box([fn](const Point& x) { return -fn(x[0]); }, interval, cfg);
  return {lo.min_value, -hi.min_value, lo.minimizer, hi.minimizer};
}

double mean_of(const std::function<double(double)>& f, const AtomicMeasure& mu) {
  return expect(mu, [&f](const Point& x) { return f(x[0]); });
}

}  // namespace

ProblemInstance build_calibration(const NamedFunction& f, double y0, const BoxDomain& interval) {
  const Extremes e = extremes(f, interval);
  if (!(e.fmax > e.fmin)) throw ArgumentError("calibration function is constant on the interval");
  if (!(y0 >= e.fmin && y0 <= e.fmax))
    throw ArgumentError("target y0 must lie between min f and max f on the interval");

  ProblemInstance inst("calibration", interval);
  const auto fn = f.fn;
  inst.objective = [fn, y0](const AtomicMeasure& mu) {
    const double r = mean_of(fn, mu) - y0;
    return r * r;
  };
  inst.influence = [fn, y0](const AtomicMeasure& mu) -> ScalarField {
    const double s = mean_of(fn, mu);
    return [fn, s, y0](const Point& x) { return 2.0 * (fn(x[0]) - s) * (s - y0); };
  };

  const double p = (y0 - e.fmin) / (e.fmax - e.fmin);
  InstanceTruth truth;
  truth.optimal_measure = mix(dirac(e.argmin, interval), dirac(e.argmax, interval), p);
  truth.optimal_value = 0.0;
  const double osc = e.fmax - e.fmin;
  truth.smoothness_L = 2.0 * osc *
                       std::max(std::abs(e.fmax - 2.0 * e.fmin + y0),
                                std::abs(e.fmin - 2.0 * e.fmax + y0));
  inst.truth = truth;
  inst.convexity = Convexity::convex;
  return inst;
}

ProblemInstance build_nonconvex_calibration(const NamedFunction& f, double y0,
                                            const BoxDomain& interval, double noise_sigma) {
  const Extremes e = extremes(f, interval);
  if (!(e.fmax > e.fmin)) throw ArgumentError("calibration function is constant on the interval");
  if (!(y0 >= e.fmin && y0 <= e.fmax))
    throw ArgumentError("target y0 must lie between min f and max f on the interval");
  if (!(noise_sigma >= 0.0)) throw ArgumentError("noise_sigma must be >= 0");

  const auto g = [](double d) { return d * d - 0.5 * d * d * d * d; };
  const auto dg = [](double d) { return 2.0 * d - 2.0 * d * d * d; };
  const auto fn = f.fn;

  ProblemInstance inst("nonconvex_calibration", interval);
  inst.objective = [fn, y0, g](const AtomicMeasure& mu) { return g(mean_of(fn, mu) - y0); };
  inst.influence = [fn, y0, dg](const AtomicMeasure& mu) -> ScalarField {
    const double s = mean_of(fn, mu);
    const double slope = dg(s - y0);
    return [fn, s, slope](const Point& x) { return slope * (fn(x[0]) - s); };
  };
  inst.sampler = [](RngStream& rng) { return Draw(rng.normal()); };
  inst.sample_objective = [fn, y0, g, noise_sigma](const AtomicMeasure& mu, const Draw& y) {
    return g(mean_of(fn, mu) - y0) + noise_sigma * y[0];
  };
  inst.sample_influence = [fn, y0, dg, noise_sigma](const AtomicMeasure& mu) {
    const double s = mean_of(fn, mu);
    const double slope = dg(s - y0);
    return std::function<double(const Point&, const Draw&)>(
        [fn, s, slope, noise_sigma](const Point& x, const Draw& y) {
          return (slope + noise_sigma * y[0]) * (fn(x[0]) - s);
        });
  };
  inst.batch_influence = [fn, y0, dg, noise_sigma](const AtomicMeasure& mu,
                                                   std::vector<Draw> batch) -> ScalarField {
    double ybar = 0.0;
    for (const Draw& y : batch) ybar += y[0];
    ybar /= static_cast<double>(batch.size());
    const double s = mean_of(fn, mu);
    const double slope = dg(s - y0) + noise_sigma * ybar;
    return [fn, s, slope](const Point& x) { return slope * (fn(x[0]) - s); };
  };

  // Minimum over two-atom designs on a lattice; the mean of any measure lies
  // in [fmin, fmax], which two atoms already span.
  constexpr int kAtoms = 129;
  constexpr int kWeights = 64;
  std::vector<double> fv(kAtoms);
  const double lo = interval.lower()[0], hi = interval.upper()[0];
  for (int i = 0; i < kAtoms; ++i) fv[i] = fn(lo + (hi - lo) * i / (kAtoms - 1));
  double best = g(fv[0] - y0);
  for (int i = 0; i < kAtoms; ++i)
    for (int j = i; j < kAtoms; ++j)
      for (int w = 0; w <= kWeights; ++w) {
        const double t = static_cast<double>(w) / kWeights;
        best = std::min(best, g((1.0 - t) * fv[i] + t * fv[j] - y0));
      }
  InstanceTruth truth;
  truth.optimal_value = best;
  truth.estimated = true;
  inst.truth = truth;
  inst.convexity = Convexity::nonconvex;
  return inst;
}

ProblemInstance build_response_time_a(CostFunction cost, const AtomicMeasure& eta,
                                      const BoxDomain& dom, std::string cost_name) {
  if (!(eta.domain() == dom)) throw ArgumentError("incident measure must live on the same box");
  auto incidents = std::make_shared<const AtomicMeasure>(eta);
  // c(x) = E_{Y~eta} t(x, Y) does not depend on mu.
  auto c = [cost, incidents](const Point& x) {
    double s = 0.0;
    for (std::size_t j = 0; j < incidents->size(); ++j)
      s += incidents->weight(j) * cost(x, incidents->atom(j));
    return s;
  };

  ProblemInstance inst("response_time_a", dom);
  inst.objective = [c](const AtomicMeasure& mu) { return expect(mu, c); };
  inst.influence = [c](const AtomicMeasure& mu) -> ScalarField {
    const double J = expect(mu, c);
    return [c, J](const Point& x) { return c(x) - J; };
  };

  std::vector<double> cumulative(eta.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < eta.size(); ++j) cumulative[j] = acc += eta.weight(j);
  inst.sampler = [incidents, cumulative](RngStream& rng) {
    const double u = rng.uniform() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return incidents->atom(static_cast<std::size_t>(it - cumulative.begin()));
  };
  inst.sample_objective = [cost](const AtomicMeasure& mu, const Draw& y) {
    return expect(mu, [&](const Point& x) { return cost(x, y); });
  };
  inst.sample_influence = [cost](const AtomicMeasure& mu) {
    return std::function<double(const Point&, const Draw&)>(
        [cost, mu](const Point& x, const Draw& y) {
          return cost(x, y) - expect(mu, [&](const Point& z) { return cost(z, y); });
        });
  };

  SubsolverConfig cfg;
  cfg.grid_points_per_dim = dom.dim() == 1 ? 1025 : 65;
  const auto sub = minimize_over_box(c, dom, cfg);
  Point best = sub.minimizer;
  double best_value = sub.min_value;
  for (const Point& y : eta.atoms()) {
    const double v = c(y);
    if (v < best_value || (v == best_value && lex_less(y, best))) {
      best_value = v;
      best = y;
    }
  }
  // h_mu - h_nu = J(nu) - J(mu), and |J(nu) - J(mu)| <= osc(c) tv(mu, nu).
  const int n = cfg.points_per_dim(dom.dim());
  std::size_t total = 1;
  for (std::size_t i = 0; i < dom.dim(); ++i) total *= static_cast<std::size_t>(n);
  std::vector<double> values(total);
  kernels::evaluate_grid(c, dom, n, values);
  const double cmax = *std::max_element(values.begin(), values.end());

  InstanceTruth truth;
  truth.optimal_measure = dirac(best, dom);
  truth.optimal_value = best_value;
  truth.smoothness_L = cmax - best_value;
  truth.estimated = true;
  inst.truth = truth;
  inst.convexity = Convexity::convex;
  inst.name += ":" + cost_name;
  return inst;
}

ProblemInstance response_time_a_default(std::size_t cloud_points) {
  const BoxDomain dom(0.0, 1.0);
  return build_response_time_a([](const Point& x, const Point& y) { return distance(x, y); },
                               uniform_grid_cloud(dom, cloud_points), dom, "abs");
}

}  // namespace mfw
