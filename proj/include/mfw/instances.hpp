#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mfw/problem.hpp"

namespace mfw {

/// Scalar function with a name for reports and configs.
struct NamedFunction {
  std::string name;
  std::function<double(double)> fn;
};

/// "identity", "square", "cube", "sin", "exp".
NamedFunction named_function(const std::string& name);

/// J(mu) = (int f dmu - y0)^2 on an interval.
ProblemInstance build_calibration(const NamedFunction& f, double y0, const BoxDomain& interval);

/// J(mu) = E_{Y~eta} E_{X~mu} t(X, Y). Linear in mu.
using CostFunction = std::function<double(const Point&, const Point&)>;
ProblemInstance build_response_time_a(CostFunction cost, const AtomicMeasure& eta,
                                      const BoxDomain& dom, std::string cost_name = "custom");
/// |x - y| cost against a uniform grid cloud of `cloud_points` incidents on [0, 1].
ProblemInstance response_time_a_default(std::size_t cloud_points = 201);

/// Target response-time profile F*: piecewise linear through knots
/// (t_0 = 0, F_0), ..., (t_n, 1), equal to 1 after t_n.
struct TargetProfile {
  std::vector<std::pair<double, double>> knots;
  void validate() const;
  double operator()(double t) const;
  double last_knot() const { return knots.back().first; }
};

/// J(mu) = int_0^inf (F_mu(t) - F*(t))^2 dt with
/// F_mu(t) = P(|X - Y| <= v t), X ~ mu, Y ~ eta independent. One-dimensional.
ProblemInstance build_response_time_b(const AtomicMeasure& eta, TargetProfile target, double speed,
                                      const BoxDomain& dom);
/// eta = delta_{1/2}, F*(t) = min(2t, 1), v = 1 on [0, 1]; J* = 0 at Unif(0, 1).
ProblemInstance response_time_b_default();

/// D-optimal design: J(mu) = 1 / det M(mu), M = int f f^T dmu.
/// The smoothness constant holds where det M >= det_floor.
ProblemInstance build_doptimal(std::vector<NamedFunction> basis, const BoxDomain& dom,
                               double det_floor = 0.25);
/// "linear" = (1, x), "quadratic" = (1, x, x^2).
std::vector<NamedFunction> polynomial_basis(const std::string& name);

/// Randomized k-means: J(mu) = sum_i int_0^u exp(-mu(B(l_i, t))) dt, u = diam.
ProblemInstance build_pmeans(std::vector<Point> demands, const BoxDomain& dom);

/// J(mu) = c0 + int V dmu + 1/2 int int U dmu dmu.
using Potential = std::function<double(const Point&)>;
using Kernel = std::function<double(const Point&, const Point&)>;
ProblemInstance build_nn_risk(Potential V, Kernel U, double c0_const, const BoxDomain& dom);
/// V = -exp(-(t - 0.3)^2 / 2), U = exp(-(t - t')^2 / 2), c0 = 0 on [-1, 1].
ProblemInstance nn_risk_default();

/// J(mu) = int_0^inf S log S, S(l) = mu((l, inf)), on [a, b] with a > 0.
ProblemInstance build_cre(double a, double b);

/// J(mu) = -sum_i log int phi_sigma(Y_i - t) dmu(t).
ProblemInstance build_deconvolution(std::vector<double> data, double sigma, const BoxDomain& dom);

/// J(mu) = g(int f dmu - y0), g(d) = d^2 - d^4 / 2. Smooth and nonconvex.
/// Stochastic oracle: F = J + sigma Y, H = h + sigma Y (f(x) - int f dmu),
/// Y ~ N(0, 1).
ProblemInstance build_nonconvex_calibration(const NamedFunction& f, double y0,
                                            const BoxDomain& interval, double noise_sigma = 0.1);

/// Builds an instance from a config section. Keys are checked strictly:
/// anything not understood by the named instance raises ArgumentError.
using ParamMap = std::map<std::string, std::string>;
ProblemInstance make_instance(const std::string& name, const ParamMap& params);
std::vector<std::string> instance_names();

}  // namespace mfw
