#include <algorithm>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <memory>

#include "mfw/instances.hpp"

namespace mfw {

std::vector<NamedFunction> polynomial_basis(const std::string& name) {
  std::vector<NamedFunction> basis{{"1", [](double) { return 1.0; }},
                                   {"x", [](double x) { return x; }}};
  if (name == "linear") return basis;
  if (name == "quadratic") {
    basis.push_back({"x^2", [](double x) { return x * x; }});
    return basis;
  }
  throw ArgumentError("unknown basis '" + name + "'");
}

namespace {

using Basis = std::vector<NamedFunction>;

Eigen::VectorXd features(const Basis& basis, double x) {
  Eigen::VectorXd f(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) f(static_cast<Eigen::Index>(i)) = basis[i].fn(x);
  return f;
}

Eigen::MatrixXd information(const Basis& basis, const AtomicMeasure& mu) {
  const auto p = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const Eigen::VectorXd f = features(basis, mu.atom(i)[0]);
    M.noalias() += mu.weight(i) * f * f.transpose();
  }
  return M;
}

struct Factored {
  Eigen::FullPivLU<Eigen::MatrixXd> lu;
  double det;
};

Factored factor(const Basis& basis, const AtomicMeasure& mu) {
  Factored out{Eigen::FullPivLU<Eigen::MatrixXd>(information(basis, mu)), 0.0};
  out.lu.setThreshold(1e-12);
  if (out.lu.rank() < static_cast<Eigen::Index>(basis.size()))
    throw SingularityError("information matrix is singular");
  out.det = out.lu.determinant();
  if (!(out.det > 0.0)) throw SingularityError("information matrix is singular");
  return out;
}

}  // namespace

ProblemInstance build_doptimal(std::vector<NamedFunction> basis, const BoxDomain& dom,
                               double det_floor) {
  if (dom.dim() != 1) throw ArgumentError("D-optimal design is built on an interval");
  if (basis.empty()) throw ArgumentError("D-optimal design needs a basis");
  if (!(det_floor > 0.0)) throw ArgumentError("det_floor must be positive");
  auto fs = std::make_shared<const Basis>(std::move(basis));
  try {
    factor(*fs, uniform_grid_cloud(dom, 64));
  } catch (const SingularityError&) {
    throw ArgumentError("basis functions are linearly dependent on the interval");
  }
  const double p = static_cast<double>(fs->size());

  ProblemInstance inst("doptimal", dom);
  inst.objective = [fs](const AtomicMeasure& mu) { return 1.0 / factor(*fs, mu).det; };
  inst.influence = [fs, p](const AtomicMeasure& mu) -> ScalarField {
    auto fac = std::make_shared<const Factored>(factor(*fs, mu));
    return [fs, fac, p](const Point& x) {
      const Eigen::VectorXd f = features(*fs, x[0]);
      return (p - f.dot(fac->lu.solve(f))) / fac->det;
    };
  };
  inst.smoothness_region = [fs, det_floor](const AtomicMeasure& mu) {
    try {
      return factor(*fs, mu).det >= det_floor;
    } catch (const SingularityError&) {
      return false;
    }
  };
  const double a = dom.lower()[0], b = dom.upper()[0];
  inst.default_start = AtomicMeasure::normalized(
      dom, {dom.lower(), dom.center(), dom.upper()}, {1.0, 1.0, 1.0});
  // A single Dirac has a rank-one information matrix.
  inst.step_cap = 2.0 / 3.0;

  InstanceTruth truth;
  std::string names;
  for (const auto& f : *fs) names += f.name + ",";
  if (names == "1,x,") {
    truth.optimal_measure = AtomicMeasure(dom, {Point(a), Point(b)}, {0.5, 0.5});
    // Lipschitz bound for h_mu = 2/D - (m2 - 2 m1 x + x^2)/D^2 over measures
    // with D = m2 - m1^2 >= det_floor.
    const double w = b - a, A = std::max(std::abs(a), std::abs(b)), D = det_floor;
    const double sq_lo = (a <= 0.0 && b >= 0.0) ? 0.0 : std::min(a * a, b * b);
    const double osc2 = std::max(a * a, b * b) - sq_lo;
    truth.smoothness_L = w * (2.0 * A / (D * D) + 2.0 * w / (D * D) + 4.0 * A * w * w / (D * D * D)) +
                         osc2 * (1.0 / (D * D) + 2.0 * w * w / (D * D * D));
  } else if (names == "1,x,x^2,") {
    truth.optimal_measure = AtomicMeasure::normalized(
        dom, {dom.lower(), dom.center(), dom.upper()}, {1.0, 1.0, 1.0});
  }
  if (truth.optimal_measure) {
    truth.optimal_value = 1.0 / factor(*fs, *truth.optimal_measure).det;
    inst.truth = truth;
  }
  inst.convexity = Convexity::convex;
  return inst;
}

ProblemInstance build_nn_risk(Potential V, Kernel U, double c0_const, const BoxDomain& dom) {
  RngStream rng(0x6e6e);
  for (int i = 0; i < 32; ++i) {
    Point s = dom.lower(), t = dom.lower();
    for (std::size_t c = 0; c < dom.dim(); ++c) {
      s[c] = rng.uniform(dom.lower()[c], dom.upper()[c]);
      t[c] = rng.uniform(dom.lower()[c], dom.upper()[c]);
    }
    const double st = U(s, t), ts = U(t, s);
    if (std::abs(st - ts) > 1e-12 * (1.0 + std::abs(st)))
      throw ArgumentError("interaction kernel U is not symmetric");
  }

  ProblemInstance inst("nn_risk", dom);
  auto pair_mean = [U](const AtomicMeasure& mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
      for (std::size_t j = 0; j < mu.size(); ++j)
        s += mu.weight(i) * mu.weight(j) * U(mu.atom(i), mu.atom(j));
    return s;
  };
  inst.objective = [V, c0_const, pair_mean](const AtomicMeasure& mu) {
    return c0_const + expect(mu, V) + 0.5 * pair_mean(mu);
  };
  // The additive constant is fixed so that int h_mu dmu = 0.
  inst.influence = [V, U, pair_mean](const AtomicMeasure& mu) -> ScalarField {
    const double c = -(expect(mu, V) + pair_mean(mu));
    return [V, U, mu, c](const Point& x) {
      return V(x) + expect(mu, [&](const Point& y) { return U(x, y); }) + c;
    };
  };
  inst.convexity = Convexity::convex;
  return inst;
}

ProblemInstance nn_risk_default() {
  const BoxDomain dom(-1.0, 1.0);
  ProblemInstance inst = build_nn_risk(
      [](const Point& t) { return -std::exp(-0.5 * (t[0] - 0.3) * (t[0] - 0.3)); },
      [](const Point& s, const Point& t) { return std::exp(-0.5 * (s[0] - t[0]) * (s[0] - t[0])); },
      0.0, dom);
  // V(t) + U(t, 0.3) vanishes identically, so h at delta_0.3 is zero.
  InstanceTruth truth;
  truth.optimal_measure = dirac(Point(0.3), dom);
  truth.optimal_value = -0.5;
  inst.truth = truth;
  return inst;
}

ProblemInstance build_deconvolution(std::vector<double> data, double sigma, const BoxDomain& dom) {
  if (dom.dim() != 1) throw ArgumentError("deconvolution is one-dimensional");
  if (data.empty()) throw ArgumentError("deconvolution needs at least one observation");
  if (!(sigma > 0.0)) throw ArgumentError("sigma must be positive");
  for (double y : data)
    if (!std::isfinite(y)) throw ArgumentError("observations must be finite");
  auto ys = std::make_shared<const std::vector<double>>(std::move(data));
  const double log_norm = std::log(sigma) + 0.5 * std::log(2.0 * M_PI);
  auto log_phi = [sigma, log_norm](double z) { return -0.5 * (z / sigma) * (z / sigma) - log_norm; };
  // log int phi(Y_i - t) dmu(t), via log-sum-exp.
  auto log_mix = [ys, log_phi](const AtomicMeasure& mu) {
    std::vector<double> out(ys->size());
    std::vector<double> terms(mu.size());
    for (std::size_t i = 0; i < ys->size(); ++i) {
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < mu.size(); ++k) {
        terms[k] = mu.weight(k) > 0.0 ? std::log(mu.weight(k)) + log_phi((*ys)[i] - mu.atom(k)[0])
                                      : -std::numeric_limits<double>::infinity();
        top = std::max(top, terms[k]);
      }
      double s = 0.0;
      for (double t : terms) s += std::exp(t - top);
      out[i] = top + std::log(s);
    }
    return out;
  };

  ProblemInstance inst("deconvolution", dom);
  inst.objective = [log_mix](const AtomicMeasure& mu) {
    double J = 0.0;
    for (double l : log_mix(mu)) J -= l;
    return J;
  };
  inst.influence = [ys, log_phi, log_mix](const AtomicMeasure& mu) -> ScalarField {
    auto lm = std::make_shared<const std::vector<double>>(log_mix(mu));
    return [ys, log_phi, lm](const Point& x) {
      double s = static_cast<double>(ys->size());
      for (std::size_t i = 0; i < ys->size(); ++i) s -= std::exp(log_phi((*ys)[i] - x[0]) - (*lm)[i]);
      return s;
    };
  };
  if (ys->size() == 1 && dom.contains(Point(ys->front()))) {
    InstanceTruth truth;
    truth.optimal_measure = dirac(Point(ys->front()), dom);
    truth.optimal_value = log_norm;
    inst.truth = truth;
  }
  inst.convexity = Convexity::convex;
  return inst;
}

}  // namespace mfw
