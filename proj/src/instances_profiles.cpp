// Instances whose objectives integrate a step function of t: response-time
// profile matching, P-means and cumulative residual entropy. All integrals
// are evaluated exactly over the breakpoints.
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "mfw/instances.hpp"

namespace mfw {

void TargetProfile::validate() const {
  if (knots.empty()) throw ArgumentError("target profile needs at least one knot");
  if (knots.front().first != 0.0) throw ArgumentError("target profile must start at t = 0");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const auto [t, F] = knots[i];
    if (!std::isfinite(t) || !(F >= 0.0 && F <= 1.0))
      throw ArgumentError("target profile values must lie in [0, 1]");
    if (i > 0 && !(t > knots[i - 1].first))
      throw ArgumentError("target profile knots must be strictly increasing in t");
    if (i > 0 && F < knots[i - 1].second)
      throw ArgumentError("target profile must be nondecreasing");
  }
  if (knots.back().second != 1.0) throw ArgumentError("target profile must reach 1");
}

double TargetProfile::operator()(double t) const {
  if (t >= knots.back().first) return 1.0;
  if (t <= 0.0) return knots.front().second;
  auto it = std::upper_bound(knots.begin(), knots.end(), t,
                             [](double v, const auto& k) { return v < k.first; });
  const auto& [t1, F1] = *it;
  const auto& [t0, F0] = *(it - 1);
  return F0 + (F1 - F0) * (t - t0) / (t1 - t0);
}

namespace {

// Nondecreasing step function b(t) = sum of masses with breakpoint <= t.
struct StepProfile {
  std::vector<double> at;    // sorted distinct breakpoints
  std::vector<double> level; // value on [at[k], at[k+1])

  StepProfile(std::vector<std::pair<double, double>> events) {
    std::sort(events.begin(), events.end());
    double acc = 0.0;
    for (const auto& [t, m] : events) {
      acc += m;
      if (!at.empty() && at.back() == t) {
        level.back() = acc;
      } else {
        at.push_back(t);
        level.push_back(acc);
      }
    }
  }

  double operator()(double t) const {
    auto it = std::upper_bound(at.begin(), at.end(), t);
    return it == at.begin() ? 0.0 : level[static_cast<std::size_t>(it - at.begin()) - 1];
  }
};

// Response-time objective at a bound measure. Phi(s) = int_0^s D with
// D = F_mu - F*, which is linear between consecutive nodes.
struct ProfileFit {
  std::vector<double> nodes;
  std::vector<double> phi;
  std::vector<double> fmu;  // F_mu on [nodes[k], nodes[k+1])
  double J = 0.0;
  double cross = 0.0;  // int D F_mu
  const TargetProfile* target;

  double Phi(double s) const {
    if (s >= nodes.back()) return phi.back();
    auto it = std::upper_bound(nodes.begin(), nodes.end(), s);
    const std::size_t k = static_cast<std::size_t>(it - nodes.begin()) - 1;
    const double len = s - nodes[k];
    return phi[k] + fmu[k] * len - 0.5 * len * ((*target)(nodes[k]) + (*target)(s));
  }
};

ProfileFit fit_profile(const AtomicMeasure& mu, const AtomicMeasure& eta, double speed,
                       const TargetProfile& target) {
  std::vector<std::pair<double, double>> events;
  events.reserve(mu.size() * eta.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < eta.size(); ++j)
      events.emplace_back(std::abs(mu.atom(i)[0] - eta.atom(j)[0]) / speed,
                          mu.weight(i) * eta.weight(j));
  const StepProfile F(std::move(events));

  ProfileFit fit;
  fit.target = &target;
  fit.nodes = F.at;
  fit.nodes.push_back(0.0);
  for (const auto& k : target.knots) fit.nodes.push_back(k.first);
  std::sort(fit.nodes.begin(), fit.nodes.end());
  fit.nodes.erase(std::unique(fit.nodes.begin(), fit.nodes.end()), fit.nodes.end());

  // Two-point Gauss-Legendre is exact for the quadratic (F_mu - F*)^2.
  const double g = 0.5 / std::sqrt(3.0);
  fit.phi.assign(fit.nodes.size(), 0.0);
  fit.fmu.assign(fit.nodes.size(), 1.0);
  for (std::size_t k = 0; k + 1 < fit.nodes.size(); ++k) {
    const double a = fit.nodes[k], b = fit.nodes[k + 1], len = b - a;
    const double Fk = std::min(F(a), 1.0);
    fit.fmu[k] = Fk;
    const double d0 = Fk - target(a), d1 = Fk - target(b);
    const double mid = 0.5 * (a + b);
    const double q1 = Fk - target(mid - g * len), q2 = Fk - target(mid + g * len);
    fit.J += 0.5 * len * (q1 * q1 + q2 * q2);
    const double area = 0.5 * len * (d0 + d1);
    fit.phi[k + 1] = fit.phi[k] + area;
    fit.cross += Fk * area;
  }
  return fit;
}

}  // namespace

ProblemInstance build_response_time_b(const AtomicMeasure& eta, TargetProfile target, double speed,
                                      const BoxDomain& dom) {
  if (dom.dim() != 1) throw ArgumentError("response-time profile matching is one-dimensional");
  if (!(eta.domain() == dom)) throw ArgumentError("incident measure must live on the same box");
  if (!(speed > 0.0) || !std::isfinite(speed)) throw ArgumentError("speed must be positive");
  target.validate();

  auto incidents = std::make_shared<const AtomicMeasure>(eta);
  auto profile = std::make_shared<const TargetProfile>(std::move(target));

  ProblemInstance inst("response_time_b", dom);
  inst.objective = [incidents, profile, speed](const AtomicMeasure& mu) {
    return fit_profile(mu, *incidents, speed, *profile).J;
  };
  inst.influence = [incidents, profile, speed](const AtomicMeasure& mu) -> ScalarField {
    auto fit = std::make_shared<const ProfileFit>(fit_profile(mu, *incidents, speed, *profile));
    return [fit, incidents, speed, profile](const Point& x) {
      double s = 0.0;
      for (std::size_t j = 0; j < incidents->size(); ++j)
        s += incidents->weight(j) *
             (fit->phi.back() - fit->Phi(std::abs(x[0] - incidents->atom(j)[0]) / speed));
      return 2.0 * (s - fit->cross);
    };
  };
  InstanceTruth truth;
  truth.smoothness_L =
      4.0 * std::max(dom.diameter() / speed, profile->last_knot());
  inst.truth = truth;
  inst.convexity = Convexity::convex;
  return inst;
}

ProblemInstance response_time_b_default() {
  const BoxDomain dom(0.0, 1.0);
  ProblemInstance inst =
      build_response_time_b(dirac(Point(0.5), dom), TargetProfile{{{0.0, 0.0}, {0.5, 1.0}}}, 1.0, dom);
  // Attained by Unif(0, 1), which no atomic measure reaches.
  inst.truth->optimal_value = 0.0;
  return inst;
}

namespace {

// b_i(t) = mu(B(l_i, t)) on [0, u] together with the integrals the P-means
// objective and influence need.
struct DemandProfile {
  std::vector<double> nodes;  // 0 = t_0 <= t_1 < ... < t_n <= t_{n+1} = u
  std::vector<double> level;  // b on [t_k, t_{k+1})
  std::vector<double> tail;   // int_{t_k}^u exp(-b)
  double J = 0.0;             // int_0^u exp(-b)
  double mass_term = 0.0;     // int_0^u b exp(-b)

  DemandProfile(const AtomicMeasure& mu, const Point& demand, double u) {
    std::vector<std::pair<double, double>> events;
    for (std::size_t i = 0; i < mu.size(); ++i)
      events.emplace_back(std::min(distance(demand, mu.atom(i)), u), mu.weight(i));
    const StepProfile b(std::move(events));
    nodes.push_back(0.0);
    level.push_back(0.0);
    for (std::size_t k = 0; k < b.at.size(); ++k) {
      if (b.at[k] == 0.0) {
        level.back() = b.level[k];
      } else {
        nodes.push_back(b.at[k]);
        level.push_back(b.level[k]);
      }
    }
    nodes.push_back(u);
    tail.assign(nodes.size(), 0.0);
    for (std::size_t k = nodes.size() - 1; k-- > 0;) {
      const double len = nodes[k + 1] - nodes[k];
      const double e = std::exp(-level[k]);
      tail[k] = tail[k + 1] + len * e;
      mass_term += len * level[k] * e;
    }
    J = tail[0];
  }

  std::size_t interval(double t) const {
    auto it = std::upper_bound(nodes.begin(), nodes.end() - 1, t);
    return static_cast<std::size_t>(it - nodes.begin()) - 1;
  }
  double at(double t) const { return level[interval(t)]; }
  double tail_from(double s) const {
    if (s >= nodes.back()) return 0.0;
    const std::size_t k = interval(s);
    return tail[k + 1] + (nodes[k + 1] - s) * std::exp(-level[k]);
  }
};

}  // namespace

ProblemInstance build_pmeans(std::vector<Point> demands, const BoxDomain& dom) {
  if (demands.empty()) throw ArgumentError("P-means needs at least one demand point");
  for (const Point& l : demands)
    if (!dom.contains(l)) throw ArgumentError("demand " + to_string(l) + " lies outside the box");
  const double u = dom.diameter();
  auto ls = std::make_shared<const std::vector<Point>>(std::move(demands));

  ProblemInstance inst("pmeans", dom);
  inst.objective = [ls, u](const AtomicMeasure& mu) {
    double s = 0.0;
    for (const Point& l : *ls) s += DemandProfile(mu, l, u).J;
    return s;
  };
  inst.influence = [ls, u](const AtomicMeasure& mu) -> ScalarField {
    auto profiles = std::make_shared<std::vector<DemandProfile>>();
    double constant = 0.0;
    for (const Point& l : *ls) {
      profiles->emplace_back(mu, l, u);
      constant += profiles->back().mass_term;
    }
    return [ls, profiles, constant](const Point& x) {
      double s = constant;
      for (std::size_t i = 0; i < ls->size(); ++i)
        s -= (*profiles)[i].tail_from(distance((*ls)[i], x));
      return s;
    };
  };

  inst.sampler = [u](RngStream& rng) { return Draw(rng.uniform(0.0, u)); };
  inst.sample_objective = [ls, u](const AtomicMeasure& mu, const Draw& y) {
    double s = 0.0;
    for (const Point& l : *ls) s += u * std::exp(-ball_mass(mu, l, y[0]));
    return s;
  };
  inst.sample_influence = [ls, u](const AtomicMeasure& mu) {
    return std::function<double(const Point&, const Draw&)>(
        [ls, u, mu](const Point& x, const Draw& y) {
          double s = 0.0;
          for (const Point& l : *ls) {
            const double b = ball_mass(mu, l, y[0]);
            const double inside = distance(l, x) <= y[0] ? 1.0 : 0.0;
            s += u * (b - inside) * std::exp(-b);
          }
          return s;
        });
  };
  // Sorting the draws turns sum_j I(|l_i - x| <= Y_j) e_ij into a suffix sum.
  inst.batch_influence = [ls, u](const AtomicMeasure& mu, std::vector<Draw> batch) -> ScalarField {
    const std::size_t m = batch.size();
    auto ys = std::make_shared<std::vector<double>>(m);
    for (std::size_t j = 0; j < m; ++j) (*ys)[j] = batch[j][0];
    std::sort(ys->begin(), ys->end());
    auto suffix = std::make_shared<std::vector<std::vector<double>>>();
    double constant = 0.0;
    for (const Point& l : *ls) {
      const DemandProfile b(mu, l, u);
      std::vector<double> suf(m + 1, 0.0);
      for (std::size_t j = m; j-- > 0;) {
        const double level = b.at((*ys)[j]);
        const double e = std::exp(-level);
        suf[j] = suf[j + 1] + e;
        constant += level * e;
      }
      suffix->push_back(std::move(suf));
    }
    const double scale = u / static_cast<double>(m);
    constant *= scale;
    return [ls, ys, suffix, constant, scale](const Point& x) {
      double s = constant;
      for (std::size_t i = 0; i < ls->size(); ++i) {
        const auto first = std::lower_bound(ys->begin(), ys->end(), distance((*ls)[i], x));
        s -= scale * (*suffix)[i][static_cast<std::size_t>(first - ys->begin())];
      }
      return s;
    };
  };

  InstanceTruth truth;
  truth.smoothness_L = 2.0 * static_cast<double>(ls->size()) * u;
  if (ls->size() == 1) {
    truth.optimal_measure = dirac(ls->front(), dom);
    truth.optimal_value = u * std::exp(-1.0);
  }
  inst.truth = truth;
  inst.convexity = Convexity::convex;
  return inst;
}

namespace {

// Survival function S(l) = mu((l, inf)) of a measure on the positive axis:
// S = 1 before the first atom, S_k on [x_k, x_{k+1}), 0 after the last.
struct Survival {
  std::vector<double> x;
  std::vector<double> S;

  explicit Survival(const AtomicMeasure& mu) {
    std::vector<std::pair<double, double>> atoms;
    for (std::size_t i = 0; i < mu.size(); ++i)
      if (mu.weight(i) > 0.0) atoms.emplace_back(mu.atom(i)[0], mu.weight(i));
    std::sort(atoms.begin(), atoms.end());
    double remaining = 1.0;
    for (const auto& [at, w] : atoms) {
      remaining -= w;
      if (!x.empty() && x.back() == at) {
        S.back() = std::max(remaining, 0.0);
      } else {
        x.push_back(at);
        S.push_back(std::max(remaining, 0.0));
      }
    }
    S.back() = 0.0;
  }
};

double xlogx(double s) { return s > 0.0 ? s * std::log(s) : 0.0; }

}  // namespace

ProblemInstance build_cre(double a, double b) {
  if (!(a > 0.0)) throw ArgumentError("cumulative residual entropy needs a > 0");
  if (!(b > a)) throw ArgumentError("cumulative residual entropy needs b > a");
  const BoxDomain dom(a, b);

  ProblemInstance inst("cre", dom);
  inst.objective = [](const AtomicMeasure& mu) {
    const Survival sv(mu);
    double J = 0.0;
    for (std::size_t k = 0; k + 1 < sv.x.size(); ++k) J += (sv.x[k + 1] - sv.x[k]) * xlogx(sv.S[k]);
    return J;
  };
  inst.influence = [](const AtomicMeasure& mu) -> ScalarField {
    auto sv = std::make_shared<const Survival>(mu);
    return [sv](const Point& p) {
      const double x = p[0];
      const auto& xs = sv->x;
      // log S = -inf on (x_n, x), where the integrand is -inf.
      if (x > xs.back()) return -std::numeric_limits<double>::infinity();
      // [0, x_1): S = 1, so log S + 1 = 1 and only [x, x_1) contributes.
      double h = std::min(x, xs[0]) - xs[0];
      for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
        const double lo = xs[k], hi = xs[k + 1], s = sv->S[k];
        const double below_x = std::clamp(x, lo, hi) - lo;
        h += (std::log(s) + 1.0) * (below_x - s * (hi - lo));
      }
      return h;
    };
  };

  // S log S is minimized at S = 1/e, which a two-atom measure holds on (a, b).
  InstanceTruth truth;
  const double q = std::exp(-1.0);
  truth.optimal_measure = AtomicMeasure(dom, {Point(a), Point(b)}, {1.0 - q, q});
  truth.optimal_value = -(b - a) * q;
  inst.truth = truth;
  inst.convexity = Convexity::convex;
  inst.default_start = dirac(Point(b), dom);
  inst.support_anchor = Point(b);
  // h is -inf to the right of the largest atom; a step below 1 keeps the
  // atom at b alive once it is there.
  inst.step_cap = 2.0 / 3.0;
  return inst;
}

}  // namespace mfw
