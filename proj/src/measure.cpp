#include "mfw/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mfw/rng.hpp"

namespace mfw {

Point::Point(std::initializer_list<double> xs) {
  if (xs.size() == 0 || xs.size() > kMaxDim)
    throw ArgumentError("point dimension must be 1..3");
  std::copy(xs.begin(), xs.end(), coords_.begin());
  dim_ = xs.size();
}

Point::Point(std::span<const double> xs) {
  if (xs.empty() || xs.size() > kMaxDim) throw ArgumentError("point dimension must be 1..3");
  std::copy(xs.begin(), xs.end(), coords_.begin());
  dim_ = xs.size();
}

std::string to_string(const Point& p) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < p.dim(); ++i) os << (i ? ", " : "") << p[i];
  os << ')';
  return os.str();
}

BoxDomain::BoxDomain(Point lower, Point upper) : lower_(lower), upper_(upper) {
  if (lower.dim() == 0 || lower.dim() != upper.dim())
    throw ArgumentError("box corners must share a dimension in 1..3");
  for (std::size_t i = 0; i < lower.dim(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i]))
      throw ArgumentError("box needs lower[i] < upper[i] with finite corners");
  }
}

Point BoxDomain::center() const {
  Point c = lower_;
  for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lower_[i] + upper_[i]);
  return c;
}

double BoxDomain::diameter() const { return distance(lower_, upper_); }

bool BoxDomain::contains(const Point& x) const noexcept {
  if (x.dim() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i)
    if (!(x[i] >= lower_[i] && x[i] <= upper_[i])) return false;
  return true;
}

Point BoxDomain::clamp(const Point& x) const {
  Point y = x;
  for (std::size_t i = 0; i < dim(); ++i) y[i] = std::clamp(x[i], lower_[i], upper_[i]);
  return y;
}

AtomicMeasure::AtomicMeasure(BoxDomain domain, std::vector<Point> atoms,
                             std::vector<double> weights)
    : domain_(std::move(domain)), atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (atoms_.empty()) throw DegenerateMeasureError("measure needs at least one atom");
  if (atoms_.size() != weights_.size())
    throw ArgumentError("atoms and weights differ in length");
  for (const auto& x : atoms_)
    if (!domain_.contains(x)) throw DomainError("atom " + to_string(x) + " outside the box");
  for (double w : weights_)
    if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("weights must be finite and >= 0");
  if (std::abs(weight_sum() - 1.0) > kNormalizationTol)
    throw ArgumentError("weights must sum to 1");
}

AtomicMeasure AtomicMeasure::normalized(BoxDomain domain, std::vector<Point> atoms,
                                        std::vector<double> raw_weights) {
  double s = 0.0;
  for (double w : raw_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("weights must be finite and >= 0");
    s += w;
  }
  if (!(s > 0.0)) throw DegenerateMeasureError("weights sum to zero");
  for (double& w : raw_weights) w /= s;
  return AtomicMeasure(std::move(domain), std::move(atoms), std::move(raw_weights));
}

double AtomicMeasure::weight_sum() const noexcept {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

AtomicMeasure dirac(const Point& x, const BoxDomain& dom) {
  if (!dom.contains(x)) throw DomainError("dirac location " + to_string(x) + " outside the box");
  return AtomicMeasure(dom, {x}, {1.0});
}

namespace {

std::size_t find_atom(std::span<const Point> atoms, const Point& x, double tol) {
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if (distance(atoms[i], x) <= tol) return i;
  return atoms.size();
}

void renormalize(std::vector<double>& w) {
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= s;
}

}  // namespace

AtomicMeasure mix(const AtomicMeasure& mu, const AtomicMeasure& nu, double t, double atom_tol) {
  if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("mixing weight must lie in [0, 1]");
  if (!(mu.domain() == nu.domain())) throw ArgumentError("measures live on different boxes");

  std::vector<Point> atoms(mu.atoms().begin(), mu.atoms().end());
  std::vector<double> weights(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) weights[i] = (1.0 - t) * mu.weight(i);
  for (std::size_t j = 0; j < nu.size(); ++j) {
    const double w = t * nu.weight(j);
    const std::size_t i = find_atom(atoms, nu.atom(j), atom_tol);
    if (i == atoms.size()) {
      atoms.push_back(nu.atom(j));
      weights.push_back(w);
    } else {
      weights[i] += w;
    }
  }

  std::vector<Point> kept_atoms;
  std::vector<double> kept_weights;
  kept_atoms.reserve(atoms.size());
  kept_weights.reserve(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (weights[i] > 0.0) {
      kept_atoms.push_back(atoms[i]);
      kept_weights.push_back(weights[i]);
    }
  }
  renormalize(kept_weights);
  return AtomicMeasure(AtomicMeasure::Unchecked{}, mu.domain(), std::move(kept_atoms),
                       std::move(kept_weights));
}

double tv_distance(const AtomicMeasure& mu, const AtomicMeasure& nu, double atom_tol) {
  if (!(mu.domain() == nu.domain())) throw ArgumentError("measures live on different boxes");
  std::vector<Point> atoms(mu.atoms().begin(), mu.atoms().end());
  std::vector<double> diff(mu.weights().begin(), mu.weights().end());
  for (std::size_t j = 0; j < nu.size(); ++j) {
    const std::size_t i = find_atom(atoms, nu.atom(j), atom_tol);
    if (i == atoms.size()) {
      atoms.push_back(nu.atom(j));
      diff.push_back(-nu.weight(j));
    } else {
      diff[i] -= nu.weight(j);
    }
  }
  double l1 = 0.0;
  for (double d : diff) l1 += std::abs(d);
  return std::min(1.0, 0.5 * l1);
}

double ball_mass(const AtomicMeasure& mu, const Point& center, double radius) {
  if (!(radius >= 0.0)) throw ArgumentError("ball radius must be non-negative");
  double m = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (distance(mu.atom(i), center) <= radius) m += mu.weight(i);
  return std::min(1.0, m);
}

double expect(const AtomicMeasure& mu, const std::function<double(const Point&)>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) s += mu.weight(i) * f(mu.atom(i));
  return s;
}

AtomicMeasure consolidate(const AtomicMeasure& mu, double atom_tol, double weight_tol) {
  if (!(atom_tol >= 0.0)) throw ArgumentError("atom_tol must be >= 0");
  if (!(weight_tol >= 0.0 && weight_tol < 1.0)) throw ArgumentError("weight_tol must lie in [0, 1)");

  const std::size_t d = mu.domain().dim();
  std::vector<Point> atoms(mu.atoms().begin(), mu.atoms().end());
  std::vector<double> weights(mu.weights().begin(), mu.weights().end());
  // A centroid can land within atom_tol of another cluster, so passes repeat
  // until one merges nothing.
  for (bool merged = true; merged;) {
    std::vector<Point> out;
    std::vector<double> out_w;
    std::vector<std::array<double, Point::kMaxDim>> moment;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      const Point& x = atoms[j];
      const double w = weights[j];
      const std::size_t i = find_atom(out, x, atom_tol);
      if (i == out.size()) {
        out.push_back(x);
        out_w.push_back(w);
        std::array<double, Point::kMaxDim> m{};
        for (std::size_t c = 0; c < d; ++c) m[c] = w * x[c];
        moment.push_back(m);
      } else {
        out_w[i] += w;
        for (std::size_t c = 0; c < d; ++c) moment[i][c] += w * x[c];
      }
    }
    merged = out.size() < atoms.size();
    for (std::size_t i = 0; merged && i < out.size(); ++i) {
      if (out_w[i] > 0.0) {
        Point c = out[i];
        for (std::size_t k = 0; k < d; ++k) c[k] = moment[i][k] / out_w[i];
        out[i] = mu.domain().clamp(c);
      }
    }
    atoms = std::move(out);
    weights = std::move(out_w);
  }

  std::vector<Point> kept_atoms;
  std::vector<double> kept_weights;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (weights[i] >= weight_tol && weights[i] > 0.0) {
      kept_atoms.push_back(atoms[i]);
      kept_weights.push_back(weights[i]);
    }
  }
  if (kept_atoms.empty()) throw DegenerateMeasureError("consolidation dropped every atom");
  renormalize(kept_weights);
  return AtomicMeasure(AtomicMeasure::Unchecked{}, mu.domain(), std::move(kept_atoms),
                       std::move(kept_weights));
}

AtomicMeasure uniform_grid_cloud(const BoxDomain& dom, std::size_t per_dim) {
  if (per_dim < 2) throw ArgumentError("grid cloud needs at least 2 points per dimension");
  const std::size_t d = dom.dim();
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= per_dim;
  std::vector<Point> atoms;
  atoms.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Point x = dom.lower();
    std::size_t rem = flat;
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t idx = rem % per_dim;
      rem /= per_dim;
      const double frac = static_cast<double>(idx) / static_cast<double>(per_dim - 1);
      x[c] = idx + 1 == per_dim ? dom.upper()[c]
                                : dom.lower()[c] + frac * (dom.upper()[c] - dom.lower()[c]);
    }
    atoms.push_back(x);
  }
  std::vector<double> w(total, 1.0);
  return AtomicMeasure::normalized(dom, std::move(atoms), std::move(w));
}

AtomicMeasure iid_uniform_cloud(const BoxDomain& dom, std::size_t count, RngStream& rng) {
  if (count == 0) throw ArgumentError("cloud needs at least one atom");
  std::vector<Point> atoms;
  atoms.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    Point x = dom.lower();
    for (std::size_t c = 0; c < dom.dim(); ++c) x[c] = rng.uniform(dom.lower()[c], dom.upper()[c]);
    atoms.push_back(x);
  }
  std::vector<double> w(count, 1.0);
  return AtomicMeasure::normalized(dom, std::move(atoms), std::move(w));
}

void write_measure_csv(std::ostream& os, const AtomicMeasure& mu) {
  char buf[40];
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (double c : mu.atom(i).coords()) {
      std::snprintf(buf, sizeof buf, "%.17g,", c);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", mu.weight(i));
    os << buf;
  }
}

}  // namespace mfw
