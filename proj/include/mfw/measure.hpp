#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mfw/errors.hpp"
#include "mfw/point.hpp"

namespace mfw {

class RngStream;

/// Compact axis-aligned box with nonempty interior, 1 <= d <= 3.
class BoxDomain {
 public:
  BoxDomain(Point lower, Point upper);
  /// One-dimensional interval [lo, hi].
  BoxDomain(double lo, double hi) : BoxDomain(Point(lo), Point(hi)) {}

  std::size_t dim() const noexcept { return lower_.dim(); }
  const Point& lower() const noexcept { return lower_; }
  const Point& upper() const noexcept { return upper_; }
  Point center() const;
  double diameter() const;
  bool contains(const Point& x) const noexcept;
  Point clamp(const Point& x) const;

  friend bool operator==(const BoxDomain& a, const BoxDomain& b) noexcept {
    return a.lower_ == b.lower_ && a.upper_ == b.upper_;
  }

 private:
  Point lower_;
  Point upper_;
};

inline constexpr double kDefaultAtomTol = 1e-9;
inline constexpr double kNormalizationTol = 1e-12;

/// Finitely supported probability measure on a box: sum_i w_i delta_{x_i}.
/// Immutable after construction; every operation returns a new value.
class AtomicMeasure {
 public:
  /// Weights must already lie on the simplex (sum within 1e-12).
  AtomicMeasure(BoxDomain domain, std::vector<Point> atoms, std::vector<double> weights);

  /// Divides the supplied non-negative weights by their sum.
  static AtomicMeasure normalized(BoxDomain domain, std::vector<Point> atoms,
                                  std::vector<double> raw_weights);

  const BoxDomain& domain() const noexcept { return domain_; }
  std::span<const Point> atoms() const noexcept { return atoms_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  const Point& atom(std::size_t i) const { return atoms_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  double weight_sum() const noexcept;

 private:
  struct Unchecked {};
  AtomicMeasure(Unchecked, BoxDomain domain, std::vector<Point> atoms,
                std::vector<double> weights)
      : domain_(std::move(domain)), atoms_(std::move(atoms)), weights_(std::move(weights)) {}

  friend AtomicMeasure mix(const AtomicMeasure&, const AtomicMeasure&, double, double);
  friend AtomicMeasure consolidate(const AtomicMeasure&, double, double);

  BoxDomain domain_;
  std::vector<Point> atoms_;
  std::vector<double> weights_;
};

AtomicMeasure dirac(const Point& x, const BoxDomain& dom);

/// (1 - t) mu + t nu. Atoms closer than atom_tol are identified (the first
/// location is kept); exactly-zero weights are dropped.
AtomicMeasure mix(const AtomicMeasure& mu, const AtomicMeasure& nu, double t,
                  double atom_tol = kDefaultAtomTol);

/// sup over Borel sets |mu(A) - nu(A)|, i.e. half the L1 distance of the
/// weight vectors over the union support.
double tv_distance(const AtomicMeasure& mu, const AtomicMeasure& nu,
                   double atom_tol = kDefaultAtomTol);

/// mu(B(center, radius)) for the closed Euclidean ball.
double ball_mass(const AtomicMeasure& mu, const Point& center, double radius);

double expect(const AtomicMeasure& mu, const std::function<double(const Point&)>& f);

/// Merges atoms within atom_tol (weight sum at the weighted centroid), then
/// drops atoms with weight < weight_tol and renormalizes.
AtomicMeasure consolidate(const AtomicMeasure& mu, double atom_tol, double weight_tol);

/// Equally weighted atoms on a uniform lattice with `per_dim` points per
/// coordinate (corners included).
AtomicMeasure uniform_grid_cloud(const BoxDomain& dom, std::size_t per_dim);

/// Equally weighted i.i.d. uniform atoms; stands in for a continuous uniform
/// measure.
AtomicMeasure iid_uniform_cloud(const BoxDomain& dom, std::size_t count, RngStream& rng);

/// One row per atom: coordinates then weight, comma separated.
void write_measure_csv(std::ostream& os, const AtomicMeasure& mu);

}  // namespace mfw
