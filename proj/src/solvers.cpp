#include "mfw/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "mfw/oracle.hpp"

namespace mfw {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::dfw: return "dfw";
    case Variant::sfw: return "sfw";
    case Variant::fixed_sfw: return "fixed_sfw";
    case Variant::fc_dfw: return "fc_dfw";
    case Variant::fc_sfw: return "fc_sfw";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  for (Variant v : {Variant::dfw, Variant::sfw, Variant::fixed_sfw, Variant::fc_dfw, Variant::fc_sfw})
    if (s == to_string(v)) return v;
  throw ArgumentError("unknown solver variant '" + s + "'");
}

void FCConfig::validate() const {
  if (inner_max_iters < 1) throw ArgumentError("inner_max_iters must be >= 1");
  if (!(inner_gap_tol > 0.0)) throw ArgumentError("inner_gap_tol must be positive");
}

double SolverConfig::step(int k, double instance_cap) const {
  const double eta = step_schedule == StepSchedule::harmonic ? 2.0 / (k + 2.0) : fixed_eta;
  return std::min({eta, eta_max, instance_cap});
}

std::size_t SolverConfig::sample_size(int k) const {
  if (sample_schedule == SampleSchedule::fixed) return fixed_m;
  const double kk = k + 2.0;
  return static_cast<std::size_t>(std::ceil(c_m * kk * kk - 1e-9));
}

void SolverConfig::validate() const {
  if (max_iters < 1) throw ArgumentError("max_iters must be >= 1");
  if (!(fixed_eta > 0.0 && fixed_eta <= 1.0)) throw ArgumentError("fixed_eta must lie in (0, 1]");
  if (!(eta_max > 0.0 && eta_max <= 1.0)) throw ArgumentError("eta_max must lie in (0, 1]");
  if (!(c_m > 0.0)) throw ArgumentError("c_m must be positive");
  if (fixed_m < 1) throw ArgumentError("fixed_m must be >= 1");
  if (!(epsilon_tilde >= 0.0)) throw ArgumentError("epsilon_tilde must be >= 0");
  if (audit_every < 1) throw ArgumentError("audit_every must be >= 1");
  if (gap_every < 0) throw ArgumentError("gap_every must be >= 0");
  if (!(atom_tol >= 0.0)) throw ArgumentError("atom_tol must be >= 0");
  if (!(weight_tol >= 0.0 && weight_tol < 1.0)) throw ArgumentError("weight_tol must lie in [0, 1)");
  inner.validate();
  sub.validate();
}

namespace {

using Clock = std::chrono::steady_clock;

enum class Oracle { exact, sampled };

struct Chain {
  Oracle oracle;
  bool corrective;
  bool fixed;  // fixed step, fixed sample, possibly inexact subsolve
};

void require(const ProblemInstance& inst, Oracle oracle, bool corrective) {
  if (oracle == Oracle::exact && !inst.has_influence())
    throw CapabilityError("instance '" + inst.name + "' has no exact influence function");
  if (oracle == Oracle::sampled && !inst.has_stochastic_influence())
    throw CapabilityError("instance '" + inst.name + "' has no stochastic influence oracle");
  if (corrective && !inst.has_objective())
    throw CapabilityError("fully-corrective steps need the exact objective of '" + inst.name + "'");
}

void check_feasible(const AtomicMeasure& mu, const BoxDomain& dom) {
  if (!(mu.domain() == dom)) throw DomainError("iterate left the instance domain");
  if (std::abs(mu.weight_sum() - 1.0) > kNormalizationTol)
    throw Error("iterate weights drifted off the simplex");
}

SubsolverConfig coarse(const SubsolverConfig& fine, std::size_t dim) {
  SubsolverConfig c = fine;
  c.grid_points_per_dim = std::max(2, fine.points_per_dim(dim) / 4);
  c.refine = false;
  return c;
}

class Runner {
 public:
  Runner(const ProblemInstance& inst, const SolverConfig& cfg, Chain chain)
      : inst_(inst), cfg_(cfg), chain_(chain), start_(Clock::now()) {
    trace_.seed = cfg.seed;
    trace_.timed = cfg.record_timing;
  }

  Trace run(const AtomicMeasure& mu0) {
    cfg_.validate();
    require(inst_, chain_.oracle, chain_.corrective);
    if (!(mu0.domain() == inst_.domain))
      throw ArgumentError("starting measure lives on a different box");

    AtomicMeasure mu = mu0;
    try {
      record(0, mu, 0.0, 0, std::nullopt);
      for (int k = 0; k < cfg_.max_iters; ++k) {
        const double eta = chain_.fixed ? std::min(cfg_.fixed_eta, inst_.step_cap)
                                        : cfg_.step(k, inst_.step_cap);
        std::size_t m = 0;
        const Point x = new_atom(mu, k, m);
        AtomicMeasure next = mix(mu, dirac(x, inst_.domain), eta, cfg_.atom_tol);
        if (chain_.corrective) next = correct(mu, next);
        if (cfg_.weight_tol > 0.0) next = consolidate(next, cfg_.atom_tol, cfg_.weight_tol);
        check_feasible(next, inst_.domain);
        mu = std::move(next);
        record(k + 1, mu, eta, m, x);
      }
    } catch (const CapabilityError&) {
      throw;
    } catch (const Error& e) {
      trace_.final_measure = mu;
      throw SolverAborted(std::string(to_string(cfg_.variant)) + " aborted: " + e.what(),
                          std::move(trace_));
    }
    trace_.final_measure = mu;
    return std::move(trace_);
  }

 private:
  Point new_atom(const AtomicMeasure& mu, int k, std::size_t& m) {
    if (chain_.oracle == Oracle::exact)
      return minimize_over_box(inst_.influence(mu), inst_.domain, cfg_.sub).minimizer;

    m = chain_.fixed ? cfg_.fixed_m : cfg_.sample_size(k);
    RngStream rng(cfg_.seed, static_cast<std::uint64_t>(k), cfg_.replication);
    const ScalarField H = mc_influence_fn(inst_, mu, m, rng);
    if (!(chain_.fixed && cfg_.epsilon_tilde > 0.0))
      return minimize_over_box(H, inst_.domain, cfg_.sub).minimizer;

    const SubsolverResult rough = minimize_over_box(H, inst_.domain, coarse(cfg_.sub, inst_.domain.dim()));
    if (k % cfg_.audit_every == 0) {
      const SubsolverResult fine = minimize_over_box(H, inst_.domain, cfg_.sub);
      trace_.audits.push_back({k, rough.min_value, std::min(fine.min_value, rough.min_value)});
    }
    return rough.minimizer;
  }

  // Reweights over every atom discovered so far, starting from the plain step.
  AtomicMeasure correct(const AtomicMeasure& previous, const AtomicMeasure& plain) {
    std::vector<Point> atoms(previous.atoms().begin(), previous.atoms().end());
    std::vector<double> start(previous.size(), 0.0);
    for (std::size_t j = 0; j < plain.size(); ++j) {
      auto it = std::find_if(atoms.begin(), atoms.end(), [&](const Point& a) {
        return distance(a, plain.atom(j)) <= cfg_.atom_tol;
      });
      if (it == atoms.end()) {
        atoms.push_back(plain.atom(j));
        start.push_back(plain.weight(j));
      } else {
        start[static_cast<std::size_t>(it - atoms.begin())] += plain.weight(j);
      }
    }
    std::vector<double> w = simplex_reweight(inst_, atoms, start, cfg_.inner);
    return AtomicMeasure::normalized(inst_.domain, std::move(atoms), std::move(w));
  }

  void record(int k, const AtomicMeasure& mu, double eta, std::size_t m,
              std::optional<Point> minimizer) {
    TraceRow row;
    row.k = k;
    row.objective = inst_.has_objective() ? inst_.objective(mu)
                                          : std::numeric_limits<double>::quiet_NaN();
    if (inst_.truth && inst_.truth->optimal_value)
      row.obj_gap = row.objective - *inst_.truth->optimal_value;
    const bool last = k == cfg_.max_iters;
    if (cfg_.gap_every > 0 && inst_.has_influence() && (k % cfg_.gap_every == 0 || last))
      row.fw_gap = fw_gap(inst_, mu, cfg_.sub);
    row.atoms = mu.size();
    row.eta = eta;
    row.m = m;
    row.minimizer = minimizer;
    if (cfg_.record_timing)
      row.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
    trace_.rows.push_back(row);
    if (cfg_.keep_iterates) trace_.iterates.push_back(mu);
  }

  const ProblemInstance& inst_;
  SolverConfig cfg_;
  Chain chain_;
  Clock::time_point start_;
  Trace trace_;
};

}  // namespace

Trace run_dfw(const ProblemInstance& inst, const AtomicMeasure& mu0, const SolverConfig& cfg) {
  return Runner(inst, cfg, {Oracle::exact, false, false}).run(mu0);
}

Trace run_sfw(const ProblemInstance& inst, const AtomicMeasure& mu0, const SolverConfig& cfg) {
  return Runner(inst, cfg, {Oracle::sampled, false, false}).run(mu0);
}

Trace run_fixed_sfw(const ProblemInstance& inst, const AtomicMeasure& mu0, const SolverConfig& cfg) {
  return Runner(inst, cfg, {Oracle::sampled, false, true}).run(mu0);
}

Trace run_fully_corrective(const ProblemInstance& inst, const AtomicMeasure& mu0,
                           const SolverConfig& cfg) {
  if (cfg.variant != Variant::fc_dfw && cfg.variant != Variant::fc_sfw)
    throw ArgumentError("run_fully_corrective needs variant fc_dfw or fc_sfw");
  const Oracle oracle = cfg.variant == Variant::fc_dfw ? Oracle::exact : Oracle::sampled;
  return Runner(inst, cfg, {oracle, true, false}).run(mu0);
}

Trace run_solver(const ProblemInstance& inst, const AtomicMeasure& mu0, const SolverConfig& cfg) {
  switch (cfg.variant) {
    case Variant::dfw: return run_dfw(inst, mu0, cfg);
    case Variant::sfw: return run_sfw(inst, mu0, cfg);
    case Variant::fixed_sfw: return run_fixed_sfw(inst, mu0, cfg);
    case Variant::fc_dfw:
    case Variant::fc_sfw: return run_fully_corrective(inst, mu0, cfg);
  }
  throw ArgumentError("unknown solver variant");
}

namespace {

// Golden-section minimization of phi on [0, hi]; endpoints are candidates.
double line_search(const std::function<double(double)>& phi, double hi, double& best_value) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = 0.0, b = hi;
  double best = 0.0;
  best_value = phi(0.0);
  auto consider = [&](double g, double v) {
    if (v < best_value) {
      best_value = v;
      best = g;
    }
  };
  consider(hi, phi(hi));
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  double fc = phi(c), fd = phi(d);
  consider(c, fc);
  consider(d, fd);
  for (int it = 0; it < 80 && b - a > 1e-14 * std::max(1.0, hi); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = phi(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = phi(d);
      consider(d, fd);
    }
  }
  return best;
}

}  // namespace

std::vector<double> simplex_reweight(const ProblemInstance& inst, const std::vector<Point>& atoms,
                                     std::vector<double> w0, const FCConfig& fc) {
  fc.validate();
  if (atoms.empty() || atoms.size() != w0.size())
    throw ArgumentError("simplex_reweight needs one weight per atom");
  if (!inst.has_objective())
    throw CapabilityError("simplex_reweight needs the exact objective of '" + inst.name + "'");
  double total = 0.0;
  for (double w : w0) {
    if (!(w >= 0.0)) throw ArgumentError("weights must be >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("weights must lie on the simplex");
  if (atoms.size() == 1) return w0;

  auto measure = [&](const std::vector<double>& w) {
    return AtomicMeasure::normalized(inst.domain, atoms, w);
  };
  auto J = [&](const std::vector<double>& w) { return inst.objective(measure(w)); };
  auto gradient = [&](const std::vector<double>& w) {
    const AtomicMeasure mu = measure(w);
    std::vector<double> g(atoms.size());
    if (inst.has_influence()) {
      const ScalarField h = inst.influence(mu);
      for (std::size_t i = 0; i < atoms.size(); ++i) g[i] = h(atoms[i]);
    } else {
      for (std::size_t i = 0; i < atoms.size(); ++i) g[i] = fd_influence(inst, mu, atoms[i]);
    }
    return g;
  };

  const double J0 = J(w0);
  std::vector<double> w = w0;
  double Jw = J0;
  for (int it = 0; it < fc.inner_max_iters; ++it) {
    const std::vector<double> g = gradient(w);
    std::size_t toward = 0, away = atoms.size();
    double weighted = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (std::isnan(g[i])) throw OracleError("influence is NaN at an atom", atoms[i]);
      if (g[i] < g[toward]) toward = i;
      if (w[i] > 0.0) {
        weighted += w[i] * g[i];
        if (away == atoms.size() || g[i] > g[away]) away = i;
      }
    }
    const double gap = weighted - g[toward];
    if (!(gap > fc.inner_gap_tol) || away == toward) break;

    const double hi = w[away];
    auto phi = [&](double gamma) {
      std::vector<double> v = w;
      v[toward] += gamma;
      v[away] = std::max(0.0, v[away] - gamma);
      // Moving all mass off an atom can leave J undefined (singular design).
      try {
        return J(v);
      } catch (const SingularityError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    double value = Jw;
    const double gamma = line_search(phi, hi, value);
    if (!(value < Jw) || gamma == 0.0) break;
    w[toward] += gamma;
    w[away] = gamma == hi ? 0.0 : w[away] - gamma;
    Jw = value;
  }
  if (Jw > J0 + 1e-12 * (1.0 + std::abs(J0)))
    throw InnerSolverError("simplex reweighting increased J from " + std::to_string(J0) + " to " +
                           std::to_string(Jw));
  double s = 0.0;
  for (double v : w) s += v;
  for (double& v : w) v /= s;
  return w;
}

}  // namespace mfw
