#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfw/problem.hpp"

namespace mfw {

enum class Variant { dfw, sfw, fixed_sfw, fc_dfw, fc_sfw };
enum class StepSchedule { harmonic, fixed };
enum class SampleSchedule { quadratic, fixed };

const char* to_string(Variant v);
Variant parse_variant(const std::string& s);

/// Inner reweighting over the convex hull of the discovered atoms.
struct FCConfig {
  int inner_max_iters = 200;
  double inner_gap_tol = 1e-10;
  void validate() const;
};

struct SolverConfig {
  Variant variant = Variant::dfw;
  int max_iters = 100;
  StepSchedule step_schedule = StepSchedule::harmonic;
  double fixed_eta = 0.1;
  /// Upper cap on every step; the instance's own step_cap also applies.
  double eta_max = 1.0;
  SampleSchedule sample_schedule = SampleSchedule::quadratic;
  double c_m = 1.0;
  std::size_t fixed_m = 100;
  /// 0 solves each sampled subproblem with `sub`; > 0 uses a coarse
  /// unrefined grid and audits it against `sub` every `audit_every` steps.
  double epsilon_tilde = 0.0;
  int audit_every = 10;
  FCConfig inner;
  SubsolverConfig sub;
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
  /// FW gap recorded at k % gap_every == 0 and at the last row; 0 disables.
  int gap_every = 10;
  double atom_tol = kDefaultAtomTol;
  double weight_tol = 0.0;
  bool keep_iterates = false;
  bool record_timing = false;

  /// eta_k, the step that maps mu_k to mu_{k+1}.
  double step(int k, double instance_cap = 1.0) const;
  /// m_{k+1}, the sample size of the subproblem solved at iteration k.
  std::size_t sample_size(int k) const;
  void validate() const;
};

struct TraceRow {
  int k = 0;
  double objective = 0.0;
  std::optional<double> obj_gap;
  std::optional<double> fw_gap;
  std::size_t atoms = 0;
  double eta = 0.0;       // step that produced this iterate (0 at k = 0)
  std::size_t m = 0;      // sample size behind this iterate (0 at k = 0 or exact)
  std::optional<Point> minimizer;
  double elapsed_ms = 0.0;
};

/// Achieved suboptimality of a coarse sampled subsolve at iteration k.
struct InexactAudit {
  int k = 0;
  double coarse_value = 0.0;
  double reference_value = 0.0;
  double suboptimality() const { return coarse_value - reference_value; }
};

struct Trace {
  std::vector<TraceRow> rows;
  std::optional<AtomicMeasure> final_measure;
  std::vector<AtomicMeasure> iterates;
  std::vector<InexactAudit> audits;
  std::uint64_t seed = 0;
  bool timed = false;
};

/// An oracle or subsolver failed mid-run; carries the rows produced so far.
class SolverAborted : public Error {
 public:
  SolverAborted(const std::string& what, Trace partial)
      : Error(what), partial_(std::move(partial)) {}
  const Trace& partial() const noexcept { return partial_; }

 private:
  Trace partial_;
};

/// mu_{k+1} = (1 - eta_k) mu_k + eta_k delta_{x*}, x* = argmin h_{mu_k}.
Trace run_dfw(const ProblemInstance& inst, const AtomicMeasure& mu0, const SolverConfig& cfg);
/// As run_dfw with x* minimizing a frozen sample average H_{mu_k, m_{k+1}}.
Trace run_sfw(const ProblemInstance& inst, const AtomicMeasure& mu0, const SolverConfig& cfg);
/// Constant step fixed_eta, constant sample fixed_m, epsilon_tilde-inexact subsolves.
Trace run_fixed_sfw(const ProblemInstance& inst, const AtomicMeasure& mu0, const SolverConfig& cfg);
/// Adds one atom per iteration, then minimizes J over the hull of all atoms.
/// The atoms of mu0 count as discovered. Exact subproblem for fc_dfw,
/// sampled for fc_sfw.
Trace run_fully_corrective(const ProblemInstance& inst, const AtomicMeasure& mu0,
                           const SolverConfig& cfg);
/// Dispatches on cfg.variant.
Trace run_solver(const ProblemInstance& inst, const AtomicMeasure& mu0, const SolverConfig& cfg);

/// Approximately minimizes w -> J(sum_i w_i delta_{x_i}) over the simplex,
/// starting from w0. Pairwise Frank-Wolfe on the simplex: the gradient is
/// h_{mu(w)} at the atoms, mass moves from the worst weighted atom to the
/// best one with a golden-section line search on J. Stops when the simplex
/// FW gap falls to inner_gap_tol. Uses finite-difference influence values
/// when the instance has no closed form.
std::vector<double> simplex_reweight(const ProblemInstance& inst, const std::vector<Point>& atoms,
                                     std::vector<double> w0, const FCConfig& fc);

}  // namespace mfw
