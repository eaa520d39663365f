#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <set>
#include <sstream>

#include "mfw/harness.hpp"

namespace mfw {

const char* to_string(CheckKind c) {
  switch (c) {
    case CheckKind::bound_dfw: return "bound_dfw";
    case CheckKind::bound_sfw: return "bound_sfw";
    case CheckKind::bound_fixed: return "bound_fixed";
    case CheckKind::gap_nonconvex: return "gap_nonconvex";
    case CheckKind::clt: return "clt";
    case CheckKind::oracle_audit: return "oracle_audit";
    case CheckKind::invariants: return "invariants";
  }
  return "?";
}

CheckKind parse_check(const std::string& s) {
  for (CheckKind c : {CheckKind::bound_dfw, CheckKind::bound_sfw, CheckKind::bound_fixed,
                      CheckKind::gap_nonconvex, CheckKind::clt, CheckKind::oracle_audit,
                      CheckKind::invariants})
    if (s == to_string(c)) return c;
  throw ConfigError("unknown check '" + s + "'");
}

bool is_statistical(CheckKind c) {
  return c == CheckKind::bound_sfw || c == CheckKind::gap_nonconvex || c == CheckKind::clt;
}

bool ExperimentConfig::wants(CheckKind c) const {
  return std::find(checks.begin(), checks.end(), c) != checks.end();
}

void ExperimentConfig::validate() const {
  if (instance.empty()) throw ConfigError("[instance] name is required");
  if (replications < 1) throw ConfigError("replications must be >= 1");
  for (CheckKind c : checks)
    if (is_statistical(c) && replications < 30)
      throw ConfigError(std::string("check ") + to_string(c) + " needs replications >= 30, got " +
                        std::to_string(replications));
  const Variant v = solver.variant;
  if (wants(CheckKind::bound_dfw) && v != Variant::dfw && v != Variant::fc_dfw)
    throw ConfigError("check bound_dfw needs variant dfw or fc_dfw");
  if (wants(CheckKind::bound_sfw) && v != Variant::sfw && v != Variant::fc_sfw)
    throw ConfigError("check bound_sfw needs variant sfw or fc_sfw");
  if (wants(CheckKind::bound_fixed) && v != Variant::fixed_sfw)
    throw ConfigError("check bound_fixed needs variant fixed_sfw");
  if (output.empty()) throw ConfigError("output must not be empty");
  for (int k : check_iters)
    if (k < 1) throw ConfigError("check_iters must be >= 1");
  for (int T : horizons)
    if (T < 2) throw ConfigError("horizons must be >= 2");
  for (std::size_t i = 0; i < clt_sizes.size(); ++i) {
    if (clt_sizes[i] < 1) throw ConfigError("clt_sizes must be >= 1");
    if (i > 0 && clt_sizes[i] <= clt_sizes[i - 1])
      throw ConfigError("clt_sizes must be strictly increasing");
  }
  if (variance_draws < 2) throw ConfigError("variance_draws must be >= 2");
  if (smoothness_pairs < 1) throw ConfigError("smoothness_pairs must be >= 1");
  if (audit_pairs < 1) throw ConfigError("audit_pairs must be >= 1");
  if (audit_draws < 2) throw ConfigError("audit_draws must be >= 2");
  if (c0_replications < 2) throw ConfigError("c0_replications must be >= 2");
  if (!(clt_iteration_power > 0.0 && clt_iteration_power <= 1.0))
    throw ConfigError("clt_iteration_power must lie in (0, 1]");
  try {
    solver.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("[solver] ") + e.what());
  }
}

namespace {

using boost::property_tree::ptree;

class Section {
 public:
  Section(std::string name, const ptree* tree) : name_(std::move(name)), tree_(tree) {}

  std::optional<std::string> raw(const std::string& key) {
    seen_.insert(key);
    if (!tree_) return std::nullopt;
    auto it = tree_->find(key);
    if (it == tree_->not_found()) return std::nullopt;
    return it->second.data();
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (auto v = raw(key)) out = convert<T>(key, *v);
  }

  template <class T>
  void read_list(const std::string& key, std::vector<T>& out) {
    auto v = raw(key);
    if (!v) return;
    std::string s = *v;
    for (char& ch : s)
      if (ch == ',' || ch == ';') ch = ' ';
    std::stringstream ss(s);
    std::vector<T> xs;
    std::string tok;
    while (ss >> tok) xs.push_back(convert<T>(key, tok));
    out = std::move(xs);
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, value] : *tree_) {
      if (!value.empty()) throw ConfigError("[" + name_ + "] nested entries are not allowed");
      if (!seen_.count(key)) throw ConfigError("unknown key '" + key + "' in [" + name_ + "]");
    }
  }

 private:
  template <class T>
  T convert(const std::string& key, const std::string& v) const {
    auto fail = [&]() -> ConfigError {
      return ConfigError("[" + name_ + "] " + key + ": cannot parse '" + v + "'");
    };
    if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw fail();
    } else {
      std::stringstream ss(v);
      T x{};
      if constexpr (std::is_unsigned_v<T>)
        if (!v.empty() && v.front() == '-') throw fail();
      if (!(ss >> x)) throw fail();
      char extra;
      if (ss >> extra) throw fail();
      return x;
    }
  }

  std::string name_;
  const ptree* tree_;
  std::set<std::string> seen_;
};

const ptree* child(const ptree& root, const std::string& name) {
  auto it = root.find(name);
  return it == root.not_found() ? nullptr : &it->second;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ptree root;
  try {
    boost::property_tree::ini_parser::read_ini(in, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [name, section] : root) {
    if (section.empty() && !section.data().empty())
      throw ConfigError("key '" + name + "' outside of any section");
    if (name != "instance" && name != "solver" && name != "experiment")
      throw ConfigError("unknown section [" + name + "]");
  }

  ExperimentConfig cfg;
  if (const ptree* inst = child(root, "instance")) {
    for (const auto& [key, value] : *inst) {
      if (!value.empty()) throw ConfigError("[instance] nested entries are not allowed");
      if (key == "name")
        cfg.instance = value.data();
      else
        cfg.instance_params[key] = value.data();
    }
  }

  Section s("solver", child(root, "solver"));
  SolverConfig& sc = cfg.solver;
  if (auto v = s.raw("variant")) {
    try {
      sc.variant = parse_variant(*v);
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("[solver] ") + e.what());
    }
  }
  if (auto v = s.raw("step_schedule")) {
    if (*v == "harmonic") sc.step_schedule = StepSchedule::harmonic;
    else if (*v == "fixed") sc.step_schedule = StepSchedule::fixed;
    else throw ConfigError("[solver] step_schedule: expected harmonic or fixed");
  }
  if (auto v = s.raw("sample_schedule")) {
    if (*v == "quadratic") sc.sample_schedule = SampleSchedule::quadratic;
    else if (*v == "fixed") sc.sample_schedule = SampleSchedule::fixed;
    else throw ConfigError("[solver] sample_schedule: expected quadratic or fixed");
  }
  s.read("max_iters", sc.max_iters);
  s.read("fixed_eta", sc.fixed_eta);
  s.read("eta_max", sc.eta_max);
  s.read("c_m", sc.c_m);
  s.read("fixed_m", sc.fixed_m);
  s.read("epsilon_tilde", sc.epsilon_tilde);
  s.read("audit_every", sc.audit_every);
  s.read("inner_max_iters", sc.inner.inner_max_iters);
  s.read("inner_gap_tol", sc.inner.inner_gap_tol);
  s.read("grid_points_per_dim", sc.sub.grid_points_per_dim);
  s.read("refine_candidates", sc.sub.refine_candidates);
  s.read("refine_xtol", sc.sub.refine_xtol);
  s.read("refine_max_evals", sc.sub.refine_max_evals);
  s.read("refine", sc.sub.refine);
  s.read("parallel", sc.sub.parallel);
  s.read("seed", sc.seed);
  s.read("gap_every", sc.gap_every);
  s.read("atom_tol", sc.atom_tol);
  s.read("weight_tol", sc.weight_tol);
  s.read("record_timing", sc.record_timing);
  s.reject_unknown();

  Section e("experiment", child(root, "experiment"));
  e.read("replications", cfg.replications);
  e.read("output", cfg.output);
  std::vector<std::string> checks;
  e.read_list("checks", checks);
  for (const auto& c : checks) cfg.checks.push_back(parse_check(c));
  e.read_list("check_iters", cfg.check_iters);
  e.read_list("horizons", cfg.horizons);
  e.read_list("clt_sizes", cfg.clt_sizes);
  e.read("variance_draws", cfg.variance_draws);
  e.read("smoothness_pairs", cfg.smoothness_pairs);
  e.read("audit_pairs", cfg.audit_pairs);
  e.read("audit_draws", cfg.audit_draws);
  e.read("c0_replications", cfg.c0_replications);
  e.read("clt_iteration_power", cfg.clt_iteration_power);
  if (auto v = e.raw("smoothness")) {
    if (*v == "auto") cfg.smoothness = SmoothnessSource::automatic;
    else if (*v == "truth") cfg.smoothness = SmoothnessSource::truth;
    else if (*v == "estimate") cfg.smoothness = SmoothnessSource::estimate;
    else throw ConfigError("[experiment] smoothness: expected auto, truth or estimate");
  }
  e.reject_unknown();

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace mfw
