#include <set>
#include <sstream>

#include "mfw/instances.hpp"
#include "mfw/oracle.hpp"

namespace mfw {

namespace {

class Params {
 public:
  Params(const std::string& instance, const ParamMap& raw) : instance_(instance), raw_(raw) {}

  std::string text(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    auto it = raw_.find(key);
    return it == raw_.end() ? fallback : it->second;
  }

  double number(const std::string& key, double fallback) {
    seen_.insert(key);
    auto it = raw_.find(key);
    if (it == raw_.end()) return fallback;
    return parse_number(key, it->second);
  }

  bool flag(const std::string& key, bool fallback) {
    const std::string v = text(key, fallback ? "true" : "false");
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ArgumentError(instance_ + "." + key + ": expected true or false, got '" + v + "'");
  }

  // "0.2 0.3; 0.8 0.5": points separated by ';', coordinates by spaces or ','.
  std::vector<Point> points(const std::string& key, const std::string& fallback) {
    std::vector<Point> out;
    std::stringstream items(text(key, fallback));
    std::string item;
    while (std::getline(items, item, ';')) {
      for (char& ch : item)
        if (ch == ',') ch = ' ';
      std::stringstream coords(item);
      std::vector<double> xs;
      std::string tok;
      while (coords >> tok) xs.push_back(parse_number(key, tok));
      if (xs.empty()) continue;
      if (xs.size() > Point::kMaxDim)
        throw ArgumentError(instance_ + "." + key + ": points have at most 3 coordinates");
      out.emplace_back(std::span<const double>(xs));
    }
    if (out.empty()) throw ArgumentError(instance_ + "." + key + ": no points given");
    return out;
  }

  // "0, 1.5 -2": scalars separated by commas, semicolons or spaces.
  std::vector<double> numbers(const std::string& key, const std::string& fallback) {
    std::string v = text(key, fallback);
    for (char& ch : v)
      if (ch == ',' || ch == ';') ch = ' ';
    std::stringstream ss(v);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) out.push_back(parse_number(key, tok));
    if (out.empty()) throw ArgumentError(instance_ + "." + key + ": no values given");
    return out;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : raw_)
      if (!seen_.count(key))
        throw ArgumentError("unknown key '" + key + "' for instance '" + instance_ + "'");
  }

 private:
  double parse_number(const std::string& key, const std::string& v) const {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || v.find_first_not_of(" \t", used) != std::string::npos)
      throw ArgumentError(instance_ + "." + key + ": expected a number, got '" + v + "'");
    return x;
  }

  std::string instance_;
  const ParamMap& raw_;
  std::set<std::string> seen_;
};

BoxDomain box(Params& p, const std::string& lower, const std::string& upper) {
  const auto lo = p.points("lower", lower);
  const auto hi = p.points("upper", upper);
  if (lo.size() != 1 || hi.size() != 1) throw ArgumentError("lower/upper must be single points");
  return BoxDomain(lo[0], hi[0]);
}

double scalar_of(const BoxDomain& dom) {
  if (dom.dim() != 1) throw ArgumentError("instance needs a one-dimensional interval");
  return dom.lower()[0];
}

}  // namespace

std::vector<std::string> instance_names() {
  return {"calibration", "nonconvex_calibration", "response_time_a", "response_time_b",
          "doptimal",    "pmeans",                "nn_risk",         "cre",
          "deconvolution"};
}

ProblemInstance make_instance(const std::string& name, const ParamMap& params) {
  Params p(name, params);
  ProblemInstance inst = [&]() -> ProblemInstance {
    if (name == "calibration") {
      const auto f = named_function(p.text("f", "identity"));
      const double y0 = p.number("y0", 0.3);
      const BoxDomain dom = box(p, "0", "1");
      scalar_of(dom);
      return build_calibration(f, y0, dom);
    }
    if (name == "nonconvex_calibration") {
      const auto f = named_function(p.text("f", "identity"));
      const double y0 = p.number("y0", 0.3);
      const double sigma = p.number("noise_sigma", 0.1);
      const BoxDomain dom = box(p, "0", "1");
      scalar_of(dom);
      return build_nonconvex_calibration(f, y0, dom, sigma);
    }
    if (name == "response_time_a") {
      const double n = p.number("cloud_points", 201);
      if (!(n >= 2)) throw ArgumentError("response_time_a.cloud_points must be >= 2");
      return response_time_a_default(static_cast<std::size_t>(n));
    }
    if (name == "response_time_b") return response_time_b_default();
    if (name == "doptimal") {
      const auto basis = polynomial_basis(p.text("basis", "linear"));
      const BoxDomain dom = box(p, "-1", "1");
      return build_doptimal(basis, dom, p.number("det_floor", 0.25));
    }
    if (name == "pmeans") {
      auto demands = p.points("demands", "0.5");
      const BoxDomain dom = box(p, "0", "1");
      return build_pmeans(std::move(demands), dom);
    }
    if (name == "nn_risk") return nn_risk_default();
    if (name == "cre") return build_cre(p.number("a", 1.0), p.number("b", 2.0));
    if (name == "deconvolution") {
      std::vector<double> data = p.numbers("data", "0");
      const double sigma = p.number("sigma", 1.0);
      const BoxDomain dom = box(p, "-1", "1");
      scalar_of(dom);
      return build_deconvolution(std::move(data), sigma, dom);
    }
    throw ArgumentError("unknown instance '" + name + "'");
  }();
  const bool exact_samples = p.flag("exact_samples", false);
  p.reject_unknown();
  return exact_samples ? exact_as_stochastic(std::move(inst)) : inst;
}

}  // namespace mfw
