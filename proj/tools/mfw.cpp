#include <CLI11.hpp>
#include <iostream>
#include <sstream>

#include "mfw/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Frank-Wolfe over probability measures: solver runs and bound checks"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int replications = 0;
  bool quiet = false;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"solve", "run the configured solver once; writes trace.csv and measure.csv"},
      {"sweep", "run every replication; writes traces/ and summary.csv"},
      {"clt", "central limit experiment; writes clt.csv and report.txt"},
      {"audit", "Monte Carlo oracle audit; writes audit.csv and report.txt"},
      {"check", "replications plus every configured check; writes report.txt"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "experiment config (INI)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides [experiment] output)");
    sub->add_option("--seed", seed, "base seed (overrides [solver] seed)");
    sub->add_option("--replications", replications, "replication count")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", quiet, "print nothing but errors");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mfw::kExitParse;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();
  std::ostringstream sink;
  std::ostream& log = quiet ? static_cast<std::ostream&>(sink) : std::cout;

  mfw::ExperimentConfig cfg;
  try {
    cfg = mfw::load_config(config_path);
    if (sub->count("--out")) cfg.output = out_dir;
    if (sub->count("--seed")) cfg.solver.seed = seed;
    if (sub->count("--replications")) cfg.replications = replications;
    cfg.validate();
  } catch (const mfw::ArgumentError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return mfw::kExitParse;
  }
  const int code = mfw::run_command(mfw::parse_command(name), cfg, log);
  if (quiet && code != 0) std::cerr << sink.str();
  return code;
}
