// Command-line entry point: `list` and `run`.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "registry.hpp"

using namespace shiftmc::cli;

namespace {

void list_experiments(std::ostream& out) {
  for (const auto& e : registry()) {
    out << e.id << (e.in_scope ? "" : " [out of scope]") << "\n  reproduces: ";
    for (std::size_t i = 0; i < e.anchors.size(); ++i) out << (i ? "; " : "") << e.anchors[i];
    out << "\n  " << e.summary << "\n";
    for (const auto& p : e.params) out << "    " << p.name << " = " << p.default_value << "  (" << p.description << ")\n";
    if (e.decides) out << "    decide = true  (exit 2 when the verdict is undecided)\n";
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ergodic Monte Carlo along shifts: experiment runner"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "print every experiment with the result it reproduces");

  auto* run = app.add_subcommand("run", "run one experiment and write its artifacts");
  std::string experiment, config_path, out_dir;
  std::uint64_t seed = 0;
  std::vector<std::string> params;
  run->add_option("--experiment,-e", experiment, "experiment id (see `list`)");
  auto* seed_opt = run->add_option("--seed,-s", seed, "master seed");
  run->add_option("--param,-p", params, "parameter override key=value (repeatable)");
  run->add_option("--out,-o", out_dir, "output directory");
  run->add_option("--config,-c", config_path, "config file: key = value lines or a JSON object");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (list->parsed()) {
    list_experiments(std::cout);
    return 0;
  }

  try {
    ExperimentConfig config;
    if (!config_path.empty()) {
      config = parse_config(read_file(config_path));
    }
    if (!experiment.empty()) config.experiment = experiment;
    if (config.experiment.empty()) throw ConfigError("no experiment given (--experiment or config)");
    if (*seed_opt) config.seed = seed;
    for (const auto& kv : params) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects key=value, got '" + kv + "'");
      const auto key = kv.substr(0, eq);
      if (key == "experiment" || key == "seed" || key == "out") throw ConfigError("'" + key + "' has its own option");
      config.params[key] = kv.substr(eq + 1);
    }
    // Precedence for the output directory: --out, then the environment, then the config.
    if (const char* env = std::getenv(kOutEnv); env && *env) config.out = env;
    if (!out_dir.empty()) config.out = out_dir;
    return run_and_write(config, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
