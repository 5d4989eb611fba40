#include "registry.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace shiftmc::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) throw ConfigError("seed must be an unsigned 64-bit integer, got '" + text + "'");
  return value;
}

void set_key(ExperimentConfig& config, std::set<std::string>& seen, const std::string& key, const std::string& value) {
  if (key.empty()) throw ConfigError("empty key");
  if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'");
  if (key == "experiment") {
    config.experiment = value;
  } else if (key == "seed") {
    config.seed = parse_seed(value);
  } else if (key == "out") {
    config.out = value;
  } else {
    config.params[key] = value;
  }
}

std::string json_scalar(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) return format_real(v.get<double>());
  throw ConfigError("value of '" + key + "' must be a string, number or boolean");
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

// --- params -------------------------------------------------------------------

const std::string& Params::text(const std::string& name) const {
  const auto it = values_.find(name);
  if (it == values_.end()) throw ConfigError("missing parameter '" + name + "'");
  return it->second;
}

double Params::real(const std::string& name) const {
  const auto& t = text(name);
  double value = 0.0;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (t.empty() || ec != std::errc() || ptr != end || !std::isfinite(value))
    throw ConfigError("parameter '" + name + "' must be a finite number, got '" + t + "'");
  return value;
}

std::int64_t Params::integer(const std::string& name) const {
  const auto& t = text(name);
  // Accept 1e6-style integers since sizes are often written that way.
  std::int64_t value = 0;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (!t.empty() && ec == std::errc() && ptr == end) return value;
  const double r = real(name);
  if (r != std::floor(r) || std::fabs(r) > 9.0e15) throw ConfigError("parameter '" + name + "' must be an integer, got '" + t + "'");
  return static_cast<std::int64_t>(r);
}

bool Params::flag(const std::string& name) const {
  const auto& t = text(name);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("parameter '" + name + "' must be true or false, got '" + t + "'");
}

std::vector<double> Params::reals(const std::string& name) const {
  std::vector<double> out;
  std::stringstream ss(text(name));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    Params one(std::map<std::string, std::string>{{name, item}});
    out.push_back(one.real(name));
  }
  if (out.empty()) throw ConfigError("parameter '" + name + "' needs at least one number");
  return out;
}

// --- tables -------------------------------------------------------------------

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw std::runtime_error("format_real: conversion failed");
  return std::string(buf, ptr);
}

void ResultTable::add(std::vector<std::string> row) {
  if (row.size() != columns.size()) throw std::logic_error("ResultTable: row width does not match the columns");
  rows.push_back(std::move(row));
}

std::string ResultTable::csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i].name;
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
    out += '\n';
  }
  return out;
}

// --- config -------------------------------------------------------------------

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::set<std::string> seen;
  const auto start = text.find_first_not_of(" \t\r\n");
  if (start != std::string::npos && text[start] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed JSON config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("JSON config must be an object");
    for (const auto& [key, value] : j.items()) {
      if (key == "params") {
        if (!value.is_object()) throw ConfigError("'params' must be an object");
        for (const auto& [pk, pv] : value.items()) {
          if (pk == "experiment" || pk == "seed" || pk == "out" || pk == "params")
            throw ConfigError("'" + pk + "' is not a parameter name");
          set_key(config, seen, pk, json_scalar(pv, pk));
        }
      } else {
        set_key(config, seen, key, json_scalar(value, key));
      }
    }
  } else {
    std::stringstream ss(text);
    std::string line;
    int number = 0;
    while (std::getline(ss, line)) {
      ++number;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
      set_key(config, seen, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }
  if (config.experiment.empty()) throw ConfigError("config does not name an experiment");
  return config;
}

std::string to_flat_text(const ExperimentConfig& config) {
  std::string out = "experiment = " + config.experiment + "\nseed = " + std::to_string(config.seed) + "\nout = " + config.out + "\n";
  for (const auto& [k, v] : config.params) out += k + " = " + v + "\n";
  return out;
}

nlohmann::json to_json(const ExperimentConfig& config) {
  nlohmann::json j;
  j["experiment"] = config.experiment;
  j["seed"] = config.seed;
  j["out"] = config.out;
  j["params"] = nlohmann::json::object();
  for (const auto& [k, v] : config.params) j["params"][k] = v;
  return j;
}

ExperimentConfig resolve(const ExperimentConfig& config) {
  const auto& exp = find_experiment(config.experiment);
  if (!exp.in_scope) throw ConfigError("experiment '" + exp.id + "' is out of scope: " + exp.scope_note);
  std::map<std::string, std::string> defaults;
  for (const auto& p : exp.params) defaults[p.name] = p.default_value;
  if (exp.decides) defaults["decide"] = "true";
  ExperimentConfig resolved = config;
  for (const auto& [k, v] : config.params) {
    if (!defaults.count(k)) throw ConfigError("unknown key '" + k + "' for experiment '" + exp.id + "'");
  }
  for (const auto& [k, v] : defaults) resolved.params.emplace(k, v);
  return resolved;
}

// --- registry lookups -----------------------------------------------------------

const Experiment& find_experiment(const std::string& id) {
  for (const auto& e : registry()) {
    if (e.id == id) return e;
  }
  throw ConfigError("unknown experiment '" + id + "' (see `list`)");
}

// --- running ----------------------------------------------------------------------

int run_and_write(const ExperimentConfig& config, std::ostream& log) {
  const ExperimentConfig resolved = resolve(config);
  const auto& exp = find_experiment(resolved.experiment);
  const Params params(resolved.params);
  const bool decide = exp.decides && params.flag("decide");

  namespace fs = std::filesystem;
  const fs::path dir(resolved.out);
  fs::create_directories(dir);

  nlohmann::json manifest = to_json(resolved);
  manifest["anchors"] = exp.anchors;
  manifest["summary"] = exp.summary;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  const auto start = std::chrono::steady_clock::now();
  ExperimentOutput output = exp.run(params, resolved.seed);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  write_file(dir / "results.csv", output.table.csv());

  nlohmann::json schema;
  schema["experiment"] = exp.id;
  schema["file"] = "results.csv";
  schema["separator"] = ",";
  schema["decimal"] = ".";
  schema["line_ending"] = "\\n";
  schema["columns"] = nlohmann::json::array();
  for (const auto& c : output.table.columns) schema["columns"].push_back({{"name", c.name}, {"description", c.description}});
  write_file(dir / "results.schema.json", schema.dump(2) + "\n");

  const int status = decide && output.undecided ? 2 : 0;
  nlohmann::json report = output.report;
  report["experiment"] = exp.id;
  report["seed"] = resolved.seed;
  report["undecided"] = output.undecided;
  report["exit_status"] = status;
  report["runtime_seconds"] = seconds;
  write_file(dir / "report.json", report.dump(2) + "\n");

  log << exp.id << ": wrote " << dir.string() << " (" << output.table.rows.size() << " rows, " << format_real(std::round(seconds * 1000) / 1000)
      << " s)" << (status == 2 ? ", undecided" : "") << "\n";
  return status;
}

}  // namespace shiftmc::cli
