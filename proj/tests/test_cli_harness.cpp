#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "registry.hpp"

using namespace shiftmc::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("shiftmc_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig config(const std::string& id, std::map<std::string, std::string> params, const fs::path& out, std::uint64_t seed = 1) {
  ExperimentConfig c;
  c.experiment = id;
  c.seed = seed;
  c.out = out.string();
  c.params = std::move(params);
  return c;
}

nlohmann::json report_of(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "report.json")); }

}  // namespace

TEST_CASE("registry ids are unique and every required result is covered") {
  std::set<std::string> ids, anchors;
  for (const auto& e : registry()) {
    CHECK_MESSAGE(ids.insert(e.id).second, "duplicate id " << e.id);
    CHECK_FALSE(e.anchors.empty());
    CHECK_FALSE(e.summary.empty());
    if (e.in_scope) {
      CHECK(static_cast<bool>(e.run));
    } else {
      CHECK_FALSE(e.scope_note.empty());
    }
    anchors.insert(e.anchors.begin(), e.anchors.end());
  }
  for (const auto& a : required_anchors()) CHECK_MESSAGE(anchors.count(a) == 1, "no registry entry for " << a);
  for (const char* id : {"torus-orbit", "lil-iid", "lil-coboundary", "sde-ou-decay", "schauder-roundtrip", "dirichlet-example",
                         "chaos-power-kernel", "chaos-log-kernel", "chaos-oscillating-kernel", "chaos-series-bound"}) {
    CHECK(ids.count(id) == 1);
  }
}

TEST_CASE("every id round-trips through config parsing") {
  for (const auto& e : registry()) {
    ExperimentConfig c;
    c.experiment = e.id;
    c.seed = 18446744073709551615ull;
    c.out = "runs/" + e.id;
    for (const auto& p : e.params) c.params[p.name] = p.default_value;
    CHECK(parse_config(to_flat_text(c)) == c);
    CHECK(parse_config(to_json(c).dump()) == c);
    if (e.in_scope) {
      CHECK(resolve(c).params.size() == e.params.size() + (e.decides ? 1 : 0));
    } else {
      CHECK_THROWS_AS(resolve(c), ConfigError);
    }
  }
}

TEST_CASE("config parsing and validation") {
  const auto flat = parse_config("# comment\nexperiment = torus-orbit\nseed=5\n  horizon = 12  # trailing\n");
  CHECK(flat.experiment == "torus-orbit");
  CHECK(flat.seed == 5);
  CHECK(flat.params.at("horizon") == "12");
  const auto js = parse_config(R"({"experiment": "chaos-log-kernel", "seed": 3, "beta": 0.75, "params": {"n_max": 10}})");
  CHECK(js.params.at("beta") == "0.75");
  CHECK(js.params.at("n_max") == "10");

  CHECK_THROWS_AS(parse_config("seed = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("experiment = a\nexperiment = b\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("experiment = a\nseed = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("experiment = a\nno equals sign\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "a", "x": [1]})"), ConfigError);
  CHECK_THROWS_AS(resolve(parse_config("experiment = nope\n")), ConfigError);
  CHECK_THROWS_AS(resolve(parse_config("experiment = torus-orbit\nhorizn = 3\n")), ConfigError);

  const Params p(std::map<std::string, std::string>{{"a", "1e6"}, {"b", "0.5"}, {"c", "yes"}, {"d", "1, 2.5"}, {"e", "abc"}});
  CHECK(p.integer("a") == 1000000);
  CHECK(p.real("b") == 0.5);
  CHECK(p.flag("c"));
  CHECK(p.reals("d") == std::vector<double>{1.0, 2.5});
  CHECK_THROWS_AS(p.integer("b"), ConfigError);
  CHECK_THROWS_AS(p.real("e"), ConfigError);
  CHECK_THROWS_AS(p.flag("e"), ConfigError);
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(-2.5e-300) == "-2.5e-300");
}

TEST_CASE("runs write their artifacts and torus-orbit reports 1/sqrt 2") {
  std::ostringstream log;
  const auto dir = scratch("torus");
  CHECK(run_and_write(config("torus-orbit", {}, dir), log) == 0);
  for (const char* f : {"manifest.json", "results.csv", "results.schema.json", "report.json"}) CHECK(fs::exists(dir / f));
  const auto report = report_of(dir);
  CHECK(report["membership"] == "member");
  CHECK(std::fabs(report["g_tilde_bound"].get<double>() - 1.0 / std::sqrt(2.0)) < 1e-15);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["params"]["horizon"] == "40");
  CHECK(manifest["params"]["decide"] == "true");
  const auto schema = nlohmann::json::parse(slurp(dir / "results.schema.json"));
  const auto csv = slurp(dir / "results.csv");
  CHECK(csv.rfind("root,N,partial_re,partial_im\n", 0) == 0);
  CHECK(schema["columns"].size() == 4);
  CHECK(csv.find('\r') == std::string::npos);
}

TEST_CASE("same config and seed give byte-identical results") {
  std::ostringstream log;
  for (const auto& [id, params] : std::vector<std::pair<std::string, std::map<std::string, std::string>>>{
           {"sde-ou-decay", {{"outer", "200"}, {"n_max", "3"}, {"time_level", "6"}}},
           {"lil-iid", {{"N", "20000"}}},
           {"brownian-covariance", {{"samples", "300"}}}}) {
    const auto a = scratch(id + "_a"), b = scratch(id + "_b"), c = scratch(id + "_c");
    run_and_write(config(id, params, a, 11), log);
    run_and_write(config(id, params, b, 11), log);
    run_and_write(config(id, params, c, 12), log);
    CHECK(slurp(a / "results.csv") == slurp(b / "results.csv"));
    CHECK(slurp(a / "results.csv") != slurp(c / "results.csv"));
  }
}

TEST_CASE("exit status: decided verdicts give 0, undecided ones 2 when a decision is requested") {
  std::ostringstream log;
  const auto dir = scratch("exit");
  CHECK(run_and_write(config("chaos-log-kernel", {{"beta", "0.75"}}, dir), log) == 0);
  CHECK(report_of(dir)["membership"] == "non-member");
  CHECK(run_and_write(config("chaos-log-kernel", {{"beta", "2"}}, dir), log) == 0);
  CHECK(report_of(dir)["membership"] == "member");

  // (n+1)^{-3/2} without a closed form: neither geometric nor divergent.
  const std::map<std::string, std::string> slow = {{"family", "power"}, {"exponent", "-1.5"}, {"closed_form", "false"}};
  CHECK(run_and_write(config("tail-norm-bound", slow, dir), log) == 2);
  CHECK(report_of(dir)["status"] == "undecided");
  auto no_decision = slow;
  no_decision["decide"] = "false";
  CHECK(run_and_write(config("tail-norm-bound", no_decision, dir), log) == 0);

  CHECK_THROWS_AS(run_and_write(config("lil-proof", {}, dir), log), ConfigError);
  CHECK_THROWS_AS(run_and_write(config("chaos-log-kernel", {{"beta", "x"}}, dir), log), ConfigError);
}

TEST_CASE("lil-iid writes the trace and its running max lies in the band") {
  std::ostringstream log;
  const auto dir = scratch("lil");
  run_and_write(config("lil-iid", {}, dir), log);
  const auto csv = slurp(dir / "results.csv");
  CHECK(csv.rfind("n,lil_statistic\n", 0) == 0);
  const double m = report_of(dir)["running_max"].get<double>();
  CHECK(m >= 0.6);
  CHECK(m <= 1.4);
}
