#include <cmath>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "shiftmc/numerics.hpp"
#include "shiftmc/sde_functionals.hpp"

using namespace shiftmc;

namespace {

double identity(const State& x) { return x[0]; }

SdeSpec constant_coefficients(double sigma, double drift, double x0) {
  SdeSpec sde;
  sde.sigma = [sigma](const State&, double) { return std::vector<double>{sigma}; };
  sde.b = [drift](const State&, double) { return State{drift}; };
  sde.x0 = {x0};
  return sde;
}

SdeSpec geometric(double x0) {
  SdeSpec sde;
  sde.sigma = [](const State& x, double) { return std::vector<double>{x[0]}; };
  sde.b = [](const State&, double) { return State{0.0}; };
  sde.x0 = {x0};
  return sde;
}

// E min(Y, K) for Y = y exp(W - v/2), W ~ N(0, v): y - call price.
double capped_lognormal_mean(double y, double cap, double v) {
  if (v <= 0.0) return std::min(y, cap);
  const double sd = std::sqrt(v);
  const double d1 = (std::log(y / cap) + v / 2.0) / sd;
  const double d2 = d1 - sd;
  return y - (y * standard_normal_cdf(d1) - cap * standard_normal_cdf(d2));
}

}  // namespace

TEST_CASE("euler-maruyama basic cases") {
  const DyadicPathStore path(11);
  const auto frozen = euler_maruyama(constant_coefficients(0.0, 0.0, 2.5), path, 64, 1.0);
  for (const auto& x : frozen.states) CHECK(x[0] == 2.5);

  const auto walk = euler_maruyama(constant_coefficients(1.0, 0.0, 0.5), path, 128, 1.0);
  for (std::size_t i = 1; i < walk.times.size(); i += 7) {
    CHECK(walk.states[i][0] == doctest::Approx(0.5 + path.brownian(walk.times[i])).epsilon(1e-13));
  }
  CHECK(walk.times.back() == 1.0);

  // Non-dyadic end time goes through pointwise evaluation.
  const auto quarter = euler_maruyama(constant_coefficients(1.0, 0.0, 0.0), path, 3, 0.75);
  CHECK(quarter.states.back()[0] == doctest::Approx(path.brownian(0.75)).epsilon(1e-13));
  CHECK_THROWS_AS(euler_maruyama(constant_coefficients(1.0, 0.0, 0.0), path, 3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(euler_maruyama(constant_coefficients(1.0, 0.0, 0.0), path, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(euler_maruyama(constant_coefficients(1.0, 0.0, 0.0), path, 4, 1.5), std::domain_error);
}

TEST_CASE("deterministic limit converges at order one") {
  SdeSpec ode = constant_coefficients(0.0, 0.0, 1.0);
  ode.b = [](const State& x, double) { return State{-x[0]}; };
  const DyadicPathStore path(1);
  double previous = 0.0;
  for (int k = 4; k <= 12; ++k) {
    const double err = std::fabs(euler_maruyama(ode, path, 1 << k, 1.0).states.back()[0] - std::exp(-1.0));
    if (k > 4) CHECK(previous / err == doctest::Approx(2.0).epsilon(0.05));
    previous = err;
  }
  const auto report = richardson_report(ode, identity, path, 1 << 10, 1.0);
  const double fine_error = std::fabs(report.fine - std::exp(-1.0));
  CHECK(report.error_estimate == doctest::Approx(fine_error).epsilon(0.01));
}

TEST_CASE("non-finite states abort with the step index") {
  SdeSpec blow = constant_coefficients(0.0, 0.0, 10.0);
  blow.b = [](const State& x, double) { return State{1e100 * x[0] * x[0] * x[0]}; };
  try {
    euler_maruyama(blow, DyadicPathStore(1), 64, 1.0);
    FAIL("expected an abort");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("shifted path drives the same increments as B_{2t}/sqrt 2") {
  const SdeSpec ou = ornstein_uhlenbeck(0.3);
  const DyadicPathStore path(99);
  const int steps = 256;
  const auto on_shift = euler_maruyama(ou, scaling_shift(path), steps, 0.5);
  const auto grid = path.brownian_grid(9);  // B at i / 512 on [0, 1]
  State x = ou.x0;
  const double dt = 0.5 / steps;
  for (int i = 0; i < steps; ++i) {
    const double db = (grid[static_cast<std::size_t>(2 * i + 2)] - grid[static_cast<std::size_t>(2 * i)]) / std::sqrt(2.0);
    x[0] += -x[0] * dt + db;
  }
  CHECK(std::fabs(on_shift.states.back()[0] - x[0]) < 1e-12);
}

TEST_CASE("tn functional boundary and constant cases") {
  const SdeSpec ou = ornstein_uhlenbeck(0.7);
  const DyadicPathStore path(5);
  // 2^{-n} = t: no inner expectation, just h(X_t) on the shifted path.
  const auto direct = euler_maruyama(ou, scaling_shift(path, 2), 1 << 8, 0.25);
  CHECK(tn_functional(ou, identity, 0.25, 2, path).value == direct.states.back()[0]);
  const auto constant = tn_functional(ou, [](const State&) { return 3.0; }, 1.0, 3, path);
  CHECK(constant.value == 3.0);
  CHECK(constant.inner_variance == 0.0);
  CHECK_THROWS_AS(tn_functional(ou, identity, 0.2, 1, path), std::domain_error);
  CHECK_THROWS_AS(tn_functional(ou, identity, 1.0, -1, path), std::domain_error);
}

TEST_CASE("OU variance of T^n f matches the exact semigroup oracle") {
  const SdeSpec ou = ornstein_uhlenbeck(1.0);
  DecayOptions options;
  options.outer = 10000;
  options.seed = 21;
  options.tn.time_level = 9;
  options.tn.exact = ou_identity_semigroup();
  const auto diag = holder_decay_diagnostic(ou, identity, 1.0, 1.0, 8, options);
  for (const auto& level : diag.levels) {
    const double oracle = ou_tn_variance(1.0, level.n);
    CHECK(std::fabs(level.variance - oracle) < 3.5 * level.stderr);
  }
  REQUIRE(diag.lambda_hat);
  CHECK(*diag.lambda_hat == doctest::Approx(1.0).epsilon(0.15));
  CHECK(diag.certified);
  CHECK(std::isfinite(diag.implied_bound));
  // sum_n sqrt(oracle variance) for n <= 8 is a lower bound on the implied bound.
  double oracle_sum = 0.0;
  for (int n = 0; n <= 8; ++n) oracle_sum += std::sqrt(ou_tn_variance(1.0, n));
  CHECK(diag.implied_bound > 0.95 * oracle_sum);

  const auto csv = decay_csv(diag);
  CHECK(csv.rfind("n,var_estimate,stderr\n", 0) == 0);
  const auto j = nlohmann::json::parse(to_json(diag));
  CHECK(j["levels"].size() == 9);
  CHECK(j["lambda_hat"].get<double>() == *diag.lambda_hat);
}

TEST_CASE("nested inner paths: tower property and bias-corrected variance") {
  const SdeSpec ou = ornstein_uhlenbeck(1.0);
  TnOptions tn;
  tn.time_level = 7;
  tn.inner = 16;
  tn.seed = 4;
  RunningMoments mean;
  for (std::uint64_t seed = 0; seed < 3000; ++seed) mean.add(tn_functional(ou, identity, 1.0, 2, DyadicPathStore(seed), tn).value);
  CHECK(std::fabs(mean.mean() - std::exp(-1.0)) < 3.0 * mean.stderr_of_mean());

  DecayOptions options;
  options.outer = 3000;
  options.seed = 8;
  options.tn = tn;
  const auto diag = holder_decay_diagnostic(ou, identity, 1.0, 1.0, 3, options);
  for (const auto& level : diag.levels) {
    CHECK(std::fabs(level.variance - ou_tn_variance(1.0, level.n)) < 3.5 * level.stderr);
  }
}

TEST_CASE("constant h gives a degenerate diagnostic") {
  DecayOptions options;
  options.outer = 200;
  options.tn.time_level = 5;
  options.tn.inner = 4;
  const auto diag = holder_decay_diagnostic(ornstein_uhlenbeck(0.0), [](const State&) { return 1.5; }, 1.0, 1.0, 4, options);
  CHECK(diag.degenerate);
  CHECK_FALSE(diag.lambda_hat);
  for (const auto& level : diag.levels) CHECK(level.variance == 0.0);
  CHECK(nlohmann::json::parse(to_json(diag))["lambda_hat"].is_null());
  CHECK_THROWS_AS(holder_decay_diagnostic(ornstein_uhlenbeck(0.0), identity, 0.0, 1.0, 4, options), std::domain_error);
  CHECK_THROWS_AS(holder_decay_diagnostic(ornstein_uhlenbeck(0.0), identity, 1.5, 1.0, 4, options), std::domain_error);
}

TEST_CASE("capped geometric motion decays at rate one") {
  const SdeSpec gbm = geometric(1.0);
  const double cap = 1.2;
  const auto h = [cap](const State& x) { return std::min(x[0], cap); };
  // P_{t-u} h(y) in closed form for dX = X dB.
  const SemigroupFn exact = [cap](const State& y, double u, double t) { return capped_lognormal_mean(y[0], cap, t - u); };

  // Nested inner paths agree with the closed form at one level.
  TnOptions nested;
  nested.time_level = 8;
  nested.inner = 4000;
  const DyadicPathStore path(17);
  const auto mc = tn_functional(gbm, h, 1.0, 1, path, nested);
  TnOptions closed = nested;
  closed.exact = exact;
  const auto cf = tn_functional(gbm, h, 1.0, 1, path, closed);
  CHECK(std::fabs(mc.value - cf.value) < 4.0 * std::sqrt(mc.inner_variance / 4000.0) + 0.01);

  DecayOptions options;
  options.outer = 10000;
  options.seed = 3;
  options.tn.time_level = 9;
  options.tn.exact = exact;
  options.holder_constant = 1.0;
  const auto diag = holder_decay_diagnostic(gbm, h, 1.0, 1.0, 8, options);
  REQUIRE(diag.lambda_hat);
  CHECK(*diag.lambda_hat == doctest::Approx(1.0).epsilon(0.2));
  CHECK(diag.lambda_stderr > 0.0);
  CHECK(diag.certified);

  // A Holder bound that h does not satisfy is rejected.
  options.holder_constant = 0.5;
  CHECK_THROWS_AS(holder_decay_diagnostic(gbm, h, 1.0, 1.0, 2, options), std::invalid_argument);
}

TEST_CASE("measure functionals over point masses") {
  const SdeSpec ou = ornstein_uhlenbeck(0.0);
  const DyadicPathStore path(31);
  const int steps = 256;
  const double s = 0.375;
  SdeSpec from = ou;
  from.x0 = {2.0};
  const auto traj = euler_maruyama(from, path, steps, 1.0);
  CHECK(measure_functional(ou, identity, {{s, {2.0}, 1.0}}, path, steps) == traj.states[96][0]);
  CHECK(measure_functional(ou, identity, {{s, {2.0}, 1.5}, {s, {2.0}, -1.5}}, path, steps) == 0.0);
  CHECK_THROWS_AS(measure_functional(ou, identity, {{0.0, {1.0}, 1.0}}, path, steps), std::domain_error);
  CHECK_THROWS_AS(measure_functional(ou, identity, {{1.5, {1.0}, 1.0}}, path, steps), std::domain_error);

  // Two atoms: E = w1 x1 e^{-s1} + w2 x2 e^{-s2}.
  const std::vector<Atom> mu = {{0.25, {1.0}, 2.0}, {0.75, {-3.0}, 0.5}};
  const double expected = 2.0 * std::exp(-0.25) - 1.5 * std::exp(-0.75);
  RunningMoments m;
  for (std::uint64_t seed = 0; seed < 4000; ++seed) m.add(measure_functional(ou, identity, mu, DyadicPathStore(seed), 128));
  CHECK(std::fabs(m.mean() - expected) < 3.0 * m.stderr_of_mean() + 0.005);
}

TEST_CASE("lipschitz and holder fuzz checks") {
  auto ou = ornstein_uhlenbeck(0.0);
  CHECK(check_lipschitz(ou, 1).ok);
  ou.lipschitz = 0.5;
  CHECK_FALSE(check_lipschitz(ou, 1).ok);
  const auto root = [](const State& x) { return std::sqrt(std::fabs(x[0])); };
  CHECK(check_holder(root, 1, 0.5, 1.0, 2));
  CHECK_FALSE(check_holder(root, 1, 1.0, 1.0, 2));

  SdeSpec bad = ornstein_uhlenbeck(0.0);
  bad.x0 = {0.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
