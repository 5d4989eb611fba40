#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "shiftmc/ergodic_engine.hpp"
#include "shiftmc/gordin_criteria.hpp"

using namespace shiftmc;

namespace {

const Observable x0{[](const ShiftSystem& s) { return s.coordinate(0); }, {0, 0}, "x0"};
const Observable product{[](const ShiftSystem& s) { return s.coordinate(0) * s.coordinate(1); }, {0, 1}, "x0x1"};
// h o tau^{-1} - h with h = X_0 X_1.
const Observable coboundary{[](const ShiftSystem& s) { return s.coordinate(1) * s.coordinate(2) - s.coordinate(0) * s.coordinate(1); },
                            {0, 2},
                            "coboundary"};

SystemFactory uniform_factory() {
  return [](std::uint64_t seed) { return ShiftSystem::bernoulli(make_sequence(seed, 1)); };
}

}  // namespace

TEST_CASE("lil statistic") {
  CHECK(lil_statistic(0.0, 100) == 0.0);
  CHECK(lil_statistic(std::sqrt(2 * 100 * std::log(std::log(100.0))), 100) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lil_statistic(-3.0, 50) == lil_statistic(3.0, 50));
  CHECK_THROWS_AS(lil_statistic(1.0, 2), std::domain_error);
  const auto c = lil_checkpoints(1000);
  CHECK(c.front() == 10);
  CHECK(c[1] == 13);
  for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] > c[i - 1]);
}

TEST_CASE("birkhoff sums of simple observables") {
  const auto s = ShiftSystem::bernoulli(make_sequence(42, 1));
  const auto stats = birkhoff_sum(s, x0, 100000, 0.5);
  CHECK(stats.mean_estimate == stats.sum / 100000.0);
  CHECK(std::fabs(stats.mean_estimate) <= 4.0 / std::sqrt(100000.0));
  for (std::size_t i = 1; i < stats.lil_trace.size(); ++i) CHECK(stats.lil_trace[i].n > stats.lil_trace[i - 1].n);

  const Observable constant{[](const ShiftSystem&) { return 2.5; }, {0, 0}, "c"};
  CHECK(birkhoff_sum(s, constant, 1000, 2.5).sum == 0.0);

  const Observable broken{[](const ShiftSystem& st) {
                            if (st.offset() == 17) throw std::runtime_error("boom");
                            return 0.0;
                          },
                          {0, 0},
                          "broken"};
  CHECK_THROWS_WITH_AS(birkhoff_sum(s, broken, 100, 0.0), doctest::Contains("step 17"), std::runtime_error);
  CHECK_THROWS_AS(birkhoff_sum(s, x0, 0, 0.0), std::invalid_argument);
}

TEST_CASE("coboundary sums telescope") {
  const auto s = ShiftSystem::bernoulli(make_sequence(9, 1, BaseMeasure::Gaussian));
  const auto h = [](const ShiftSystem& st) { return st.coordinate(0) * st.coordinate(1); };
  for (std::int64_t n : {1, 2, 10, 137, 1000}) {
    const auto stats = birkhoff_sum(s, coboundary, n, 0.0);
    const double expected = h(shift_apply(s, -1)) - h(shift_apply(s, n));
    CHECK(std::fabs(stats.sum - expected) <= 1e-11);
  }
}

TEST_CASE("runs are reproducible") {
  BirkhoffOptions opt;
  opt.max_window = {{1000, 20000}};
  const auto a = birkhoff_sum(ShiftSystem::bernoulli(make_sequence(5, 1)), product, 20000, 0.25, opt);
  const auto b = birkhoff_sum(ShiftSystem::bernoulli(make_sequence(5, 1)), product, 20000, 0.25, opt);
  CHECK(run_record_row(5, a, false) == run_record_row(5, b, false));
  REQUIRE(a.lil_trace.size() == b.lil_trace.size());
  for (std::size_t i = 0; i < a.lil_trace.size(); ++i) CHECK(a.lil_trace[i].statistic == b.lil_trace[i].statistic);
  CHECK(*a.running_max == *b.running_max);
  CHECK(run_record_header() == "seed,N,S_N,mean_estimate,lil_statistic,wall_time");
}

TEST_CASE("rate estimates") {
  auto r = rate_estimate(uniform_factory(), x0, 10000, 200, 0.5, 1);
  CHECK(std::fabs(r.value - std::sqrt(1.0 / 12.0)) <= 3 * r.stderr);
  const Observable constant{[](const ShiftSystem&) { return 1.0; }, {0, 0}, "c"};
  r = rate_estimate(uniform_factory(), constant, 1000, 5, 1.0, 1);
  CHECK(r.value == 0.0);
  CHECK_THROWS_AS(rate_estimate(uniform_factory(), x0, 10, 1, 0.5, 1), std::invalid_argument);
}

TEST_CASE("classical Monte Carlo baseline") {
  const auto m = classical_mc(uniform_factory(), x0, 10000, 3);
  CHECK(std::fabs(m.mean - 0.5) <= 3 * m.stderr);
  const Observable constant{[](const ShiftSystem&) { return 4.0; }, {0, 0}, "c"};
  const auto c = classical_mc(uniform_factory(), constant, 100, 3);
  CHECK(c.mean == 4.0);
  CHECK(c.stderr == 0.0);

  // Both errors scale as 1/sqrt(N); their ratio is ||g~|| / ||f - E f||.
  // For X_0 X_1 on uniform coordinates: sqrt((7/144 + 2/48) / (7/144)).
  const auto cmp = compare_methods(uniform_factory(), product, 0.25, 4000, 60, 11);
  const double expected = std::sqrt((7.0 / 144 + 2.0 / 48) / (7.0 / 144));
  CHECK(cmp.ratio() == doctest::Approx(expected).epsilon(0.35));
}

TEST_CASE("LIL running max respects the d-coordinate bound") {
  // f = X_0 X_1 depends on d = 2 coordinates.
  const double centered = std::sqrt(7.0 / 144.0);
  const double limit = lemma7_bound(2, centered) + 0.3;
  BirkhoffOptions opt;
  opt.max_window = {{1000, 1000000}};
  int inside = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto stats = birkhoff_sum(uniform_factory()(seed), product, 1000000, 0.25, opt);
    if (*stats.running_max <= limit) ++inside;
  }
  CHECK(inside >= 19);
}
