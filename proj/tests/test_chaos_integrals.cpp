#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doctest.h"
#include "json.hpp"
#include "shiftmc/chaos_integrals.hpp"
#include "shiftmc/numerics.hpp"

using namespace shiftmc;

namespace {

constexpr double kA = std::numbers::ln2;

KernelSpec custom_power(double alpha) {
  return KernelSpec::from_function([alpha](std::span<const double> t) { return std::pow(t[0], -alpha); });
}

// Composite Simpson of (sum_{k<=n} (-1)^k sin(pi L/a)/(L + k a))^2 over
// [0, cells * a], k = 0 only on L >= a.
double simpson_oscillating(int n, int cells) {
  const int per_cell = 200;
  const auto g = [n](double L) {
    double s = 0.0;
    for (int k = 0; k <= n; ++k) {
      if (k == 0 && L < kA) continue;
      s += (k % 2 == 0 ? 1.0 : -1.0) * std::sin(std::numbers::pi * L / kA) / (L + k * kA);
    }
    return s * s;
  };
  double total = 0.0;
  for (int c = 0; c < cells; ++c) {
    const double lo = c * kA, step = kA / per_cell;
    double acc = g(lo) + g(lo + kA);
    for (int i = 1; i < per_cell; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * g(lo + i * step);
    total += acc * step / 3.0;
  }
  return total;
}

}  // namespace

TEST_CASE("shifted kernels") {
  const auto p = KernelSpec::power(0.25);
  const auto p3 = shifted_kernel(p, 3);
  CHECK(p3.family == KernelFamily::Power);
  CHECK(p3.coefficient == doctest::Approx(std::pow(2.0, -3.0 * 0.25)));
  CHECK(p3(0.3) == doctest::Approx(std::pow(2.0, -1.5) * std::pow(0.3 / 8.0, -0.25)));
  CHECK(shifted_kernel(p, 0)(0.7) == p(0.7));
  CHECK_THROWS_AS(shifted_kernel(p, -1), std::invalid_argument);

  const auto c = KernelSpec::from_function([](std::span<const double> t) { return std::exp(t[0]); });
  CHECK(shifted_kernel(c, 2)(0.6) == doctest::Approx(0.5 * std::exp(0.15)));

  // Log families: 2^{-n/2} h(t / 2^n) directly against the base formula.
  const auto lp = KernelSpec::log_power(1.5);
  const auto base = [](double x) { return x <= 0.5 ? 1.0 / (std::sqrt(x) * std::pow(-std::log(x), 1.5)) : 0.0; };
  for (double t : {0.1, 0.4, 0.6, 0.95}) {
    CHECK(lp(t) == doctest::Approx(base(t)));
    CHECK(shifted_kernel(lp, 2)(t) == doctest::Approx(0.5 * base(t / 4.0)));
  }
  const auto osc = KernelSpec::oscillating();
  const auto osc_base = [](double x) {
    return x <= 0.5 ? std::sin(std::numbers::pi * std::log2(x)) / (std::sqrt(x) * std::log(x)) : 0.0;
  };
  for (double t : {0.03, 0.3, 0.45, 0.8}) {
    CHECK(osc(t) == doctest::Approx(osc_base(t)).scale(1e-12));
    CHECK(shifted_kernel(osc, 3)(t) == doctest::Approx(std::pow(2.0, -1.5) * osc_base(t / 8.0)).scale(1e-12));
    CHECK(KernelSpec::oscillating(true)(t) == doctest::Approx(std::fabs(osc_base(t))).scale(1e-12));
  }
}

TEST_CASE("power kernel: closed form and quadrature") {
  const double alpha = 0.25;
  const double q = std::pow(2.0, -(0.5 - alpha));
  const double oracle = 2.0 / ((1.0 - q) * (1.0 - q));  // int t^{-1/2} = 2 times (sum q^n)^2
  CHECK(oracle == doctest::Approx(79.01).epsilon(1e-4));
  const auto check = gordin_check_kernel(KernelSpec::power(alpha), 40);
  CHECK(check.report.membership == Membership::Member);
  CHECK(check.sums.sup == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(std::isinf(check.report.g_tilde_bound));
  for (int n = 0; n <= 40; n += 5) {
    const double partial = (1.0 - std::pow(q, n + 1)) / (1.0 - q);
    CHECK(check.sums.norms[static_cast<std::size_t>(n)] == doctest::Approx(2.0 * partial * partial).epsilon(1e-12));
  }

  const auto quad = gordin_check_kernel(custom_power(alpha), 40);
  REQUIRE(quad.sums.norms.size() == 41);
  for (std::size_t n = 0; n < 41; ++n) {
    CHECK(quad.sums.norms[n] == doctest::Approx(check.sums.norms[n]).epsilon(1e-6));
  }
  CHECK(quad.sums.method == "quadrature");
  CHECK(quad.report.membership == Membership::Member);
  CHECK(quad.sums.sup == doctest::Approx(oracle).epsilon(0.01));
  CHECK_THROWS_AS(gordin_check_kernel(KernelSpec::power(0.5), 10), std::domain_error);
}

TEST_CASE("higher-order power kernels on the simplex") {
  // int_simplex prod t_i^{-2 alpha} = 1 / (m! (1 - 2 alpha)^m).
  auto root = KernelSpec::from_function([](std::span<const double> t) { return std::sqrt(t[0] * t[1]); }, 2);
  const auto norms2 = kernel_sum_norms_quadrature(root, 0);
  CHECK(norms2[0] == doctest::Approx(1.0 / 8.0).epsilon(1e-9));
  CHECK(kernel_l2_norm_squared(KernelSpec::power(-0.5, 2)) == doctest::Approx(1.0 / 8.0));

  SimplexQuadrature coarse;
  coarse.levels_per_axis = 12;
  auto ones = KernelSpec::from_function([](std::span<const double>) { return 1.0; }, 3);
  // T^n of the constant kernel is 2^{-3n/2}: norms are (sum 2^{-3n/2})^2 / 6.
  const auto norms3 = kernel_sum_norms_quadrature(ones, 2, coarse);
  double partial = 0.0;
  for (int n = 0; n <= 2; ++n) {
    partial += std::pow(2.0, -1.5 * n);
    CHECK(norms3[static_cast<std::size_t>(n)] == doctest::Approx(partial * partial / 6.0).epsilon(1e-9));
  }
  // Strong singularities leave mass at the finest cells.
  auto sharp = KernelSpec::from_function([](std::span<const double> t) { return std::pow(t[0] * t[1], -0.45); }, 2);
  CHECK_THROWS_AS(kernel_sum_norms_quadrature(sharp, 0), std::runtime_error);
  CHECK(gordin_check_kernel(sharp, 4).report.membership == Membership::Undecided);
}

TEST_CASE("log-power kernel classification") {
  for (double beta : {1.6, 2.0, 3.0}) {
    const auto c = gordin_check_kernel(KernelSpec::log_power(beta), 40);
    CHECK(c.report.membership == Membership::Member);
    CHECK(std::isfinite(c.sums.sup));
  }
  for (double beta : {0.6, 0.75, 1.0, 1.25, 1.5}) {
    const auto c = gordin_check_kernel(KernelSpec::log_power(beta), 40);
    CHECK(c.report.membership == Membership::NonMember);
    CHECK(std::isinf(c.sums.sup));
    // Partial sums keep growing.
    CHECK(c.sums.norms[40] > c.sums.norms[20]);
    CHECK(c.sums.norms[20] > c.sums.norms[0]);
  }
  CHECK_THROWS_AS(KernelSpec::log_power(0.5), std::domain_error);

  // ||h||^2 = int_a^inf L^{-2 beta} dL.
  const auto two = gordin_check_kernel(KernelSpec::log_power(2.0), 40);
  CHECK(two.sums.norms[0] == doctest::Approx(std::pow(kA, -3.0) / 3.0).epsilon(1e-10));
  CHECK(two.sums.term_norms[5] == doctest::Approx(std::pow(5.0 * kA, -3.0) / 3.0).epsilon(1e-10));

  // beta = 2 limit: sum_k (k a + L)^{-2} = trigamma(L / a) / a^2.
  const auto total = [](double L) {
    const double s = L < kA ? boost::math::trigamma(L / kA + 1.0) : boost::math::trigamma(L / kA);
    return s * s / (kA * kA * kA * kA);
  };
  const double head = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(total, 0.0, kA, 15, 1e-14);
  boost::math::quadrature::exp_sinh<double> tail;
  const double rest = tail.integrate([&](double x) { return total(kA + x); }, 1e-14);
  REQUIRE(two.sums.limit);
  CHECK(*two.sums.limit == doctest::Approx(head + rest).epsilon(1e-8));
  CHECK(two.sums.sup == doctest::Approx(head + rest).epsilon(1e-8));
}

TEST_CASE("oscillating kernel: member although sum ||T^n F|| diverges") {
  const auto signed_check = gordin_check_kernel(KernelSpec::oscillating(), 40);
  const auto abs_check = gordin_check_kernel(KernelSpec::oscillating(true), 40);
  CHECK(signed_check.report.membership == Membership::Member);
  CHECK(abs_check.report.membership == Membership::NonMember);
  REQUIRE(signed_check.sums.limit);
  double biggest = 0.0;
  for (double v : signed_check.sums.norms) biggest = std::max(biggest, v);
  CHECK(biggest < 2.0 * *signed_check.sums.limit);
  CHECK(signed_check.sums.norms[40] == doctest::Approx(*signed_check.sums.limit).epsilon(0.05));

  // |h|: growth fit on the partial-sum norms, roughly linear in N.
  std::vector<double> xs, ys;
  for (int n = 10; n <= 40; ++n) {
    xs.push_back(std::log(n + 1.0));
    ys.push_back(std::log(abs_check.sums.norms[static_cast<std::size_t>(n)]));
    CHECK(abs_check.sums.norms[static_cast<std::size_t>(n)] > abs_check.sums.norms[static_cast<std::size_t>(n - 1)]);
  }
  CHECK(fit_line(xs, ys).slope > 0.5);

  // ||T^n F||^2 ~ 1 / (2 n a): the square roots are not summable.
  const double t40 = signed_check.sums.term_norms[40];
  CHECK(t40 * 2.0 * 40.0 * kA == doctest::Approx(1.0).epsilon(0.05));

  // Partial sums against composite Simpson.
  CHECK(signed_check.sums.norms[3] == doctest::Approx(simpson_oscillating(3, 4096)).epsilon(1e-6));
  CHECK(signed_check.sums.norms[0] == doctest::Approx(kernel_l2_norm_squared(KernelSpec::oscillating())).epsilon(1e-12));
}

TEST_CASE("chaos series bound") {
  const auto b = chaos_bound({1.0, 1.0}, 0.0);
  REQUIRE(b.equal_alpha_series);
  CHECK(*b.equal_alpha_series == doctest::Approx(1.5));
  const double r = 1.0 - std::pow(2.0, -0.5);
  CHECK(b.bound == doctest::Approx(1.0 / (r * r) + 1.0 / (0.25 * 2.0)));
  CHECK(chaos_bound({0.0, 0.0, 0.0}, 0.2).bound == 0.0);
  CHECK(*chaos_bound({0.0, 0.0, 0.0}, 0.2).equal_alpha_series == 0.0);

  double previous = 0.0;
  for (double alpha = -0.5; alpha < 0.5; alpha += 0.05) {
    const auto v = chaos_bound({1.0, 0.5, 0.25, 0.125}, alpha);
    CHECK(v.bound > previous);
    CHECK(v.bound >= *v.equal_alpha_series);
    previous = v.bound;
  }
  CHECK(chaos_bound({1.0}, 0.4999).bound > 1e4);
  CHECK_THROWS_AS(chaos_bound({1.0}, 0.5), std::domain_error);

  const auto mixed = chaos_bound({1.0, 2.0}, {{0.1}, {0.2, 0.3}});
  CHECK_FALSE(mixed.equal_alpha_series);
  const double gap1 = 1.0 - std::pow(2.0, 0.1 - 0.5), gap2 = 1.0 - std::pow(2.0, 0.5 - 1.0);
  CHECK(mixed.bound == doctest::Approx(1.0 / (gap1 * gap1 * 0.8) + 4.0 / (gap2 * gap2 * (1.0 - 0.4) * (2.0 - 1.0))));
  CHECK_THROWS_AS(chaos_bound({1.0, 2.0}, {{0.1}, {0.2}}), std::invalid_argument);
}

TEST_CASE("order-one Ito sums") {
  const DyadicPathStore path(8);
  const auto one = KernelSpec::power(0.0);
  CHECK(sample_wiener_integral(one, path) == doctest::Approx(path.brownian(1.0)).epsilon(1e-13));
  auto zero = KernelSpec::power(0.0);
  zero.coefficient = 0.0;
  CHECK(sample_wiener_integral(zero, path) == 0.0);
  CHECK_THROWS_AS(sample_wiener_integral(one, path, {20, 6}), std::invalid_argument);

  const auto quarter = KernelSpec::power(0.25);
  const double deficit = isometry_deficit(quarter);
  CHECK(deficit > 0.0);
  CHECK(deficit < 0.01);
  RunningMoments second;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const double v = sample_wiener_integral(quarter, DyadicPathStore(seed));
    second.add(v * v);
  }
  CHECK(std::fabs(second.mean() - (2.0 - deficit)) < 3.0 * second.stderr_of_mean());

  // T F on P equals the integral of h 1_{t <= 1/2} on the shifted path.
  const auto h = custom_power(0.25);
  const auto half = KernelSpec::from_function([](std::span<const double> t) { return t[0] <= 0.5 ? std::pow(t[0], -0.25) : 0.0; });
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const DyadicPathStore p(seed);
    const double direct = sample_wiener_integral(shifted_kernel(h, 1), p, {14, 6});
    const double via_shift = sample_wiener_integral(half, scaling_shift(p), {15, 6});
    CHECK(std::fabs(direct - via_shift) < 1e-12);
  }

  // Observable on the Wiener-scaling system reads the same path.
  const auto f = wiener_integral_observable(quarter);
  const DyadicPathStore store(44);
  CHECK(f(ShiftSystem::wiener(store)) == sample_wiener_integral(quarter, store));
}

TEST_CASE("kernel specs survive json") {
  for (const auto& k : {KernelSpec::power(0.3, 2), KernelSpec::log_power(1.7), shifted_kernel(KernelSpec::oscillating(true), 4)}) {
    const auto back = kernel_from_json(to_json(k));
    CHECK(to_json(back) == to_json(k));
    CHECK(back(std::vector<double>(static_cast<std::size_t>(k.m), 0.2)) ==
          doctest::Approx(k(std::vector<double>(static_cast<std::size_t>(k.m), 0.2))));
  }
  CHECK_THROWS_AS(kernel_from_json(to_json(custom_power(0.1))), std::invalid_argument);
  CHECK_THROWS_AS(kernel_from_json(R"({"m":1,"family":"bessel","params":{}})"), std::invalid_argument);
  CHECK(nlohmann::json::parse(to_json(KernelSpec::power(0.25)))["params"]["alpha"] == 0.25);
}
