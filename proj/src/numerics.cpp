#include "shiftmc/numerics.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <stdexcept>

namespace shiftmc {
namespace {

template <int N>
QuadratureRule make_rule(double a, double b) {
  using Gauss = boost::math::quadrature::gauss<double, N>;
  const auto& abscissa = Gauss::abscissa();
  const auto& weights = Gauss::weights();
  const double half = 0.5 * (b - a);
  const double centre = 0.5 * (a + b);
  QuadratureRule rule;
  rule.nodes.reserve(N);
  rule.weights.reserve(N);
  // boost stores the non-negative half of a symmetric rule.
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    const double x = abscissa[i];
    const double w = weights[i];
    if (x == 0.0) {
      rule.nodes.push_back(centre);
      rule.weights.push_back(w * half);
      continue;
    }
    rule.nodes.push_back(centre - half * x);
    rule.weights.push_back(w * half);
    rule.nodes.push_back(centre + half * x);
    rule.weights.push_back(w * half);
  }
  return rule;
}

}  // namespace

QuadratureRule gauss_rule(double a, double b, int points) {
  switch (points) {
    case 8:
      return make_rule<8>(a, b);
    case 16:
      return make_rule<16>(a, b);
    case 20:
      return make_rule<20>(a, b);
    case 30:
      return make_rule<30>(a, b);
    default:
      throw std::invalid_argument("gauss_rule: supported sizes are 8, 16, 20, 30");
  }
}

double gauss_legendre(const std::function<double(double)>& fn, double a, double b) {
  static const QuadratureRule unit = gauss_rule(-1.0, 1.0, 20);
  const double half = 0.5 * (b - a);
  const double centre = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < unit.nodes.size(); ++i) sum += unit.weights[i] * fn(centre + half * unit.nodes[i]);
  return sum * half;
}

IntegralResult integrate_to_infinity(const std::function<double(double)>& fn, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("integrate_to_infinity: lower limit must be positive");
  double total = 0.0;
  int quiet_cells = 0;
  double previous = 0.0;
  std::array<double, 8> ratios{};
  double left = a;
  for (int cell = 0; cell < 2000; ++cell) {
    const double right = 2.0 * left;
    if (!std::isfinite(right)) break;
    const double piece = gauss_legendre(fn, left, right);
    if (!std::isfinite(piece)) return {total, false};
    total += piece;
    if (std::fabs(piece) <= 1e-17 * std::fabs(total) || (piece == 0.0 && total == 0.0)) {
      // A sudden zero after non-decaying cells is the integrand over- or
      // underflowing, not convergence.
      if (std::any_of(ratios.begin(), ratios.end(), [](double r) { return r >= 0.999; })) return {total, false};
      if (++quiet_cells >= 4) return {total, true};
    } else {
      quiet_cells = 0;
      if (previous != 0.0) ratios[cell % ratios.size()] = std::fabs(piece / previous);
      previous = piece;
    }
    left = right;
  }
  return {total, false};
}

void RunningMoments::add(double x) noexcept {
  const double n1 = static_cast<double>(n_);
  ++n_;
  const double n = static_cast<double>(n_);
  const double delta = x - mean_;
  const double delta_n = delta / n;
  const double delta_n2 = delta_n * delta_n;
  const double term1 = delta * delta_n * n1;
  mean_ += delta_n;
  m4_ += term1 * delta_n2 * (n * n - 3 * n + 3) + 6 * delta_n2 * m2_ - 4 * delta_n * m3_;
  m3_ += term1 * delta_n * (n - 2) - 3 * delta_n * m2_;
  m2_ += term1;
}

double RunningMoments::variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }

double RunningMoments::stderr_of_mean() const noexcept {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

double RunningMoments::stderr_of_variance() const noexcept {
  if (n_ < 4) return 0.0;
  const double n = static_cast<double>(n_);
  const double mu2 = m2_ / n;
  const double mu4 = m4_ / n;
  const double var_of_var = (mu4 - mu2 * mu2 * (n - 3.0) / (n - 1.0)) / n;
  return var_of_var > 0.0 ? std::sqrt(var_of_var) : 0.0;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: x values are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    fit.residual_ss += r * r;
  }
  fit.slope_stderr = x.size() > 2 ? std::sqrt(fit.residual_ss / (n - 2.0) / sxx) : 0.0;
  return fit;
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_pvalue(double statistic, std::size_t n) {
  const double root_n = std::sqrt(static_cast<double>(n));
  const double lambda = (root_n + 0.12 + 0.11 / root_n) * statistic;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double standard_normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace shiftmc
