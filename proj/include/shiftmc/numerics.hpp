#pragma once

// Small numerical helpers shared by the modules: Gauss-Legendre rules,
// integrals over half-lines, running moments, regression and the
// Kolmogorov-Smirnov statistic.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace shiftmc {

/// 20-point Gauss-Legendre on [a, b].
double gauss_legendre(const std::function<double(double)>& fn, double a, double b);

/// Gauss-Legendre nodes and weights mapped to [a, b], `points` in {8, 16, 20, 30}.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureRule gauss_rule(double a, double b, int points = 20);

struct IntegralResult {
  double value = 0.0;
  bool finite = true;
};

/// Integral of fn over [a, inf) on geometric cells [a 2^j, a 2^{j+1}].
/// `finite` is false when cell contributions have not died out before the
/// cells run past the double range. Requires a > 0.
IntegralResult integrate_to_infinity(const std::function<double(double)>& fn, double a);

/// Welford accumulator.
class RunningMoments {
 public:
  void add(double x) noexcept;
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance.
  double variance() const noexcept;
  double stderr_of_mean() const noexcept;
  /// Standard error of the sample variance (normal-free, fourth-moment form).
  double stderr_of_variance() const noexcept;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
};

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double residual_ss = 0.0;
};

/// Ordinary least squares y = intercept + slope x. Needs at least two points.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// sup_x |F_n(x) - F(x)| for the sample against a continuous CDF.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Asymptotic Kolmogorov p-value with Stephens' finite-n correction.
double ks_pvalue(double statistic, std::size_t n);

double standard_normal_cdf(double x) noexcept;

}  // namespace shiftmc
