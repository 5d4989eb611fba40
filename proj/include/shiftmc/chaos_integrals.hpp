#pragma once

// Multiple Wiener integrals F = int_{0<t_1<...<t_m<1} h dB^{i_1}...dB^{i_m}
// under the scaling shift. T^n acts on the kernel:
//   h -> 2^{-nm/2} h(t / 2^n),
// so F is in the Gordin class iff sup_N ||sum_{n<=N} T^n h||_{L^2(simplex)} < inf.
//
// Three order-1 families are analysed exactly:
//   power(alpha)   h = c t^{-alpha} (any order m: c prod t_i^{-alpha})
//   log_power(b)   h = t^{-1/2} (-log t)^{-b} on (0, 1/2]
//   oscillating    h = t^{-1/2} sin(pi log2 t) / log t on (0, 1/2], or |h|
// Everything else goes through simplex quadrature and the finite-evidence
// policy of gordin_criteria.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shiftmc/dyadic_path.hpp"
#include "shiftmc/gordin_criteria.hpp"
#include "shiftmc/product_space.hpp"

namespace shiftmc {

enum class KernelFamily { Power, LogPower, Oscillating, Custom };
std::string to_string(KernelFamily family);

struct KernelSpec {
  int m = 1;
  KernelFamily family = KernelFamily::Power;
  double alpha = 0.0;        // Power
  double beta = 1.0;         // LogPower
  bool absolute = false;     // Oscillating: use |h|
  double coefficient = 1.0;  // Power: c
  int shift = 0;             // LogPower / Oscillating / Custom: kernel is T^shift of the base one
  std::function<double(std::span<const double>)> custom;  // base kernel on the simplex
  std::vector<int> components;  // i_1..i_m in 1..d; empty means all 1

  static KernelSpec power(double alpha, int m = 1);
  static KernelSpec log_power(double beta);
  static KernelSpec oscillating(bool absolute = false);
  static KernelSpec from_function(std::function<double(std::span<const double>)> h, int m = 1);

  /// Kernel value at a simplex point (t_1 < ... < t_m).
  double operator()(std::span<const double> t) const;
  double operator()(double t) const { return (*this)(std::span<const double>(&t, 1)); }
};

std::string to_json(const KernelSpec& spec);
/// Custom kernels cannot be rebuilt from JSON and are rejected.
KernelSpec kernel_from_json(const std::string& text);

/// T^n on the kernel: 2^{-nm/2} h(t / 2^n). Power kernels map to power
/// kernels with coefficient 2^{-nm(1/2 - alpha)}.
KernelSpec shifted_kernel(const KernelSpec& h, int n);

/// int_simplex h^2; +inf when the kernel is not square integrable.
double kernel_l2_norm_squared(const KernelSpec& h);

struct SimplexQuadrature {
  int points = 20;           // Gauss points per cell and axis
  int max_cells = 1000;      // order 1: geometric cells [2^{-j-1}, 2^{-j}], j < max_cells
  int levels_per_axis = 24;  // order >= 2: geometric cells per axis
};

struct KernelSumReport {
  std::vector<double> norms;          // ||sum_{n<=N} T^n h||^2, N = 0..N_max
  std::vector<double> term_norms;     // ||T^n h||^2, n = 0..N_max (order 1 families and custom)
  double sup = kInfinity;             // sup_N, or the N -> inf limit when it dominates
  std::optional<double> limit;        // N -> inf value when finite
  CriterionVerdict verdict;           // finite-evidence verdict for custom kernels
  std::string method;                 // "closed_form", "log_variable" or "quadrature"
};

struct KernelCheck {
  GordinReport report;
  KernelSumReport sums;
};

/// Partial-sum norms for N = 0..N_max, their sup and the membership verdict.
/// No bound on ||g~|| is claimed for chaos functionals (report.g_tilde_bound
/// stays +inf); report.evidence = {sup}.
KernelCheck gordin_check_kernel(const KernelSpec& h, int n_max, const SimplexQuadrature& quad = {});

/// ||sum_{n<=N} T^n h||^2 for N = 0..N_max by simplex quadrature, whatever
/// the family. Throws std::runtime_error when the cells do not converge.
std::vector<double> kernel_sum_norms_quadrature(const KernelSpec& h, int n_max, const SimplexQuadrature& quad = {});

struct ChaosBound {
  double bound = 0.0;                        // the per-order bound, summed over m
  std::optional<double> equal_alpha_series;  // sum a_m^2 / (m! (1 - 2 alpha)^m), equal exponents only
};

/// a[m-1] = a_m, alphas[m-1] = (alpha_1^m, ..., alpha_m^m). Every alpha must
/// be < 1/2 (std::domain_error otherwise).
ChaosBound chaos_bound(const std::vector<double>& a, const std::vector<std::vector<double>>& alphas);
ChaosBound chaos_bound(const std::vector<double>& a, double alpha);

/// Geometric grid for order-1 Ito sums: cells [2^{-j-1}, 2^{-j}], j < levels,
/// each split into 2^sub equal pieces, plus the origin cell [0, 2^{-levels}].
struct WienerGrid {
  int levels = 16;
  int sub = 6;
};

/// sum_j hbar_j (B_{t_{j+1}} - B_{t_j}) where hbar_j is the mean of h over
/// the grid cell (Gauss), so singular kernels stay finite at the origin.
double sample_wiener_integral(const KernelSpec& h, const DyadicPathStore& path, const WienerGrid& grid = {});

/// int_0^1 h^2 - sum_j hbar_j^2 |cell_j| >= 0: the variance the grid loses.
double isometry_deficit(const KernelSpec& h, const WienerGrid& grid = {});

/// The order-1 integral as an observable on a Wiener-scaling shift system.
Observable wiener_integral_observable(const KernelSpec& h, const WienerGrid& grid = {});

}  // namespace shiftmc
