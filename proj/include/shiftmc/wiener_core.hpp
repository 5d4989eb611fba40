#pragma once

// Haar / Schauder expansion of continuous paths on [0,1], the shift on the
// flat coefficient sequence, and the derivative-energy membership criterion
// for functionals of i.i.d. Gaussian coordinates.
//
// Flat indexing: a_{2^m + k} = a_{m,k} for m >= 0, 0 <= k < 2^m. Flat index 0
// is the linear mode phi_0(t) = t (primitive of the constant basis function),
// so a Brownian path is a_0 t plus a bridge.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "shiftmc/dyadic_path.hpp"
#include "shiftmc/gordin_criteria.hpp"
#include "shiftmc/product_space.hpp"

namespace shiftmc {

/// B_t for every component of the store; t in (0,1].
std::vector<double> brownian_eval(const DyadicPathStore& store, double t);

/// Triangular bump phi_{m,k}: support [k/2^m, (k+1)/2^m], height 2^{-m/2-1}.
double schauder_phi(int m, std::int64_t k, double t);
/// phi for a flat index (0 is the linear mode t).
double schauder_phi_flat(std::int64_t n, double t);

struct SchauderCoefficients {
  int levels = 0;            // M: levels 0 .. M-1
  std::vector<double> flat;  // size 2^M; flat[0] is the linear mode

  explicit SchauderCoefficients(int levels = 0);
  double& at(int m, std::int64_t k);
  double at(int m, std::int64_t k) const;
};

std::string to_json(const SchauderCoefficients& c);
SchauderCoefficients schauder_from_json(const std::string& text);

/// a_0 t + sum_{m < M} sum_k phi_{m,k}(t) a_{m,k}; t in [0,1].
double schauder_synthesize(const SchauderCoefficients& c, double t);

/// Values at i / 2^M, i = 0 .. 2^M, by midpoint insertion.
std::vector<double> schauder_synthesize_grid(const SchauderCoefficients& c);

/// Coefficients from samples at i / 2^M. Without the linear mode the samples
/// must vanish at 0 and 1; with it, f(0) = 0 and a_0 = f(1).
SchauderCoefficients schauder_coefficients(const std::vector<double>& samples, bool with_linear_mode = false);
SchauderCoefficients schauder_coefficients(const std::function<double(double)>& f, int levels,
                                           bool with_linear_mode = false);

/// Flat index n reads old index n + k; indices past the end become 0.
SchauderCoefficients coefficient_shift(const SchauderCoefficients& c, int k = 1);

/// Coefficients 0 .. 2^M - 1 as read by a Schauder-coefficient shift system.
SchauderCoefficients coefficients_of(const ShiftSystem& system, int levels);

/// E[F_i'^2] per coordinate i >= 0.
struct DerivativeEnergySequence {
  std::vector<double> values;
  Provenance provenance = Provenance::Analytic;
  std::vector<double> stderrs;
  ClosedFormTerm closed_form;  // e(i), for i >= values.size()
  ClosedFormTerm tail;         // sum_{i >= k} e(i), for k >= values.size()

  std::vector<double> conservative_values() const;
};

/// sum_k (sum_{i >= k} E F_i'^2)^{1/2} under the finite-evidence policy.
CriterionVerdict dirichlet_criterion(const DerivativeEnergySequence& e);

/// Convergence of sum_{i >= 2} i^2 log^alpha(i) E f_i'^2; alpha <= 1 is a domain error.
bool corollary12_gate(const DerivativeEnergySequence& e, double alpha = kStoppingTimeGateAlpha);
CriterionVerdict corollary12_series(const DerivativeEnergySequence& e, double alpha = kStoppingTimeGateAlpha);

/// F = sum_n (1/(n+1)) sqrt(phi_n(t)) a_n^2 on Gaussian Schauder coefficients,
/// and its energies E F_n'^2 = 4 phi_n(t) / (n+1)^2.
double squared_coefficient_functional(const ShiftSystem& system, double t, int levels);
double squared_coefficient_energy(std::int64_t n, double t);
/// sum_{i >= k} of the energies, exact (one nonzero index per level).
double squared_coefficient_energy_tail(double k, double t);

}  // namespace shiftmc
