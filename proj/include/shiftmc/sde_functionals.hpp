#pragma once

// Lipschitz SDEs driven by the dyadic-piece Brownian motion, and the
// functionals whose Gordin membership follows from the decay of
// Var[T^n f] under the scaling shift B_t o tau = B_{2t} / sqrt 2.
//
// Under tau^n, conditioning on B up to time u = 2^{-n} gives
//   T^n f = P_{t-u} h(X_u) o tau^n,
// so one sample of T^n f is: solve on [0, u] along the shifted path, then
// apply the semigroup, exactly (callback) or by nested inner paths.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shiftmc/dyadic_path.hpp"

namespace shiftmc {

using State = std::vector<double>;

struct SdeSpec {
  int m = 1;  // state dimension
  int d = 1;  // driving dimension
  /// (x, s) -> m x d matrix, row-major.
  std::function<std::vector<double>(const State&, double)> sigma;
  /// (x, s) -> drift, length m.
  std::function<State(const State&, double)> b;
  double lipschitz = 1.0;  // declared constant C
  State x0;

  /// Shape checks; throws std::invalid_argument.
  void validate() const;
};

/// dX = -X ds + dB in one dimension.
SdeSpec ornstein_uhlenbeck(double x0);

struct LipschitzCheck {
  bool ok = true;
  double worst_ratio = 0.0;  // max (|sigma(x)-sigma(y)| + |b(x)-b(y)|) / |x-y|
  double worst_growth = 0.0; // max (|sigma(x)| + |b(x)|) / (1 + |x|)
};

/// Sampled check of both Lipschitz bounds with the declared C (a sanity
/// fuzz, not a proof). Points are drawn from N(0, scale^2) per coordinate.
LipschitzCheck check_lipschitz(const SdeSpec& sde, std::uint64_t seed, int samples = 2000, double scale = 3.0);

/// Sampled Holder check |h(x) - h(y)| <= A |x - y|^lambda.
bool check_holder(const std::function<double(const State&)>& h, int m, double lambda, double constant,
                  std::uint64_t seed, int samples = 2000, double scale = 3.0);

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
};

/// Explicit Euler-Maruyama on t_i = i t_end / steps with increments of the
/// stored path. Every t_i must be dyadic with denominator <= 2^depth.
/// Non-finite states abort with std::runtime_error naming the step.
Trajectory euler_maruyama(const SdeSpec& sde, const DyadicPathStore& path, int steps, double t_end);

/// Euler-Maruyama from `x` at time t0 with explicit increments
/// (increments[i] has d entries). Returns the final state.
State euler_from(const SdeSpec& sde, State x, double t0, double dt, const std::vector<std::vector<double>>& increments);

/// Semigroup callback (y, start time u, horizon t) -> P_{t-u} h(y).
using SemigroupFn = std::function<double(const State&, double, double)>;

struct TnOptions {
  int time_level = 10;              // Euler grid spacing 2^{-time_level}
  std::size_t inner = 0;            // inner paths without an exact semigroup; 0 = auto
                                    // (sqrt(outer) in the diagnostic, 64 standalone)
  std::uint64_t seed = 1;           // inner-path stream
  std::optional<SemigroupFn> exact; // use instead of nested MC
  double flag_inner_stderr = 0.05;  // flag samples whose inner stderr exceeds this
};

struct TnSample {
  double value = 0.0;
  double inner_variance = 0.0;  // sample variance of the inner values (0 if exact)
  std::size_t inner = 0;
  bool flagged = false;
};

/// One sample of T^n f for f = h(X_t^x), 0 < 2^{-n} <= t <= 1, evaluated on
/// scaling_shift(path, n).
TnSample tn_functional(const SdeSpec& sde, const std::function<double(const State&)>& h, double t, int n,
                       const DyadicPathStore& path, const TnOptions& options = {});

struct DecayLevel {
  int n = 0;
  double variance = 0.0;  // bias-corrected, clipped at 0
  double stderr = 0.0;
  std::size_t samples = 0;
  std::size_t flagged = 0;
};

struct DecayDiagnostic {
  std::vector<DecayLevel> levels;
  double target_lambda = 1.0;
  std::optional<double> lambda_hat;  // empty when the fit is degenerate
  double lambda_stderr = 0.0;
  int fit_from = 0;                  // fit uses n in [fit_from, n_max]
  bool degenerate = false;
  bool certified = false;            // lambda_hat - 2 stderr > 0
  double implied_bound = 0.0;        // sum_n sqrt(Var T^n f), +inf if not certified
};

struct DecayOptions {
  std::size_t outer = 20000;
  std::uint64_t seed = 1;
  TnOptions tn;
  std::optional<double> holder_constant;  // fuzz-checked when given
};

/// Var[T^n f] for n = 0 .. n_max and the fitted exponent lambda_hat from
/// log Var ~ c - n lambda log 2 over the upper half of the levels (the low
/// levels carry the e^{-2(t-u)}-type curvature of the semigroup).
DecayDiagnostic holder_decay_diagnostic(const SdeSpec& sde, const std::function<double(const State&)>& h,
                                        double lambda, double t, int n_max, const DecayOptions& options = {});

std::string decay_csv(const DecayDiagnostic& diagnostic);
std::string to_json(const DecayDiagnostic& diagnostic);

/// Exact OU oracles: Var[T^n f] for h(x) = x, and P_{t-u} y.
double ou_tn_variance(double t, int n);
SemigroupFn ou_identity_semigroup();

struct Atom {
  double s = 1.0;
  State x;
  double w = 1.0;
};

/// sum_j w_j g(X^{x_j}_{s_j}) with one trajectory per distinct x_j on a
/// shared path, Euler grid i / steps on [0, 1]. Off-grid s_j interpolate
/// linearly between neighbouring grid states.
double measure_functional(const SdeSpec& sde, const std::function<double(const State&)>& g,
                          const std::vector<Atom>& mu, const DyadicPathStore& path, int steps);

struct RichardsonReport {
  double coarse = 0.0;
  double fine = 0.0;
  double error_estimate = 0.0;  // |fine - coarse| for an order-1 scheme
};

/// h(X_t) at `steps` and 2 * steps on the same path.
RichardsonReport richardson_report(const SdeSpec& sde, const std::function<double(const State&)>& h,
                                   const DyadicPathStore& path, int steps, double t_end);

}  // namespace shiftmc
