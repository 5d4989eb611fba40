#pragma once

// Sufficient conditions for membership in the Gordin class and the bounds
// they give on the martingale-increment norm ||g~||.
//
// Every criterion is a statement about an infinite series. Finite data is
// only trusted when (a) the caller supplies a closed-form continuation of the
// terms beyond the data, or (b) the terms decay geometrically over the last
// decade of indices [H/10, H) with fitted ratio < 0.99 and a geometric model
// explains them better than a power law. Anything else is "undecided".

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shiftmc/product_space.hpp"

namespace shiftmc {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Provenance { Analytic, MonteCarlo };

/// Closed-form continuation n -> term(n), valid for real n >= the data length.
using ClosedFormTerm = std::function<double(double)>;

struct NormSequence {
  std::vector<double> values;
  Provenance provenance = Provenance::Analytic;
  std::vector<double> stderrs;  // empty for analytic sequences
  ClosedFormTerm closed_form;   // optional continuation past values.size()
  bool budget_exhausted = false;

  /// Terms used by verdicts: value + 2 stderr for Monte Carlo entries.
  std::vector<double> conservative_values() const;
};

std::string to_json(const NormSequence& sequence);
NormSequence norm_sequence_from_json(const std::string& text);

enum class EvidenceKind { None, ClosedFormTail, GeometricFit, ExactFinite };
std::string to_string(EvidenceKind kind);

struct CriterionVerdict {
  bool satisfied = false;
  double bound_on_g_tilde = kInfinity;
  std::vector<double> partial_sums;
  bool divergent_trend = false;
  EvidenceKind evidence = EvidenceKind::None;
  double tail_estimate = 0.0;
};

std::string to_json(const CriterionVerdict& verdict);

enum class Membership { Member, NonMember, Undecided };
std::string to_string(Membership membership);

/// Verdict on Gordin-class membership plus the evidence behind it.
struct GordinReport {
  Membership membership = Membership::Undecided;
  double g_tilde_bound = kInfinity;
  std::vector<double> evidence;
  std::string note;
};

std::string to_json(const GordinReport& report);

// --- series machinery -------------------------------------------------------

struct SeriesValue {
  double value = 0.0;
  bool finite = true;
};

/// sum_{n >= from} term(n) for a closed-form, eventually monotone term:
/// explicit summation of `explicit_terms` terms, then an Euler-Maclaurin
/// remainder with the integral taken on geometric cells.
SeriesValue tail_sum(const ClosedFormTerm& term, std::int64_t from, std::int64_t explicit_terms = 1 << 16);

struct DecayFit {
  bool geometric = false;       // ratio < 0.99 and geometric model preferred
  bool divergent_trend = false; // power-law exponent >= -1 or ratio >= 1
  double ratio = 0.0;           // fitted geometric ratio
  double power_exponent = 0.0;  // fitted power-law exponent
  double tail_estimate = kInfinity;  // last term * r / (1 - r) when geometric
};

/// Decay policy for terms with no closed form (see header comment).
/// `terms` starts at series index `first_index`; the power-law model is a
/// line in log(n + 1).
DecayFit fit_decay(std::span<const double> terms, std::size_t first_index = 0);

/// Verdict on sum_n terms[n] (+ closed-form continuation from terms.size()
/// on) under the finite-evidence policy.
CriterionVerdict series_verdict(const std::vector<double>& terms, const ClosedFormTerm& closed_form);

// --- bound calculators ------------------------------------------------------

/// sum_n ||E f - E(f | F_n^inf)|| over n < horizon, plus the tail.
CriterionVerdict prop4_bound(const NormSequence& s, std::size_t horizon);

struct Prop5Bounds {
  CriterionVerdict square_tail;  // sum_m sqrt(sum_{k>=m} ||f_k||^2)
  CriterionVerdict root_weight;  // sum_m sqrt(m) ||f_m||
  double bound_b() const noexcept { return square_tail.bound_on_g_tilde; }
  double bound_c() const noexcept { return root_weight.bound_on_g_tilde; }
};

/// Bounds from the martingale-difference decomposition f = E f + sum f_m.
Prop5Bounds prop5_bounds(const NormSequence& f_norms);

/// Gate sum_k k ||f_k - E f_k|| < inf, bound sum_k sqrt(k+1) ||f_k - E f_k||.
/// `partial_sums` holds the bound's running sums; the gate's are in `gate`.
struct Prop6Verdict {
  CriterionVerdict gate;
  CriterionVerdict bound;
  bool satisfied() const noexcept { return gate.satisfied && bound.satisfied; }
  double bound_on_g_tilde() const noexcept { return satisfied() ? bound.bound_on_g_tilde : kInfinity; }
};
Prop6Verdict prop6_bound(const NormSequence& increment_norms);

/// LIL constant bound for f measurable w.r.t. a stopping time T:
/// (sqrt 6 / pi) ||f (T+1)^{3/2}||.
double prop8_bound(double weighted_norm);

/// Default exponent for the stopping-time gate E[f^2 T^3 log^alpha T] < inf.
inline constexpr double kStoppingTimeGateAlpha = 1.5;

/// LIL limsup bound sqrt(d) ||f - E f|| for f depending on d consecutive coordinates.
double lemma7_bound(int d, double centered_norm);

struct MonteCarloBudget {
  std::size_t outer = 2000;
  std::size_t inner = 64;
  std::uint64_t seed = 1;
  std::size_t max_evaluations = 50'000'000;
};

/// Nested Monte Carlo estimate of ||E f - E(f | F_n^inf)|| for n = 0..n_max on
/// a coordinate-sequence system: coordinates with index >= n are drawn once
/// per outer sample, indices < n are resampled by the inner loop. The
/// variance of the inner means is corrected for inner noise.
NormSequence estimate_conditional_norms(const ShiftSystem& system, const Observable& f, int n_max,
                                        const MonteCarloBudget& mc);

// --- exact decomposition for polynomial observables -------------------------

/// Polynomial in the coordinates X_n of an i.i.d. product space, with the
/// base measure's moments known in closed form. Supports the operations the
/// Gordin decomposition needs: conditioning on F_n^inf, shifting, norms.
class PolynomialObservable {
 public:
  using Monomial = std::map<std::int64_t, int>;  // index -> power

  explicit PolynomialObservable(BaseMeasure measure) : measure_(measure) {}

  static PolynomialObservable constant(BaseMeasure measure, double c);
  static PolynomialObservable coordinate(BaseMeasure measure, std::int64_t index);

  BaseMeasure measure() const noexcept { return measure_; }
  const std::map<Monomial, double>& terms() const noexcept { return terms_; }

  PolynomialObservable operator+(const PolynomialObservable& other) const;
  PolynomialObservable operator-(const PolynomialObservable& other) const;
  PolynomialObservable operator*(const PolynomialObservable& other) const;
  PolynomialObservable operator*(double c) const;

  double expectation() const;
  /// E(p | F_n^inf): integrates out every coordinate with index < n.
  PolynomialObservable conditional_on_tail(std::int64_t n) const;
  /// p o tau^k with X_n o tau = X_{n-1}.
  PolynomialObservable shifted(std::int64_t k) const;
  /// Tf = E[f | F_1^inf] o tau.
  PolynomialObservable perron_frobenius() const;
  double l2_norm() const;
  double evaluate(const ShiftSystem& state) const;
  bool is_zero(double tolerance = 1e-14) const;

  /// Base-measure moment E X^p.
  double moment(int power) const;

 private:
  void add_term(const Monomial& monomial, double coefficient);

  BaseMeasure measure_;
  std::map<Monomial, double> terms_;
};

/// f - E f = g~ + h o tau^{-1} - h with E(g~ | F_1^inf) = 0, obtained as
/// g = sum_n T^n (f - E f), g~ = g - E(g | F_1^inf), h = T g.
struct GordinDecomposition {
  PolynomialObservable g;
  PolynomialObservable g_tilde;
  PolynomialObservable h;
  int iterations = 0;
};

/// Exact for polynomials in finitely many coordinates with indices >= 0.
GordinDecomposition gordin_decompose(const PolynomialObservable& f, int max_iterations = 4096);

}  // namespace shiftmc
