#include "shiftmc/gordin_criteria.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

#include "shiftmc/numerics.hpp"
#include "shiftmc/rng.hpp"

namespace shiftmc {
namespace {

using nlohmann::json;

std::vector<double> mapped(const std::vector<double>& values, double (*weight)(double, double)) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = weight(static_cast<double>(i), values[i]);
  return out;
}

ClosedFormTerm mapped(const ClosedFormTerm& cf, double (*weight)(double, double)) {
  if (!cf) return {};
  return [cf, weight](double n) { return weight(n, cf(n)); };
}

double moment_of(BaseMeasure measure, int power) {
  if (power == 0) return 1.0;
  switch (measure) {
    case BaseMeasure::Uniform:
      return 1.0 / (power + 1);
    case BaseMeasure::FairBit:
      return 0.5;
    case BaseMeasure::Gaussian: {
      if (power % 2 == 1) return 0.0;
      double m = 1.0;
      for (int k = power - 1; k > 0; k -= 2) m *= k;
      return m;
    }
  }
  return 0.0;
}

}  // namespace

// Terms of a series known on [0, H) from data, optionally continued by a
// closed form. Decides convergence under the finite-evidence policy.
CriterionVerdict series_verdict(const std::vector<double>& terms, const ClosedFormTerm& closed_form) {
  CriterionVerdict verdict;
  double sum = 0.0;
  verdict.partial_sums.reserve(terms.size());
  for (double t : terms) {
    sum += t;
    verdict.partial_sums.push_back(sum);
  }
  if (!std::isfinite(sum)) {
    verdict.divergent_trend = true;
    return verdict;
  }
  if (closed_form) {
    const auto tail = tail_sum(closed_form, static_cast<std::int64_t>(terms.size()));
    verdict.evidence = EvidenceKind::ClosedFormTail;
    if (!tail.finite) {
      verdict.divergent_trend = true;
      return verdict;
    }
    verdict.tail_estimate = tail.value;
    verdict.satisfied = true;
    verdict.bound_on_g_tilde = sum + tail.value;
    return verdict;
  }
  const std::size_t h = terms.size();
  const std::size_t lo = h / 10;
  const bool tail_vanishes =
      h > 0 && std::all_of(terms.begin() + static_cast<std::ptrdiff_t>(lo), terms.end(), [](double t) { return t == 0.0; });
  if (tail_vanishes) {
    verdict.evidence = EvidenceKind::ExactFinite;
    verdict.satisfied = true;
    verdict.bound_on_g_tilde = sum;
    return verdict;
  }
  const auto fit = fit_decay(std::span<const double>(terms).subspan(lo), lo);
  verdict.divergent_trend = fit.divergent_trend;
  if (fit.geometric) {
    verdict.evidence = EvidenceKind::GeometricFit;
    verdict.satisfied = true;
    verdict.tail_estimate = fit.tail_estimate;
    verdict.bound_on_g_tilde = sum + fit.tail_estimate;
  }
  return verdict;
}

std::vector<double> NormSequence::conservative_values() const {
  std::vector<double> out = values;
  if (provenance == Provenance::MonteCarlo) {
    for (std::size_t i = 0; i < out.size() && i < stderrs.size(); ++i) out[i] += 2.0 * stderrs[i];
  }
  return out;
}

std::string to_json(const NormSequence& sequence) {
  json j;
  j["provenance"] = sequence.provenance == Provenance::Analytic ? "analytic" : "monte_carlo";
  j["values"] = sequence.values;
  if (!sequence.stderrs.empty()) j["stderr"] = sequence.stderrs;
  if (sequence.budget_exhausted) j["budget_exhausted"] = true;
  return j.dump();
}

NormSequence norm_sequence_from_json(const std::string& text) {
  const json j = json::parse(text);
  NormSequence s;
  if (j.is_array()) {
    s.values = j.get<std::vector<double>>();
  } else {
    s.values = j.at("values").get<std::vector<double>>();
    const auto provenance = j.value("provenance", std::string("analytic"));
    if (provenance == "monte_carlo") {
      s.provenance = Provenance::MonteCarlo;
    } else if (provenance != "analytic") {
      throw std::invalid_argument("norm sequence: unknown provenance '" + provenance + "'");
    }
    if (j.contains("stderr")) s.stderrs = j.at("stderr").get<std::vector<double>>();
    s.budget_exhausted = j.value("budget_exhausted", false);
  }
  for (double v : s.values) {
    if (!(v >= 0.0)) throw std::invalid_argument("norm sequence: entries must be non-negative");
  }
  return s;
}

std::string to_string(EvidenceKind kind) {
  switch (kind) {
    case EvidenceKind::None:
      return "none";
    case EvidenceKind::ClosedFormTail:
      return "closed_form_tail";
    case EvidenceKind::GeometricFit:
      return "geometric_fit";
    case EvidenceKind::ExactFinite:
      return "vanishing_tail";
  }
  return "none";
}

std::string to_json(const CriterionVerdict& verdict) {
  json j;
  j["satisfied"] = verdict.satisfied;
  j["bound_on_g_tilde"] = std::isfinite(verdict.bound_on_g_tilde) ? json(verdict.bound_on_g_tilde) : json("inf");
  j["divergent_trend"] = verdict.divergent_trend;
  j["evidence"] = to_string(verdict.evidence);
  j["tail_estimate"] = verdict.tail_estimate;
  j["partial_sums"] = verdict.partial_sums;
  return j.dump();
}

std::string to_string(Membership membership) {
  switch (membership) {
    case Membership::Member:
      return "member";
    case Membership::NonMember:
      return "non-member";
    case Membership::Undecided:
      return "undecided";
  }
  return "undecided";
}

std::string to_json(const GordinReport& report) {
  json j;
  j["membership"] = to_string(report.membership);
  j["g_tilde_bound"] = std::isfinite(report.g_tilde_bound) ? json(report.g_tilde_bound) : json("inf");
  j["evidence"] = report.evidence;
  j["note"] = report.note;
  return j.dump();
}

SeriesValue tail_sum(const ClosedFormTerm& term, std::int64_t from, std::int64_t explicit_terms) {
  double sum = 0.0;
  const std::int64_t stop = from + explicit_terms;
  // Sum small-to-large would be more accurate but the terms are monotone here
  // and 2^16 terms keep the rounding well under 1e-12 relative.
  for (std::int64_t n = from; n < stop; ++n) {
    const double t = term(static_cast<double>(n));
    if (!std::isfinite(t)) return {sum, false};
    sum += t;
  }
  const double m = static_cast<double>(stop);
  const auto integral = integrate_to_infinity(term, m);
  if (!integral.finite) return {kInfinity, false};
  const double step = 1e-3 * m;
  const double derivative = (term(m + step) - term(m - step)) / (2.0 * step);
  return {sum + integral.value + term(m) / 2.0 - derivative / 12.0, true};
}

DecayFit fit_decay(std::span<const double> terms, std::size_t first_index) {
  DecayFit fit;
  std::vector<double> n;
  std::vector<double> log_n;
  std::vector<double> log_t;
  double last = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i] > 0.0 && std::isfinite(terms[i])) {
      n.push_back(static_cast<double>(i));
      log_t.push_back(std::log(terms[i]));
      last = terms[i];
    }
  }
  if (n.size() < 3) return fit;
  for (double x : n) log_n.push_back(std::log(x + static_cast<double>(first_index) + 1.0));
  const auto geometric = fit_line(n, log_t);
  const auto power = fit_line(log_n, log_t);
  fit.ratio = std::exp(geometric.slope);
  fit.power_exponent = power.slope;
  fit.geometric = fit.ratio < 0.99 && geometric.residual_ss <= power.residual_ss;
  fit.divergent_trend = fit.ratio >= 1.0 || (!fit.geometric && fit.power_exponent >= -1.0);
  if (fit.geometric) fit.tail_estimate = last * fit.ratio / (1.0 - fit.ratio);
  return fit;
}

CriterionVerdict prop4_bound(const NormSequence& s, std::size_t horizon) {
  const auto values = s.conservative_values();
  if (horizon > values.size() && !s.closed_form)
    throw std::invalid_argument("prop4_bound: horizon exceeds the data and no closed-form tail is given");
  std::vector<double> terms(horizon);
  for (std::size_t n = 0; n < horizon; ++n) terms[n] = n < values.size() ? values[n] : s.closed_form(static_cast<double>(n));
  return series_verdict(terms, s.closed_form);
}

Prop5Bounds prop5_bounds(const NormSequence& f_norms) {
  const auto values = f_norms.conservative_values();
  Prop5Bounds out;
  out.root_weight = series_verdict(mapped(values, [](double m, double v) { return std::sqrt(m) * v; }),
                                   mapped(f_norms.closed_form, [](double m, double v) { return std::sqrt(m) * v; }));

  // Square tails T(m) = sum_{k >= m} ||f_k||^2 by backward recursion from a
  // tail value beyond the data.
  const std::size_t h = values.size();
  CriterionVerdict& b = out.square_tail;
  double beyond = 0.0;        // T(h)
  double outer_tail = 0.0;    // sum_{m >= h} sqrt(T(m))
  std::vector<double> extended = values;
  if (f_norms.closed_form) {
    b.evidence = EvidenceKind::ClosedFormTail;
    // Materialize a long stretch of the closed form so the remainder past it
    // is small, then continue T with integrals.
    const std::size_t stretch = 1 << 16;
    for (std::size_t m = h; m < h + stretch; ++m) extended.push_back(f_norms.closed_form(static_cast<double>(m)));
    const auto cf = f_norms.closed_form;
    const ClosedFormTerm square = [cf](double k) { return cf(k) * cf(k); };
    const double far = static_cast<double>(h + stretch);
    const auto far_tail = tail_sum(square, static_cast<std::int64_t>(far), 0);
    if (!far_tail.finite) {
      b.divergent_trend = true;
      return out;
    }
    beyond = far_tail.value;
    // sqrt(T(x)) for real x >= far, T continued by its integral form.
    const ClosedFormTerm root_tail = [square](double x) {
      const auto t = integrate_to_infinity(square, x);
      return std::sqrt(t.value + square(x) / 2.0);
    };
    const auto remainder = tail_sum(root_tail, static_cast<std::int64_t>(far), 0);
    if (!remainder.finite) {
      b.divergent_trend = true;
      return out;
    }
    outer_tail = remainder.value;
  } else {
    const std::size_t lo = h / 10;
    const bool vanishes = h > 0 && std::all_of(values.begin() + static_cast<std::ptrdiff_t>(lo), values.end(),
                                               [](double v) { return v == 0.0; });
    if (vanishes) {
      b.evidence = EvidenceKind::ExactFinite;
    } else {
      const auto fit = fit_decay(std::span<const double>(values).subspan(lo), lo);
      b.divergent_trend = fit.divergent_trend;
      if (!fit.geometric) {
        double sum = 0.0;
        for (std::size_t m = 0; m < h; ++m) {
          double t = 0.0;
          for (std::size_t k = m; k < h; ++k) t += values[k] * values[k];
          sum += std::sqrt(t);
          b.partial_sums.push_back(sum);
        }
        return out;
      }
      b.evidence = EvidenceKind::GeometricFit;
      const double r = fit.ratio;
      const double v = values.back();
      beyond = v * v * r * r / (1.0 - r * r);
      outer_tail = v * r / ((1.0 - r) * std::sqrt(1.0 - r * r));
    }
  }
  std::vector<double> roots(extended.size());
  double t = beyond;
  for (std::size_t m = extended.size(); m-- > 0;) {
    t += extended[m] * extended[m];
    roots[m] = std::sqrt(t);
  }
  double sum = 0.0;
  for (std::size_t m = 0; m < extended.size(); ++m) {
    sum += roots[m];
    if (m < h) b.partial_sums.push_back(sum);
  }
  b.tail_estimate = sum - (b.partial_sums.empty() ? 0.0 : b.partial_sums.back()) + outer_tail;
  b.satisfied = true;
  b.bound_on_g_tilde = sum + outer_tail;
  return out;
}

Prop6Verdict prop6_bound(const NormSequence& increment_norms) {
  const auto values = increment_norms.conservative_values();
  Prop6Verdict out;
  out.gate = series_verdict(mapped(values, [](double k, double v) { return k * v; }),
                            mapped(increment_norms.closed_form, [](double k, double v) { return k * v; }));
  out.bound = series_verdict(mapped(values, [](double k, double v) { return std::sqrt(k + 1.0) * v; }),
                             mapped(increment_norms.closed_form, [](double k, double v) { return std::sqrt(k + 1.0) * v; }));
  return out;
}

double prop8_bound(double weighted_norm) {
  if (!(weighted_norm >= 0.0)) throw std::domain_error("prop8_bound: weighted norm must be non-negative");
  return std::sqrt(6.0) / M_PI * weighted_norm;
}

double lemma7_bound(int d, double centered_norm) {
  if (d < 1) throw std::domain_error("lemma7_bound: d must be >= 1");
  if (!(centered_norm >= 0.0)) throw std::domain_error("lemma7_bound: norm must be non-negative");
  return std::sqrt(static_cast<double>(d)) * centered_norm;
}

NormSequence estimate_conditional_norms(const ShiftSystem& system, const Observable& f, int n_max,
                                        const MonteCarloBudget& mc) {
  if (system.kind() != ShiftKind::BernoulliRight)
    throw std::invalid_argument("estimate_conditional_norms: needs a Bernoulli coordinate system");
  if (mc.outer < 4 || mc.inner < 2) throw std::invalid_argument("estimate_conditional_norms: outer >= 4, inner >= 2");
  const auto& base = system.sequence();
  NormSequence out;
  out.provenance = Provenance::MonteCarlo;
  std::size_t evaluations = 0;
  for (int n = 0; n <= n_max; ++n) {
    if (f.depends_on.hi && *f.depends_on.hi < n) {
      // f is independent of F_n^inf, so E(f | F_n^inf) = E f.
      out.values.push_back(0.0);
      out.stderrs.push_back(0.0);
      continue;
    }
    const bool measurable = f.depends_on.lo >= n;
    const std::size_t inner = measurable ? 1 : mc.inner;
    if (evaluations + mc.outer * inner > mc.max_evaluations) {
      out.budget_exhausted = true;
      break;
    }
    evaluations += mc.outer * inner;
    RunningMoments means;
    RunningMoments inner_variance;
    for (std::size_t i = 0; i < mc.outer; ++i) {
      const std::uint64_t outer_seed = mix_seed(mc.seed, i);
      CoordinateSequence outer(outer_seed, base.dim(), base.measure());
      RunningMoments samples;
      for (std::size_t j = 0; j < inner; ++j) {
        const std::uint64_t low = mix_seed(outer_seed, (static_cast<std::uint64_t>(n) << 32) + j + 1);
        const auto state = ShiftSystem::bernoulli(outer.spliced_below(n, low));
        samples.add(f(state));
      }
      means.add(samples.mean());
      if (inner > 1) inner_variance.add(samples.variance());
    }
    const double noise = inner > 1 ? inner_variance.mean() / static_cast<double>(inner) : 0.0;
    const double v = means.variance() - noise;
    const double se = means.stderr_of_variance();
    if (v > 0.0) {
      const double norm = std::sqrt(v);
      out.values.push_back(norm);
      out.stderrs.push_back(se / (2.0 * norm));
    } else {
      out.values.push_back(0.0);
      out.stderrs.push_back(std::sqrt(se));
    }
  }
  return out;
}

PolynomialObservable PolynomialObservable::constant(BaseMeasure measure, double c) {
  PolynomialObservable p(measure);
  p.add_term({}, c);
  return p;
}

PolynomialObservable PolynomialObservable::coordinate(BaseMeasure measure, std::int64_t index) {
  PolynomialObservable p(measure);
  p.add_term({{index, 1}}, 1.0);
  return p;
}

void PolynomialObservable::add_term(const Monomial& monomial, double coefficient) {
  auto& c = terms_[monomial];
  c += coefficient;
  if (c == 0.0) terms_.erase(monomial);
}

PolynomialObservable PolynomialObservable::operator+(const PolynomialObservable& other) const {
  if (other.measure_ != measure_) throw std::invalid_argument("polynomial: base measures differ");
  PolynomialObservable out = *this;
  for (const auto& [m, c] : other.terms_) out.add_term(m, c);
  return out;
}

PolynomialObservable PolynomialObservable::operator-(const PolynomialObservable& other) const {
  return *this + other * -1.0;
}

PolynomialObservable PolynomialObservable::operator*(double c) const {
  PolynomialObservable out(measure_);
  if (c == 0.0) return out;
  for (const auto& [m, coefficient] : terms_) out.terms_[m] = coefficient * c;
  return out;
}

PolynomialObservable PolynomialObservable::operator*(const PolynomialObservable& other) const {
  if (other.measure_ != measure_) throw std::invalid_argument("polynomial: base measures differ");
  PolynomialObservable out(measure_);
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : other.terms_) {
      Monomial m = ma;
      for (const auto& [index, power] : mb) m[index] += power;
      out.add_term(m, ca * cb);
    }
  }
  return out;
}

double PolynomialObservable::moment(int power) const { return moment_of(measure_, power); }

double PolynomialObservable::expectation() const {
  double e = 0.0;
  for (const auto& [m, c] : terms_) {
    double term = c;
    for (const auto& [index, power] : m) term *= moment(power);
    e += term;
  }
  return e;
}

PolynomialObservable PolynomialObservable::conditional_on_tail(std::int64_t n) const {
  PolynomialObservable out(measure_);
  for (const auto& [m, c] : terms_) {
    Monomial kept;
    double coefficient = c;
    for (const auto& [index, power] : m) {
      if (index < n) {
        coefficient *= moment(power);
      } else {
        kept.emplace(index, power);
      }
    }
    if (coefficient != 0.0) out.add_term(kept, coefficient);
  }
  return out;
}

PolynomialObservable PolynomialObservable::shifted(std::int64_t k) const {
  PolynomialObservable out(measure_);
  for (const auto& [m, c] : terms_) {
    Monomial moved;
    for (const auto& [index, power] : m) moved.emplace(index - k, power);
    out.add_term(moved, c);
  }
  return out;
}

PolynomialObservable PolynomialObservable::perron_frobenius() const { return conditional_on_tail(1).shifted(1); }

double PolynomialObservable::l2_norm() const { return std::sqrt(std::max(0.0, (*this * *this).expectation())); }

double PolynomialObservable::evaluate(const ShiftSystem& state) const {
  double total = 0.0;
  for (const auto& [m, c] : terms_) {
    double term = c;
    for (const auto& [index, power] : m) term *= std::pow(state.coordinate(index), power);
    total += term;
  }
  return total;
}

bool PolynomialObservable::is_zero(double tolerance) const {
  return std::all_of(terms_.begin(), terms_.end(), [&](const auto& t) { return std::fabs(t.second) <= tolerance; });
}

GordinDecomposition gordin_decompose(const PolynomialObservable& f, int max_iterations) {
  const auto measure = f.measure();
  PolynomialObservable current = f - PolynomialObservable::constant(measure, f.expectation());
  GordinDecomposition out{PolynomialObservable(measure), PolynomialObservable(measure), PolynomialObservable(measure), 0};
  while (!current.is_zero()) {
    if (out.iterations >= max_iterations)
      throw std::runtime_error("gordin_decompose: Perron-Frobenius iterates did not vanish");
    out.g = out.g + current;
    current = current.perron_frobenius();
    ++out.iterations;
  }
  out.g_tilde = out.g - out.g.conditional_on_tail(1);
  out.h = out.g.perron_frobenius();
  return out;
}

}  // namespace shiftmc
