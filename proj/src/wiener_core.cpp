#include "shiftmc/wiener_core.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "shiftmc/numerics.hpp"

namespace shiftmc {
namespace {

void check_levels(int levels) {
  if (levels < 0 || levels > 30) throw std::invalid_argument("schauder: levels must be in [0, 30]");
}

// Level m and position k of flat index n >= 1.
std::pair<int, std::int64_t> split_flat(std::int64_t n) {
  int m = 0;
  while ((std::int64_t{2} << m) <= n) ++m;
  return {m, n - (std::int64_t{1} << m)};
}

// sum_{k >= from} sqrt(T(k)) for a non-increasing step tail T, summed cell by
// cell [a, 2a) and bisected only where T changes. Exact when T has few jumps
// per cell; gives up (finite = false) past the evaluation budget so the
// caller can fall back to the smooth continuation.
SeriesValue step_tail_root_sum(const ClosedFormTerm& tail, std::int64_t from) {
  std::size_t budget = std::size_t{1} << 20;
  bool blown = false;
  const auto root = [&](std::int64_t k) {
    if (budget == 0) blown = true; else --budget;
    return std::sqrt(std::max(0.0, tail(static_cast<double>(k))));
  };
  std::function<double(std::int64_t, std::int64_t, double, double)> piece =
      [&](std::int64_t lo, std::int64_t hi, double at_lo, double at_last) -> double {
    if (blown) return 0.0;
    if (at_lo == at_last) return static_cast<double>(hi - lo) * at_lo;
    if (hi - lo <= 2) return at_lo + (hi - lo == 2 ? at_last : 0.0);
    const std::int64_t mid = lo + (hi - lo) / 2;
    return piece(lo, mid, at_lo, root(mid - 1)) + piece(mid, hi, root(mid), at_last);
  };
  double sum = 0.0;
  std::int64_t a = std::max<std::int64_t>(from, 1);
  if (from == 0) sum += root(0);
  for (; a < (std::int64_t{1} << 61); a *= 2) {
    const double first = root(a);
    if (first == 0.0) return {sum, true};
    sum += piece(a, 2 * a, first, root(2 * a - 1));
    if (blown) return {0.0, false};
  }
  return {0.0, false};
}

}  // namespace

std::vector<double> brownian_eval(const DyadicPathStore& store, double t) {
  std::vector<double> out(static_cast<std::size_t>(store.dim()));
  for (int c = 0; c < store.dim(); ++c) out[static_cast<std::size_t>(c)] = store.brownian(t, c);
  return out;
}

double schauder_phi(int m, std::int64_t k, double t) {
  const double x = std::ldexp(t, m) - static_cast<double>(k);  // position inside the support, in [0,1]
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double height = std::ldexp(std::pow(2.0, -0.5 * m), -1);
  return height * (x < 0.5 ? 2.0 * x : 2.0 * (1.0 - x));
}

double schauder_phi_flat(std::int64_t n, double t) {
  if (n < 0) throw std::invalid_argument("schauder_phi_flat: negative index");
  if (n == 0) return t;
  const auto [m, k] = split_flat(n);
  return schauder_phi(m, k, t);
}

SchauderCoefficients::SchauderCoefficients(int levels_) : levels(levels_) {
  check_levels(levels_);
  flat.assign(std::size_t{1} << levels_, 0.0);
}

double& SchauderCoefficients::at(int m, std::int64_t k) {
  if (m < 0 || m >= levels || k < 0 || k >= (std::int64_t{1} << m)) throw std::out_of_range("schauder: (m,k) out of range");
  return flat[static_cast<std::size_t>((std::int64_t{1} << m) + k)];
}

double SchauderCoefficients::at(int m, std::int64_t k) const {
  return const_cast<SchauderCoefficients&>(*this).at(m, k);
}

std::string to_json(const SchauderCoefficients& c) {
  nlohmann::json j;
  j["M"] = c.levels;
  j["a"] = c.flat;
  return j.dump();
}

SchauderCoefficients schauder_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SchauderCoefficients c(j.at("M").get<int>());
  const auto a = j.at("a").get<std::vector<double>>();
  if (a.size() != c.flat.size()) throw std::invalid_argument("schauder: expected 2^M flat coefficients");
  c.flat = a;
  return c;
}

double schauder_synthesize(const SchauderCoefficients& c, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("schauder_synthesize: t must lie in [0,1]");
  double value = c.flat.empty() ? 0.0 : c.flat[0] * t;
  for (int m = 0; m < c.levels; ++m) {
    const auto k = static_cast<std::int64_t>(std::floor(std::ldexp(t, m)));
    if (k >= (std::int64_t{1} << m)) continue;  // t = 1
    value += c.at(m, k) * schauder_phi(m, k, t);
  }
  return value;
}

std::vector<double> schauder_synthesize_grid(const SchauderCoefficients& c) {
  const std::size_t n = std::size_t{1} << c.levels;
  std::vector<double> grid(n + 1, 0.0);
  grid[n] = c.flat.empty() ? 0.0 : c.flat[0];
  for (int m = 0; m < c.levels; ++m) {
    const std::size_t stride = n >> m;
    const double height = std::ldexp(std::pow(2.0, -0.5 * m), -1);
    for (std::int64_t k = 0; k < (std::int64_t{1} << m); ++k) {
      const std::size_t left = static_cast<std::size_t>(k) * stride;
      const std::size_t mid = left + stride / 2;
      grid[mid] = 0.5 * (grid[left] + grid[left + stride]) + height * c.at(m, k);
    }
  }
  return grid;
}

SchauderCoefficients schauder_coefficients(const std::vector<double>& samples, bool with_linear_mode) {
  if (samples.size() < 2) throw std::invalid_argument("schauder_coefficients: need samples at i / 2^M");
  int levels = 0;
  while ((std::size_t{1} << levels) + 1 < samples.size()) ++levels;
  if ((std::size_t{1} << levels) + 1 != samples.size())
    throw std::invalid_argument("schauder_coefficients: sample count must be 2^M + 1");
  double scale = 0.0;
  for (double v : samples) scale = std::max(scale, std::fabs(v));
  const double tolerance = 1e-12 * std::max(scale, 1.0);
  if (std::fabs(samples.front()) > tolerance)
    throw std::domain_error("schauder_coefficients: f(0) must vanish");
  if (!with_linear_mode && std::fabs(samples.back()) > tolerance)
    throw std::domain_error("schauder_coefficients: f(1) must vanish (not in C_00[0,1])");
  SchauderCoefficients c(levels);
  const std::size_t n = samples.size() - 1;
  const double slope = with_linear_mode ? samples.back() : 0.0;
  if (with_linear_mode && !c.flat.empty()) c.flat[0] = slope;
  // The linear mode is affine on every dyadic cell, so it drops out of the
  // second differences.
  for (int m = 0; m < levels; ++m) {
    const std::size_t stride = n >> m;
    const double root = std::pow(2.0, 0.5 * m);
    for (std::int64_t k = 0; k < (std::int64_t{1} << m); ++k) {
      const std::size_t left = static_cast<std::size_t>(k) * stride;
      c.at(m, k) = (2.0 * samples[left + stride / 2] - samples[left] - samples[left + stride]) * root;
    }
  }
  return c;
}

SchauderCoefficients schauder_coefficients(const std::function<double(double)>& f, int levels, bool with_linear_mode) {
  check_levels(levels);
  const std::size_t n = std::size_t{1} << levels;
  std::vector<double> samples(n + 1);
  for (std::size_t i = 0; i <= n; ++i) samples[i] = f(std::ldexp(static_cast<double>(i), -levels));
  return schauder_coefficients(samples, with_linear_mode);
}

SchauderCoefficients coefficient_shift(const SchauderCoefficients& c, int k) {
  if (k < 0) throw std::invalid_argument("coefficient_shift: the one-sided shift has no inverse");
  SchauderCoefficients out(c.levels);
  for (std::size_t n = 0; n < out.flat.size(); ++n) {
    const std::size_t source = n + static_cast<std::size_t>(k);
    out.flat[n] = source < c.flat.size() ? c.flat[source] : 0.0;
  }
  return out;
}

SchauderCoefficients coefficients_of(const ShiftSystem& system, int levels) {
  if (system.kind() != ShiftKind::SchauderCoefficient)
    throw std::invalid_argument("coefficients_of: not a Schauder-coefficient system");
  SchauderCoefficients c(levels);
  for (std::size_t n = 0; n < c.flat.size(); ++n) c.flat[n] = system.coordinate(static_cast<std::int64_t>(n));
  return c;
}

std::vector<double> DerivativeEnergySequence::conservative_values() const {
  std::vector<double> out = values;
  if (provenance == Provenance::MonteCarlo) {
    for (std::size_t i = 0; i < out.size() && i < stderrs.size(); ++i) out[i] += 2.0 * stderrs[i];
  }
  return out;
}

CriterionVerdict dirichlet_criterion(const DerivativeEnergySequence& e) {
  const auto values = e.conservative_values();
  for (double v : values) {
    if (!(v >= 0.0)) throw std::invalid_argument("dirichlet_criterion: energies must be non-negative");
  }
  const std::size_t h = values.size();
  std::vector<double> extended = values;
  double beyond = 0.0;  // sum_{i >= extended.size()} e_i
  ClosedFormTerm root_tail;
  std::int64_t root_tail_from = 0;
  bool geometric = false;
  bool step_tail = false;

  if (e.tail) {
    beyond = e.tail(static_cast<double>(h));
    const auto tail = e.tail;
    root_tail = [tail](double k) { return std::sqrt(std::max(0.0, tail(k))); };
    root_tail_from = static_cast<std::int64_t>(h);
    step_tail = true;
  } else if (e.closed_form) {
    const std::size_t stretch = 1 << 16;
    for (std::size_t i = h; i < h + stretch; ++i) extended.push_back(e.closed_form(static_cast<double>(i)));
    const auto far = static_cast<std::int64_t>(h + stretch);
    const auto rest = tail_sum(e.closed_form, far, 0);
    if (!rest.finite) {
      CriterionVerdict v;
      v.divergent_trend = true;
      v.evidence = EvidenceKind::ClosedFormTail;
      return v;
    }
    beyond = rest.value;
    const auto term = e.closed_form;
    root_tail = [term](double x) {
      const auto t = integrate_to_infinity(term, x);
      return std::sqrt(std::max(0.0, t.value + term(x) / 2.0));
    };
    root_tail_from = far;
  } else {
    const std::size_t lo = h / 10;
    const bool vanishes =
        h > 0 && std::all_of(values.begin() + static_cast<std::ptrdiff_t>(lo), values.end(), [](double v) { return v == 0.0; });
    if (!vanishes) {
      const auto fit = fit_decay(std::span<const double>(values).subspan(lo), lo);
      if (!fit.geometric) {
        // e_i ~ i^p gives sqrt(T(k)) ~ k^{(p+1)/2}, summable iff p < -3.
        CriterionVerdict v;
        v.divergent_trend = fit.ratio >= 1.0 || fit.power_exponent >= -3.0;
        return v;
      }
      geometric = true;
      beyond = fit.tail_estimate;
      const double r = fit.ratio;
      const double last = values.back();
      // T(k) = last r^{k-h+1} / (1-r) past the data.
      root_tail = [r, last, h](double k) { return std::sqrt(last * std::pow(r, k - h + 1.0) / (1.0 - r)); };
      root_tail_from = static_cast<std::int64_t>(h);
    }
  }

  std::vector<double> roots(extended.size());
  double t = beyond;
  for (std::size_t k = extended.size(); k-- > 0;) {
    t += extended[k];
    roots[k] = std::sqrt(t);
  }
  CriterionVerdict v;
  double sum = 0.0;
  for (std::size_t k = 0; k < roots.size(); ++k) {
    sum += roots[k];
    if (k < h) v.partial_sums.push_back(sum);
  }
  double remainder = 0.0;
  if (root_tail) {
    if (geometric) {
      // sqrt T(k) decays with ratio sqrt(r).
      const double first = root_tail(static_cast<double>(h));
      const double q = root_tail(static_cast<double>(h) + 1.0) / first;
      remainder = first / (1.0 - q);
      v.evidence = EvidenceKind::GeometricFit;
    } else {
      auto rest = step_tail ? step_tail_root_sum(e.tail, root_tail_from) : SeriesValue{0.0, false};
      if (!rest.finite) rest = tail_sum(root_tail, root_tail_from, step_tail ? 1 << 16 : 0);
      v.evidence = EvidenceKind::ClosedFormTail;
      if (!rest.finite) {
        v.divergent_trend = true;
        return v;
      }
      remainder = rest.value;
    }
  } else {
    v.evidence = EvidenceKind::ExactFinite;
  }
  v.tail_estimate = sum - (v.partial_sums.empty() ? 0.0 : v.partial_sums.back()) + remainder;
  v.satisfied = true;
  v.bound_on_g_tilde = sum + remainder;
  return v;
}

CriterionVerdict corollary12_series(const DerivativeEnergySequence& e, double alpha) {
  if (!(alpha > 1.0)) throw std::domain_error("corollary12_gate: alpha must be > 1");
  const auto weight = [alpha](double i) { return i < 2.0 ? 0.0 : i * i * std::pow(std::log(i), alpha); };
  const auto values = e.conservative_values();
  std::vector<double> terms(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) terms[i] = weight(static_cast<double>(i)) * values[i];
  ClosedFormTerm cf;
  if (e.closed_form) {
    const auto term = e.closed_form;
    cf = [term, weight](double i) { return weight(i) * term(i); };
  } else if (e.tail) {
    const auto tail = e.tail;
    cf = [tail, weight](double i) { return weight(i) * (tail(i) - tail(i + 1.0)); };
  }
  return series_verdict(terms, cf);
}

bool corollary12_gate(const DerivativeEnergySequence& e, double alpha) { return corollary12_series(e, alpha).satisfied; }

double squared_coefficient_energy(std::int64_t n, double t) {
  if (n <= 0) return 0.0;  // the bridge has no linear mode
  const double d = static_cast<double>(n + 1);
  return 4.0 * schauder_phi_flat(n, t) / (d * d);
}

double squared_coefficient_energy_tail(double k, double t) {
  const auto start = static_cast<std::int64_t>(std::ceil(std::max(k, 1.0)));
  // One index per level has phi_{m,k}(t) > 0; levels below `start` are skipped.
  double sum = 0.0;
  for (int m = 0; m < 62; ++m) {
    const auto cell = static_cast<std::int64_t>(std::floor(std::ldexp(t, m)));
    if (cell >= (std::int64_t{1} << m)) continue;
    const std::int64_t n = (std::int64_t{1} << m) + cell;
    if (n >= start) sum += squared_coefficient_energy(n, t);
  }
  return sum;
}

double squared_coefficient_functional(const ShiftSystem& system, double t, int levels) {
  check_levels(levels);
  double value = 0.0;
  for (int m = 0; m < levels; ++m) {
    const auto cell = static_cast<std::int64_t>(std::floor(std::ldexp(t, m)));
    if (cell >= (std::int64_t{1} << m)) continue;
    const std::int64_t n = (std::int64_t{1} << m) + cell;
    const double a = system.coordinate(n);
    value += std::sqrt(schauder_phi_flat(n, t)) / static_cast<double>(n + 1) * a * a;
  }
  return value;
}

}  // namespace shiftmc
