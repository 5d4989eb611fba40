// Experiment registry: every entry reproduces one result of the theory at
// desk scale, or records why it is not reproduced.

#include <algorithm>
#include <cmath>
#include <sstream>

#include "registry.hpp"
#include "shiftmc/chaos_integrals.hpp"
#include "shiftmc/ergodic_engine.hpp"
#include "shiftmc/gordin_criteria.hpp"
#include "shiftmc/numerics.hpp"
#include "shiftmc/rng.hpp"
#include "shiftmc/sde_functionals.hpp"
#include "shiftmc/torus_gordin.hpp"
#include "shiftmc/wiener_core.hpp"

namespace shiftmc::cli {

namespace {

using json = nlohmann::json;

std::string fmt(double x) { return format_real(x); }
std::string fmt(std::int64_t x) { return std::to_string(x); }
std::string fmt(int x) { return std::to_string(x); }
std::string fmt(std::size_t x) { return std::to_string(x); }

json number(double x) { return std::isfinite(x) ? json(x) : json(format_real(x)); }

json parsed(const std::string& text) { return json::parse(text); }

int positive_int(const Params& p, const std::string& name, std::int64_t max = 1'000'000'000) {
  const auto v = p.integer(name);
  if (v < 1 || v > max) throw ConfigError("parameter '" + name + "' must lie in [1, " + std::to_string(max) + "]");
  return static_cast<int>(v);
}

std::int64_t positive_long(const Params& p, const std::string& name) {
  const auto v = p.integer(name);
  if (v < 1) throw ConfigError("parameter '" + name + "' must be positive");
  return v;
}

/// "satisfied", "not satisfied" (divergent trend) or "undecided".
std::string criterion_status(const CriterionVerdict& v) {
  if (v.satisfied) return "satisfied";
  return v.divergent_trend ? "not satisfied" : "undecided";
}

SystemFactory bernoulli_factory(BaseMeasure measure) {
  return [measure](std::uint64_t seed) { return ShiftSystem::bernoulli(make_sequence(seed, 1, measure)); };
}

// g~ = X_0, h = X_0 X_1 on Gaussian coordinates: f - E f = g~ + h o tau^{-1} - h.
const Observable kMixed{[](const ShiftSystem& s) { return s.coordinate(0) + s.coordinate(1) * s.coordinate(2) - s.coordinate(0) * s.coordinate(1); },
                        {0, 2},
                        "X0 + X1 X2 - X0 X1"};
const Observable kCoboundary{[](const ShiftSystem& s) { return s.coordinate(1) * s.coordinate(2) - s.coordinate(0) * s.coordinate(1); },
                             {0, 2},
                             "X1 X2 - X0 X1"};
const Observable kX0{[](const ShiftSystem& s) { return s.coordinate(0); }, {0, 0}, "X0"};
const Observable kProduct{[](const ShiftSystem& s) { return s.coordinate(0) * s.coordinate(1); }, {0, 1}, "X0 X1"};

PolynomialObservable mixed_polynomial() {
  const auto X = [](std::int64_t i) { return PolynomialObservable::coordinate(BaseMeasure::Gaussian, i); };
  return X(0) + X(1) * X(2) - X(0) * X(1);
}

ResultTable trace_table(const ErgodicRunStats& stats) {
  ResultTable t{{{"n", "Birkhoff sum length N"}, {"lil_statistic", "|S_N| / sqrt(2 N ln ln N)"}}, {}};
  for (const auto& c : stats.lil_trace) t.add({fmt(c.n), fmt(c.statistic)});
  return t;
}

// --- norm-sequence families ------------------------------------------------------

struct Family {
  ClosedFormTerm term;
  std::string label;
};

Family sequence_family(const Params& p) {
  const auto& kind = p.text("family");
  if (kind == "geometric") {
    const double r = p.real("ratio");
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("ratio must lie in [0, 1)");
    return {[r](double n) { return std::pow(r, n); }, "r^n"};
  }
  if (kind == "harmonic") return {[](double n) { return 1.0 / (n + 1.0); }, "1/(n+1)"};
  if (kind == "inverse_square") return {[](double n) { return 1.0 / ((n + 1.0) * (n + 1.0)); }, "1/(n+1)^2"};
  if (kind == "power") {
    const double e = p.real("exponent");
    return {[e](double n) { return std::pow(n + 1.0, e); }, "(n+1)^exponent"};
  }
  if (kind == "zero") return {[](double) { return 0.0; }, "0"};
  throw ConfigError("family must be geometric, harmonic, inverse_square, power or zero");
}

NormSequence norm_sequence(const Params& p, const std::string& length_key) {
  const auto fam = sequence_family(p);
  NormSequence s;
  const int n = positive_int(p, length_key, 1 << 22);
  for (int i = 0; i < n; ++i) s.values.push_back(fam.term(i));
  if (p.flag("closed_form")) s.closed_form = fam.term;
  return s;
}

const std::vector<ParamSpec> kFamilyParams = {
    {"family", "geometric", "geometric | harmonic | inverse_square | power | zero"},
    {"ratio", "0.5", "ratio r of the geometric family"},
    {"exponent", "-2", "exponent of the power family (n+1)^exponent"},
    {"closed_form", "true", "pass the family as a closed-form continuation past the data"},
};

std::vector<ParamSpec> with_family(std::vector<ParamSpec> extra, const std::string& ratio) {
  auto out = kFamilyParams;
  out[1].default_value = ratio;
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

ResultTable sequence_table(const std::vector<double>& values, const std::string& name, const std::string& description) {
  ResultTable t{{{"n", "index"}, {name, description}}, {}};
  for (std::size_t i = 0; i < values.size(); ++i) t.add({fmt(i), fmt(values[i])});
  return t;
}

DerivativeEnergySequence energy_sequence(const Params& p) {
  const auto fam = sequence_family(p);
  DerivativeEnergySequence e;
  const int n = positive_int(p, "length", 1 << 22);
  for (int i = 0; i < n; ++i) e.values.push_back(fam.term(i));
  if (p.flag("closed_form")) e.closed_form = fam.term;
  return e;
}

// --- torus -----------------------------------------------------------------------

FourierObservable torus_observable(const Params& p) {
  const auto& kind = p.text("observable");
  FourierObservable f;
  if (kind == "cos4pi") {
    add_cosine(f, {2}, 1.0);
  } else if (kind == "lacunary") {
    // sum_n 2^{-n} cos(2 pi 2^n y)
    f.geometric.push_back({{1}, 0.5, 0.5, true});
  } else if (kind == "power") {
    f.power = PowerLawFamily{1.0, p.real("p")};
  } else if (kind == "json") {
    try {
      f = fourier_from_json(p.text("fourier_json"));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("fourier_json: ") + e.what());
    }
  } else {
    throw ConfigError("observable must be cos4pi, lacunary, power or json");
  }
  return f;
}

std::string frequency_label(const Frequency& q) {
  std::string out;
  for (std::size_t i = 0; i < q.size(); ++i) out += (i ? ";" : "") + std::to_string(q[i]);
  return out;
}

ExperimentOutput torus_orbit(const Params& p, std::uint64_t) {
  const auto f = torus_observable(p);
  const auto result = gordin_check_fourier(f, positive_int(p, "horizon", 4096));
  ExperimentOutput out;
  out.table.columns = {{"root", "odd orbit root q (coordinates separated by ';')"},
                       {"N", "partial-sum length"},
                       {"partial_re", "Re sum_{n<=N} a_{2^n q}"},
                       {"partial_im", "Im sum_{n<=N} a_{2^n q}"}};
  for (const auto& orbit : result.orbits.orbits) {
    for (std::size_t n = 0; n < orbit.partial_sums.size(); ++n) {
      out.table.add({frequency_label(orbit.root), fmt(n), fmt(orbit.partial_sums[n].real()), fmt(orbit.partial_sums[n].imag())});
    }
  }
  out.report = parsed(to_json(result.report));
  out.report["centered_norm"] = f.centered_norm();
  out.report["total_roots"] = result.orbits.total_roots;
  out.report["total_all"] = result.orbits.total_all;
  out.report["sup_over_n"] = number(result.orbits.sup_over_n);
  out.undecided = result.report.membership == Membership::Undecided;
  return out;
}

ExperimentOutput torus_domination(const Params& p, std::uint64_t) {
  const double r = p.real("ratio");
  if (!(r > 0.0 && r < 1.0)) throw ConfigError("ratio must lie in (0, 1)");
  FourierObservable f;
  f.geometric.push_back({{1}, 0.5, r, true});
  NormSequence c;
  const int horizon = positive_int(p, "horizon", 1 << 16);
  for (int n = 0; n < horizon; ++n) c.values.push_back(std::pow(r, n));
  c.closed_form = [r](double n) { return std::pow(r, n); };
  const double bound = corollary10_bound(f, c);
  const auto orbit = gordin_check_fourier(f, horizon);
  ExperimentOutput out;
  out.table = sequence_table(c.values, "c_n", "domination constant with |a_{2^n m}| <= c_n |a_m|");
  out.report["domination_bound"] = number(bound);
  out.report["orbit_bound"] = number(orbit.report.g_tilde_bound);
  out.report["centered_norm"] = f.centered_norm();
  out.report["membership"] = std::isfinite(bound) ? "member" : "undecided";
  out.undecided = !std::isfinite(bound);
  return out;
}

ExperimentOutput torus_sobolev(const Params& p, std::uint64_t) {
  FourierObservable f;
  f.power = PowerLawFamily{1.0, p.real("p")};
  const auto result = gordin_check_fourier(f, positive_int(p, "horizon", 4096));
  ExperimentOutput out;
  out.table.columns = {{"alpha", "Sobolev exponent"}, {"sobolev_norm", "(sum_q |a_q|^2 |q|^{2 alpha})^{1/2}, inf outside H^alpha"}};
  for (double alpha : p.reals("alphas")) out.table.add({fmt(alpha), fmt(sobolev_norm(f, alpha))});
  out.report = parsed(to_json(result.report));
  out.report["centered_norm"] = f.centered_norm();
  out.undecided = result.report.membership == Membership::Undecided;
  return out;
}

// --- decomposition, rates, LIL ------------------------------------------------------

ExperimentOutput gordin_decomposition(const Params& p, std::uint64_t) {
  const auto& kind = p.text("observable");
  PolynomialObservable f(BaseMeasure::Gaussian);
  if (kind == "mixed") {
    f = mixed_polynomial();
  } else if (kind == "product") {
    const auto U = [](std::int64_t i) { return PolynomialObservable::coordinate(BaseMeasure::Uniform, i); };
    f = U(0) * U(1);
  } else {
    throw ConfigError("observable must be mixed or product");
  }
  const auto centered = f - PolynomialObservable::constant(f.measure(), f.expectation());
  const auto d = gordin_decompose(f);
  ExperimentOutput out;
  out.table.columns = {{"N", "partial-sum length"}, {"partial_sum_norm", "||sum_{n<=N} T^n (f - E f)||"}};
  auto term = centered;
  auto sum = PolynomialObservable::constant(f.measure(), 0.0);
  const int n_max = positive_int(p, "n_max", 4096);
  for (int n = 0; n <= n_max; ++n) {
    sum = sum + term;
    out.table.add({fmt(n), fmt(sum.l2_norm())});
    term = term.perron_frobenius();
  }
  const auto residual = centered - (d.g_tilde + d.h.shifted(-1) - d.h);
  out.report["g_norm"] = d.g.l2_norm();
  out.report["g_tilde_norm"] = d.g_tilde.l2_norm();
  out.report["h_norm"] = d.h.l2_norm();
  out.report["decomposition_exact"] = residual.is_zero();
  out.report["increment_has_zero_conditional_mean"] = d.g_tilde.conditional_on_tail(1).is_zero();
  out.report["h_centered"] = std::fabs(d.h.expectation()) < 1e-14;
  out.report["iterations"] = d.iterations;
  return out;
}

ExperimentOutput birkhoff_rate(const Params& p, std::uint64_t seed) {
  const auto n = positive_long(p, "N");
  const int reps = positive_int(p, "reps", 1 << 20);
  const auto r = rate_estimate(bernoulli_factory(BaseMeasure::Gaussian), kMixed, n, reps, 0.0, seed);
  const double g_tilde = gordin_decompose(mixed_polynomial()).g_tilde.l2_norm();
  ExperimentOutput out;
  out.table.columns = {{"N", "Birkhoff sum length"},
                       {"reps", "replications"},
                       {"rate", "sqrt(mean S_N^2 / N)"},
                       {"stderr", "delta-method standard error of rate"},
                       {"g_tilde_norm", "||g~|| from the exact decomposition"}};
  out.table.add({fmt(n), fmt(reps), fmt(r.value), fmt(r.stderr), fmt(g_tilde)});
  out.report["rate"] = r.value;
  out.report["stderr"] = r.stderr;
  out.report["g_tilde_norm"] = g_tilde;
  out.report["relative_error"] = std::fabs(r.value / g_tilde - 1.0);
  return out;
}

ErgodicRunStats lil_run(const Params& p, std::uint64_t seed, const Observable& f) {
  const auto n = positive_long(p, "N");
  const auto lo = positive_long(p, "window_lo");
  if (lo < 3 || lo > n) throw ConfigError("window_lo must lie in [3, N]");
  BirkhoffOptions options;
  options.max_window = {{lo, n}};
  return birkhoff_sum(bernoulli_factory(BaseMeasure::Gaussian)(seed), f, n, 0.0, options);
}

ExperimentOutput lil_iid(const Params& p, std::uint64_t seed) {
  const auto stats = lil_run(p, seed, kX0);
  ExperimentOutput out;
  out.table = trace_table(stats);
  const double lo = p.real("band_lo"), hi = p.real("band_hi");
  out.report["running_max"] = *stats.running_max;
  out.report["final_statistic"] = stats.lil_trace.empty() ? 0.0 : stats.lil_trace.back().statistic;
  out.report["g_tilde_norm"] = 1.0;
  out.report["band"] = {lo, hi};
  out.report["in_band"] = *stats.running_max >= lo && *stats.running_max <= hi;
  return out;
}

ExperimentOutput lil_coboundary(const Params& p, std::uint64_t seed) {
  const auto stats = lil_run(p, seed, kCoboundary);
  ExperimentOutput out;
  out.table = trace_table(stats);
  const double final_stat = lil_statistic(stats.sum, stats.n);
  out.report["final_statistic"] = final_stat;
  out.report["g_tilde_norm"] = 0.0;
  out.report["threshold"] = p.real("threshold");
  out.report["below_threshold"] = final_stat <= p.real("threshold");
  return out;
}

ExperimentOutput lil_finite_window(const Params& p, std::uint64_t seed) {
  const auto n = positive_long(p, "N");
  const int runs = positive_int(p, "runs", 10000);
  const double centered = std::sqrt(7.0 / 144.0);  // X_0 X_1, uniform coordinates
  const double bound = lemma7_bound(2, centered);
  const double margin = p.real("margin");
  BirkhoffOptions options;
  options.max_window = {{std::min<std::int64_t>(1000, n), n}};
  ExperimentOutput out;
  out.table.columns = {{"run", "replication index"}, {"running_max", "max over the window of |S_N| / sqrt(2 N ln ln N)"}};
  int inside = 0;
  for (int r = 0; r < runs; ++r) {
    const auto stats = birkhoff_sum(bernoulli_factory(BaseMeasure::Uniform)(mix_seed(seed, r)), kProduct, n, 0.25, options);
    if (*stats.running_max <= bound + margin) ++inside;
    out.table.add({fmt(r), fmt(*stats.running_max)});
  }
  out.report["bound"] = bound;
  out.report["margin"] = margin;
  out.report["runs_within_bound"] = inside;
  out.report["runs"] = runs;
  return out;
}

ExperimentOutput method_comparison(const Params& p, std::uint64_t seed) {
  const auto n = positive_long(p, "N");
  const int reps = positive_int(p, "reps", 100000);
  const auto cmp = compare_methods(bernoulli_factory(BaseMeasure::Uniform), kProduct, 0.25, n, reps, seed);
  ExperimentOutput out;
  out.table.columns = {{"N", "samples per estimate"},
                       {"shift_rms_error", "RMS error of the ergodic average"},
                       {"classical_rms_error", "RMS error of i.i.d. Monte Carlo"},
                       {"ratio", "shift / classical"}};
  out.table.add({fmt(n), fmt(cmp.shift_rms_error), fmt(cmp.classical_rms_error), fmt(cmp.ratio())});
  out.report["ratio"] = cmp.ratio();
  out.report["asymptotic_ratio"] = std::sqrt((7.0 / 144 + 2.0 / 48) / (7.0 / 144));
  return out;
}

// --- bound calculators ------------------------------------------------------------------

ExperimentOutput tail_norm_bound(const Params& p, std::uint64_t) {
  const auto s = norm_sequence(p, "horizon");
  const auto v = prop4_bound(s, s.values.size());
  ExperimentOutput out;
  out.table = sequence_table(s.values, "tail_norm", "||E f - E(f | F_n^inf)||");
  out.report = parsed(to_json(v));
  out.report["status"] = criterion_status(v);
  out.undecided = criterion_status(v) == "undecided";
  return out;
}

ExperimentOutput martingale_difference_bounds(const Params& p, std::uint64_t) {
  const auto s = norm_sequence(p, "length");
  const auto b = prop5_bounds(s);
  ExperimentOutput out;
  out.table = sequence_table(s.values, "increment_norm", "||f_m|| of the martingale-difference decomposition");
  out.report["square_tail"] = parsed(to_json(b.square_tail));
  out.report["root_weight"] = parsed(to_json(b.root_weight));
  out.report["bound_b"] = number(b.bound_b());
  out.report["bound_c"] = number(b.bound_c());
  out.undecided = criterion_status(b.square_tail) == "undecided" && criterion_status(b.root_weight) == "undecided";
  return out;
}

ExperimentOutput increment_weighted_bound(const Params& p, std::uint64_t) {
  const auto s = norm_sequence(p, "length");
  const auto v = prop6_bound(s);
  ExperimentOutput out;
  out.table = sequence_table(s.values, "increment_norm", "||f_k - E f_k||");
  out.report["gate"] = parsed(to_json(v.gate));
  out.report["bound"] = parsed(to_json(v.bound));
  out.report["bound_on_g_tilde"] = number(v.bound_on_g_tilde());
  out.report["status"] = v.satisfied() ? "satisfied" : criterion_status(v.gate);
  out.undecided = !v.satisfied() && criterion_status(v.gate) == "undecided";
  return out;
}

ExperimentOutput stopping_time_bound(const Params& p, std::uint64_t seed) {
  // T = first index j >= 0 with X_j > threshold on uniform coordinates, f = 1{T = k}.
  const auto k = p.integer("k");
  if (k < 0 || k > 1000) throw ConfigError("k must lie in [0, 1000]");
  const double threshold = p.real("threshold");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
  const double alpha = p.real("alpha");
  if (!(alpha > 1.0)) throw ConfigError("alpha must exceed 1");
  const auto samples = positive_long(p, "samples");
  const double q = 1.0 - threshold;
  const double prob = q * std::pow(threshold, static_cast<double>(k));
  const double weight = std::pow(k + 1.0, 1.5);
  const double exact = std::sqrt(prob) * weight;
  RunningMoments hits;
  for (std::int64_t i = 0; i < samples; ++i) {
    const auto seq = make_sequence(mix_seed(seed, static_cast<std::uint64_t>(i)), 1);
    std::int64_t t = 0;
    while (t <= k && !(seq.value(t) > threshold)) ++t;
    hits.add(t == k ? weight * weight : 0.0);
  }
  const double mc = std::sqrt(hits.mean());
  const double mc_stderr = mc > 0 ? hits.stderr_of_mean() / (2.0 * mc) : 0.0;
  const double kd = static_cast<double>(k);
  const double gate = k >= 2 ? prob * kd * kd * kd * std::pow(std::log(kd), alpha) : 0.0;
  ExperimentOutput out;
  out.table.columns = {{"k", "f = 1{T = k}"},
                       {"p", "P(X_j > threshold)"},
                       {"exact_weighted_norm", "||f (T+1)^{3/2}|| in closed form"},
                       {"mc_weighted_norm", "Monte Carlo estimate of the same norm"},
                       {"mc_stderr", "delta-method standard error"},
                       {"bound", "(sqrt 6 / pi) ||f (T+1)^{3/2}||"}};
  out.table.add({fmt(k), fmt(q), fmt(exact), fmt(mc), fmt(mc_stderr), fmt(prop8_bound(exact))});
  out.report["bound"] = prop8_bound(exact);
  out.report["exact_weighted_norm"] = exact;
  out.report["mc_weighted_norm"] = mc;
  out.report["mc_stderr"] = mc_stderr;
  out.report["gate_value"] = gate;  // E[f^2 T^3 log^alpha T], finite
  return out;
}

ExperimentOutput dirichlet_energy(const Params& p, std::uint64_t) {
  const auto e = energy_sequence(p);
  const auto v = dirichlet_criterion(e);
  ExperimentOutput out;
  out.table = sequence_table(e.values, "energy", "E[F_i'^2]");
  out.report = parsed(to_json(v));
  out.report["status"] = criterion_status(v);
  out.undecided = criterion_status(v) == "undecided";
  return out;
}

ExperimentOutput energy_log_gate(const Params& p, std::uint64_t) {
  const auto e = energy_sequence(p);
  const double alpha = p.real("alpha");
  const auto series = corollary12_series(e, alpha);
  const auto dirichlet = dirichlet_criterion(e);
  ExperimentOutput out;
  out.table.columns = {{"i", "coordinate"}, {"weighted_energy", "i^2 log^alpha(i) E[f_i'^2], i >= 2"}};
  for (std::size_t i = 2; i < e.values.size(); ++i) {
    const double x = static_cast<double>(i);
    out.table.add({fmt(i), fmt(x * x * std::pow(std::log(x), alpha) * e.values[i])});
  }
  out.report["gate"] = parsed(to_json(series));
  out.report["gate_status"] = criterion_status(series);
  out.report["dirichlet"] = parsed(to_json(dirichlet));
  out.undecided = criterion_status(series) == "undecided";
  return out;
}

ExperimentOutput dirichlet_example(const Params& p, std::uint64_t seed) {
  const double t = p.real("t");
  if (!(t > 0.0 && t < 1.0)) throw ConfigError("t must lie in (0, 1)");
  DerivativeEnergySequence e;
  const int length = positive_int(p, "length", 1 << 22);
  for (int n = 0; n < length; ++n) e.values.push_back(squared_coefficient_energy(n, t));
  e.tail = [t](double k) { return squared_coefficient_energy_tail(k, t); };
  const auto v = dirichlet_criterion(e);

  const int levels = positive_int(p, "levels", 24);
  const auto samples = positive_long(p, "samples");
  RunningMoments f;
  for (std::int64_t i = 0; i < samples; ++i) {
    f.add(squared_coefficient_functional(ShiftSystem::schauder(mix_seed(seed, static_cast<std::uint64_t>(i))), t, levels));
  }
  double mean = 0.0;  // E a_n^2 = 1
  for (std::int64_t n = 1; n < (std::int64_t{1} << levels); ++n) mean += std::sqrt(schauder_phi_flat(n, t)) / static_cast<double>(n + 1);

  ExperimentOutput out;
  out.table = sequence_table(e.values, "energy", "E[F_n'^2] = 4 phi_n(t) / (n+1)^2");
  out.report = parsed(to_json(v));
  out.report["status"] = criterion_status(v);
  out.report["stopping_time_gate"] = corollary12_gate(e);
  out.report["sample_mean"] = f.mean();
  out.report["sample_stderr"] = f.stderr_of_mean();
  out.report["exact_mean"] = mean;
  out.undecided = criterion_status(v) == "undecided";
  return out;
}

// --- SDE ---------------------------------------------------------------------------

ExperimentOutput sde_decay(const Params& p, std::uint64_t seed) {
  const double t = p.real("t");
  const int n_max = positive_int(p, "n_max", 20);
  if (!(t > 0.0 && t <= 1.0) || std::ldexp(1.0, -n_max) > t) throw ConfigError("need 2^{-n_max} <= t <= 1");
  const auto& h_kind = p.text("h");
  const auto& semigroup = p.text("semigroup");
  std::function<double(const State&)> h;
  if (h_kind == "identity") {
    h = [](const State& x) { return x[0]; };
  } else if (h_kind == "capped") {
    const double cap = p.real("cap");
    h = [cap](const State& x) { return std::min(x[0], cap); };
  } else {
    throw ConfigError("h must be identity or capped");
  }
  DecayOptions options;
  options.outer = static_cast<std::size_t>(positive_long(p, "outer"));
  options.seed = seed;
  options.tn.time_level = positive_int(p, "time_level", 24);
  options.tn.inner = static_cast<std::size_t>(p.integer("inner"));
  options.tn.seed = mix_seed(seed, 0x5eed);
  if (semigroup == "exact") {
    if (h_kind != "identity") throw ConfigError("the exact semigroup is only available for h = identity");
    options.tn.exact = ou_identity_semigroup();
  } else if (semigroup != "nested") {
    throw ConfigError("semigroup must be exact or nested");
  }
  const auto diag = holder_decay_diagnostic(ornstein_uhlenbeck(p.real("x0")), h, p.real("lambda"), t, n_max, options);

  ExperimentOutput out;
  out.table.columns = {{"n", "shift power"},
                       {"var_estimate", "bias-corrected Var[T^n f]"},
                       {"stderr", "standard error of var_estimate"},
                       {"oracle", "exact OU variance for h = identity, nan otherwise"}};
  for (const auto& level : diag.levels) {
    const double oracle = h_kind == "identity" ? ou_tn_variance(t, level.n) : std::nan("");
    out.table.add({fmt(level.n), fmt(level.variance), fmt(level.stderr), fmt(oracle)});
  }
  out.report = parsed(to_json(diag));
  out.report["membership"] = diag.certified ? "member" : "undecided";
  out.undecided = !diag.certified;
  return out;
}

std::vector<Atom> parse_atoms(const std::string& text) {
  std::vector<Atom> atoms;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    std::stringstream parts(item);
    std::string s, x, w;
    if (!std::getline(parts, s, ':') || !std::getline(parts, x, ':') || !std::getline(parts, w, ':'))
      throw ConfigError("atoms are s:x:w separated by ';', got '" + item + "'");
    const Params read(std::map<std::string, std::string>{{"s", s}, {"x", x}, {"w", w}});
    atoms.push_back({read.real("s"), {read.real("x")}, read.real("w")});
  }
  if (atoms.empty()) throw ConfigError("need at least one atom");
  return atoms;
}

ExperimentOutput sde_measure_functional(const Params& p, std::uint64_t seed) {
  const auto atoms = parse_atoms(p.text("atoms"));
  const int steps = positive_int(p, "steps", 1 << 20);
  const auto samples = positive_long(p, "samples");
  const auto sde = ornstein_uhlenbeck(0.0);
  const auto g = [](const State& x) { return x[0]; };
  RunningMoments m;
  for (std::int64_t i = 0; i < samples; ++i) m.add(measure_functional(sde, g, atoms, DyadicPathStore(mix_seed(seed, static_cast<std::uint64_t>(i))), steps));
  ExperimentOutput out;
  out.table.columns = {{"s", "atom time"}, {"x", "atom start point"}, {"w", "atom weight"}, {"exact_term", "w x e^{-s} = w E X^x_s for OU"}};
  double exact = 0.0;
  for (const auto& a : atoms) {
    const double term = a.w * a.x[0] * std::exp(-a.s);
    exact += term;
    out.table.add({fmt(a.s), fmt(a.x[0]), fmt(a.w), fmt(term)});
  }
  out.report["sample_mean"] = m.mean();
  out.report["sample_stderr"] = m.stderr_of_mean();
  out.report["exact_mean"] = exact;
  out.report["z"] = m.stderr_of_mean() > 0 ? (m.mean() - exact) / m.stderr_of_mean() : 0.0;
  return out;
}

// --- chaos -------------------------------------------------------------------------

ExperimentOutput kernel_table(const KernelCheck& check) {
  ExperimentOutput out;
  out.table.columns = {{"N", "partial-sum length"}, {"norm_sq", "||sum_{n<=N} T^n h||^2"}, {"term_norm_sq", "||T^N h||^2"}};
  for (std::size_t n = 0; n < check.sums.norms.size(); ++n) {
    const double term = n < check.sums.term_norms.size() ? check.sums.term_norms[n] : std::nan("");
    out.table.add({fmt(n), fmt(check.sums.norms[n]), fmt(term)});
  }
  out.report = parsed(to_json(check.report));
  out.report["sup"] = number(check.sums.sup);
  out.report["limit"] = check.sums.limit ? number(*check.sums.limit) : json(nullptr);
  out.report["method"] = check.sums.method;
  out.undecided = check.report.membership == Membership::Undecided;
  return out;
}

ExperimentOutput chaos_power(const Params& p, std::uint64_t) {
  const double alpha = p.real("alpha");
  const int n_max = positive_int(p, "n_max", 4096);
  const auto check = gordin_check_kernel(KernelSpec::power(alpha), n_max);
  auto out = kernel_table(check);
  const double q = std::pow(2.0, -(0.5 - alpha));
  out.report["closed_form_limit"] = 1.0 / ((1.0 - 2.0 * alpha) * (1.0 - q) * (1.0 - q));
  if (p.flag("quadrature")) {
    const auto quad = kernel_sum_norms_quadrature(
        KernelSpec::from_function([alpha](std::span<const double> t) { return std::pow(t[0], -alpha); }), n_max);
    double worst = 0.0;
    for (std::size_t n = 0; n < quad.size(); ++n) worst = std::max(worst, std::fabs(quad[n] / check.sums.norms[n] - 1.0));
    out.report["quadrature_max_relative_error"] = worst;
  }
  return out;
}

ExperimentOutput chaos_log(const Params& p, std::uint64_t) {
  return kernel_table(gordin_check_kernel(KernelSpec::log_power(p.real("beta")), positive_int(p, "n_max", 4096)));
}

ExperimentOutput chaos_oscillating(const Params& p, std::uint64_t) {
  const auto check = gordin_check_kernel(KernelSpec::oscillating(p.flag("absolute")), positive_int(p, "n_max", 4096));
  auto out = kernel_table(check);
  double root_sum = 0.0;
  for (double x : check.sums.term_norms) root_sum += std::sqrt(x);
  out.report["sum_term_norms"] = root_sum;  // sum_n ||T^n F|| over the data, grows like sqrt(N)
  return out;
}

ExperimentOutput chaos_series(const Params& p, std::uint64_t) {
  const auto a = p.reals("amplitudes");
  const double alpha = p.real("alpha");
  const auto total = chaos_bound(a, alpha);
  ExperimentOutput out;
  out.table.columns = {{"m", "chaos order"}, {"a_m", "kernel amplitude"}, {"term", "order-m contribution to the bound"}};
  for (std::size_t m = 0; m < a.size(); ++m) {
    std::vector<double> single(a.size(), 0.0);
    single[m] = a[m];
    out.table.add({fmt(m + 1), fmt(a[m]), fmt(chaos_bound(single, alpha).bound)});
  }
  out.report["bound"] = number(total.bound);
  out.report["equal_alpha_series"] = total.equal_alpha_series ? number(*total.equal_alpha_series) : json(nullptr);
  return out;
}

ExperimentOutput ito_isometry(const Params& p, std::uint64_t seed) {
  const double alpha = p.real("alpha");
  const auto h = KernelSpec::power(alpha);
  const auto samples = positive_long(p, "samples");
  RunningMoments square;
  for (std::int64_t i = 0; i < samples; ++i) {
    const double x = sample_wiener_integral(h, DyadicPathStore(mix_seed(seed, static_cast<std::uint64_t>(i))));
    square.add(x * x);
  }
  const double target = kernel_l2_norm_squared(h) - isometry_deficit(h);
  ExperimentOutput out;
  out.table.columns = {{"samples", "paths"},
                       {"second_moment", "sample mean of F^2"},
                       {"stderr", "standard error"},
                       {"grid_target", "int h^2 minus the grid deficit"}};
  out.table.add({fmt(samples), fmt(square.mean()), fmt(square.stderr_of_mean()), fmt(target)});
  out.report["second_moment"] = square.mean();
  out.report["stderr"] = square.stderr_of_mean();
  out.report["isometry_value"] = kernel_l2_norm_squared(h);
  out.report["grid_target"] = target;
  return out;
}

// --- Wiener space -------------------------------------------------------------------------

ExperimentOutput schauder_roundtrip(const Params& p, std::uint64_t seed) {
  const int levels = positive_int(p, "levels", 20);
  const int trials = positive_int(p, "trials", 100000);
  ExperimentOutput out;
  out.table.columns = {{"trial", "random coefficient set"}, {"max_abs_error", "max |coefficients(synthesize(a)) - a|"}};
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const auto system = ShiftSystem::schauder(mix_seed(seed, trial));
    auto c = coefficients_of(system, levels);
    const auto back = schauder_coefficients(schauder_synthesize_grid(c), true);
    double err = 0.0;
    for (std::size_t i = 0; i < c.flat.size(); ++i) err = std::max(err, std::fabs(back.flat[i] - c.flat[i]));
    worst = std::max(worst, err);
    out.table.add({fmt(trial), fmt(err)});
  }
  out.report["max_abs_error"] = worst;
  return out;
}

ExperimentOutput brownian_covariance(const Params& p, std::uint64_t seed) {
  const auto& mode = p.text("mode");
  if (mode != "brownian" && mode != "bridge") throw ConfigError("mode must be brownian or bridge");
  const auto times = p.reals("times");
  for (double t : times) {
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError("times must lie in (0, 1]");
  }
  const auto samples = positive_long(p, "samples");
  const int levels = positive_int(p, "levels", 20);
  const std::size_t k = times.size();
  std::vector<RunningMoments> cov(k * k);
  double scaling_error = 0.0;
  std::vector<double> values(k);
  for (std::int64_t i = 0; i < samples; ++i) {
    const auto s = mix_seed(seed, static_cast<std::uint64_t>(i));
    if (mode == "brownian") {
      const DyadicPathStore path(s);
      for (std::size_t a = 0; a < k; ++a) values[a] = path.brownian(times[a]);
      if (i < 1000) {
        const auto shifted = scaling_shift(path);
        for (double t : times) {
          if (2 * t <= 1.0) scaling_error = std::max(scaling_error, std::fabs(shifted.brownian(t) - path.brownian(2 * t) / std::sqrt(2.0)));
        }
      }
    } else {
      auto c = coefficients_of(ShiftSystem::schauder(s), levels);
      c.flat[0] = 0.0;
      for (std::size_t a = 0; a < k; ++a) values[a] = schauder_synthesize(c, times[a]);
    }
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) cov[a * k + b].add(values[a] * values[b]);
  }
  ExperimentOutput out;
  out.table.columns = {{"s", "first time"},
                       {"t", "second time"},
                       {"covariance", "sample E[X_s X_t]"},
                       {"stderr", "standard error"},
                       {"oracle", "min(s,t), or min(s,t) - s t for the bridge"},
                       {"z", "(covariance - oracle) / stderr"}};
  double worst = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      const auto& m = cov[a * k + b];
      const double oracle = std::min(times[a], times[b]) - (mode == "bridge" ? times[a] * times[b] : 0.0);
      const double z = (m.mean() - oracle) / m.stderr_of_mean();
      worst = std::max(worst, std::fabs(z));
      out.table.add({fmt(times[a]), fmt(times[b]), fmt(m.mean()), fmt(m.stderr_of_mean()), fmt(oracle), fmt(z)});
    }
  }
  out.report["max_abs_z"] = worst;
  if (mode == "brownian") out.report["scaling_identity_max_error"] = scaling_error;
  return out;
}

Experiment out_of_scope(std::string id, std::string anchor, std::string note) {
  Experiment e;
  e.id = std::move(id);
  e.summary = note;
  e.anchors = {std::move(anchor)};
  e.in_scope = false;
  e.scope_note = std::move(note);
  return e;
}

std::vector<Experiment> build() {
  std::vector<Experiment> r;
  const auto add = [&r](std::string id, std::string summary, std::vector<std::string> anchors, bool decides, std::vector<ParamSpec> params,
                        std::function<ExperimentOutput(const Params&, std::uint64_t)> run) {
    Experiment e;
    e.id = std::move(id);
    e.summary = std::move(summary);
    e.anchors = std::move(anchors);
    e.decides = decides;
    e.params = std::move(params);
    e.run = std::move(run);
    r.push_back(std::move(e));
  };

  add("gordin-decomposition", "exact g~ + h o tau^{-1} - h decomposition of a polynomial observable and its bounded transfer-operator sums",
      {"bounded transfer-operator partial sums", "martingale-coboundary decomposition"}, false,
      {{"observable", "mixed", "mixed (X0 + X1 X2 - X0 X1, Gaussian) | product (X0 X1, uniform)"}, {"n_max", "30", "largest partial-sum length"}},
      gordin_decomposition);
  add("rate-l2", "||S_N|| / sqrt N against ||g~|| for f = g~ + h o tau^{-1} - h", {"Birkhoff-sum L2 rate"}, false,
      {{"N", "10000", "Birkhoff sum length"}, {"reps", "200", "replications"}}, birkhoff_rate);
  add("lil-iid", "running max of the LIL statistic for i.i.d. N(0,1) coordinates", {"LIL constant"}, false,
      {{"N", "1000000", "Birkhoff sum length"},
       {"window_lo", "1000", "start of the running-max window"},
       {"band_lo", "0.6", "lower edge of the acceptance band"},
       {"band_hi", "1.4", "upper edge of the acceptance band"}},
      lil_iid);
  add("lil-coboundary", "LIL statistic of a pure coboundary (g~ = 0)", {"LIL constant"}, false,
      {{"N", "1000000", "Birkhoff sum length"}, {"window_lo", "1000", "start of the running-max window"}, {"threshold", "0.1", "largest accepted final statistic"}},
      lil_coboundary);
  add("lil-finite-window", "running LIL max against sqrt(d) ||f - E f|| for f depending on d = 2 coordinates", {"finite-window LIL bound"}, false,
      {{"N", "100000", "Birkhoff sum length"}, {"runs", "10", "replications"}, {"margin", "0.3", "allowed excess over the bound"}}, lil_finite_window);
  add("method-comparison", "ergodic average against i.i.d. Monte Carlo at equal sample size", {"ergodic versus classical Monte Carlo"}, false,
      {{"N", "4000", "samples per estimate"}, {"reps", "60", "replications"}}, method_comparison);

  add("tail-norm-bound", "sum of tail conditional norms", {"tail conditional-norm criterion"}, true,
      with_family({{"horizon", "60", "number of data terms"}}, "0.5"), tail_norm_bound);
  add("martingale-difference-bounds", "square-tail and root-weight bounds from martingale-difference norms", {"martingale-difference criteria"}, true,
      with_family({{"length", "40", "number of data terms"}}, "0.5"), martingale_difference_bounds);
  add("increment-weighted-bound", "gate sum k ||f_k - E f_k|| and bound sum sqrt(k+1) ||f_k - E f_k||", {"increment-weighted criterion"}, true,
      with_family({{"length", "30", "number of data terms"}}, "0.3333333333333333"), increment_weighted_bound);
  add("stopping-time-bound", "LIL bound for f measurable up to a geometric stopping time", {"stopping-time LIL bound"}, false,
      {{"k", "1", "f = 1{T = k}"},
       {"threshold", "0.5", "T = first j >= 0 with X_j > threshold"},
       {"alpha", "1.5", "log exponent of the moment gate"},
       {"samples", "100000", "Monte Carlo cross-check samples"}},
      stopping_time_bound);

  add("torus-orbit", "orbit-sum membership test on the torus", {"torus orbit-sum criterion"}, true,
      {{"observable", "cos4pi", "cos4pi | lacunary | power | json"},
       {"p", "1", "exponent of the power-law family c |m|^{-p}"},
       {"fourier_json", "{}", "observable as JSON when observable = json"},
       {"horizon", "40", "largest partial-sum length reported"}},
      torus_orbit);
  add("torus-domination", "coefficient domination |a_{2^n m}| <= c_n |a_m| for a geometric orbit family", {"torus coefficient domination"}, true,
      {{"ratio", "0.5", "orbit ratio r, c_n = r^n"}, {"horizon", "60", "number of c_n terms"}}, torus_domination);
  add("torus-sobolev", "Sobolev norms and membership of the power-law family", {"torus Sobolev membership"}, true,
      {{"p", "1", "exponent of c |m|^{-p}"}, {"alphas", "0.1,0.25,0.45,0.5,0.75", "Sobolev exponents"}, {"horizon", "40", "largest partial-sum length"}},
      torus_sobolev);

  add("dirichlet-criterion", "sum_k (sum_{i>=k} E F_i'^2)^{1/2} on a family of energies", {"derivative-energy criterion"}, true,
      with_family({{"length", "200", "number of data terms"}}, "0.25"), dirichlet_energy);
  add("energy-log-gate", "sum_{i>=2} i^2 log^alpha(i) E f_i'^2 and the criterion it implies", {"log-weighted energy gate"}, true,
      with_family({{"length", "200", "number of data terms"}, {"alpha", "1.5", "log exponent, > 1"}}, "0.25"), energy_log_gate);
  add("dirichlet-example", "F = sum_n sqrt(phi_n(t)) a_n^2 / (n+1) on Schauder coefficients", {"squared Schauder-coefficient functional"}, true,
      {{"t", "0.3", "evaluation time"},
       {"length", "4096", "number of explicit energies"},
       {"levels", "12", "Schauder levels used for sampling F"},
       {"samples", "2000", "sampled values of F"}},
      dirichlet_example);
  add("schauder-roundtrip", "coefficients(synthesize(a)) = a on random coefficient sets", {"Schauder round trip"}, false,
      {{"levels", "12", "depth M"}, {"trials", "20", "random coefficient sets"}}, schauder_roundtrip);
  add("brownian-covariance", "sample covariance of the dyadic-piece Brownian motion or the Schauder bridge", {"Brownian scaling construction"}, false,
      {{"mode", "brownian", "brownian | bridge"},
       {"times", "0.1,0.3,0.5,0.7,0.9", "grid times"},
       {"samples", "20000", "paths"},
       {"levels", "10", "Schauder levels for the bridge"}},
      brownian_covariance);

  add("sde-ou-decay", "Var[T^n f] decay for f = h(X_t) on an Ornstein-Uhlenbeck process", {"Holder SDE functionals"}, true,
      {{"t", "1", "evaluation time"},
       {"n_max", "8", "largest shift power"},
       {"outer", "10000", "outer paths per level"},
       {"time_level", "9", "Euler step 2^{-time_level}"},
       {"x0", "1", "initial state"},
       {"h", "identity", "identity | capped"},
       {"cap", "0.5", "cap of h = min(x, cap)"},
       {"lambda", "1", "Holder exponent of h"},
       {"semigroup", "exact", "exact (h = identity) | nested"},
       {"inner", "0", "inner paths for nested evaluation, 0 = sqrt(outer)"}},
      sde_decay);
  add("sde-measure-functional", "sum_j w_j g(X^{x_j}_{s_j}) over point masses on an OU process", {"measure-weighted SDE functionals"}, false,
      {{"atoms", "0.25:1:2;0.75:-3:0.5", "atoms s:x:w separated by ';'"}, {"steps", "128", "Euler steps on [0, 1]"}, {"samples", "4000", "paths"}},
      sde_measure_functional);

  add("chaos-power-kernel", "partial-sum norms of F = int t^{-alpha} dB_t under the scaling shift", {"power-law Wiener kernel"}, true,
      {{"alpha", "0.25", "kernel exponent, < 1/2"}, {"n_max", "60", "largest partial-sum length"}, {"quadrature", "true", "cross-check by quadrature"}},
      chaos_power);
  add("chaos-log-kernel", "membership of t^{-1/2} (-log t)^{-beta} on (0, 1/2]", {"log-power Wiener kernel"}, true,
      {{"beta", "1.5", "log exponent, > 1/2"}, {"n_max", "40", "largest partial-sum length"}}, chaos_log);
  add("chaos-oscillating-kernel", "t^{-1/2} sin(pi log2 t) / log t: bounded partial sums although sum ||T^n F|| diverges",
      {"oscillating Wiener kernel"}, true, {{"absolute", "false", "use |h|"}, {"n_max", "40", "largest partial-sum length"}}, chaos_oscillating);
  add("chaos-series-bound", "bound on sup_N ||sum T^n (F - F_0)||^2 from kernel amplitudes a_m and exponent alpha", {"chaos expansion bound"}, false,
      {{"amplitudes", "1,1", "a_1, a_2, ..."}, {"alpha", "0", "common exponent, < 1/2"}}, chaos_series);
  add("ito-isometry", "second moment of sampled int t^{-alpha} dB_t against the isometry", {"Ito isometry"}, false,
      {{"alpha", "0.25", "kernel exponent, < 1/2"}, {"samples", "10000", "paths"}}, ito_isometry);

  r.push_back(out_of_scope("lil-proof", "martingale LIL proof",
                           "the LIL for stationary martingale increments is cited as an external theorem; only its statistic is simulated"));
  r.push_back(out_of_scope("slow-fast-functions", "Rohlin-Halmos slow and fast functions",
                           "existence-only constructions with no computable representative"));
  r.push_back(out_of_scope("banach-valued", "Banach-valued observables", "only real-valued observables are implemented"));
  r.push_back(out_of_scope("carre-du-champ", "general carre du champ structures",
                           "only the squared partial-derivative energy is computable here"));
  r.push_back(out_of_scope("holder-coefficients", "Holder-space reading of Schauder coefficients", "norm equivalences are not computed"));
  r.push_back(out_of_scope("iterated-integrals", "sampling iterated Wiener integrals of order two or more",
                           "higher chaos orders enter only through the amplitude bound"));
  return r;
}

}  // namespace

const std::vector<Experiment>& registry() {
  static const std::vector<Experiment> r = build();
  return r;
}

const std::vector<std::string>& required_anchors() {
  static const std::vector<std::string> a = {
      "bounded transfer-operator partial sums",
      "martingale-coboundary decomposition",
      "Birkhoff-sum L2 rate",
      "LIL constant",
      "tail conditional-norm criterion",
      "martingale-difference criteria",
      "increment-weighted criterion",
      "finite-window LIL bound",
      "stopping-time LIL bound",
      "torus orbit-sum criterion",
      "torus coefficient domination",
      "derivative-energy criterion",
      "log-weighted energy gate",
      "Holder SDE functionals",
      "measure-weighted SDE functionals",
      "power-law Wiener kernel",
      "log-power Wiener kernel",
      "oscillating Wiener kernel",
      "chaos expansion bound",
      "squared Schauder-coefficient functional",
  };
  return a;
}

}  // namespace shiftmc::cli
