#include "shiftmc/sde_functionals.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "shiftmc/numerics.hpp"
#include "shiftmc/rng.hpp"

namespace shiftmc {
namespace {

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

bool is_power_of_two(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

void euler_step(const SdeSpec& sde, State& x, double s, double dt, const double* db, std::size_t step) {
  const auto sig = sde.sigma(x, s);
  const auto drift = sde.b(x, s);
  for (int i = 0; i < sde.m; ++i) {
    double dx = drift[static_cast<std::size_t>(i)] * dt;
    for (int k = 0; k < sde.d; ++k) dx += sig[static_cast<std::size_t>(i * sde.d + k)] * db[k];
    x[static_cast<std::size_t>(i)] += dx;
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw std::runtime_error("euler_maruyama: non-finite state at step " + std::to_string(step));
  }
}

// Brownian values at t_i = i t_end / steps, one vector per component.
std::vector<std::vector<double>> path_values(const DyadicPathStore& path, int steps, double t_end) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(path.dim()));
  int e = 0;
  const bool dyadic_end = t_end > 0.0 && std::frexp(t_end, &e) == 0.5;  // t_end = 2^{e-1}
  const int end_exponent = 1 - e;
  if (dyadic_end && end_exponent >= 0 && is_power_of_two(steps)) {
    const int level = end_exponent + static_cast<int>(std::log2(static_cast<double>(steps)));
    if (level <= path.depth()) {
      for (int c = 0; c < path.dim(); ++c) out[static_cast<std::size_t>(c)] = path.brownian_grid(level, c, end_exponent);
      return out;
    }
  }
  for (int c = 0; c < path.dim(); ++c) {
    auto& v = out[static_cast<std::size_t>(c)];
    v.resize(static_cast<std::size_t>(steps) + 1);
    v[0] = 0.0;
    for (int i = 1; i <= steps; ++i) {
      const double t = t_end * i / steps;
      const double scaled = std::ldexp(t, path.depth());
      if (scaled != std::floor(scaled))
        throw std::invalid_argument("euler_maruyama: grid time is not a stored dyadic node");
      v[static_cast<std::size_t>(i)] = path.brownian(t, c);
    }
  }
  return out;
}

}  // namespace

void SdeSpec::validate() const {
  if (m < 1 || d < 1) throw std::invalid_argument("SdeSpec: dimensions must be positive");
  if (!sigma || !b) throw std::invalid_argument("SdeSpec: sigma and b are required");
  if (x0.size() != static_cast<std::size_t>(m)) throw std::invalid_argument("SdeSpec: x0 must have length m");
  if (sigma(x0, 0.0).size() != static_cast<std::size_t>(m * d))
    throw std::invalid_argument("SdeSpec: sigma must return m*d entries");
  if (b(x0, 0.0).size() != static_cast<std::size_t>(m)) throw std::invalid_argument("SdeSpec: b must return m entries");
}

SdeSpec ornstein_uhlenbeck(double x0) {
  SdeSpec sde;
  sde.sigma = [](const State&, double) { return std::vector<double>{1.0}; };
  sde.b = [](const State& x, double) { return State{-x[0]}; };
  sde.lipschitz = 2.0;
  sde.x0 = {x0};
  return sde;
}

LipschitzCheck check_lipschitz(const SdeSpec& sde, std::uint64_t seed, int samples, double scale) {
  sde.validate();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, scale);
  std::uniform_real_distribution<double> time(0.0, 1.0);
  LipschitzCheck out;
  for (int i = 0; i < samples; ++i) {
    State x(static_cast<std::size_t>(sde.m)), y(x.size());
    for (auto& v : x) v = z(gen);
    for (auto& v : y) v = z(gen);
    const double s = time(gen);
    const auto sx = sde.sigma(x, s), sy = sde.sigma(y, s);
    const auto bx = sde.b(x, s), by = sde.b(y, s);
    const double gap = distance(x, y);
    if (gap > 0.0) out.worst_ratio = std::max(out.worst_ratio, (distance(sx, sy) + distance(bx, by)) / gap);
    out.worst_growth = std::max(out.worst_growth, (norm(sx) + norm(bx)) / (1.0 + norm(x)));
  }
  out.ok = out.worst_ratio < sde.lipschitz && out.worst_growth <= sde.lipschitz;
  return out;
}

bool check_holder(const std::function<double(const State&)>& h, int m, double lambda, double constant,
                  std::uint64_t seed, int samples, double scale) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, scale);
  std::uniform_real_distribution<double> near(-1.0, 1.0);
  for (int i = 0; i < samples; ++i) {
    State x(static_cast<std::size_t>(m)), y(x.size());
    // Half the pairs are close, where Holder bounds bite.
    const double spread = i % 2 == 0 ? 1.0 : 1e-4;
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] = z(gen);
      y[k] = x[k] + spread * scale * near(gen);
    }
    const double gap = distance(x, y);
    if (gap == 0.0) continue;
    if (std::fabs(h(x) - h(y)) > constant * std::pow(gap, lambda) * (1.0 + 1e-12)) return false;
  }
  return true;
}

Trajectory euler_maruyama(const SdeSpec& sde, const DyadicPathStore& path, int steps, double t_end) {
  sde.validate();
  if (steps < 1) throw std::invalid_argument("euler_maruyama: steps must be >= 1");
  if (!(t_end > 0.0 && t_end <= 1.0)) throw std::domain_error("euler_maruyama: t_end must lie in (0,1]");
  if (path.dim() != sde.d) throw std::invalid_argument("euler_maruyama: path dimension differs from d");
  const auto values = path_values(path, steps, t_end);
  Trajectory out;
  out.times.reserve(static_cast<std::size_t>(steps) + 1);
  out.states.reserve(static_cast<std::size_t>(steps) + 1);
  State x = sde.x0;
  out.times.push_back(0.0);
  out.states.push_back(x);
  const double dt = t_end / steps;
  std::vector<double> db(static_cast<std::size_t>(sde.d));
  for (int i = 0; i < steps; ++i) {
    for (int c = 0; c < sde.d; ++c) {
      const auto& v = values[static_cast<std::size_t>(c)];
      db[static_cast<std::size_t>(c)] = v[static_cast<std::size_t>(i) + 1] - v[static_cast<std::size_t>(i)];
    }
    euler_step(sde, x, i * dt, dt, db.data(), static_cast<std::size_t>(i));
    out.times.push_back(t_end * (i + 1) / steps);
    out.states.push_back(x);
  }
  return out;
}

State euler_from(const SdeSpec& sde, State x, double t0, double dt, const std::vector<std::vector<double>>& increments) {
  for (std::size_t i = 0; i < increments.size(); ++i) {
    euler_step(sde, x, t0 + static_cast<double>(i) * dt, dt, increments[i].data(), i);
  }
  return x;
}

TnSample tn_functional(const SdeSpec& sde, const std::function<double(const State&)>& h, double t, int n,
                       const DyadicPathStore& path, const TnOptions& options) {
  if (n < 0) throw std::domain_error("tn_functional: n must be >= 0");
  const double u = std::ldexp(1.0, -n);
  if (!(t <= 1.0 && u <= t)) throw std::domain_error("tn_functional: need 0 < 2^{-n} <= t <= 1");
  const int outer_steps = options.time_level > n ? 1 << (options.time_level - n) : 1;
  const auto trajectory = euler_maruyama(sde, scaling_shift(path, n), outer_steps, u);
  const State& y = trajectory.states.back();

  TnSample out;
  if (u == t) {
    out.value = h(y);
    return out;
  }
  if (options.exact) {
    out.value = (*options.exact)(y, u, t);
    return out;
  }
  const auto inner_steps = static_cast<std::size_t>(std::ceil((t - u) * std::ldexp(1.0, options.time_level)));
  const double dt = (t - u) / static_cast<double>(inner_steps);
  const double root_dt = std::sqrt(dt);
  const std::uint64_t key = mix_seed(mix_seed(options.seed, path.seed()), static_cast<std::uint64_t>(n));
  const std::size_t inner_count = options.inner > 0 ? options.inner : 64;
  RunningMoments inner;
  std::vector<std::vector<double>> increments(inner_steps, std::vector<double>(static_cast<std::size_t>(sde.d)));
  for (std::size_t j = 0; j < inner_count; ++j) {
    const std::uint64_t stream = mix_seed(key, j);
    for (std::size_t i = 0; i < inner_steps; ++i) {
      for (int c = 0; c < sde.d; c += 2) {
        const auto z = normal_pair(stream, {static_cast<std::uint64_t>(i), 0, StreamTag::InnerPaths,
                                            static_cast<std::uint32_t>(c / 2)});
        increments[i][static_cast<std::size_t>(c)] = z[0] * root_dt;
        if (c + 1 < sde.d) increments[i][static_cast<std::size_t>(c) + 1] = z[1] * root_dt;
      }
    }
    inner.add(h(euler_from(sde, y, u, dt, increments)));
  }
  out.value = inner.mean();
  out.inner = inner_count;
  out.inner_variance = inner_count > 1 ? inner.variance() : 0.0;
  out.flagged = inner_count < 2 || std::sqrt(out.inner_variance / static_cast<double>(inner_count)) > options.flag_inner_stderr;
  return out;
}

DecayDiagnostic holder_decay_diagnostic(const SdeSpec& sde, const std::function<double(const State&)>& h,
                                        double lambda, double t, int n_max, const DecayOptions& options) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::domain_error("holder_decay_diagnostic: lambda must lie in (0,1]");
  if (n_max < 1) throw std::invalid_argument("holder_decay_diagnostic: n_max must be >= 1");
  if (std::ldexp(1.0, -n_max) > t) throw std::domain_error("holder_decay_diagnostic: 2^{-n_max} must not exceed t");
  if (options.holder_constant &&
      !check_holder(h, sde.m, lambda, *options.holder_constant, mix_seed(options.seed, 0x401de7)))
    throw std::invalid_argument("holder_decay_diagnostic: h violates the declared Holder bound");

  DecayDiagnostic out;
  out.target_lambda = lambda;
  TnOptions tn = options.tn;
  tn.seed = mix_seed(options.seed, 0x1a2e7);
  if (tn.inner == 0) tn.inner = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(options.outer))));
  for (int n = 0; n <= n_max; ++n) {
    RunningMoments values, noise;
    DecayLevel level;
    level.n = n;
    for (std::size_t i = 0; i < options.outer; ++i) {
      const DyadicPathStore path(mix_seed(options.seed, (static_cast<std::uint64_t>(n) << 40) + i), sde.d);
      const auto sample = tn_functional(sde, h, t, n, path, tn);
      values.add(sample.value);
      if (sample.inner > 0) noise.add(sample.inner_variance / static_cast<double>(sample.inner));
      if (sample.flagged) ++level.flagged;
    }
    // Inner means carry their own noise: subtract its average.
    const double correction = noise.count() > 0 ? noise.mean() : 0.0;
    const double se_correction = noise.count() > 1 ? noise.stderr_of_mean() : 0.0;
    level.samples = options.outer;
    level.variance = std::max(0.0, values.variance() - correction);
    level.stderr = std::hypot(values.stderr_of_variance(), se_correction);
    out.levels.push_back(level);
  }

  out.fit_from = n_max / 2;
  std::vector<double> xs, ys;
  for (const auto& level : out.levels) {
    if (level.n >= out.fit_from && level.variance > 0.0) {
      xs.push_back(level.n);
      ys.push_back(std::log(level.variance));
    }
  }
  if (xs.size() < 2) {
    out.degenerate = true;
    out.implied_bound = 0.0;
    bool all_zero = true;
    for (const auto& level : out.levels) all_zero = all_zero && level.variance == 0.0;
    out.certified = all_zero;  // T^n f is constant at every level
    if (!all_zero) out.implied_bound = std::numeric_limits<double>::infinity();
    return out;
  }
  const auto fit = fit_line(xs, ys);
  out.lambda_hat = -fit.slope / std::log(2.0);
  out.lambda_stderr = fit.slope_stderr / std::log(2.0);
  const double lower = *out.lambda_hat - 2.0 * out.lambda_stderr;
  out.certified = lower > 0.0;
  if (out.certified) {
    double sum = 0.0;
    for (const auto& level : out.levels) sum += std::sqrt(level.variance);
    const double q = std::pow(2.0, -lower / 2.0);
    out.implied_bound = sum + std::sqrt(out.levels.back().variance) * q / (1.0 - q);
  } else {
    out.implied_bound = std::numeric_limits<double>::infinity();
  }
  return out;
}

std::string decay_csv(const DecayDiagnostic& diagnostic) {
  std::ostringstream os;
  os.precision(17);
  os << "n,var_estimate,stderr\n";
  for (const auto& level : diagnostic.levels) os << level.n << ',' << level.variance << ',' << level.stderr << '\n';
  return os.str();
}

std::string to_json(const DecayDiagnostic& diagnostic) {
  nlohmann::json j;
  j["target_lambda"] = diagnostic.target_lambda;
  j["lambda_hat"] = diagnostic.lambda_hat ? nlohmann::json(*diagnostic.lambda_hat) : nlohmann::json(nullptr);
  j["lambda_stderr"] = diagnostic.lambda_stderr;
  j["fit_from"] = diagnostic.fit_from;
  j["degenerate"] = diagnostic.degenerate;
  j["certified"] = diagnostic.certified;
  j["implied_bound"] = std::isfinite(diagnostic.implied_bound) ? nlohmann::json(diagnostic.implied_bound)
                                                                : nlohmann::json("inf");
  auto& levels = j["levels"] = nlohmann::json::array();
  for (const auto& level : diagnostic.levels) {
    levels.push_back({{"n", level.n}, {"var_estimate", level.variance}, {"stderr", level.stderr},
                      {"samples", level.samples}, {"flagged", level.flagged}});
  }
  return j.dump(2);
}

double ou_tn_variance(double t, int n) {
  const double u = std::ldexp(1.0, -n);
  return std::exp(-2.0 * (t - u)) * (1.0 - std::exp(-2.0 * u)) / 2.0;
}

SemigroupFn ou_identity_semigroup() {
  return [](const State& y, double u, double t) { return y[0] * std::exp(-(t - u)); };
}

double measure_functional(const SdeSpec& sde, const std::function<double(const State&)>& g,
                          const std::vector<Atom>& mu, const DyadicPathStore& path, int steps) {
  for (const auto& atom : mu) {
    if (!(atom.s > 0.0 && atom.s <= 1.0)) throw std::domain_error("measure_functional: s_j must lie in (0,1]");
  }
  std::map<State, Trajectory> trajectories;
  double total = 0.0;
  for (const auto& atom : mu) {
    auto it = trajectories.find(atom.x);
    if (it == trajectories.end()) {
      SdeSpec from = sde;
      from.x0 = atom.x;
      it = trajectories.emplace(atom.x, euler_maruyama(from, path, steps, 1.0)).first;
    }
    const auto& traj = it->second;
    const double pos = atom.s * steps;
    const auto i = std::min(static_cast<std::size_t>(std::floor(pos)), static_cast<std::size_t>(steps) - 1);
    const double frac = pos - static_cast<double>(i);
    State x = traj.states[i];
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += frac * (traj.states[i + 1][k] - x[k]);
    total += atom.w * g(x);
  }
  return total;
}

RichardsonReport richardson_report(const SdeSpec& sde, const std::function<double(const State&)>& h,
                                   const DyadicPathStore& path, int steps, double t_end) {
  RichardsonReport out;
  out.coarse = h(euler_maruyama(sde, path, steps, t_end).states.back());
  out.fine = h(euler_maruyama(sde, path, 2 * steps, t_end).states.back());
  out.error_estimate = std::fabs(out.fine - out.coarse);
  return out;
}

}  // namespace shiftmc
