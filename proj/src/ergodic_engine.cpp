#include "shiftmc/ergodic_engine.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "shiftmc/numerics.hpp"
#include "shiftmc/rng.hpp"

namespace shiftmc {

double lil_statistic(double s_n, std::int64_t n) {
  if (n < 3) throw std::domain_error("lil_statistic: N must be >= 3");
  const double x = static_cast<double>(n);
  return std::fabs(s_n) / std::sqrt(2.0 * x * std::log(std::log(x)));
}

std::vector<std::int64_t> lil_checkpoints(std::int64_t n, double first, double growth) {
  if (!(growth > 1.0) || !(first > 0.0)) throw std::invalid_argument("lil_checkpoints: need first > 0, growth > 1");
  std::vector<std::int64_t> out;
  for (int j = 0;; ++j) {
    const auto c = static_cast<std::int64_t>(std::ceil(first * std::pow(growth, j) - 1e-9));
    if (c > n) break;
    if (c >= 3 && (out.empty() || c > out.back())) out.push_back(c);
  }
  return out;
}

ErgodicRunStats birkhoff_sum(const ShiftSystem& system, const Observable& f, std::int64_t n, double mean,
                             const BirkhoffOptions& options) {
  if (n < 1) throw std::invalid_argument("birkhoff_sum: N must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const auto checkpoints = lil_checkpoints(n, options.first_checkpoint, options.growth);
  std::size_t next = 0;
  ErgodicRunStats stats;
  stats.n = n;
  double running_max = 0.0;
  ShiftSystem state = system;
  double sum = 0.0;
  for (std::int64_t k = 0; k <= n; ++k) {
    double value = 0.0;
    try {
      value = f(state);
    } catch (const std::exception& e) {
      throw std::runtime_error("birkhoff_sum: evaluation failed at step " + std::to_string(k) + ": " + e.what());
    }
    if (!std::isfinite(value))
      throw std::runtime_error("birkhoff_sum: non-finite value at step " + std::to_string(k));
    sum += value - mean;
    if (next < checkpoints.size() && checkpoints[next] == k) {
      stats.lil_trace.push_back({k, lil_statistic(sum, k)});
      ++next;
    }
    if (options.max_window && k >= options.max_window->first && k <= options.max_window->second && k >= 3)
      running_max = std::max(running_max, lil_statistic(sum, k));
    state = shift_apply(state, 1);
  }
  stats.sum = sum;
  stats.mean_estimate = sum / static_cast<double>(n);
  if (options.max_window) stats.running_max = running_max;
  stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return stats;
}

RateEstimate rate_estimate(const SystemFactory& factory, const Observable& f, std::int64_t n, int reps, double mean,
                           std::uint64_t master_seed) {
  if (reps < 2) throw std::invalid_argument("rate_estimate: reps must be >= 2");
  RunningMoments squares;
  for (int r = 0; r < reps; ++r) {
    const auto stats = birkhoff_sum(factory(mix_seed(master_seed, static_cast<std::uint64_t>(r))), f, n, mean);
    squares.add(stats.sum * stats.sum / static_cast<double>(n));
  }
  RateEstimate out;
  out.n = n;
  out.replications = reps;
  out.value = std::sqrt(std::max(0.0, squares.mean()));
  out.stderr = out.value > 0.0 ? squares.stderr_of_mean() / (2.0 * out.value) : 0.0;
  return out;
}

MeanEstimate classical_mc(const SystemFactory& factory, const Observable& f, std::int64_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("classical_mc: N must be >= 2");
  RunningMoments m;
  for (std::int64_t i = 0; i < n; ++i) m.add(f(factory(mix_seed(seed, static_cast<std::uint64_t>(i)))));
  return {m.mean(), m.stderr_of_mean()};
}

MethodComparison compare_methods(const SystemFactory& factory, const Observable& f, double mean, std::int64_t n,
                                 int reps, std::uint64_t master_seed) {
  if (reps < 1) throw std::invalid_argument("compare_methods: reps must be >= 1");
  double shift_sq = 0.0;
  double classical_sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    const auto seed = mix_seed(master_seed, static_cast<std::uint64_t>(r));
    // N + 1 terms on both sides so the sample sizes match.
    const auto stats = birkhoff_sum(factory(seed), f, n - 1, mean);
    const double shift_error = stats.sum / static_cast<double>(n);
    const double classical_error = classical_mc(factory, f, n, mix_seed(seed, 0x5eed)).mean - mean;
    shift_sq += shift_error * shift_error;
    classical_sq += classical_error * classical_error;
  }
  return {std::sqrt(shift_sq / reps), std::sqrt(classical_sq / reps)};
}

std::string run_record_header(bool with_wall_time) {
  return with_wall_time ? "seed,N,S_N,mean_estimate,lil_statistic,wall_time" : "seed,N,S_N,mean_estimate,lil_statistic";
}

std::string run_record_row(std::uint64_t seed, const ErgodicRunStats& stats, bool with_wall_time) {
  char buffer[256];
  const std::string lil = stats.n >= 3 ? [&] {
    char b[64];
    std::snprintf(b, sizeof b, "%.17g", lil_statistic(stats.sum, stats.n));
    return std::string(b);
  }() : std::string();
  std::snprintf(buffer, sizeof buffer, "%llu,%lld,%.17g,%.17g,%s", static_cast<unsigned long long>(seed),
                static_cast<long long>(stats.n), stats.sum, stats.mean_estimate, lil.c_str());
  std::string row(buffer);
  if (with_wall_time) {
    std::snprintf(buffer, sizeof buffer, ",%.6f", stats.wall_time);
    row += buffer;
  }
  return row;
}

}  // namespace shiftmc
