#pragma once

// Birkhoff sums along the shift, the LIL statistic, L^2 rate estimates and
// the classical i.i.d. Monte Carlo baseline.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shiftmc/product_space.hpp"

namespace shiftmc {

struct LilCheckpoint {
  std::int64_t n = 0;
  double statistic = 0.0;
};

struct ErgodicRunStats {
  std::int64_t n = 0;
  double sum = 0.0;
  double mean_estimate = 0.0;
  std::vector<LilCheckpoint> lil_trace;
  /// max of the LIL statistic over every N in the requested window, if any.
  std::optional<double> running_max;
  double wall_time = 0.0;
};

struct BirkhoffOptions {
  /// Checkpoints N_j = ceil(first * growth^j).
  double first_checkpoint = 10.0;
  double growth = 1.25;
  /// Track max_{lo <= N <= hi} |S_N| / sqrt(2 N ln ln N) at every N.
  std::optional<std::pair<std::int64_t, std::int64_t>> max_window;
};

/// S_N = sum_{n=0}^{N} (f - mean) o tau^n, streamed. A throwing or non-finite
/// evaluation aborts with std::runtime_error naming the step.
ErgodicRunStats birkhoff_sum(const ShiftSystem& system, const Observable& f, std::int64_t n, double mean,
                             const BirkhoffOptions& options = {});

/// |S_N| / sqrt(2 N ln ln N); N < 3 is a domain error.
double lil_statistic(double s_n, std::int64_t n);

/// Checkpoint indices ceil(first * growth^j) up to n, strictly increasing.
std::vector<std::int64_t> lil_checkpoints(std::int64_t n, double first = 10.0, double growth = 1.25);

using SystemFactory = std::function<ShiftSystem(std::uint64_t seed)>;

struct RateEstimate {
  std::int64_t n = 0;
  int replications = 0;
  double value = 0.0;   // sqrt(mean S_N^2 / N)
  double stderr = 0.0;  // delta method over replications
};

/// ||S_N||_{L^2} / sqrt(N) by root mean square over replications seeded
/// mix_seed(master_seed, r).
RateEstimate rate_estimate(const SystemFactory& factory, const Observable& f, std::int64_t n, int reps, double mean,
                           std::uint64_t master_seed);

struct MeanEstimate {
  double mean = 0.0;
  double stderr = 0.0;
};

/// i.i.d. baseline: every draw evaluates f on a fresh configuration
/// factory(mix_seed(seed, i)).
MeanEstimate classical_mc(const SystemFactory& factory, const Observable& f, std::int64_t n, std::uint64_t seed);

struct MethodComparison {
  double shift_rms_error = 0.0;
  double classical_rms_error = 0.0;
  double ratio() const noexcept { return classical_rms_error > 0 ? shift_rms_error / classical_rms_error : 0.0; }
};

/// RMS error of the two estimators of E f (true value `mean`) at equal
/// sample size, over `reps` seeds.
MethodComparison compare_methods(const SystemFactory& factory, const Observable& f, double mean, std::int64_t n,
                                 int reps, std::uint64_t master_seed);

/// One CSV run record: seed,N,S_N,mean_estimate,lil_statistic,wall_time.
std::string run_record_header(bool with_wall_time = true);
std::string run_record_row(std::uint64_t seed, const ErgodicRunStats& stats, bool with_wall_time = true);

}  // namespace shiftmc
