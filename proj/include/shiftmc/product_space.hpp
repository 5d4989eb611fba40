#pragma once

// Coordinate-sequence probability spaces (E^Z, mu^Z) and the shifts acting on
// them. Every shift is a pure reindexing: a ShiftSystem is a shared, immutable
// space plus an integer offset, so composing shifts is offset arithmetic.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "shiftmc/dyadic_path.hpp"

namespace shiftmc {

enum class BaseMeasure { Uniform, Gaussian, FairBit };

struct IndexWindow {
  std::int64_t lo = 0;
  std::int64_t hi = -1;  // empty when hi < lo
  bool empty() const noexcept { return hi < lo; }
};

/// Lazily materialized i.i.d. coordinates X_n, n in Z, each a vector in E.
class CoordinateSequence {
 public:
  CoordinateSequence(std::uint64_t seed, int dim, BaseMeasure measure = BaseMeasure::Uniform);

  std::uint64_t seed() const noexcept { return seed_; }
  int dim() const noexcept { return dim_; }
  BaseMeasure measure() const noexcept { return measure_; }

  /// Component of X_index. Pure: no caching, safe from any thread.
  double value(std::int64_t index, int component = 0) const noexcept;

  /// X_index as a vector; records it in the materialized window.
  std::vector<double> fetch(std::int64_t index) const;

  /// Smallest interval containing every index fetched so far.
  IndexWindow window() const;

  /// Same coordinates at indices >= boundary, an independent stream from
  /// `low_seed` below it. Used to resample the past given F_boundary^inf.
  CoordinateSequence spliced_below(std::int64_t boundary, std::uint64_t low_seed) const;

 private:
  struct Cache {
    std::mutex mutex;
    std::map<std::int64_t, std::vector<double>> values;
  };

  std::uint64_t seed_;
  int dim_;
  BaseMeasure measure_;
  std::optional<std::pair<std::int64_t, std::uint64_t>> splice_;
  std::shared_ptr<Cache> cache_;
};

CoordinateSequence make_sequence(std::uint64_t seed, int dim, BaseMeasure measure = BaseMeasure::Uniform);

enum class ShiftKind { BernoulliRight, BinaryDigit, WienerScaling, SchauderCoefficient };

std::string to_string(ShiftKind kind);

/// A point of T^s x T^s for the binary-digit shift.
struct TorusPair {
  std::vector<double> x;
  std::vector<double> y;
};

class ShiftSystem {
 public:
  /// X_n o tau = X_{n-1} on i.i.d. coordinates.
  static ShiftSystem bernoulli(CoordinateSequence sequence);
  /// Bilateral Bernoulli shift realized on binary digits of points of T^s x T^s.
  static ShiftSystem binary_digits(std::uint64_t seed, int s);
  /// B_t o tau = B_{2t} / sqrt(2) on the dyadic piece decomposition.
  static ShiftSystem wiener(DyadicPathStore store);
  /// Shift on i.i.d. standard Gaussian Schauder coefficients a_n, n in Z:
  /// after the shift, flat index n reads the old index n + 1.
  static ShiftSystem schauder(std::uint64_t seed);

  ShiftKind kind() const noexcept { return kind_; }
  std::int64_t offset() const noexcept { return offset_; }
  int dim() const noexcept;

  /// Coordinate n as seen in the current state.
  /// BernoulliRight: X_{n - offset}. SchauderCoefficient: a_{n + offset}.
  /// BinaryDigit: digit D_{n + offset} of component `component`.
  double coordinate(std::int64_t n, int component = 0) const;

  /// Current (x, y) for BinaryDigit systems, built from 53 digits per side.
  TorusPair torus_point() const;

  /// Current path store for WienerScaling systems.
  DyadicPathStore path() const;

  const CoordinateSequence& sequence() const;

 private:
  using Space = std::variant<CoordinateSequence, DyadicPathStore>;
  ShiftSystem(ShiftKind kind, std::shared_ptr<const Space> space) : kind_(kind), space_(std::move(space)) {}

  friend ShiftSystem shift_apply(const ShiftSystem& system, std::int64_t k);

  ShiftKind kind_;
  std::shared_ptr<const Space> space_;
  std::int64_t offset_ = 0;
};

/// tau^k applied to the system; k may be negative (tau is an automorphism).
ShiftSystem shift_apply(const ShiftSystem& system, std::int64_t k);

/// Coordinate indices an observable reads. `hi` empty means all indices >= lo.
struct DependencyWindow {
  std::int64_t lo = 0;
  std::optional<std::int64_t> hi;
};

struct Observable {
  std::function<double(const ShiftSystem&)> eval;
  DependencyWindow depends_on;
  std::string name;

  double operator()(const ShiftSystem& state) const { return eval(state); }
};

/// The map on T^s x T^s: (x, y) -> ({2x}, (floor(2x) + y) / 2),
/// componentwise. Moves the leading binary digit of x to the front of y.
TorusPair binary_digit_shift(const TorusPair& point);

/// Inverse of binary_digit_shift.
TorusPair binary_digit_unshift(const TorusPair& point);

}  // namespace shiftmc
