#include "shiftmc/product_space.hpp"

#include <cmath>
#include <stdexcept>

#include "shiftmc/rng.hpp"

namespace shiftmc {

CoordinateSequence::CoordinateSequence(std::uint64_t seed, int dim, BaseMeasure measure)
    : seed_(seed), dim_(dim), measure_(measure), cache_(std::make_shared<Cache>()) {
  if (dim < 1) throw std::invalid_argument("CoordinateSequence: dim must be >= 1");
}

double CoordinateSequence::value(std::int64_t index, int component) const noexcept {
  const std::uint64_t seed = splice_ && index < splice_->first ? splice_->second : seed_;
  const CounterAddress address{
      static_cast<std::uint64_t>(index),
      static_cast<std::uint32_t>(component / 2),
      StreamTag::Coordinates,
      0,
  };
  const auto u = uniform_pair(seed, address)[component % 2];
  switch (measure_) {
    case BaseMeasure::Uniform:
      return u;
    case BaseMeasure::Gaussian:
      return normal_quantile(u);
    case BaseMeasure::FairBit:
      return u < 0.5 ? 0.0 : 1.0;
  }
  return u;
}

std::vector<double> CoordinateSequence::fetch(std::int64_t index) const {
  std::lock_guard lock(cache_->mutex);
  auto [it, inserted] = cache_->values.try_emplace(index);
  if (inserted) {
    it->second.resize(static_cast<std::size_t>(dim_));
    for (int c = 0; c < dim_; ++c) it->second[static_cast<std::size_t>(c)] = value(index, c);
  }
  return it->second;
}

IndexWindow CoordinateSequence::window() const {
  std::lock_guard lock(cache_->mutex);
  if (cache_->values.empty()) return {};
  return {cache_->values.begin()->first, cache_->values.rbegin()->first};
}

CoordinateSequence CoordinateSequence::spliced_below(std::int64_t boundary, std::uint64_t low_seed) const {
  CoordinateSequence out(seed_, dim_, measure_);
  out.splice_ = std::make_pair(boundary, low_seed);
  return out;
}

CoordinateSequence make_sequence(std::uint64_t seed, int dim, BaseMeasure measure) {
  return CoordinateSequence(seed, dim, measure);
}

std::string to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::BernoulliRight:
      return "bernoulli-right";
    case ShiftKind::BinaryDigit:
      return "binary-digit";
    case ShiftKind::WienerScaling:
      return "wiener-scaling";
    case ShiftKind::SchauderCoefficient:
      return "schauder-coefficient";
  }
  return "unknown";
}

ShiftSystem ShiftSystem::bernoulli(CoordinateSequence sequence) {
  return ShiftSystem(ShiftKind::BernoulliRight, std::make_shared<const Space>(std::move(sequence)));
}

ShiftSystem ShiftSystem::binary_digits(std::uint64_t seed, int s) {
  return ShiftSystem(ShiftKind::BinaryDigit,
                     std::make_shared<const Space>(CoordinateSequence(seed, s, BaseMeasure::FairBit)));
}

ShiftSystem ShiftSystem::wiener(DyadicPathStore store) {
  return ShiftSystem(ShiftKind::WienerScaling, std::make_shared<const Space>(std::move(store)));
}

ShiftSystem ShiftSystem::schauder(std::uint64_t seed) {
  return ShiftSystem(ShiftKind::SchauderCoefficient,
                     std::make_shared<const Space>(CoordinateSequence(seed, 1, BaseMeasure::Gaussian)));
}

int ShiftSystem::dim() const noexcept {
  if (const auto* seq = std::get_if<CoordinateSequence>(space_.get())) return seq->dim();
  return std::get<DyadicPathStore>(*space_).dim();
}

const CoordinateSequence& ShiftSystem::sequence() const {
  const auto* seq = std::get_if<CoordinateSequence>(space_.get());
  if (seq == nullptr) throw std::logic_error("ShiftSystem: no coordinate sequence for a Wiener system");
  return *seq;
}

double ShiftSystem::coordinate(std::int64_t n, int component) const {
  switch (kind_) {
    case ShiftKind::BernoulliRight:
      return sequence().value(n - offset_, component);
    case ShiftKind::SchauderCoefficient:
    case ShiftKind::BinaryDigit:
      return sequence().value(n + offset_, component);
    case ShiftKind::WienerScaling:
      break;
  }
  throw std::logic_error("ShiftSystem::coordinate: Wiener systems expose path(), not coordinates");
}

TorusPair ShiftSystem::torus_point() const {
  if (kind_ != ShiftKind::BinaryDigit) throw std::logic_error("torus_point: not a binary-digit system");
  const auto& digits = sequence();
  const int s = digits.dim();
  TorusPair point{std::vector<double>(static_cast<std::size_t>(s)), std::vector<double>(static_cast<std::size_t>(s))};
  for (int c = 0; c < s; ++c) {
    // x = 0.D_{o+1} D_{o+2} ..., y = 0.D_o D_{o-1} ... in base 2.
    std::uint64_t x_bits = 0;
    std::uint64_t y_bits = 0;
    for (int j = 1; j <= 53; ++j) {
      x_bits = (x_bits << 1) | static_cast<std::uint64_t>(digits.value(offset_ + j, c));
      y_bits = (y_bits << 1) | static_cast<std::uint64_t>(digits.value(offset_ + 1 - j, c));
    }
    point.x[static_cast<std::size_t>(c)] = std::ldexp(static_cast<double>(x_bits), -53);
    point.y[static_cast<std::size_t>(c)] = std::ldexp(static_cast<double>(y_bits), -53);
  }
  return point;
}

DyadicPathStore ShiftSystem::path() const {
  const auto* store = std::get_if<DyadicPathStore>(space_.get());
  if (store == nullptr) throw std::logic_error("path: not a Wiener system");
  return store->shifted(offset_);
}

ShiftSystem shift_apply(const ShiftSystem& system, std::int64_t k) {
  ShiftSystem out = system;
  out.offset_ += k;
  return out;
}

TorusPair binary_digit_shift(const TorusPair& point) {
  if (point.x.size() != point.y.size()) throw std::invalid_argument("binary_digit_shift: dimension mismatch");
  TorusPair out{point.x, point.y};
  for (std::size_t i = 0; i < point.x.size(); ++i) {
    const double x = point.x[i];
    const double y = point.y[i];
    if (!(x >= 0.0 && x < 1.0 && y >= 0.0 && y < 1.0))
      throw std::domain_error("binary_digit_shift: coordinates must lie in [0,1)");
    const double doubled = 2.0 * x;
    const double digit = std::floor(doubled);
    out.x[i] = doubled - digit;
    out.y[i] = (digit + y) / 2.0;
  }
  return out;
}

TorusPair binary_digit_unshift(const TorusPair& point) {
  if (point.x.size() != point.y.size()) throw std::invalid_argument("binary_digit_unshift: dimension mismatch");
  TorusPair out{point.x, point.y};
  for (std::size_t i = 0; i < point.x.size(); ++i) {
    const double doubled = 2.0 * point.y[i];
    const double digit = std::floor(doubled);
    out.x[i] = (digit + point.x[i]) / 2.0;
    out.y[i] = doubled - digit;
  }
  return out;
}

}  // namespace shiftmc
