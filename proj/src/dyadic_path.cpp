#include "shiftmc/dyadic_path.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "shiftmc/rng.hpp"

namespace shiftmc {
namespace {

/// Piece index k (current coordinates) containing t, and the local time u.
struct PieceLocation {
  std::int64_t k;
  double u;
};

PieceLocation locate(double t) {
  int exponent = 0;
  const double mantissa = std::frexp(t, &exponent);  // t = mantissa * 2^exponent, mantissa in [0.5,1)
  std::int64_t k = (mantissa == 0.5) ? 1 - exponent : -exponent;
  const double u = std::ldexp(t, static_cast<int>(k + 1)) - 1.0;
  return {k, u};
}

}  // namespace

double piece_scale(std::int64_t n) noexcept {
  const std::int64_t e = n + 1;
  if (e % 2 == 0) return std::ldexp(1.0, static_cast<int>(-e / 2));
  // e odd: 2^{-e/2} = 2^{-(e-1)/2} * 2^{-1/2}
  return std::ldexp(M_SQRT1_2, static_cast<int>(-(e - 1) / 2));
}

DyadicPathStore::DyadicPathStore(std::uint64_t seed, int dim, int truncation, int depth)
    : seed_(seed), dim_(dim), truncation_(truncation), depth_(depth) {
  if (dim < 1) throw std::invalid_argument("DyadicPathStore: dim must be >= 1");
  if (truncation < 0) throw std::invalid_argument("DyadicPathStore: truncation must be >= 0");
  if (depth < 1 || depth > kMaxDepth)
    throw std::invalid_argument("DyadicPathStore: depth must lie in [1, " + std::to_string(kMaxDepth) + "]");
}

DyadicPathStore DyadicPathStore::shifted(std::int64_t times) const {
  DyadicPathStore out = *this;
  out.offset_ += times;
  return out;
}

double DyadicPathStore::node_innovation(std::int64_t base_piece, int level, std::uint32_t j,
                                        int component) const noexcept {
  const CounterAddress address{
      static_cast<std::uint64_t>(base_piece),
      j,
      StreamTag::PathNodes,
      (static_cast<std::uint32_t>(component) << 5) | static_cast<std::uint32_t>(level),
  };
  return normal_pair(seed_, address)[0];
}

double DyadicPathStore::piece_endpoint(std::int64_t base_piece, int component) const noexcept {
  return node_innovation(base_piece, 0, 1, component);
}

double DyadicPathStore::tail_value(int component) const noexcept {
  const CounterAddress address{0, static_cast<std::uint32_t>(component), StreamTag::PathTail, 0};
  // Sum over base pieces n > K of X_n(1) 2^{-(n+1)/2} has variance 2^{-(K+1)};
  // in current coordinates it is scaled by 2^{-offset/2}.
  return normal_pair(seed_, address)[0] * piece_scale(resolved_pieces());
}

double DyadicPathStore::resolved_prefix(std::int64_t k, int component) const noexcept {
  // sum_{n=k+1}^{K+offset} X_n(1) 2^{-(n+1)/2} + tail, summed from the top down.
  double sum = tail_value(component);
  for (std::int64_t n = resolved_pieces(); n > k; --n) {
    sum += piece_endpoint(n - offset_, component) * piece_scale(n);
  }
  return sum;
}

double DyadicPathStore::piece_value(std::int64_t k, double u, int component) const {
  if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("piece_value: u must lie in [0,1]");
  if (component < 0 || component >= dim_) throw std::out_of_range("piece_value: component out of range");
  const std::int64_t base = k - offset_;
  const double scaled = std::ldexp(u, depth_);
  const double lower_index = std::floor(scaled);

  auto node_value = [&](std::uint64_t index) {
    // Descend from [0,1] to the node index / 2^depth.
    const std::uint64_t full = std::uint64_t{1} << depth_;
    if (index == 0) return 0.0;
    double left_value = 0.0;
    double right_value = piece_endpoint(base, component);
    if (index == full) return right_value;
    std::uint64_t left = 0;
    std::uint64_t right = full;
    for (int level = 1; level <= depth_; ++level) {
      const std::uint64_t mid = (left + right) / 2;
      const std::uint32_t j = static_cast<std::uint32_t>(mid >> (depth_ - level));
      const double mid_value = 0.5 * (left_value + right_value) +
                               piece_scale(level) * node_innovation(base, level, j, component);
      if (index == mid) return mid_value;
      if (index < mid) {
        right = mid;
        right_value = mid_value;
      } else {
        left = mid;
        left_value = mid_value;
      }
    }
    return left_value;  // unreachable for index in (0, full)
  };

  const auto lower = static_cast<std::uint64_t>(lower_index);
  const double lower_value = node_value(lower);
  if (scaled == lower_index) return lower_value;
  const double upper_value = node_value(lower + 1);
  const double weight = scaled - lower_index;
  return lower_value + weight * (upper_value - lower_value);
}

double DyadicPathStore::brownian(double t, int component) const {
  if (!(t > 0.0)) throw std::domain_error("brownian: t must be > 0 (B_0 = 0 is the boundary value)");
  if (t > 1.0) throw std::domain_error("brownian: t must be <= 1");
  const auto [k, u] = locate(t);
  if (k > resolved_pieces()) {
    // Below resolution: interpolate linearly between 0 and B at 2^{-(K+1)}.
    const std::int64_t top = resolved_pieces();
    const double resolution_time = std::ldexp(1.0, static_cast<int>(-(top + 1)));
    return tail_value(component) * (t / resolution_time);
  }
  return resolved_prefix(k, component) + piece_value(k, u, component) * piece_scale(k);
}

std::vector<double> DyadicPathStore::piece_grid(std::int64_t base_piece, int level, int component) const {
  const std::size_t full = std::size_t{1} << level;
  std::vector<double> values(full + 1, 0.0);
  values[full] = piece_endpoint(base_piece, component);
  for (int l = 1; l <= level; ++l) {
    const std::size_t step = full >> l;
    for (std::size_t index = step; index < full; index += 2 * step) {
      const auto j = static_cast<std::uint32_t>(index / step);
      values[index] = 0.5 * (values[index - step] + values[index + step]) +
                      piece_scale(l) * node_innovation(base_piece, l, j, component);
    }
  }
  return values;
}

std::vector<double> DyadicPathStore::brownian_grid(int level, int component, int end_exponent) const {
  if (end_exponent < 0 || level < end_exponent)
    throw std::invalid_argument("brownian_grid: need 0 <= end_exponent <= level");
  if (level - end_exponent - 1 > depth_)
    throw std::invalid_argument("brownian_grid: level exceeds the piece depth");
  if (component < 0 || component >= dim_) throw std::out_of_range("brownian_grid: component out of range");
  const std::size_t count = std::size_t{1} << (level - end_exponent);
  std::vector<double> grid(count + 1, 0.0);

  if (level > resolved_pieces()) {
    // Fall back to pointwise evaluation; only reachable for extreme offsets.
    for (std::size_t i = 1; i <= count; ++i) grid[i] = brownian(std::ldexp(static_cast<double>(i), -level), component);
    return grid;
  }

  // prefix[k] for k from `level` down to end_exponent, accumulated top-down
  // exactly as resolved_prefix does.
  double prefix = tail_value(component);
  for (std::int64_t n = resolved_pieces(); n > level; --n) prefix += piece_endpoint(n - offset_, component) * piece_scale(n);
  // t = 2^{-level} is the right end of piece `level`.
  grid[1] = prefix + piece_endpoint(level - offset_, component) * piece_scale(level);
  for (std::int64_t k = level - 1; k >= end_exponent; --k) {
    prefix += piece_endpoint(k + 1 - offset_, component) * piece_scale(k + 1);
    const int piece_level = static_cast<int>(level - k - 1);
    const auto piece = piece_grid(k - offset_, piece_level, component);
    const double scale = piece_scale(k);
    // Piece k covers grid indices 2^{level-k-1} + 1 .. 2^{level-k}.
    const std::size_t first = std::size_t{1} << (level - k - 1);
    for (std::size_t j = 1; j < piece.size(); ++j) {
      grid[first + j] = prefix + piece[j] * scale;
    }
  }
  return grid;
}

std::vector<double> DyadicPathStore::brownian_geometric_grid(int levels, int sub, int component) const {
  if (levels < 0 || sub < 0) throw std::invalid_argument("brownian_geometric_grid: negative size");
  if (sub > depth_) throw std::invalid_argument("brownian_geometric_grid: sub exceeds the piece depth");
  if (component < 0 || component >= dim_) throw std::out_of_range("brownian_geometric_grid: component out of range");
  const std::size_t per_piece = std::size_t{1} << sub;
  std::vector<double> out;
  out.reserve(1 + static_cast<std::size_t>(levels) * per_piece);
  if (levels > resolved_pieces()) {
    out.push_back(brownian(std::ldexp(1.0, -levels), component));
    for (int j = levels - 1; j >= 0; --j) {
      const double lo = std::ldexp(1.0, -j - 1);
      for (std::size_t i = 1; i <= per_piece; ++i) out.push_back(brownian(lo + std::ldexp(lo, -sub) * static_cast<double>(i), component));
    }
    return out;
  }
  double prefix = tail_value(component);
  for (std::int64_t n = resolved_pieces(); n > levels; --n) prefix += piece_endpoint(n - offset_, component) * piece_scale(n);
  out.push_back(prefix + piece_endpoint(levels - offset_, component) * piece_scale(levels));
  for (std::int64_t k = levels - 1; k >= 0; --k) {
    prefix += piece_endpoint(k + 1 - offset_, component) * piece_scale(k + 1);
    const auto piece = piece_grid(k - offset_, sub, component);
    const double scale = piece_scale(k);
    for (std::size_t j = 1; j < piece.size(); ++j) out.push_back(prefix + piece[j] * scale);
  }
  return out;
}

DyadicPathStore scaling_shift(const DyadicPathStore& store, std::int64_t times) { return store.shifted(times); }

}  // namespace shiftmc
