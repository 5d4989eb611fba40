#pragma once

// Brownian motion on [0,1] as a product of independent Wiener pieces.
//
// Piece X_k lives on the dyadic interval (2^{-k-1}, 2^{-k}] and
//
//   B_t = sum_{n>k} X_n(1) 2^{-(n+1)/2} + X_k(2^{k+1} t - 1) 2^{-(k+1)/2}.
//
// Pieces are generated node by node through Brownian-bridge midpoint
// insertion, each node drawn from a counter keyed on (seed, piece, level,
// position). Nothing is cached: every value is a pure function of the
// address, so refining to a finer grid never perturbs a coarser one.

#include <cstdint>
#include <vector>

namespace shiftmc {

class DyadicPathStore {
 public:
  static constexpr int kMaxDepth = 30;

  /// `truncation` is the largest materialized piece index K in base
  /// coordinates; pieces beyond it are folded into one Gaussian carrying the
  /// exact tail variance 2^{-(K+1)}. `depth` is the finest bridge level used
  /// inside a piece.
  explicit DyadicPathStore(std::uint64_t seed, int dim = 1, int truncation = 48, int depth = 24);

  std::uint64_t seed() const noexcept { return seed_; }
  int dim() const noexcept { return dim_; }
  int depth() const noexcept { return depth_; }
  /// Truncation level in base coordinates.
  int base_truncation() const noexcept { return truncation_; }
  /// Number of scaling shifts applied so far.
  std::int64_t offset() const noexcept { return offset_; }
  /// Largest resolved piece index in the current (shifted) coordinates.
  std::int64_t resolved_pieces() const noexcept { return truncation_ + offset_; }

  /// Shifted store: piece k of the result is piece k - times of this one.
  DyadicPathStore shifted(std::int64_t times) const;

  /// X_k(u) for the piece with index k in current coordinates, u in [0,1].
  /// Dyadic u of denominator <= 2^depth is exact; other u interpolate linearly.
  double piece_value(std::int64_t k, double u, int component = 0) const;

  /// B_t for t in (0,1]. Throws std::domain_error for t <= 0 or t > 1.
  double brownian(double t, int component = 0) const;

  /// B at t_i = i 2^{-level}, i = 0 .. 2^{level - end_exponent}, i.e. on
  /// [0, 2^{-end_exponent}]. Bit-identical to calling brownian() pointwise.
  std::vector<double> brownian_grid(int level, int component = 0, int end_exponent = 0) const;

  /// B at 2^{-levels}, then at 2^{-j-1} (1 + i 2^{-sub}), i = 1..2^sub, for
  /// j = levels-1 down to 0: the geometric grid whose cells are the pieces.
  /// Bit-identical to calling brownian() pointwise.
  std::vector<double> brownian_geometric_grid(int levels, int sub, int component = 0) const;

  /// Node value of a piece at position j / 2^level (j odd, or level 0, j 1).
  double node_innovation(std::int64_t base_piece, int level, std::uint32_t j, int component) const noexcept;

 private:
  double tail_value(int component) const noexcept;
  double piece_endpoint(std::int64_t base_piece, int component) const noexcept;
  double resolved_prefix(std::int64_t k, int component) const noexcept;
  std::vector<double> piece_grid(std::int64_t base_piece, int level, int component) const;

  std::uint64_t seed_;
  int dim_;
  int truncation_;
  int depth_;
  std::int64_t offset_ = 0;
};

/// B_t o tau = B_{2t} / sqrt(2), applied `times` times.
DyadicPathStore scaling_shift(const DyadicPathStore& store, std::int64_t times = 1);

/// 2^{-(n+1)/2}, computed from exact powers of two and one rounded constant.
double piece_scale(std::int64_t n) noexcept;

}  // namespace shiftmc
