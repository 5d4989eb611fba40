#pragma once

// Counter-based random streams.
//
// Every draw in the library is addressed by (seed, counter) instead of by
// position in a sequential stream, so a coordinate at index -10^9 costs the
// same as one at index 0 and re-materializing any value is bit-identical.

#include <array>
#include <cstdint>

namespace shiftmc {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key) noexcept;

/// Stream tags keep independent uses of one seed apart.
enum class StreamTag : std::uint32_t {
  Coordinates = 1,
  PathNodes = 2,
  PathTail = 3,
  InnerPaths = 4,
  Replication = 5,
  Bits = 6,
};

/// A 128-bit counter address: two 64-bit words plus a tag and a slot.
struct CounterAddress {
  std::uint64_t primary = 0;
  std::uint32_t secondary = 0;
  StreamTag tag = StreamTag::Coordinates;
  std::uint32_t slot = 0;  // only the low 24 bits are used
};

/// Two independent uniforms on the open interval (0,1) with 53-bit resolution.
std::array<double, 2> uniform_pair(std::uint64_t seed, const CounterAddress& address) noexcept;

/// Standard normal quantile (Wichura, AS241 / PPND16). Relative accuracy ~1e-16.
double normal_quantile(double p) noexcept;

/// Two independent standard normals obtained by inverse-CDF transform.
std::array<double, 2> normal_pair(std::uint64_t seed, const CounterAddress& address) noexcept;

/// SplitMix64 finalizer, used to derive disjoint child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept;

}  // namespace shiftmc
