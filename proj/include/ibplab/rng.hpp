#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "ibplab/types.hpp"

namespace ibplab {

/// One block of the Philox-4x64-10 keyed permutation. Pure function of
/// (counter, key); the basis of all randomness in the library so that a
/// (seed, path_index) pair yields the same stream on every platform and
/// under any worker count.
std::array<std::uint64_t, 4> philox4x64_10(const std::array<std::uint64_t, 4>& counter,
                                           const std::array<std::uint64_t, 2>& key);

/// Ziggurat layer tables (128 layers, derived at startup by closing the
/// layer recurrence), exposed for validation.
struct ZigguratTables {
  std::array<double, 129> x;  // layer extents, x[0] = v / f(r) > r = x[1], x[128] = 0
  std::array<double, 129> y;  // y[i] = exp(-x[i]^2 / 2)
  double r = 0.0;             // tail threshold
  double v = 0.0;             // common layer area
};
const ZigguratTables& ziggurat_tables();

/// Per-path random stream. Key = (seed, path_index); the domain tag occupies
/// counter word 2, so "noise" and "auxiliary" draws never collide. Methods
/// are inline: they sit inside every path loop.
class PathRng {
 public:
  enum class Domain : std::uint64_t { noise = 0, auxiliary = 1 };

  PathRng(std::uint64_t seed, std::uint64_t path_index, Domain domain = Domain::noise)
      : key_{seed, path_index},
        counter_{0, 0, static_cast<std::uint64_t>(domain), 0},
        zig_(&ziggurat_tables()) {}

  std::uint64_t next_u64() {
    if (block_pos_ >= 4) refill();
    return block_[block_pos_++];
  }

  /// Uniform on (0, 1] (53-bit resolution; never 0, so log is safe).
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal. One u64 per draw in the common case: bits 0-6 choose
  /// the layer, bit 7 the sign, bits 11-63 the magnitude.
  double next_gaussian() {
    const ZigguratTables& t = *zig_;
    for (;;) {
      const std::uint64_t u = next_u64();
      const int layer = static_cast<int>(u & 127);
      const bool negative = (u >> 7) & 1;
      const double m = static_cast<double>(u >> 11) * 0x1.0p-53;
      const double x = m * t.x[layer];
      if (x < t.x[layer + 1]) return negative ? -x : x;
      const double slow = gaussian_edge(layer, x, negative);
      if (!std::isnan(slow)) return slow;
    }
  }

  std::uint64_t seed() const { return key_[0]; }
  std::uint64_t path_index() const { return key_[1]; }

 private:
  void refill();
  /// Tail and wedge handling; NaN means "reject, draw again".
  double gaussian_edge(int layer, double x, bool negative);

  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_;
  std::array<std::uint64_t, 4> block_{};
  int block_pos_ = 4;
  const ZigguratTables* zig_;
};

/// Spec-facing factory.
inline PathRng rng_for_path(std::uint64_t seed, std::uint64_t path_index,
                            PathRng::Domain domain = PathRng::Domain::noise) {
  return PathRng(seed, path_index, domain);
}

/// n independent standard normals.
Vector gaussian_vector(PathRng& rng, Index n);

}  // namespace ibplab
