#include <doctest.h>

#include <cmath>
#include <set>

#include "ibplab/grid.hpp"
#include "ibplab/paths.hpp"
#include "ibplab/rng.hpp"
#include "ibplab/stats.hpp"

using namespace ibplab;

// Reference outputs for the keyed permutation, frozen from an independent
// implementation (counter little-endian, 10 rounds).
TEST_CASE("philox4x64-10 known-answer vectors") {
  using A4 = std::array<std::uint64_t, 4>;
  using A2 = std::array<std::uint64_t, 2>;
  CHECK(philox4x64_10(A4{0, 0, 0, 0}, A2{0, 0}) ==
        A4{0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL,
           0x7e68b68aec7ba23bULL});
  CHECK(philox4x64_10(A4{1, 0, 0, 0}, A2{0, 0}) ==
        A4{0x02f4ba6408e4d89bULL, 0x3dd62b0b9ca8c5b2ULL, 0x1c8667a55d902e79ULL,
           0x907d7a052fd5b4dcULL});
  CHECK(philox4x64_10(A4{2, 0, 0, 0}, A2{0, 0}) ==
        A4{0x809bf322883987c3ULL, 0x471128b9e807f7ddULL, 0xf250ba0dbec065b7ULL,
           0xfc6ed66767a457bcULL});
  CHECK(philox4x64_10(A4{1, 0, 0, 0}, A2{3, 4}) ==
        A4{0xfc47b9967827f6c0ULL, 0xbed428a53ac2a2daULL, 0x347bda94501b759fULL,
           0xfcfbc8aaab89b757ULL});
  CHECK(philox4x64_10(A4{6, 6, 7, 8}, A2{0, 0}) ==
        A4{0x29a3ec0cc2f27399ULL, 0xac4f4a54309d5aadULL, 0xc9484ba7e1268b81ULL,
           0x9b7a70cfd3972aa6ULL});
  CHECK(philox4x64_10(A4{0, 0, 0, 0}, A2{0xffffffffffffffffULL, 0xffffffffffffffffULL}) ==
        A4{0x44b7493d1acfc229ULL, 0x6636af8e997921ddULL, 0x3f73e132b5b3780eULL,
           0x605644dde03b01b1ULL});
}

TEST_CASE("per-path streams: reproducible, distinct, domain-separated") {
  PathRng a(42, 7), b(42, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  PathRng c(42, 0), d(42, 1);
  CHECK(c.next_u64() != d.next_u64());

  PathRng noise(42, 7, PathRng::Domain::noise);
  PathRng aux(42, 7, PathRng::Domain::auxiliary);
  CHECK(noise.next_u64() != aux.next_u64());
}

TEST_CASE("uniforms live in (0, 1]") {
  PathRng rng(9, 9);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 200000; ++i) {
    const double u = rng.next_unit();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo > 0.0);
  CHECK(hi <= 1.0);
}

TEST_CASE("ziggurat tables are self-consistent") {
  const ZigguratTables& t = ziggurat_tables();
  // base-layer area identity v = r f(r) + tail(r)
  const double f_r = std::exp(-0.5 * t.r * t.r);
  const double tail = std::sqrt(M_PI / 2.0) * std::erfc(t.r / std::sqrt(2.0));
  CHECK(t.v == doctest::Approx(t.r * f_r + tail).epsilon(1e-14));
  CHECK(t.x[0] == doctest::Approx(t.v / f_r).epsilon(1e-14));
  // strictly decreasing extents, closed recurrence
  for (int i = 1; i < 128; ++i) CHECK(t.x[i] > t.x[i + 1]);
  CHECK(std::abs(t.y[127] + t.v / t.x[127] - 1.0) < 1e-9);
  // every layer has area v
  for (int i = 1; i < 128; ++i) {
    CHECK(t.x[i] * (t.y[i + 1] - t.y[i]) == doctest::Approx(t.v).epsilon(1e-9));
  }
}

TEST_CASE("gaussian moments at 2e6 samples") {
  PathRng rng(2024, 3);
  const int n = 2000000;
  MomentAccum m1, m2, m4;
  int tail = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.next_gaussian();
    m1.add(z);
    m2.add(z * z);
    m4.add(z * z * z * z);
    if (std::abs(z) > 3.0) ++tail;
  }
  CHECK(std::abs(m1.mean()) < 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(m2.mean() - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(m4.mean() - 3.0) < 4.0 * std::sqrt(96.0 / n));
  const double p3 = 2.0 * 0.5 * std::erfc(3.0 / std::sqrt(2.0));
  CHECK(std::abs(double(tail) / n - p3) < 4.0 * std::sqrt(p3 * (1 - p3) / n));
}

TEST_CASE("noise path moments and reproducibility") {
  SimGrid grid(1.0, 64);
  const double dt = grid.dt();
  MomentAccum first;
  for (int i = 0; i < 10000; ++i) {
    NoisePath np = NoisePath::generate(11, i, grid, 1);
    first.add(np.increments(0, 0));
  }
  CHECK(std::abs(first.mean()) < 4.0 * std::sqrt(dt / 10000.0));
  const double var = first.variance();
  CHECK(std::abs(var - dt) < 4.0 * dt * std::sqrt(2.0 / 10000.0));

  NoisePath a = NoisePath::generate(11, 123, grid, 2);
  NoisePath b = NoisePath::generate(11, 123, grid, 2);
  CHECK(a.increments == b.increments);
  NoisePath c = NoisePath::generate(11, 124, grid, 2);
  CHECK(a.increments != c.increments);
}
