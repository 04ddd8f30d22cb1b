#include "ibplab/rng.hpp"

#include <limits>

namespace ibplab {

namespace {
constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;

inline void mul_hilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

inline std::array<std::uint64_t, 4> round_once(const std::array<std::uint64_t, 4>& c,
                                               const std::array<std::uint64_t, 2>& k) {
  std::uint64_t hi0, lo0, hi1, lo1;
  mul_hilo(kM0, c[0], hi0, lo0);
  mul_hilo(kM1, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline double gauss_pdf_exp(double x) { return std::exp(-0.5 * x * x); }

// Closure defect of the 128-layer recurrence started at x[1] = r: every layer
// has area v(r) = r e^{-r^2/2} + tail(r); the correct r drives x[128] to 0,
// i.e. the final density value to 1.
double ziggurat_defect(double r, ZigguratTables* out) {
  const double f_r = gauss_pdf_exp(r);
  const double v = r * f_r + std::sqrt(M_PI / 2.0) * std::erfc(r / std::sqrt(2.0));
  double x = r;
  double y = f_r;
  if (out) {
    out->r = r;
    out->v = v;
    out->x[0] = v / f_r;
    out->y[0] = gauss_pdf_exp(out->x[0]);
    out->x[1] = r;
    out->y[1] = f_r;
  }
  for (int i = 2; i <= 127; ++i) {
    y += v / x;  // density at the top of the previous layer
    if (y >= 1.0) return 2.0 + static_cast<double>(128 - i);  // collapsed early: r too small
    x = std::sqrt(-2.0 * std::log(y));
    if (out) {
      out->x[i] = x;
      out->y[i] = y;
    }
  }
  return y + v / x - 1.0;
}

ZigguratTables build_ziggurat() {
  // v(r) shrinks as r grows, so the defect decreases in r: bisect on [3, 4]
  double lo = 3.0, hi = 4.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ziggurat_defect(mid, nullptr) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-15) break;
  }
  ZigguratTables t;
  ziggurat_defect(0.5 * (lo + hi), &t);
  t.x[128] = 0.0;
  t.y[128] = 1.0;
  return t;
}
}  // namespace

const ZigguratTables& ziggurat_tables() {
  static const ZigguratTables tables = build_ziggurat();
  return tables;
}

std::array<std::uint64_t, 4> philox4x64_10(const std::array<std::uint64_t, 4>& counter,
                                           const std::array<std::uint64_t, 2>& key) {
  std::array<std::uint64_t, 4> c = counter;
  std::array<std::uint64_t, 2> k = key;
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k[0] += kW0;
      k[1] += kW1;
    }
    c = round_once(c, k);
  }
  return c;
}

void PathRng::refill() {
  block_ = philox4x64_10(counter_, key_);
  block_pos_ = 0;
  if (++counter_[0] == 0) ++counter_[1];  // 128-bit block index; word 2 holds the domain
}

double PathRng::gaussian_edge(int layer, double x, bool negative) {
  const ZigguratTables& t = *zig_;
  if (layer == 0) {
    // tail beyond r by exponential rejection
    double xt, yt;
    do {
      xt = -std::log(next_unit()) / t.r;
      yt = -std::log(next_unit());
    } while (yt + yt < xt * xt);
    return negative ? -(t.r + xt) : (t.r + xt);
  }
  const double y = t.y[layer] + next_unit() * (t.y[layer + 1] - t.y[layer]);
  if (y < gauss_pdf_exp(x)) return negative ? -x : x;
  return std::numeric_limits<double>::quiet_NaN();
}

Vector gaussian_vector(PathRng& rng, Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.next_gaussian();
  return v;
}

}  // namespace ibplab
