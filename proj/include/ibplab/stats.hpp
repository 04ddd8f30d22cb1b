#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ibplab/types.hpp"

namespace ibplab {

/// Neumaier compensated summation. merge() folds another accumulator in by
/// adding its running sum and then its compensation, so a partitioned sum
/// reproduces the sequential result for the splits used by the reducer.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }

  void merge(const CompensatedSum& other) {
    add(other.sum);
    add(other.comp);
  }

  double value() const { return sum + comp; }
};

/// First and second moments of one scalar statistic.
struct MomentAccum {
  CompensatedSum s1;
  CompensatedSum s2;
  std::int64_t count = 0;

  void add(double x) {
    s1.add(x);
    s2.add(x * x);
    ++count;
  }

  void merge(const MomentAccum& o) {
    s1.merge(o.s1);
    s2.merge(o.s2);
    count += o.count;
  }

  double mean() const { return count > 0 ? s1.value() / static_cast<double>(count) : 0.0; }

  double variance() const {
    if (count < 2) return 0.0;
    const double n = static_cast<double>(count);
    const double m = mean();
    const double v = (s2.value() - n * m * m) / (n - 1.0);
    return v > 0.0 ? v : 0.0;
  }

  double std_error() const {
    return count > 0 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  }

  /// mean / SE; zero mean with zero SE counts as z = 0.
  double z_score() const {
    const double se = std_error();
    const double m = mean();
    if (se == 0.0) return m == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return m / se;
  }
};

/// A fixed-layout block of statistics accumulated per worker chunk.
using StatsBlock = std::vector<MomentAccum>;

inline StatsBlock make_stats_block(std::size_t slots) { return StatsBlock(slots); }

inline void merge_blocks(StatsBlock& into, const StatsBlock& from) {
  if (into.size() != from.size()) throw ConfigError("stats block layout mismatch");
  for (std::size_t i = 0; i < into.size(); ++i) into[i].merge(from[i]);
}

/// Two-sample z statistic for equal-mean tests.
inline double two_sample_z(const MomentAccum& a, const MomentAccum& b) {
  const double se = std::sqrt(a.std_error() * a.std_error() + b.std_error() * b.std_error());
  if (se == 0.0) return 0.0;
  return (a.mean() - b.mean()) / se;
}

}  // namespace ibplab
