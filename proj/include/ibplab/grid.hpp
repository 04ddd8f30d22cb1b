#pragma once

#include "ibplab/types.hpp"

namespace ibplab {

/// Uniform time grid on [0, T]. dt is always derived from (T, steps).
struct SimGrid {
  double horizon = 1.0;
  Index steps = 1;

  SimGrid() = default;
  SimGrid(double T, Index n) : horizon(T), steps(n) {
    if (!(T > 0.0)) throw ConfigError("SimGrid: horizon must be positive");
    if (n <= 0) throw ConfigError("SimGrid: steps must be positive");
  }

  double dt() const { return horizon / static_cast<double>(steps); }
  double time(Index j) const { return dt() * static_cast<double>(j); }

  SimGrid refined() const { return SimGrid(horizon, steps * 2); }
};

}  // namespace ibplab
