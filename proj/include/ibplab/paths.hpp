#pragma once

#include "ibplab/grid.hpp"
#include "ibplab/rng.hpp"
#include "ibplab/types.hpp"

namespace ibplab {

using ColRef = Eigen::Ref<const Vector>;

/// Brownian increments on a grid, stored as columns: col(j) ~ N(0, dt I),
/// j = 0..steps-1. Fully reproducible from (seed, path_index).
struct NoisePath {
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  double dt = 0.0;
  Matrix increments;  // n x steps

  static NoisePath generate(std::uint64_t seed, std::uint64_t path_index, const SimGrid& grid,
                            Index n);
  /// In-place variant for buffer reuse across paths.
  void regenerate(std::uint64_t seed, std::uint64_t path_index, const SimGrid& grid, Index n);

  Index steps() const { return increments.cols(); }
  ColRef increment(Index j) const { return increments.col(j); }
};

/// Record of an applied deterministic drift shift eps * s(t).
struct ShiftRecord {
  double epsilon = 0.0;
  bool active = false;
};

/// Trajectory of the semilinear model on the grid nodes, with the increments
/// that produced it. states col j = X(t_j), j = 0..steps.
struct PathSample {
  SimGrid grid;
  Matrix states;  // n x (steps+1)
  const NoisePath* noise = nullptr;  // not owned; must outlive the sample
  ShiftRecord shift;

  ColRef state(Index j) const { return states.col(j); }
  ColRef terminal() const { return states.col(states.cols() - 1); }
};

/// Trajectory of the degenerate two-component system: the position block is
/// driven only by B * velocity; noise enters the velocity block.
struct HamPath {
  SimGrid grid;
  Matrix x_states;  // x_dim x (steps+1)
  Matrix y_states;  // y_dim x (steps+1)
  const NoisePath* noise = nullptr;  // not owned; must outlive the path
  ShiftRecord shift;

  ColRef x(Index j) const { return x_states.col(j); }
  ColRef y(Index j) const { return y_states.col(j); }
  Vector stacked(Index j) const {
    Vector z(x_states.rows() + y_states.rows());
    z << x_states.col(j), y_states.col(j);
    return z;
  }
  Vector terminal_stacked() const { return stacked(x_states.cols() - 1); }
};

/// Window of count columns of a matrix, possibly circular; at(l) is the value
/// at node l. Used for path segments over [-tau, 0] and direction tables.
class SegmentView {
 public:
  SegmentView(const Matrix& data, Index start, Index count)
      : data_(&data), start_(start), count_(count) {}

  Index nodes() const { return count_; }
  ColRef at(Index l) const { return data_->col((start_ + l) % data_->cols()); }
  /// Value at theta = 0.
  ColRef terminal() const { return at(count_ - 1); }
  /// Value at theta = -tau.
  ColRef oldest() const { return at(0); }

 private:
  const Matrix* data_;
  Index start_;
  Index count_;
};

/// Trajectory of the delay model: states on the extended grid [-tau, T] with
/// tau = delay_nodes * dt. state(j) is indexed by j = -delay_nodes..steps.
struct DelayPath {
  SimGrid grid;
  double tau = 0.0;
  Index delay_nodes = 0;  // m with tau = m * dt
  Matrix history;         // n x (steps + delay_nodes + 1)
  const NoisePath* noise = nullptr;  // not owned; must outlive the path
  ShiftRecord shift;

  ColRef state(Index j) const { return history.col(j + delay_nodes); }

  /// Segment X_t at node j: values at t_j + theta_l, theta_l = -tau + l*dt,
  /// l = 0..delay_nodes.
  SegmentView segment(Index j) const { return SegmentView(history, j, delay_nodes + 1); }

  SegmentView terminal_segment() const { return segment(grid.steps); }
};

}  // namespace ibplab
