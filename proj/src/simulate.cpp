#include "ibplab/simulate.hpp"

#include <cmath>

namespace ibplab {

namespace {

void check_noise(const NoisePath& noise, const SimGrid& grid, Index n) {
  if (noise.increments.cols() != grid.steps || noise.increments.rows() != n) {
    throw ConfigError("noise path does not match grid/dimension");
  }
}

inline void check_finite(const Eigen::Ref<const Vector>& v, Index step) {
  if (!v.allFinite()) throw SimulationError("state is not finite", step);
}

}  // namespace

ShiftSpec ShiftSpec::tabulate(double epsilon, const SimGrid& grid, Index n,
                              const std::function<Vector(double)>& s) {
  ShiftSpec spec;
  spec.epsilon = epsilon;
  spec.values.resize(n, grid.steps + 1);
  for (Index j = 0; j <= grid.steps; ++j) spec.values.col(j) = s(grid.time(j));
  return spec;
}

NoisePath NoisePath::generate(std::uint64_t seed, std::uint64_t path_index, const SimGrid& grid,
                              Index n) {
  NoisePath np;
  np.regenerate(seed, path_index, grid, n);
  return np;
}

void NoisePath::regenerate(std::uint64_t seed, std::uint64_t path_index, const SimGrid& grid,
                           Index n) {
  this->seed = seed;
  this->path_index = path_index;
  dt = grid.dt();
  const double sqrt_dt = std::sqrt(dt);
  increments.resize(n, grid.steps);
  PathRng rng = rng_for_path(seed, path_index, PathRng::Domain::noise);
  for (Index j = 0; j < grid.steps; ++j) {
    for (Index i = 0; i < n; ++i) increments(i, j) = sqrt_dt * rng.next_gaussian();
  }
}

PathSample simulate_semilinear(const Vector& x0, const SpectralOperator& A,
                               const SigmaOperator& sig, const DriftModel& b, const SimGrid& grid,
                               const NoisePath& noise, const ShiftSpec* shift) {
  PathSample out;
  simulate_semilinear_into(out, x0, A, sig, b, grid, noise, shift);
  return out;
}

void simulate_semilinear_into(PathSample& out, const Vector& x0, const SpectralOperator& A,
                              const SigmaOperator& sig, const DriftModel& b, const SimGrid& grid,
                              const NoisePath& noise, const ShiftSpec* shift) {
  const Index n = A.dim();
  if (x0.size() != n || sig.dim() != n) throw ConfigError("simulate_semilinear: dim mismatch");
  if (!b.is_zero && b.in_dim != n) throw ConfigError("simulate_semilinear: drift dim mismatch");
  check_noise(noise, grid, n);
  const bool shifted = shift != nullptr && shift->epsilon != 0.0;

  const double dt = grid.dt();
  const Vector decay = A.semigroup_factors(dt);
  const Vector phi1 = A.phi1_factors(dt);

  out.grid = grid;
  out.noise = &noise;
  out.shift = ShiftRecord{shifted ? shift->epsilon : 0.0, shifted};
  out.states.resize(n, grid.steps + 1);
  out.states.col(0) = x0;

  const Vector* sig_diag = sig.diagonal_or_null();
  Vector drift(n);
  Vector sdw(n);
  for (Index j = 0; j < grid.steps; ++j) {
    auto x = out.states.col(j);
    auto dw = noise.increments.col(j);
    if (sig_diag) {
      sdw = sig_diag->cwiseProduct(dw);
    } else {
      sdw.noalias() = sig.dense_matrix() * dw;
    }
    if (b.is_zero && !shifted) {
      out.states.col(j + 1) = decay.cwiseProduct(x) + sdw;
    } else {
      if (b.is_zero) {
        drift.setZero();
      } else {
        drift = b.eval(x);
      }
      if (shifted) drift += shift->epsilon * shift->values.col(j);
      out.states.col(j + 1) = decay.cwiseProduct(x) + phi1.cwiseProduct(drift) + sdw;
    }
    check_finite(out.states.col(j + 1), j + 1);
  }
}

HamPath simulate_hamiltonian(const Vector& x0, const Vector& y0, const Matrix& B,
                             const SpectralOperator& A, const SigmaOperator& sig,
                             const DriftModel& b, const SimGrid& grid, const NoisePath& noise,
                             const ShiftSpec* shift, const HamPath* base) {
  HamPath out;
  simulate_hamiltonian_into(out, x0, y0, B, A, sig, b, grid, noise, shift, base);
  return out;
}

void simulate_hamiltonian_into(HamPath& out, const Vector& x0, const Vector& y0, const Matrix& B,
                               const SpectralOperator& A, const SigmaOperator& sig,
                               const DriftModel& b, const SimGrid& grid, const NoisePath& noise,
                               const ShiftSpec* shift, const HamPath* base) {
  const Index yn = A.dim();
  const Index xn = B.rows();
  if (B.cols() != yn || y0.size() != yn || x0.size() != xn || sig.dim() != yn) {
    throw ConfigError("simulate_hamiltonian: dim mismatch");
  }
  if (!b.is_zero && b.in_dim != xn + yn) throw ConfigError("simulate_hamiltonian: drift dim mismatch");
  check_noise(noise, grid, yn);
  const bool shifted = shift != nullptr && shift->epsilon != 0.0;
  if (shifted) {
    if (base == nullptr) {
      throw ConfigError("simulate_hamiltonian: shifted run requires the unshifted base path");
    }
    if (base->x_states.cols() != grid.steps + 1) {
      throw ConfigError("simulate_hamiltonian: base path grid mismatch");
    }
  }

  const double dt = grid.dt();
  const Vector decay = A.semigroup_factors(dt);
  const Vector phi1 = A.phi1_factors(dt);

  out.grid = grid;
  out.noise = &noise;
  out.shift = ShiftRecord{shifted ? shift->epsilon : 0.0, shifted};
  out.x_states.resize(xn, grid.steps + 1);
  out.y_states.resize(yn, grid.steps + 1);
  out.x_states.col(0) = x0;
  out.y_states.col(0) = y0;

  const Vector* sig_diag = sig.diagonal_or_null();
  Vector drift(yn);
  Vector sdw(yn);
  Vector z(xn + yn);
  for (Index j = 0; j < grid.steps; ++j) {
    auto x = out.x_states.col(j);
    auto y = out.y_states.col(j);
    auto dw = noise.increments.col(j);
    if (b.is_zero) {
      drift.setZero();
    } else {
      // Shifted systems keep the drift on the unshifted trajectory.
      if (shifted) {
        z << base->x_states.col(j), base->y_states.col(j);
      } else {
        z << x, y;
      }
      drift = b.eval(z);
    }
    if (shifted) drift += shift->epsilon * shift->values.col(j);
    if (sig_diag) {
      sdw = sig_diag->cwiseProduct(dw);
    } else {
      sdw.noalias() = sig.dense_matrix() * dw;
    }
    out.x_states.col(j + 1) = x + dt * (B * y);
    out.y_states.col(j + 1) = decay.cwiseProduct(y) + phi1.cwiseProduct(drift) + sdw;
    check_finite(out.x_states.col(j + 1), j + 1);
    check_finite(out.y_states.col(j + 1), j + 1);
  }
}

Index delay_nodes_for(double tau, const SimGrid& grid) {
  if (!(tau > 0.0)) throw ConfigError("delay: tau must be positive");
  const double ratio = tau / grid.dt();
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("delay: tau must be an integer multiple of dt");
  }
  return static_cast<Index>(rounded);
}

DelayPath simulate_delay(const Matrix& xi0, const SpectralOperator& A, const SigmaOperator& sig,
                         const SegmentDriftModel& b, const SimGrid& grid, double tau,
                         const NoisePath& noise, const ShiftSpec* shift, const DelayPath* base) {
  DelayPath out;
  simulate_delay_into(out, xi0, A, sig, b, grid, tau, noise, shift, base);
  return out;
}

void simulate_delay_into(DelayPath& out, const Matrix& xi0, const SpectralOperator& A,
                         const SigmaOperator& sig, const SegmentDriftModel& b, const SimGrid& grid,
                         double tau, const NoisePath& noise, const ShiftSpec* shift,
                         const DelayPath* base) {
  const Index n = A.dim();
  const Index m = delay_nodes_for(tau, grid);
  if (xi0.rows() != n || xi0.cols() != m + 1) {
    throw ConfigError("simulate_delay: initial segment must be n x (m+1)");
  }
  if (sig.dim() != n) throw ConfigError("simulate_delay: dim mismatch");
  check_noise(noise, grid, n);
  const bool shifted = shift != nullptr && shift->epsilon != 0.0;
  if (shifted) {
    if (base == nullptr) {
      throw ConfigError("simulate_delay: shifted run requires the unshifted base path");
    }
    if (base->history.cols() != grid.steps + m + 1) {
      throw ConfigError("simulate_delay: base path grid mismatch");
    }
  }

  const double dt = grid.dt();
  const Vector decay = A.semigroup_factors(dt);
  const Vector phi1 = A.phi1_factors(dt);

  out.grid = grid;
  out.tau = tau;
  out.delay_nodes = m;
  out.noise = &noise;
  out.shift = ShiftRecord{shifted ? shift->epsilon : 0.0, shifted};
  out.history.resize(n, grid.steps + m + 1);
  out.history.leftCols(m + 1) = xi0;

  const Vector* sig_diag = sig.diagonal_or_null();
  Vector drift(n);
  Vector sdw(n);
  for (Index j = 0; j < grid.steps; ++j) {
    auto x = out.history.col(j + m);
    auto dw = noise.increments.col(j);
    if (b.is_zero) {
      drift.setZero();
    } else {
      drift = b.eval(shifted ? base->segment(j) : out.segment(j));
    }
    if (shifted) drift += shift->epsilon * shift->values.col(j);
    if (sig_diag) {
      sdw = sig_diag->cwiseProduct(dw);
    } else {
      sdw.noalias() = sig.dense_matrix() * dw;
    }
    out.history.col(j + m + 1) = decay.cwiseProduct(x) + phi1.cwiseProduct(drift) + sdw;
    check_finite(out.history.col(j + m + 1), j + 1);
  }
}

}  // namespace ibplab
