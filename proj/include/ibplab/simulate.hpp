#pragma once

#include <functional>

#include "ibplab/drift.hpp"
#include "ibplab/paths.hpp"
#include "ibplab/spectral.hpp"

namespace ibplab {

/// Deterministic drift shift eps * s(t), tabulated on the grid nodes
/// (values col j = s(t_j), j = 0..steps; the node at T is kept for
/// quadratic-variation terms).
struct ShiftSpec {
  double epsilon = 0.0;
  Matrix values;  // n x (steps+1)

  static ShiftSpec tabulate(double epsilon, const SimGrid& grid, Index n,
                            const std::function<Vector(double)>& s);
};

/// Exponential-Euler step for dX = {AX + b(X) + eps s(t)} dt + sigma dW:
///   X_{j+1} = e^{A dt} X_j + A^{-1}(e^{A dt}-I) [b(X_j) + eps s(t_j)] + sigma dW_j.
/// The linear part is exact per mode; noise enters as the raw increment so
/// weights can reuse the same dW.
PathSample simulate_semilinear(const Vector& x0, const SpectralOperator& A,
                               const SigmaOperator& sig, const DriftModel& b, const SimGrid& grid,
                               const NoisePath& noise, const ShiftSpec* shift = nullptr);
void simulate_semilinear_into(PathSample& out, const Vector& x0, const SpectralOperator& A,
                              const SigmaOperator& sig, const DriftModel& b, const SimGrid& grid,
                              const NoisePath& noise, const ShiftSpec* shift = nullptr);

/// Two-component system dX = B Y dt, dY = {AY + b(X,Y) + eps h'(t)} dt + sigma dW.
/// b takes the stacked state (x, y). For a shifted run (eps != 0) the drift is
/// evaluated on the supplied UNSHIFTED base path, which makes the perturbation
/// deterministic and exactly linear in eps under shared noise.
HamPath simulate_hamiltonian(const Vector& x0, const Vector& y0, const Matrix& B,
                             const SpectralOperator& A, const SigmaOperator& sig,
                             const DriftModel& b, const SimGrid& grid, const NoisePath& noise,
                             const ShiftSpec* shift = nullptr, const HamPath* base = nullptr);
void simulate_hamiltonian_into(HamPath& out, const Vector& x0, const Vector& y0, const Matrix& B,
                               const SpectralOperator& A, const SigmaOperator& sig,
                               const DriftModel& b, const SimGrid& grid, const NoisePath& noise,
                               const ShiftSpec* shift = nullptr, const HamPath* base = nullptr);

/// Delay equation dX = {AX + b(X_t) + eps Gamma(t)} dt + sigma dW with initial
/// segment xi0 on the [-tau, 0] grid (n x (m+1), tau = m dt). Shifted runs
/// evaluate b on the base path's segment.
DelayPath simulate_delay(const Matrix& xi0, const SpectralOperator& A, const SigmaOperator& sig,
                         const SegmentDriftModel& b, const SimGrid& grid, double tau,
                         const NoisePath& noise, const ShiftSpec* shift = nullptr,
                         const DelayPath* base = nullptr);
void simulate_delay_into(DelayPath& out, const Matrix& xi0, const SpectralOperator& A,
                         const SigmaOperator& sig, const SegmentDriftModel& b, const SimGrid& grid,
                         double tau, const NoisePath& noise, const ShiftSpec* shift = nullptr,
                         const DelayPath* base = nullptr);

/// Number of delay grid nodes m with tau = m dt; throws on misalignment.
Index delay_nodes_for(double tau, const SimGrid& grid);

}  // namespace ibplab
