#pragma once

#include "ibplab/directions.hpp"
#include "ibplab/drift.hpp"
#include "ibplab/paths.hpp"
#include "ibplab/phi_psi.hpp"
#include "ibplab/simulate.hpp"

namespace ibplab {

/// g(t) = (e^{lam t} - 1) / lam for a signed A-eigenvalue lam, with the limit
/// g(t) = t at lam = 0. `scale` = |lam| * T selects the series branch:
/// below 1e-12 the limit, below 1e-6 the two-term series t + lam t^2 / 2.
double eigen_g(double lam, double t, double scale);

/// Precomputed per-mode tables for the semilinear stochastic weight along a
/// fixed direction: prefactors 1 / g_i(T) and g_i(t_j) sampled on the grid.
class SemilinearWeightPlan {
 public:
  SemilinearWeightPlan(const EigenDirection& k, const SpectralOperator& A, const SimGrid& grid);

  /// Left-point Ito sum
  ///   M = sum_i c_i / g_i(T) * sum_j < sigma^{-1}(e_i - g_i(t_j) d_{e_i} b(X_j)), dW_j >.
  double evaluate(const PathSample& path, const DriftModel& b, const SigmaOperator& sig) const;

  bool drift_free() const { return active_.empty(); }
  const std::vector<Index>& active_modes() const { return active_; }

 private:
  Index n_;
  std::vector<Index> active_;   // indices with c_i != 0
  std::vector<double> coeff_;   // c_i
  std::vector<double> prefac_;  // 1 / g_i(T)
  Matrix g_table_;              // active x steps: g_i(t_j)
};

/// One-call form of the plan above.
double semilinear_weight(const PathSample& path, const EigenDirection& k, const DriftModel& b,
                         const SpectralOperator& A, const SigmaOperator& sig);

/// Quadrature upper bound for E[M^2] of the semilinear weight:
///   sum over modes of |c_i|/g_i(T) sqrt(int_0^T (|e_i|_sigma + g_i(t) bound_i)^2 dt),
/// squared; bound_i = sigma_dderiv_bound(e_i).
double semilinear_weight_l2_bound(const EigenDirection& k, const DriftModel& b,
                                  const SpectralOperator& A, const SigmaOperator& sig, double T);

/// Grid tables of the shifted-system ingredients:
///   h'(t)    = phi'(t) e^{theta1 (t-T)} v + psi'(t) e^{theta2 (t-T)} k2,
///   h~(t)    = phi(t)  e^{theta1 (t-T)} v + psi(t)  e^{theta2 (t-T)} k2,
///   Theta(t) = (int_0^t B h~(s) ds, h~(t)),
/// with v = B*(BB*)^{-1} k1. The running integral uses per-step Simpson, so
/// endpoint identities hold to quadrature accuracy on the simulation grid.
struct HamIngredients {
  SimGrid grid;
  Matrix h_prime;     // y_dim x (steps+1)
  Matrix h_tilde;     // y_dim x (steps+1)
  Matrix theta_x;     // x_dim x (steps+1)
  Matrix theta_full;  // (x_dim + y_dim) x (steps+1): stacked Theta(t_j)

  Vector theta_stacked(Index j) const { return theta_full.col(j); }
};

/// Requires the (phi, psi) constraint residuals to be below 1e-8.
HamIngredients ham_h_theta(const PhiPsi& pp, const HamDirection& dir, const SimGrid& grid);

/// Left-point Ito sum sum_j <(sigma sigma*)^{-1/2}(h'(t_j) - d_{Theta(t_j)} b(Z_j)), dW_j>.
double hamiltonian_weight(const HamPath& path, const HamIngredients& ing, const DriftModel& b,
                          const SigmaOperator& sig);

/// Gamma(t) on the grid nodes of [0, T]:
///   (1/(T-tau)) e^{(t+tau-T)A} eta(-tau)      for t in [0, T-tau],
///   eta'(t-T) - A eta(t-T)                    for t in (T-tau, T].
/// The direction's grid must match the simulation grid (tau = m dt).
Matrix delay_gamma(const DelayDirection& dir, const SpectralOperator& A, const SimGrid& grid);

/// Mild perturbation D(t) = int_0^{t+} e^{(t-s)A} Gamma(s) ds on [-tau, T],
/// evaluated in closed form:
///   0                                   for t <= 0,
///   (t/(T-tau)) e^{(t+tau-T)A} eta(-tau) for t in (0, T-tau],
///   eta(t-T)                            for t in [T-tau, T].
/// Columns are indexed j = -m..steps (offset by m). The final segment of D is
/// eta itself, which is what the shifted trajectory realises at time T.
Matrix delay_perturbation(const DelayDirection& dir, const SpectralOperator& A,
                          const SimGrid& grid);

/// Plain running integral Theta(t) = int_0^{t v 0} Gamma(s) ds on the same
/// extended grid (cumulative trapezoid). Kept as a diagnostic: it matches the
/// mild perturbation only where the semigroup factor is negligible, and
/// reports surface both variants.
Matrix delay_theta(const Matrix& gamma, const SimGrid& grid, Index m);

/// Left-point Ito sum with the drift differentiated along the perturbation
/// segment D_{t_j}:
///   sum_j <(sigma sigma*)^{-1/2}(Gamma(t_j) - d_{D_{t_j}} b(X_{t_j})), dW_j>.
/// `direction_table` is a matrix over the extended grid ([-tau, T], offset m):
/// pass delay_perturbation output (or delay_theta for the diagnostic variant).
double delay_weight(const DelayPath& path, const Matrix& gamma, const Matrix& direction_table,
                    const SegmentDriftModel& b, const SigmaOperator& sig);

/// Girsanov density for a drift perturbation xi (tabulated on grid nodes,
/// n x (steps+1)):
///   R = exp[- sum_j <sigma^{-1} xi(t_j), dW_j> - (1/2) trapz |sigma^{-1} xi|^2 dt].
/// The exponent is clamped at +-700 with a flag instead of overflowing.
struct GirsanovResult {
  double density = 1.0;
  double exponent = 0.0;
  bool clamped = false;
};
GirsanovResult girsanov_density(const NoisePath& noise, const Matrix& xi,
                                const SigmaOperator& sig);

/// xi(t_j) = eps*shift_j + b(base_j) - b(shifted_j) for the three model
/// classes (the drift difference vanishes for zero drift).
Matrix girsanov_xi_semilinear(const PathSample& base, const PathSample& shifted,
                              const DriftModel& b, const ShiftSpec& shift);
Matrix girsanov_xi_hamiltonian(const HamPath& base, const HamPath& shifted, const DriftModel& b,
                               const ShiftSpec& shift);
Matrix girsanov_xi_delay(const DelayPath& base, const DelayPath& shifted,
                         const SegmentDriftModel& b, const ShiftSpec& shift);

}  // namespace ibplab
