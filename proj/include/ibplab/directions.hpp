#pragma once

#include <functional>

#include "ibplab/grid.hpp"
#include "ibplab/paths.hpp"
#include "ibplab/spectral.hpp"

namespace ibplab {

/// Differentiation direction in the truncation, as coefficients over the
/// eigenbasis of A. Must have at least one nonzero coefficient.
struct EigenDirection {
  Vector coefficients;

  explicit EigenDirection(Vector c);
  static EigenDirection unit(Index n, Index i);
  static EigenDirection zero_padded(const Vector& c, Index n);

  Index dim() const { return coefficients.size(); }
};

/// Direction (k1, k2) for the two-component system, with the eigen-relations
///   A k2 = theta2 k2,  A B*(BB*)^{-1} k1 = theta1 B*(BB*)^{-1} k1
/// verified at construction (1e-10 relative).
struct HamDirection {
  Vector k1, k2;
  Matrix B;
  Vector b_pinv_k1;  // B*(BB*)^{-1} k1
  double theta1 = 0.0;
  double theta2 = 0.0;
};

HamDirection make_ham_direction(const SpectralOperator& A, const Matrix& B, const Vector& k1,
                                const Vector& k2);

/// Direction segment eta on the [-tau, 0] grid with analytic derivative
/// tables; finite energy int (|A eta|^2 + |eta'|^2).
struct DelayDirection {
  double tau = 0.0;
  Index nodes_m = 0;  // theta_l = -tau + l * (tau/m), l = 0..m
  Matrix eta;         // n x (m+1)
  Matrix eta_prime;   // n x (m+1)
  Matrix a_eta;       // n x (m+1), A eta
  double c1_energy = 0.0;

  double grid_dt() const { return tau / static_cast<double>(nodes_m); }
};

DelayDirection make_delay_direction(const SpectralOperator& A, double tau, Index m,
                                    const std::function<Vector(double)>& eta,
                                    const std::function<Vector(double)>& eta_prime);
/// eta(theta) = v constant.
DelayDirection make_constant_delay_direction(const SpectralOperator& A, double tau, Index m,
                                             const Vector& v);

}  // namespace ibplab
