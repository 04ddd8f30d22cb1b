#pragma once

#include <functional>

#include "ibplab/types.hpp"

namespace ibplab {

/// Scalar weight pair (phi, psi) on [0, T] with decay exponents (theta1,
/// theta2). A valid pair satisfies the six boundary/moment constraints
///   phi(0) = phi(T) = psi(0) = psi(T) - 1 = 0,
///   int_0^T e^{theta2 t} psi(t) dt = 0,
///   int_0^T phi(t) e^{theta1 t} dt = e^{theta1 T},
/// which make the shifted two-component system land exactly on the requested
/// terminal direction.
struct PhiPsi {
  double T = 1.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  std::function<double(double)> phi, psi, dphi, dpsi;
};

/// The reference pair
///   phi(t) = e^{theta1 T} t(T-t) / int_0^T s(T-s) e^{theta1 s} ds,
///   psi(t) = (e^{theta2 (T-t)} / T) (3t^2/T - 2t),
/// which satisfies all six constraints for every (T, theta1, theta2).
PhiPsi default_phi_psi(double T, double theta1, double theta2);

/// Residuals of the six constraints, in the order
/// [phi(0), phi(T), psi(0), psi(T)-1, int e^{theta2 t} psi, int phi e^{theta1 t} - e^{theta1 T}].
/// Integrals by adaptive quadrature with tolerance 1e-12.
Eigen::Matrix<double, 6, 1> check_ph_constraints(const PhiPsi& pp);

}  // namespace ibplab
