#include "ibplab/phi_psi.hpp"

#include <cmath>

#include "ibplab/quadrature.hpp"

namespace ibplab {

PhiPsi default_phi_psi(double T, double theta1, double theta2) {
  if (!(T > 0.0)) throw ConfigError("default_phi_psi: T must be positive");
  PhiPsi pp;
  pp.T = T;
  pp.theta1 = theta1;
  pp.theta2 = theta2;

  double denom;
  if (theta1 == 0.0) {
    denom = T * T * T / 6.0;
  } else {
    denom = integrate([T, theta1](double s) { return s * (T - s) * std::exp(theta1 * s); }, 0.0, T,
                      1e-14 * T * T * T);
  }
  const double amp = std::exp(theta1 * T) / denom;

  pp.phi = [amp, T](double t) { return amp * t * (T - t); };
  pp.dphi = [amp, T](double t) { return amp * (T - 2.0 * t); };
  pp.psi = [T, theta2](double t) {
    return std::exp(theta2 * (T - t)) / T * (3.0 * t * t / T - 2.0 * t);
  };
  pp.dpsi = [T, theta2](double t) {
    return std::exp(theta2 * (T - t)) / T *
           ((6.0 * t / T - 2.0) - theta2 * (3.0 * t * t / T - 2.0 * t));
  };
  return pp;
}

Eigen::Matrix<double, 6, 1> check_ph_constraints(const PhiPsi& pp) {
  Eigen::Matrix<double, 6, 1> r;
  const double T = pp.T;
  r(0) = pp.phi(0.0);
  r(1) = pp.phi(T);
  r(2) = pp.psi(0.0);
  r(3) = pp.psi(T) - 1.0;
  const double tol4 = 3e-14 * std::max(1.0, std::exp(pp.theta2 * T));
  const double tol5 = 3e-14 * std::max(1.0, std::exp(pp.theta1 * T));
  r(4) = integrate([&pp](double t) { return std::exp(pp.theta2 * t) * pp.psi(t); }, 0.0, T, tol4);
  r(5) = integrate([&pp](double t) { return pp.phi(t) * std::exp(pp.theta1 * t); }, 0.0, T, tol5) -
         std::exp(pp.theta1 * T);
  return r;
}

}  // namespace ibplab
