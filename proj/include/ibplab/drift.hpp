#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "ibplab/paths.hpp"
#include "ibplab/spectral.hpp"
#include "ibplab/types.hpp"

namespace ibplab {

/// Drift nonlinearity with analytic directional derivatives. Directional
/// derivatives are required pathwise by every stochastic weight, so models
/// either carry an analytic dderiv or must be wrapped by
/// mollify_directional before use in a weight.
struct DriftModel {
  std::string name;
  Index in_dim = 0;
  Index out_dim = 0;
  bool is_zero = false;

  std::function<Vector(const Vector&)> eval;
  /// Directional derivative (d/ds) b(x + s k) at s = 0; null when the model
  /// is not differentiable along arbitrary directions.
  std::function<Vector(const Vector&, const Vector&)> dderiv;
  /// Upper bound for sup_x |(sigma sigma*)^{-1/2} (d_k b)(x)|.
  std::function<double(const Vector&, const SigmaOperator&)> sigma_dderiv_bound;
  /// Operator-norm Lipschitz constant, when known.
  std::optional<double> lipschitz;
  /// One-sided dissipativity constant c2 with <b(x)-b(y), x-y> <= -c2 |x-y|^2,
  /// when known.
  std::optional<double> dissipativity;
  /// Free-form description of the regularity modulus, metadata only.
  std::string modulus_note;

  bool has_dderiv() const { return static_cast<bool>(dderiv); }
};

/// Drift on path segments over [-tau, 0] (grid functions), used by the delay
/// model. Directions are segments on the same grid.
struct SegmentDriftModel {
  std::string name;
  Index dim = 0;
  double tau = 0.0;
  bool is_zero = false;

  std::function<Vector(const SegmentView&)> eval;
  std::function<Vector(const SegmentView&, const SegmentView&)> dderiv;
  /// Bound for sup_xi |(sigma sigma*)^{-1/2} (d_eta b)(xi)| given a direction
  /// segment eta.
  std::function<double(const SegmentView&, const SigmaOperator&)> sigma_dderiv_bound;
  std::optional<double> lipschitz;

  bool has_dderiv() const { return static_cast<bool>(dderiv); }
};

/// Parameters for registry models.
struct DriftParams {
  std::map<std::string, double> scalars;
  std::optional<Matrix> matrix;  // for "linear"
  std::optional<Vector> vector;  // for "gibbs_gradient" coefficients a_i

  double scalar(const std::string& key) const;
  double scalar_or(const std::string& key, double fallback) const;
  bool has(const std::string& key) const { return scalars.count(key) > 0; }
};

using RegistryModel = std::variant<DriftModel, SegmentDriftModel>;

/// Named drift registry. Names: zero, linear, sine, gibbs_gradient,
/// delay_terminal. gibbs_gradient needs the spectral operator for A^{-1}.
RegistryModel registry_get(const std::string& name, const DriftParams& params, Index n,
                           const SpectralOperator* A = nullptr);

DriftModel registry_get_state(const std::string& name, const DriftParams& params, Index n,
                              const SpectralOperator* A = nullptr);
SegmentDriftModel registry_get_segment(const std::string& name, const DriftParams& params,
                                       Index n);

DriftModel make_zero_drift(Index n);
DriftModel make_linear_drift(Matrix m);
DriftModel make_sine_drift(Index n, double c);
/// b(x) = A^{-1} grad V(x) with V(x) = sum_i (a_i x_i^2 / 2 + delta cos x_i).
DriftModel make_gibbs_gradient_drift(const SpectralOperator& A, Vector a, double delta);
/// b(xi) = F(xi(-tau)) with F_i(v) = c tanh(v_i).
SegmentDriftModel make_delay_terminal_drift(Index n, double c, double tau);

/// Stacked-state drift for the two-component system: input (x, y), output in
/// the y block. Wraps a position-only model (the drift ignores y).
DriftModel lift_position_drift(const DriftModel& m, Index x_dim, Index y_dim);

/// Gauss-Hermite nodes and weights for int e^{-u^2} f(u) du (Golub-Welsch).
void gauss_hermite(int nodes, Vector& points, Vector& weights);

/// Gaussian smoothing of b along the line x + r k, evaluated by Gauss-Hermite
/// quadrature:
///   b_eps(x) = (2 pi eps)^{-1/2} int b(x + r k) exp(-r^2 / (2 eps)) dr.
/// The derivative along k falls on the Gaussian kernel, so the smoothed model
/// is differentiable along k even when b is not. Along other directions the
/// base model's dderiv is smoothed when available.
DriftModel mollify_directional(const DriftModel& b, const Vector& k, double eps, int nodes = 21);

}  // namespace ibplab
