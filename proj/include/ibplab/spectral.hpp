#pragma once

#include <optional>

#include "ibplab/types.hpp"

namespace ibplab {

/// Diagonal representation of a negative-definite self-adjoint operator A on
/// the span of its first n eigenvectors. Stores the eigenvalues of -A, so
/// A e_i = -lambda_i e_i with 0 < lambda_1 <= ... <= lambda_n.
///
/// All coordinates throughout the library are coefficients in this eigenbasis,
/// which makes A, e^{tA} and A^{-1}(e^{tA}-I) exact diagonal maps.
class SpectralOperator {
 public:
  /// `lambdas` are the eigenvalues of -A: strictly positive, non-decreasing.
  explicit SpectralOperator(Vector lambdas);

  /// lambda_i = scale * i^p, i = 1..n.
  static SpectralOperator power_law(Index n, double p, double scale = 1.0);

  Index dim() const { return lambdas_.size(); }
  const Vector& eigenvalues() const { return lambdas_; }
  double lambda_min() const { return lambdas_(0); }
  double lambda_max() const { return lambdas_(lambdas_.size() - 1); }

  /// A x  (coordinate i: -lambda_i x_i).
  Vector apply(const Vector& x) const;
  /// A^{-1} x  (coordinate i: -x_i / lambda_i).
  Vector apply_inverse(const Vector& x) const;
  /// e^{tA} x for t >= 0 (coordinate i: e^{-lambda_i t} x_i).
  Vector semigroup(double t, const Vector& x) const;

  /// Per-mode factors e^{-lambda_i t}.
  Vector semigroup_factors(double t) const;
  /// Per-mode factors (1 - e^{-lambda_i dt}) / lambda_i, the diagonal of
  /// A^{-1}(e^{dt A} - I). Stable for small lambda*dt via expm1.
  Vector phi1_factors(double dt) const;

  /// sum_i 1/lambda_i over the truncation.
  double inverse_trace() const { return lambdas_.cwiseInverse().sum(); }

 private:
  Vector lambdas_;
};

/// Spec-facing free functions.
Vector apply_A(const SpectralOperator& op, const Vector& x);
Vector semigroup_apply(const SpectralOperator& op, double t, const Vector& x);

/// Noise operator sigma together with the derived maps every weight needs:
/// sqrt(sigma sigma*), its inverse, and sigma^{-1}. Construction fails if
/// sigma sigma* has an eigenvalue below the floor 1e-12.
class SigmaOperator {
 public:
  static SigmaOperator identity(Index n);
  static SigmaOperator diagonal(Vector d);
  static SigmaOperator dense(Matrix m);

  Index dim() const { return n_; }
  bool is_diagonal() const { return diag_.has_value(); }

  /// sigma y.
  Vector apply(const Vector& y) const;
  /// sigma^{-1} x.
  Vector apply_inverse(const Vector& x) const;
  /// (sigma sigma*)^{1/2} y.
  Vector apply_sqrt_cov(const Vector& y) const;
  /// (sigma sigma*)^{-1/2} x.
  Vector apply_inv_sqrt_cov(const Vector& x) const;

  /// |(sigma sigma*)^{-1/2} x|: the minimal-preimage norm of x under
  /// sqrt(sigma sigma*). Coincides with |sigma^{-1} x| for invertible sigma.
  double sigma_norm(const Vector& x) const;

  /// Largest singular value of sigma.
  double op_norm() const { return op_norm_; }
  /// ||sigma^{-1}|| (largest singular value of the inverse).
  double inv_op_norm() const { return inv_op_norm_; }

  Matrix matrix() const;

  /// Fast-path accessors for hot loops: the diagonal when sigma is diagonal
  /// (else nullptr), and the dense maps otherwise.
  const Vector* diagonal_or_null() const { return diag_ ? &*diag_ : nullptr; }
  const Matrix& dense_matrix() const { return mat_; }
  const Matrix& dense_inverse() const { return inv_; }
  const Matrix& dense_inv_sqrt_cov() const { return inv_sqrt_cov_; }

 private:
  SigmaOperator() = default;

  Index n_ = 0;
  std::optional<Vector> diag_;  // fast path: sigma = diag(d)
  Matrix mat_;                  // dense sigma (empty when diagonal)
  Matrix inv_;                  // sigma^{-1}
  Matrix sqrt_cov_;             // (sigma sigma*)^{1/2}
  Matrix inv_sqrt_cov_;         // (sigma sigma*)^{-1/2}
  double op_norm_ = 0.0;
  double inv_op_norm_ = 0.0;
};

}  // namespace ibplab
