#include "ibplab/spectral.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace ibplab {

namespace {
constexpr double kCovEigenvalueFloor = 1e-12;

void check_dim(const char* what, Index expected, Index got) {
  if (expected != got) {
    throw ConfigError(std::string(what) + ": dimension mismatch (" +
                      std::to_string(expected) + " vs " + std::to_string(got) + ")");
  }
}
}  // namespace

SpectralOperator::SpectralOperator(Vector lambdas) : lambdas_(std::move(lambdas)) {
  if (lambdas_.size() == 0) throw ConfigError("SpectralOperator: empty spectrum");
  for (Index i = 0; i < lambdas_.size(); ++i) {
    if (!(lambdas_(i) > 0.0)) throw ConfigError("SpectralOperator: eigenvalues must be positive");
    if (i > 0 && lambdas_(i) < lambdas_(i - 1)) {
      throw ConfigError("SpectralOperator: eigenvalues must be non-decreasing");
    }
  }
}

SpectralOperator SpectralOperator::power_law(Index n, double p, double scale) {
  if (n <= 0) throw ConfigError("SpectralOperator: dim must be positive");
  if (!(scale > 0.0)) throw ConfigError("SpectralOperator: scale must be positive");
  Vector l(n);
  for (Index i = 0; i < n; ++i) l(i) = scale * std::pow(double(i + 1), p);
  return SpectralOperator(std::move(l));
}

Vector SpectralOperator::apply(const Vector& x) const {
  check_dim("apply_A", dim(), x.size());
  return (-lambdas_.array() * x.array()).matrix();
}

Vector SpectralOperator::apply_inverse(const Vector& x) const {
  check_dim("apply_A_inverse", dim(), x.size());
  return (-x.array() / lambdas_.array()).matrix();
}

Vector SpectralOperator::semigroup(double t, const Vector& x) const {
  check_dim("semigroup_apply", dim(), x.size());
  if (t < 0.0) throw ConfigError("semigroup_apply: negative time");
  if (t == 0.0) return x;
  return (semigroup_factors(t).array() * x.array()).matrix();
}

Vector SpectralOperator::semigroup_factors(double t) const {
  return (-lambdas_.array() * t).exp().matrix();
}

Vector SpectralOperator::phi1_factors(double dt) const {
  Vector out(dim());
  for (Index i = 0; i < dim(); ++i) out(i) = -std::expm1(-lambdas_(i) * dt) / lambdas_(i);
  return out;
}

Vector apply_A(const SpectralOperator& op, const Vector& x) { return op.apply(x); }

Vector semigroup_apply(const SpectralOperator& op, double t, const Vector& x) {
  return op.semigroup(t, x);
}

SigmaOperator SigmaOperator::identity(Index n) { return diagonal(Vector::Ones(n)); }

SigmaOperator SigmaOperator::diagonal(Vector d) {
  if (d.size() == 0) throw ConfigError("SigmaOperator: empty diagonal");
  SigmaOperator s;
  s.n_ = d.size();
  for (Index i = 0; i < d.size(); ++i) {
    if (d(i) * d(i) < kCovEigenvalueFloor) {
      throw ConfigError("SigmaOperator: sigma sigma* eigenvalue below floor");
    }
  }
  s.diag_ = std::move(d);
  s.op_norm_ = s.diag_->cwiseAbs().maxCoeff();
  s.inv_op_norm_ = s.diag_->cwiseAbs().minCoeff();
  s.inv_op_norm_ = 1.0 / s.inv_op_norm_;
  return s;
}

SigmaOperator SigmaOperator::dense(Matrix m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw ConfigError("SigmaOperator: matrix must be square and non-empty");
  }
  SigmaOperator s;
  s.n_ = m.rows();
  Matrix cov = m * m.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.info() != Eigen::Success) throw ConfigError("SigmaOperator: eigendecomposition failed");
  const Vector& ev = es.eigenvalues();
  if (ev.minCoeff() < kCovEigenvalueFloor) {
    throw ConfigError("SigmaOperator: sigma sigma* eigenvalue below floor");
  }
  const Matrix& u = es.eigenvectors();
  s.sqrt_cov_ = u * ev.cwiseSqrt().asDiagonal() * u.transpose();
  s.inv_sqrt_cov_ = u * ev.cwiseSqrt().cwiseInverse().asDiagonal() * u.transpose();
  s.inv_ = m.partialPivLu().solve(Matrix::Identity(s.n_, s.n_));
  s.mat_ = std::move(m);
  s.op_norm_ = std::sqrt(ev.maxCoeff());
  s.inv_op_norm_ = 1.0 / std::sqrt(ev.minCoeff());
  return s;
}

Vector SigmaOperator::apply(const Vector& y) const {
  check_dim("sigma apply", n_, y.size());
  if (diag_) return (diag_->array() * y.array()).matrix();
  return mat_ * y;
}

Vector SigmaOperator::apply_inverse(const Vector& x) const {
  check_dim("sigma inverse", n_, x.size());
  if (diag_) return (x.array() / diag_->array()).matrix();
  return inv_ * x;
}

Vector SigmaOperator::apply_sqrt_cov(const Vector& y) const {
  check_dim("sqrt cov", n_, y.size());
  if (diag_) return (diag_->cwiseAbs().array() * y.array()).matrix();
  return sqrt_cov_ * y;
}

Vector SigmaOperator::apply_inv_sqrt_cov(const Vector& x) const {
  check_dim("inv sqrt cov", n_, x.size());
  if (diag_) return (x.array() / diag_->cwiseAbs().array()).matrix();
  return inv_sqrt_cov_ * x;
}

double SigmaOperator::sigma_norm(const Vector& x) const { return apply_inv_sqrt_cov(x).norm(); }

Matrix SigmaOperator::matrix() const {
  if (diag_) return diag_->asDiagonal();
  return mat_;
}

}  // namespace ibplab
