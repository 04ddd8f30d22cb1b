#include "ibplab/drift.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <memory>

namespace ibplab {

double DriftParams::scalar(const std::string& key) const {
  auto it = scalars.find(key);
  if (it == scalars.end()) throw ConfigError("drift parameter missing: " + key);
  return it->second;
}

double DriftParams::scalar_or(const std::string& key, double fallback) const {
  auto it = scalars.find(key);
  return it == scalars.end() ? fallback : it->second;
}

DriftModel make_zero_drift(Index n) {
  DriftModel m;
  m.name = "zero";
  m.in_dim = m.out_dim = n;
  m.is_zero = true;
  m.eval = [n](const Vector&) { return Vector::Zero(n).eval(); };
  m.dderiv = [n](const Vector&, const Vector&) { return Vector::Zero(n).eval(); };
  m.sigma_dderiv_bound = [](const Vector&, const SigmaOperator&) { return 0.0; };
  m.lipschitz = 0.0;
  m.dissipativity = 0.0;
  return m;
}

DriftModel make_linear_drift(Matrix mat) {
  if (mat.rows() != mat.cols() || mat.rows() == 0) {
    throw ConfigError("linear drift: matrix must be square");
  }
  DriftModel m;
  m.name = "linear";
  m.in_dim = m.out_dim = mat.rows();
  auto mp = std::make_shared<Matrix>(std::move(mat));
  m.eval = [mp](const Vector& x) { return (*mp * x).eval(); };
  m.dderiv = [mp](const Vector&, const Vector& k) { return (*mp * k).eval(); };
  m.sigma_dderiv_bound = [mp](const Vector& k, const SigmaOperator& sig) {
    return sig.sigma_norm(*mp * k);
  };
  {
    Eigen::JacobiSVD<Matrix> svd(*mp);
    m.lipschitz = svd.singularValues()(0);
    Matrix sym = 0.5 * (*mp + mp->transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    m.dissipativity = -es.eigenvalues().maxCoeff();
  }
  return m;
}

DriftModel make_sine_drift(Index n, double c) {
  DriftModel m;
  m.name = "sine";
  m.in_dim = m.out_dim = n;
  m.eval = [c](const Vector& x) { return (c * x.array().sin()).matrix().eval(); };
  m.dderiv = [c](const Vector& x, const Vector& k) {
    return (c * x.array().cos() * k.array()).matrix().eval();
  };
  // sup over x of |(ss*)^{-1/2} c diag(cos x) k| <= c sum_i |k_i| |(ss*)^{-1/2} e_i|
  m.sigma_dderiv_bound = [c, n](const Vector& k, const SigmaOperator& sig) {
    double bound = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (k(i) == 0.0) continue;
      bound += std::abs(c) * std::abs(k(i)) * sig.apply_inv_sqrt_cov(Vector::Unit(n, i)).norm();
    }
    return bound;
  };
  m.lipschitz = std::abs(c);
  m.dissipativity = -std::abs(c);
  m.modulus_note = "gamma(t) = |c| e^{-lambda_1 t}";
  return m;
}

DriftModel make_gibbs_gradient_drift(const SpectralOperator& A, Vector a, double delta) {
  const Index n = A.dim();
  if (a.size() != n) throw ConfigError("gibbs_gradient: coefficient size mismatch");
  if (a.minCoeff() <= 0.0) throw ConfigError("gibbs_gradient: coefficients a_i must be positive");
  DriftModel m;
  m.name = "gibbs_gradient";
  m.in_dim = m.out_dim = n;
  Vector lam = A.eigenvalues();
  auto ap = std::make_shared<Vector>(std::move(a));
  auto lp = std::make_shared<Vector>(std::move(lam));
  // grad V(x)_i = a_i x_i - delta sin x_i; b = A^{-1} grad V.
  m.eval = [ap, lp, delta](const Vector& x) {
    return (-(ap->array() * x.array() - delta * x.array().sin()) / lp->array()).matrix().eval();
  };
  m.dderiv = [ap, lp, delta](const Vector& x, const Vector& k) {
    return (-(ap->array() - delta * x.array().cos()) * k.array() / lp->array()).matrix().eval();
  };
  m.sigma_dderiv_bound = [ap, lp, delta, n](const Vector& k, const SigmaOperator& sig) {
    double bound = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (k(i) == 0.0) continue;
      const double hess = ((*ap)(i) + std::abs(delta)) / (*lp)(i);
      bound += hess * std::abs(k(i)) * sig.apply_inv_sqrt_cov(Vector::Unit(n, i)).norm();
    }
    return bound;
  };
  double lip = 0.0;
  for (Index i = 0; i < n; ++i) lip = std::max(lip, ((*ap)(i) + std::abs(delta)) / (*lp)(i));
  m.lipschitz = lip;
  return m;
}

SegmentDriftModel make_delay_terminal_drift(Index n, double c, double tau) {
  if (!(tau > 0.0)) throw ConfigError("delay_terminal: tau must be positive");
  SegmentDriftModel m;
  m.name = "delay_terminal";
  m.dim = n;
  m.tau = tau;
  m.eval = [c](const SegmentView& xi) {
    return (c * xi.oldest().array().tanh()).matrix().eval();
  };
  m.dderiv = [c](const SegmentView& xi, const SegmentView& dir) {
    Eigen::ArrayXd th = xi.oldest().array().tanh();
    return (c * (1.0 - th * th) * dir.oldest().array()).matrix().eval();
  };
  m.sigma_dderiv_bound = [c, n](const SegmentView& dir, const SigmaOperator& sig) {
    double bound = 0.0;
    const Vector& v = dir.oldest();
    for (Index i = 0; i < n; ++i) {
      if (v(i) == 0.0) continue;
      bound += std::abs(c) * std::abs(v(i)) * sig.apply_inv_sqrt_cov(Vector::Unit(n, i)).norm();
    }
    return bound;
  };
  m.lipschitz = std::abs(c);
  return m;
}

RegistryModel registry_get(const std::string& name, const DriftParams& params, Index n,
                           const SpectralOperator* A) {
  if (n <= 0) throw ConfigError("registry_get: dim must be positive");
  if (name == "zero") return make_zero_drift(n);
  if (name == "linear") {
    if (params.matrix) {
      if (params.matrix->rows() != n) throw ConfigError("linear drift: matrix dim mismatch");
      return make_linear_drift(*params.matrix);
    }
    const double scale = params.scalar("scale");
    return make_linear_drift(scale * Matrix::Identity(n, n));
  }
  if (name == "sine") return make_sine_drift(n, params.scalar("c"));
  if (name == "gibbs_gradient") {
    if (A == nullptr) throw ConfigError("gibbs_gradient requires the spectral operator");
    Vector a = params.vector ? *params.vector : Vector::Ones(n);
    return make_gibbs_gradient_drift(*A, std::move(a), params.scalar_or("delta", 0.0));
  }
  if (name == "delay_terminal") {
    if (!params.has("tau")) throw ConfigError("delay_terminal requires tau");
    return make_delay_terminal_drift(n, params.scalar_or("c", 1.0), params.scalar("tau"));
  }
  throw ConfigError("unknown drift model: " + name);
}

DriftModel registry_get_state(const std::string& name, const DriftParams& params, Index n,
                              const SpectralOperator* A) {
  RegistryModel m = registry_get(name, params, n, A);
  if (auto* s = std::get_if<DriftModel>(&m)) return std::move(*s);
  throw ConfigError("drift model '" + name + "' is a segment drift, not a state drift");
}

SegmentDriftModel registry_get_segment(const std::string& name, const DriftParams& params,
                                       Index n) {
  RegistryModel m = registry_get(name, params, n, nullptr);
  if (auto* s = std::get_if<SegmentDriftModel>(&m)) return std::move(*s);
  throw ConfigError("drift model '" + name + "' is a state drift, not a segment drift");
}

DriftModel lift_position_drift(const DriftModel& m, Index x_dim, Index y_dim) {
  if (m.in_dim != x_dim) throw ConfigError("lift_position_drift: dim mismatch");
  DriftModel out;
  out.name = m.name + "@position";
  out.in_dim = x_dim + y_dim;
  out.out_dim = m.out_dim;
  out.is_zero = m.is_zero;
  DriftModel base = m;
  out.eval = [base, x_dim](const Vector& z) { return base.eval(z.head(x_dim)); };
  if (base.has_dderiv()) {
    out.dderiv = [base, x_dim](const Vector& z, const Vector& k) {
      return base.dderiv(z.head(x_dim), k.head(x_dim));
    };
  }
  if (base.sigma_dderiv_bound) {
    out.sigma_dderiv_bound = [base, x_dim](const Vector& k, const SigmaOperator& sig) {
      return base.sigma_dderiv_bound(k.head(x_dim), sig);
    };
  }
  out.lipschitz = base.lipschitz;
  return out;
}

void gauss_hermite(int nodes, Vector& points, Vector& weights) {
  if (nodes < 3) throw ConfigError("gauss_hermite: need at least 3 nodes");
  Matrix j = Matrix::Zero(nodes, nodes);
  for (int i = 1; i < nodes; ++i) {
    const double off = std::sqrt(i / 2.0);
    j(i, i - 1) = off;
    j(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(j);
  points = es.eigenvalues();
  weights.resize(nodes);
  const double sqrt_pi = std::sqrt(M_PI);
  for (int i = 0; i < nodes; ++i) {
    const double v = es.eigenvectors()(0, i);
    weights(i) = sqrt_pi * v * v;
  }
}

DriftModel mollify_directional(const DriftModel& b, const Vector& k, double eps, int nodes) {
  if (!(eps > 0.0)) throw ConfigError("mollify_directional: eps must be positive");
  if (k.size() != b.in_dim) throw ConfigError("mollify_directional: direction dim mismatch");
  Vector u, w;
  gauss_hermite(nodes, u, w);
  const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
  const double scale = std::sqrt(2.0 * eps);  // substitution r = u sqrt(2 eps)

  DriftModel out;
  out.name = b.name + "@mollified";
  out.in_dim = b.in_dim;
  out.out_dim = b.out_dim;
  out.is_zero = b.is_zero;
  DriftModel base = b;
  const double k_norm_sq = k.squaredNorm();
  if (k_norm_sq == 0.0) throw ConfigError("mollify_directional: zero direction");

  out.eval = [base, k, u, w, scale, inv_sqrt_pi](const Vector& x) {
    Vector acc = Vector::Zero(base.out_dim);
    for (Index j = 0; j < u.size(); ++j) acc += w(j) * base.eval(x + (scale * u(j)) * k);
    return (inv_sqrt_pi * acc).eval();
  };
  out.dderiv = [base, k, u, w, scale, eps, inv_sqrt_pi, k_norm_sq](const Vector& x,
                                                                   const Vector& dir) {
    const double along = k.dot(dir) / k_norm_sq;
    Vector rest = dir - along * k;
    Vector acc = Vector::Zero(base.out_dim);
    if (along != 0.0) {
      // derivative on the kernel: d/ds b_eps(x + s k) pulls down r/eps
      for (Index j = 0; j < u.size(); ++j) {
        const double r = scale * u(j);
        acc += (w(j) * r / eps) * base.eval(x + r * k);
      }
      acc *= along;
    }
    if (rest.squaredNorm() > 0.0) {
      if (!base.has_dderiv()) {
        throw ConfigError(
            "mollified drift is differentiable only along its smoothing direction; base model "
            "lacks dderiv");
      }
      Vector acc2 = Vector::Zero(base.out_dim);
      for (Index j = 0; j < u.size(); ++j) {
        acc2 += w(j) * base.dderiv(x + (scale * u(j)) * k, rest);
      }
      acc += acc2;
    }
    return (inv_sqrt_pi * acc).eval();
  };
  // Gaussian averaging cannot increase a uniform-in-x bound.
  if (base.sigma_dderiv_bound) out.sigma_dderiv_bound = base.sigma_dderiv_bound;
  out.lipschitz = base.lipschitz;
  return out;
}

}  // namespace ibplab
