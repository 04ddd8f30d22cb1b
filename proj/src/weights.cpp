#include "ibplab/weights.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "ibplab/quadrature.hpp"

namespace ibplab {

// ---------------------------------------------------------------------------
// Directions

EigenDirection::EigenDirection(Vector c) : coefficients(std::move(c)) {
  if (coefficients.size() == 0 || coefficients.isZero(0.0)) {
    throw ConfigError("EigenDirection: needs at least one nonzero coefficient");
  }
}

EigenDirection EigenDirection::unit(Index n, Index i) {
  if (i < 0 || i >= n) throw ConfigError("EigenDirection: index out of range");
  return EigenDirection(Vector::Unit(n, i));
}

EigenDirection EigenDirection::zero_padded(const Vector& c, Index n) {
  if (c.size() > n) throw ConfigError("EigenDirection: coefficients exceed dimension");
  Vector full = Vector::Zero(n);
  full.head(c.size()) = c;
  return EigenDirection(std::move(full));
}

namespace {
// Rayleigh-quotient eigenvalue of the diagonal operator A along v, verified
// to 1e-10 relative.
double eigen_value_along(const SpectralOperator& A, const Vector& v, const char* what) {
  const double nv = v.squaredNorm();
  if (nv == 0.0) throw ConfigError(std::string(what) + ": zero vector");
  Vector av = A.apply(v);
  const double theta = v.dot(av) / nv;
  if ((av - theta * v).norm() > 1e-10 * av.norm() + 1e-14) {
    throw ConfigError(std::string(what) + ": not an eigenvector of A");
  }
  return theta;
}
}  // namespace

HamDirection make_ham_direction(const SpectralOperator& A, const Matrix& B, const Vector& k1,
                                const Vector& k2) {
  HamDirection d;
  d.B = B;
  d.k1 = k1;
  d.k2 = k2;
  if (B.rows() != k1.size() || B.cols() != k2.size() || B.cols() != A.dim()) {
    throw ConfigError("HamDirection: dimension mismatch");
  }
  Matrix bbt = B * B.transpose();
  Eigen::FullPivLU<Matrix> lu(bbt);
  if (!lu.isInvertible()) throw ConfigError("HamDirection: BB* has nontrivial kernel");
  d.b_pinv_k1 = B.transpose() * lu.solve(k1);
  d.theta1 = eigen_value_along(A, d.b_pinv_k1, "HamDirection k1");
  d.theta2 = eigen_value_along(A, d.k2, "HamDirection k2");
  return d;
}

DelayDirection make_delay_direction(const SpectralOperator& A, double tau, Index m,
                                    const std::function<Vector(double)>& eta,
                                    const std::function<Vector(double)>& eta_prime) {
  if (!(tau > 0.0) || m < 1) throw ConfigError("DelayDirection: invalid grid");
  DelayDirection d;
  d.tau = tau;
  d.nodes_m = m;
  const Index n = A.dim();
  d.eta.resize(n, m + 1);
  d.eta_prime.resize(n, m + 1);
  d.a_eta.resize(n, m + 1);
  const double dth = tau / static_cast<double>(m);
  for (Index l = 0; l <= m; ++l) {
    const double theta = -tau + dth * static_cast<double>(l);
    Vector e = eta(theta);
    Vector ep = eta_prime(theta);
    if (e.size() != n || ep.size() != n) throw ConfigError("DelayDirection: dim mismatch");
    d.eta.col(l) = e;
    d.eta_prime.col(l) = ep;
    d.a_eta.col(l) = A.apply(e);
  }
  // trapezoid energy int (|A eta|^2 + |eta'|^2)
  double energy = 0.0;
  for (Index l = 0; l <= m; ++l) {
    const double w = (l == 0 || l == m) ? 0.5 : 1.0;
    energy += w * dth * (d.a_eta.col(l).squaredNorm() + d.eta_prime.col(l).squaredNorm());
  }
  d.c1_energy = energy;
  return d;
}

DelayDirection make_constant_delay_direction(const SpectralOperator& A, double tau, Index m,
                                             const Vector& v) {
  return make_delay_direction(
      A, tau, m, [&v](double) { return v; },
      [&v](double) { return Vector::Zero(v.size()).eval(); });
}

// ---------------------------------------------------------------------------
// Semilinear weight

double eigen_g(double lam, double t, double scale) {
  if (scale < 1e-12) return t;
  if (scale < 1e-6) return t + 0.5 * lam * t * t;
  return std::expm1(lam * t) / lam;
}

SemilinearWeightPlan::SemilinearWeightPlan(const EigenDirection& k, const SpectralOperator& A,
                                           const SimGrid& grid)
    : n_(A.dim()) {
  if (k.dim() != n_) throw ConfigError("semilinear_weight: direction dim mismatch");
  for (Index i = 0; i < n_; ++i) {
    if (k.coefficients(i) != 0.0) active_.push_back(i);
  }
  g_table_.resize(static_cast<Index>(active_.size()), grid.steps);
  const double T = grid.horizon;
  for (std::size_t a = 0; a < active_.size(); ++a) {
    const Index i = active_[a];
    const double lam = -A.eigenvalues()(i);  // signed eigenvalue of A
    const double scale = std::abs(lam) * T;
    coeff_.push_back(k.coefficients(i));
    prefac_.push_back(1.0 / eigen_g(lam, T, scale));
    for (Index j = 0; j < grid.steps; ++j) {
      g_table_(static_cast<Index>(a), j) = eigen_g(lam, grid.time(j), scale);
    }
  }
}

double SemilinearWeightPlan::evaluate(const PathSample& path, const DriftModel& b,
                                      const SigmaOperator& sig) const {
  if (path.states.rows() != n_) throw ConfigError("semilinear_weight: path dim mismatch");
  if (path.noise == nullptr || path.noise->increments.cols() != path.grid.steps) {
    throw ConfigError("semilinear_weight: path is missing its increments");
  }
  const Index steps = path.grid.steps;
  double m = 0.0;
  Vector v(n_);
  if (b.is_zero) {
    // integrand is the constant sum_i c_i/g_i(T) sigma^{-1} e_i
    v.setZero();
    for (std::size_t a = 0; a < active_.size(); ++a) {
      v(active_[a]) += coeff_[a] * prefac_[a];
    }
    Vector sv = sig.apply_inverse(v);
    for (Index j = 0; j < steps; ++j) m += sv.dot(path.noise->increments.col(j));
    return m;
  }
  if (!b.has_dderiv()) {
    throw ConfigError("semilinear_weight: drift lacks a directional derivative");
  }
  const Vector* diag = sig.diagonal_or_null();
  Vector buf(n_);
  for (Index j = 0; j < steps; ++j) {
    v.setZero();
    for (std::size_t a = 0; a < active_.size(); ++a) {
      const Index i = active_[a];
      const double cp = coeff_[a] * prefac_[a];
      v(i) += cp;
      v -= cp * g_table_(static_cast<Index>(a), j) * b.dderiv(path.states.col(j), Vector::Unit(n_, i));
    }
    if (diag) {
      m += v.cwiseQuotient(*diag).dot(path.noise->increments.col(j));
    } else {
      buf.noalias() = sig.dense_inverse() * v;
      m += buf.dot(path.noise->increments.col(j));
    }
  }
  return m;
}

double semilinear_weight(const PathSample& path, const EigenDirection& k, const DriftModel& b,
                         const SpectralOperator& A, const SigmaOperator& sig) {
  return SemilinearWeightPlan(k, A, path.grid).evaluate(path, b, sig);
}

double semilinear_weight_l2_bound(const EigenDirection& k, const DriftModel& b,
                                  const SpectralOperator& A, const SigmaOperator& sig, double T) {
  const Index n = A.dim();
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double c = k.coefficients(i);
    if (c == 0.0) continue;
    const double lam = -A.eigenvalues()(i);
    const double scale = std::abs(lam) * T;
    Vector ei = Vector::Unit(n, i);
    const double ei_norm = sig.sigma_norm(ei);
    const double db_bound = b.sigma_dderiv_bound ? b.sigma_dderiv_bound(ei, sig) : 0.0;
    const double integral = integrate(
        [&](double t) {
          const double s = ei_norm + eigen_g(lam, t, scale) * db_bound;
          return s * s;
        },
        0.0, T, 1e-12);
    total += std::abs(c) / eigen_g(lam, T, scale) * std::sqrt(integral);
  }
  return total * total;
}

// ---------------------------------------------------------------------------
// Two-component system ingredients and weight

HamIngredients ham_h_theta(const PhiPsi& pp, const HamDirection& dir, const SimGrid& grid) {
  if (std::abs(pp.T - grid.horizon) > 1e-12 * std::max(1.0, pp.T)) {
    throw ConfigError("ham_h_theta: phi/psi horizon does not match grid");
  }
  const auto residuals = check_ph_constraints(pp);
  if (residuals.cwiseAbs().maxCoeff() > 1e-8) {
    throw ConfigError("ham_h_theta: phi/psi constraint residuals exceed 1e-8");
  }
  const double T = pp.T;
  const double th1 = pp.theta1;
  const double th2 = pp.theta2;
  auto f1 = [&](double t) { return pp.phi(t) * std::exp(th1 * (t - T)); };
  auto f2 = [&](double t) { return pp.psi(t) * std::exp(th2 * (t - T)); };
  auto df1 = [&](double t) { return pp.dphi(t) * std::exp(th1 * (t - T)); };
  auto df2 = [&](double t) { return pp.dpsi(t) * std::exp(th2 * (t - T)); };

  HamIngredients ing;
  ing.grid = grid;
  const Index xn = dir.k1.size();
  const Index yn = dir.k2.size();
  ing.h_prime.resize(yn, grid.steps + 1);
  ing.h_tilde.resize(yn, grid.steps + 1);
  ing.theta_x.resize(xn, grid.steps + 1);

  const Vector bk1 = dir.B * dir.b_pinv_k1;  // = k1 for k1 in Im(BB*)
  const Vector bk2 = dir.B * dir.k2;

  ing.theta_full.resize(xn + yn, grid.steps + 1);

  // running scalar integrals of f1, f2 by per-step Simpson
  double i1 = 0.0, i2 = 0.0;
  const double dt = grid.dt();
  for (Index j = 0; j <= grid.steps; ++j) {
    const double t = grid.time(j);
    ing.h_prime.col(j) = df1(t) * dir.b_pinv_k1 + df2(t) * dir.k2;
    ing.h_tilde.col(j) = f1(t) * dir.b_pinv_k1 + f2(t) * dir.k2;
    ing.theta_x.col(j) = i1 * bk1 + i2 * bk2;
    ing.theta_full.col(j) << ing.theta_x.col(j), ing.h_tilde.col(j);
    if (j < grid.steps) {
      const double tm = t + 0.5 * dt;
      const double tn = t + dt;
      i1 += dt / 6.0 * (f1(t) + 4.0 * f1(tm) + f1(tn));
      i2 += dt / 6.0 * (f2(t) + 4.0 * f2(tm) + f2(tn));
    }
  }
  return ing;
}

double hamiltonian_weight(const HamPath& path, const HamIngredients& ing, const DriftModel& b,
                          const SigmaOperator& sig) {
  const Index steps = path.grid.steps;
  if (ing.h_prime.cols() != steps + 1) throw ConfigError("hamiltonian_weight: grid mismatch");
  if (path.noise == nullptr || path.noise->increments.cols() != steps) {
    throw ConfigError("hamiltonian_weight: path is missing its increments");
  }
  double m = 0.0;
  const Vector* diag = sig.diagonal_or_null();
  Vector v;
  Vector buf;
  Vector z(path.x_states.rows() + path.y_states.rows());
  for (Index j = 0; j < steps; ++j) {
    v = ing.h_prime.col(j);
    if (!b.is_zero) {
      if (!b.has_dderiv()) {
        throw ConfigError("hamiltonian_weight: drift lacks a directional derivative");
      }
      z << path.x_states.col(j), path.y_states.col(j);
      v -= b.dderiv(z, ing.theta_full.col(j));
    }
    if (diag) {
      m += v.cwiseQuotient(diag->cwiseAbs()).dot(path.noise->increments.col(j));
    } else {
      buf.noalias() = sig.dense_inv_sqrt_cov() * v;
      m += buf.dot(path.noise->increments.col(j));
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Delay ingredients and weight

namespace {
void check_delay_dir(const DelayDirection& dir, const SpectralOperator& A, const SimGrid& grid) {
  if (dir.eta.rows() != A.dim()) throw ConfigError("delay direction: dim mismatch");
  if (!(grid.horizon > dir.tau)) throw ConfigError("delay: requires T > tau");
  const Index m = dir.nodes_m;
  const double dt = grid.dt();
  if (std::abs(dir.grid_dt() - dt) > 1e-9 * dt) {
    throw ConfigError("delay direction grid does not match simulation grid");
  }
  (void)m;
}
}  // namespace

Matrix delay_gamma(const DelayDirection& dir, const SpectralOperator& A, const SimGrid& grid) {
  check_delay_dir(dir, A, grid);
  const Index n = A.dim();
  const Index steps = grid.steps;
  const Index m = dir.nodes_m;
  const double T = grid.horizon;
  const double tau = dir.tau;
  Matrix gamma(n, steps + 1);
  const Index j_switch = steps - m;  // node with t = T - tau
  for (Index j = 0; j <= steps; ++j) {
    const double t = grid.time(j);
    if (j <= j_switch) {
      gamma.col(j) =
          A.semigroup_factors(t + tau - T).cwiseProduct(dir.eta.col(0)) / (T - tau);
    } else {
      const Index l = j - j_switch;  // eta node at theta = t - T
      gamma.col(j) = dir.eta_prime.col(l) - dir.a_eta.col(l);
    }
  }
  return gamma;
}

Matrix delay_perturbation(const DelayDirection& dir, const SpectralOperator& A,
                          const SimGrid& grid) {
  check_delay_dir(dir, A, grid);
  const Index n = A.dim();
  const Index steps = grid.steps;
  const Index m = dir.nodes_m;
  const double T = grid.horizon;
  const double tau = dir.tau;
  Matrix d = Matrix::Zero(n, steps + m + 1);  // columns j = -m..steps, offset m
  const Index j_switch = steps - m;
  for (Index j = 1; j <= steps; ++j) {
    const double t = grid.time(j);
    if (j <= j_switch) {
      d.col(j + m) =
          (t / (T - tau)) * A.semigroup_factors(t + tau - T).cwiseProduct(dir.eta.col(0));
    } else {
      d.col(j + m) = dir.eta.col(j - j_switch);
    }
  }
  return d;
}

Matrix delay_theta(const Matrix& gamma, const SimGrid& grid, Index m) {
  const Index n = gamma.rows();
  const Index steps = grid.steps;
  if (gamma.cols() != steps + 1) throw ConfigError("delay_theta: table size mismatch");
  Matrix theta = Matrix::Zero(n, steps + m + 1);
  const double dt = grid.dt();
  for (Index j = 1; j <= steps; ++j) {
    theta.col(j + m) = theta.col(j + m - 1) + 0.5 * dt * (gamma.col(j - 1) + gamma.col(j));
  }
  return theta;
}

double delay_weight(const DelayPath& path, const Matrix& gamma, const Matrix& direction_table,
                    const SegmentDriftModel& b, const SigmaOperator& sig) {
  const Index steps = path.grid.steps;
  const Index m = path.delay_nodes;
  if (gamma.cols() != steps + 1 || direction_table.cols() != steps + m + 1) {
    throw ConfigError("delay_weight: ingredient table size mismatch");
  }
  if (path.noise == nullptr || path.noise->increments.cols() != steps) {
    throw ConfigError("delay_weight: path is missing its increments");
  }
  double acc = 0.0;
  const Vector* diag = sig.diagonal_or_null();
  Vector v;
  Vector buf;
  for (Index j = 0; j < steps; ++j) {
    v = gamma.col(j);
    if (!b.is_zero) {
      if (!b.has_dderiv()) {
        throw ConfigError("delay_weight: drift lacks a directional derivative");
      }
      v -= b.dderiv(path.segment(j), SegmentView(direction_table, j, m + 1));
    }
    if (diag) {
      acc += v.cwiseQuotient(diag->cwiseAbs()).dot(path.noise->increments.col(j));
    } else {
      buf.noalias() = sig.dense_inv_sqrt_cov() * v;
      acc += buf.dot(path.noise->increments.col(j));
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Girsanov density

GirsanovResult girsanov_density(const NoisePath& noise, const Matrix& xi,
                                const SigmaOperator& sig) {
  const Index steps = noise.increments.cols();
  if (xi.cols() != steps + 1 || xi.rows() != noise.increments.rows()) {
    throw ConfigError("girsanov_density: xi table must cover all grid nodes");
  }
  const double dt = noise.dt;
  double ito = 0.0;
  double quad = 0.0;
  Vector sv;
  double prev_sq = 0.0;
  for (Index j = 0; j <= steps; ++j) {
    sv = sig.apply_inverse(xi.col(j));
    const double sq = sv.squaredNorm();
    if (j < steps) ito += sv.dot(noise.increments.col(j));
    if (j > 0) quad += 0.5 * dt * (prev_sq + sq);
    prev_sq = sq;
  }
  GirsanovResult r;
  r.exponent = -ito - 0.5 * quad;
  if (std::abs(r.exponent) > 700.0) {
    r.clamped = true;
    r.density = std::exp(r.exponent > 0.0 ? 700.0 : -700.0);
  } else {
    r.density = std::exp(r.exponent);
  }
  return r;
}

Matrix girsanov_xi_semilinear(const PathSample& base, const PathSample& shifted,
                              const DriftModel& b, const ShiftSpec& shift) {
  const Index steps = base.grid.steps;
  Matrix xi = shift.epsilon * shift.values;
  if (!b.is_zero) {
    for (Index j = 0; j <= steps; ++j) {
      xi.col(j) += b.eval(base.states.col(j)) - b.eval(shifted.states.col(j));
    }
  }
  return xi;
}

Matrix girsanov_xi_hamiltonian(const HamPath& base, const HamPath& shifted, const DriftModel& b,
                               const ShiftSpec& shift) {
  const Index steps = base.grid.steps;
  Matrix xi = shift.epsilon * shift.values;
  if (!b.is_zero) {
    Vector zb(base.x_states.rows() + base.y_states.rows());
    Vector zs(zb.size());
    for (Index j = 0; j <= steps; ++j) {
      zb << base.x_states.col(j), base.y_states.col(j);
      zs << shifted.x_states.col(j), shifted.y_states.col(j);
      xi.col(j) += b.eval(zb) - b.eval(zs);
    }
  }
  return xi;
}

Matrix girsanov_xi_delay(const DelayPath& base, const DelayPath& shifted,
                         const SegmentDriftModel& b, const ShiftSpec& shift) {
  const Index steps = base.grid.steps;
  Matrix xi = shift.epsilon * shift.values;
  if (!b.is_zero) {
    for (Index j = 0; j <= steps; ++j) {
      xi.col(j) += b.eval(base.segment(j)) - b.eval(shifted.segment(j));
    }
  }
  return xi;
}

}  // namespace ibplab
