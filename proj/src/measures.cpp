#include "ibplab/measures.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <thread>

#include "ibplab/parallel.hpp"
#include "ibplab/weights.hpp"

namespace ibplab {

// ---------------------------------------------------------------------------
// Ergodic sampling

ErgodicConfig default_ergodic_config(const SpectralOperator& A, const DriftModel& b, Index count,
                                     std::uint64_t seed) {
  ErgodicConfig cfg;
  const double l1 = A.lambda_min();
  if (b.dissipativity && l1 + *b.dissipativity > 0.0) {
    cfg.burn_in = 10.0 / (l1 + *b.dissipativity);
  } else {
    cfg.burn_in = 10.0 / l1;
  }
  cfg.gap = 1.0 / l1;
  cfg.count = count;
  cfg.seed = seed;
  return cfg;
}

namespace {

bool dissipativity_margin_ok(const SpectralOperator& A, const DriftModel& b) {
  if (!b.dissipativity) return false;
  return A.lambda_min() + *b.dissipativity > 0.0;
}

// One ergodic chain: step `stepper` through burn-in, then record `count`
// states separated by `gap`.
template <typename State, typename Stepper>
std::vector<State> run_chain(State state, Stepper&& step, const ErgodicConfig& cfg, Index count,
                             PathRng& rng) {
  const auto burn_steps = static_cast<std::uint64_t>(std::ceil(cfg.burn_in / cfg.dt));
  const auto gap_steps =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(cfg.gap / cfg.dt)));
  for (std::uint64_t s = 0; s < burn_steps; ++s) step(state, rng, s);
  std::vector<State> out;
  out.reserve(count);
  std::uint64_t s = burn_steps;
  for (Index i = 0; i < count; ++i) {
    for (std::uint64_t g = 0; g < gap_steps; ++g, ++s) step(state, rng, s);
    out.push_back(state);
  }
  return out;
}

template <typename State, typename MakeChain>
std::vector<State> run_chains(const ErgodicConfig& cfg, MakeChain&& make_chain) {
  const int chains = std::max(1, cfg.chains);
  std::vector<std::vector<State>> per_chain(chains);
  std::vector<std::thread> pool;
  pool.reserve(chains);
  for (int c = 0; c < chains; ++c) {
    const Index want = cfg.count / chains + (c < cfg.count % chains ? 1 : 0);
    pool.emplace_back([&, c, want]() { per_chain[c] = make_chain(c, want); });
  }
  for (auto& t : pool) t.join();
  std::vector<State> all;
  all.reserve(cfg.count);
  for (auto& v : per_chain) {
    for (auto& s : v) all.push_back(std::move(s));
  }
  return all;
}

}  // namespace

SampleSet sample_invariant(const SpectralOperator& A, const SigmaOperator& sig,
                           const DriftModel& b, const ErgodicConfig& cfg) {
  const Index n = A.dim();
  const Vector decay = A.semigroup_factors(cfg.dt);
  const Vector phi1 = A.phi1_factors(cfg.dt);
  const double sqrt_dt = std::sqrt(cfg.dt);

  SampleSet set;
  set.dissipativity_warning = !dissipativity_margin_ok(A, b);
  set.states = run_chains<Vector>(cfg, [&](int chain, Index want) {
    PathRng rng = rng_for_path(cfg.seed, static_cast<std::uint64_t>(chain),
                               PathRng::Domain::auxiliary);
    Vector dw(n);
    auto step = [&](Vector& x, PathRng& r, std::uint64_t s) {
      for (Index i = 0; i < n; ++i) dw(i) = sqrt_dt * r.next_gaussian();
      if (b.is_zero) {
        x = decay.cwiseProduct(x) + sig.apply(dw);
      } else {
        x = decay.cwiseProduct(x) + phi1.cwiseProduct(b.eval(x)) + sig.apply(dw);
      }
      if (!x.allFinite()) throw SimulationError("ergodic chain diverged", static_cast<Index>(s));
    };
    return run_chain<Vector>(Vector::Zero(n), step, cfg, want, rng);
  });
  return set;
}

SampleSet sample_invariant_hamiltonian(const Matrix& B, const SpectralOperator& A,
                                       const SigmaOperator& sig, const DriftModel& b,
                                       const ErgodicConfig& cfg) {
  const Index yn = A.dim();
  const Index xn = B.rows();
  const Vector decay = A.semigroup_factors(cfg.dt);
  const Vector phi1 = A.phi1_factors(cfg.dt);
  const double sqrt_dt = std::sqrt(cfg.dt);

  SampleSet set;
  set.dissipativity_warning = false;  // no scalar margin for the degenerate block
  set.states = run_chains<Vector>(cfg, [&](int chain, Index want) {
    PathRng rng = rng_for_path(cfg.seed, static_cast<std::uint64_t>(chain),
                               PathRng::Domain::auxiliary);
    Vector dw(yn);
    auto step = [&](Vector& z, PathRng& r, std::uint64_t s) {
      auto x = z.head(xn);
      auto y = z.tail(yn);
      Vector drift = b.is_zero ? Vector::Zero(yn).eval() : b.eval(z);
      for (Index i = 0; i < yn; ++i) dw(i) = sqrt_dt * r.next_gaussian();
      Vector xn_next = x + cfg.dt * (B * y);
      y = decay.cwiseProduct(y) + phi1.cwiseProduct(drift) + sig.apply(dw);
      x = xn_next;
      if (!z.allFinite()) throw SimulationError("ergodic chain diverged", static_cast<Index>(s));
    };
    return run_chain<Vector>(Vector::Zero(xn + yn), step, cfg, want, rng);
  });
  return set;
}

Matrix empirical_stationary_cov_hamiltonian(const Matrix& B, const SpectralOperator& A,
                                            const SigmaOperator& sig, const DriftModel& b,
                                            double dt, std::uint64_t total_steps,
                                            std::uint64_t burn_in_steps, std::uint64_t seed) {
  const Index yn = A.dim();
  const Index xn = B.rows();
  const Vector decay = A.semigroup_factors(dt);
  const Vector phi1 = A.phi1_factors(dt);
  const double sqrt_dt = std::sqrt(dt);
  PathRng rng = rng_for_path(seed, 0, PathRng::Domain::auxiliary);

  Vector z = Vector::Zero(xn + yn);
  Vector dw(yn);
  Matrix acc = Matrix::Zero(xn + yn, xn + yn);
  std::uint64_t kept = 0;
  for (std::uint64_t s = 0; s < total_steps; ++s) {
    auto x = z.head(xn);
    auto y = z.tail(yn);
    Vector drift = b.is_zero ? Vector::Zero(yn).eval() : b.eval(z);
    for (Index i = 0; i < yn; ++i) dw(i) = sqrt_dt * rng.next_gaussian();
    Vector x_next = x + dt * (B * y);
    y = decay.cwiseProduct(y) + phi1.cwiseProduct(drift) + sig.apply(dw);
    x = x_next;
    if (!z.allFinite()) throw SimulationError("covariance chain diverged", static_cast<Index>(s));
    if (s >= burn_in_steps) {
      acc.selfadjointView<Eigen::Lower>().rankUpdate(z, 1.0);
      ++kept;
    }
  }
  if (kept == 0) throw ConfigError("empirical covariance: no samples after burn-in");
  Matrix cov = Matrix(acc.selfadjointView<Eigen::Lower>()) / static_cast<double>(kept);
  return cov;
}

// ---------------------------------------------------------------------------
// Exact references

GaussianReference::GaussianReference(Matrix covariance) : cov_(std::move(covariance)) {
  if (cov_.rows() != cov_.cols()) throw ConfigError("GaussianReference: covariance must be square");
  Eigen::LLT<Matrix> llt(cov_);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("GaussianReference: covariance is not positive definite");
  }
  chol_ = llt.matrixL();
}

Vector GaussianReference::sample(PathRng& rng) const {
  return chol_ * gaussian_vector(rng, cov_.rows());
}

Matrix lyapunov_stationary_cov(const Matrix& F, const Matrix& S) {
  const Index n = F.rows();
  if (F.cols() != n || S.rows() != n) throw ConfigError("lyapunov: dimension mismatch");
  Eigen::EigenSolver<Matrix> es(F);
  if (es.eigenvalues().real().maxCoeff() >= 0.0) {
    throw ConfigError("lyapunov: drift matrix is not Hurwitz");
  }
  // vec(F C + C F^T) = (I (x) F + F (x) I) vec(C)
  Matrix big = Matrix::Zero(n * n, n * n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      for (Index k = 0; k < n; ++k) {
        big(i + n * j, k + n * j) += F(i, k);  // I (x) F
        big(i + n * j, i + n * k) += F(j, k);  // F (x) I
      }
    }
  }
  Matrix q = S * S.transpose();
  Vector rhs(n * n);
  for (Index j = 0; j < n; ++j) rhs.segment(j * n, n) = -q.col(j);
  Vector sol = big.partialPivLu().solve(rhs);
  Matrix c(n, n);
  for (Index j = 0; j < n; ++j) c.col(j) = sol.segment(j * n, n);
  c = 0.5 * (c + c.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> sa(c);
  if (sa.eigenvalues().minCoeff() <= 0.0) {
    throw ConfigError("lyapunov: solution is not positive definite");
  }
  return c;
}

double lyapunov_residual(const Matrix& F, const Matrix& S, const Matrix& C) {
  return (F * C + C * F.transpose() + S * S.transpose()).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Fokker-Planck residual oracle

Potential quadratic_potential(Matrix q) {
  auto qp = std::make_shared<Matrix>(std::move(q));
  Potential v;
  v.value = [qp](const Vector& x) { return 0.5 * x.dot(*qp * x); };
  v.grad = [qp](const Vector& x) { return (*qp * x).eval(); };
  return v;
}

Potential cosine_perturbed_potential(Vector a, double delta) {
  auto ap = std::make_shared<Vector>(std::move(a));
  Potential v;
  v.value = [ap, delta](const Vector& x) {
    return 0.5 * (ap->array() * x.array().square()).sum() + delta * x.array().cos().sum();
  };
  v.grad = [ap, delta](const Vector& x) {
    return ((ap->array() * x.array()) - delta * x.array().sin()).matrix().eval();
  };
  return v;
}

DensityExponent kinetic_exponent_balanced(const Matrix& a_matrix, const Potential& v) {
  DensityExponent g;
  g.name = "balanced(-2V + <Ay,y>)";
  auto am = std::make_shared<Matrix>(a_matrix);
  Potential pv = v;
  g.grad_x = [pv](const Vector& x, const Vector&) { return (-2.0 * pv.grad(x)).eval(); };
  g.grad_y = [am](const Vector&, const Vector& y) { return (2.0 * (*am * y)).eval(); };
  g.lap_y = [am](const Vector&, const Vector&) { return 2.0 * am->trace(); };
  return g;
}

DensityExponent kinetic_exponent_displayed(const Matrix& a_matrix, const Potential& v) {
  DensityExponent g;
  g.name = "displayed(-V + (lambda/2)<Ay,y>)";
  auto am = std::make_shared<Matrix>(a_matrix);
  Eigen::SelfAdjointEigenSolver<Matrix> es(a_matrix);
  const double lambda = -es.eigenvalues().maxCoeff();  // smallest eigenvalue of -A
  Potential pv = v;
  g.grad_x = [pv](const Vector& x, const Vector&) { return (-pv.grad(x)).eval(); };
  g.grad_y = [am, lambda](const Vector&, const Vector& y) { return (lambda * (*am * y)).eval(); };
  g.lap_y = [am, lambda](const Vector&, const Vector&) { return lambda * am->trace(); };
  return g;
}

DensityExponent gaussian_exponent(const Matrix& covariance, Index x_dim) {
  DensityExponent g;
  g.name = "gaussian";
  auto prec = std::make_shared<Matrix>(
      covariance.selfadjointView<Eigen::Lower>().llt().solve(
          Matrix::Identity(covariance.rows(), covariance.cols())));
  g.grad_x = [prec, x_dim](const Vector& x, const Vector& y) {
    Vector z(x.size() + y.size());
    z << x, y;
    return (-(*prec * z).head(x_dim)).eval();
  };
  g.grad_y = [prec, x_dim](const Vector& x, const Vector& y) {
    Vector z(x.size() + y.size());
    z << x, y;
    return (-(*prec * z).tail(y.size())).eval();
  };
  g.lap_y = [prec, x_dim](const Vector& x, const Vector& y) {
    return -prec->bottomRightCorner(y.size(), y.size()).trace();
  };
  return g;
}

FpResidualReport fp_residual(const DensityExponent& g, const Matrix& a_matrix,
                             const std::function<Vector(const Vector&)>& b, Index d, double radius,
                             Index points_per_axis) {
  if (d < 1 || d > 2) throw ConfigError("fp_residual: quadrature grid limited to d <= 2");
  if (points_per_axis < 3) throw ConfigError("fp_residual: grid too coarse");
  const Index axes = 2 * d;
  const double h = 2.0 * radius / static_cast<double>(points_per_axis - 1);

  std::vector<Index> idx(axes, 0);
  Vector x(d), y(d);
  FpResidualReport rep;
  double sum = 0.0;
  std::uint64_t cells = 0;
  double max_grad_y = 0.0;
  const double tr_a = a_matrix.trace();
  for (;;) {
    for (Index a = 0; a < d; ++a) x(a) = -radius + h * static_cast<double>(idx[a]);
    for (Index a = 0; a < d; ++a) y(a) = -radius + h * static_cast<double>(idx[d + a]);

    const Vector gx = g.grad_x(x, y);
    const Vector gy = g.grad_y(x, y);
    const double residual = y.dot(gx) + tr_a + (a_matrix * y + b(x)).dot(gy) -
                            0.5 * g.lap_y(x, y) - 0.5 * gy.squaredNorm();
    const double r = std::abs(residual);
    rep.max_residual = std::max(rep.max_residual, r);
    max_grad_y = std::max(max_grad_y, gy.norm());
    sum += r;
    ++cells;

    Index a = 0;
    for (; a < axes; ++a) {
      if (++idx[a] < points_per_axis) break;
      idx[a] = 0;
    }
    if (a == axes) break;
  }
  rep.mean_residual = sum / static_cast<double>(cells);
  rep.grid_warning = h * max_grad_y > 10.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Invariance / closability / Fomin checks

MeanTestResult stationarity_check(const std::vector<Vector>& samples,
                                  const std::function<Vector(const Vector&, std::uint64_t)>& evolve,
                                  const CylinderFunction& f) {
  MomentAccum acc;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Vector moved = evolve(samples[i], static_cast<std::uint64_t>(i));
    acc.add(f.eval(samples[i]) - f.eval(moved));
  }
  MeanTestResult r;
  r.mean = acc.mean();
  r.se = acc.std_error();
  r.z = acc.z_score();
  r.count = acc.count;
  return r;
}

ChainCheckResult closability_chain_check(const std::vector<Vector>& samples,
                                         const SpectralOperator& A, const SigmaOperator& sig,
                                         const DriftModel& b, const SimGrid& grid,
                                         const EigenDirection& k, const CylinderFunction& f,
                                         std::uint64_t seed, double z_max, double kappa_min,
                                         int workers) {
  const Index n = A.dim();
  auto run_at = [&](const SimGrid& g) {
    SemilinearWeightPlan plan(k, A, g);
    auto work = [&](std::uint64_t i, StatsBlock& blk) {
      thread_local PathSample path;
      thread_local NoisePath noise;
      const Vector& x0 = samples[i % samples.size()];
      noise.regenerate(seed, i, g, n);
      simulate_semilinear_into(path, x0, A, sig, b, g, noise);
      const double lhs = f.dderiv(x0, k.coefficients);
      const double rhs = f.eval(path.terminal()) * plan.evaluate(path, b, sig);
      blk[0].add(lhs);
      blk[1].add(rhs);
      blk[2].add(lhs - rhs);
    };
    return mc_run(samples.size(), 3, work, workers);
  };
  StatsBlock full = run_at(grid);
  StatsBlock half = run_at(grid.refined());

  ChainCheckResult r;
  r.dt = grid.dt();
  r.lhs_mean = full[0].mean();
  r.rhs_mean = full[1].mean();
  r.mean = full[2].mean();
  r.se = full[2].std_error();
  r.z = full[2].z_score();
  r.mean_half = half[2].mean();
  r.se_half = half[2].std_error();
  r.kappa = std::max(kappa_min, 2.0 * std::abs(r.mean - r.mean_half) / r.dt);
  r.pass = std::abs(r.mean) <= z_max * r.se + r.kappa * r.dt;
  return r;
}

double fomin_constant(const SpectralOperator& A, const SigmaOperator& sig, double lip) {
  const double alpha = A.inverse_trace();
  const double e1 = std::exp(1.0) - 1.0;
  return sig.inv_op_norm() * std::sqrt(alpha) / e1 * (1.0 + e1 / A.lambda_min() * lip);
}

FominReport fomin_check(const std::vector<Vector>& samples, const SpectralOperator& A,
                        const SigmaOperator& sig, const DriftModel& b, const SimGrid& grid,
                        const EigenDirection& k, const CylinderFunction& f, std::uint64_t seed,
                        double z_max, int workers) {
  if (!b.lipschitz) throw ConfigError("fomin_check: drift needs a Lipschitz constant");
  const Index n = A.dim();
  SemilinearWeightPlan plan(k, A, grid);
  auto work = [&](std::uint64_t i, StatsBlock& blk) {
    thread_local PathSample path;
    thread_local NoisePath noise;
    const Vector& x0 = samples[i % samples.size()];
    noise.regenerate(seed, i, grid, n);
    simulate_semilinear_into(path, x0, A, sig, b, grid, noise);
    const double m = plan.evaluate(path, b, sig);
    const double fx = f.eval(x0);
    blk[0].add(f.dderiv(x0, k.coefficients));
    blk[1].add(m * m);
    blk[2].add(fx * fx);
  };
  StatsBlock st = mc_run(samples.size(), 3, work, workers);

  FominReport rep;
  rep.direction = k.coefficients;
  rep.estimate = std::abs(st[0].mean());
  rep.se = st[0].std_error();
  rep.weight_sq_mean = st[1].mean();
  rep.f_sq_mean = st[2].mean();
  rep.constant = fomin_constant(A, sig, *b.lipschitz);
  rep.bound_explicit = rep.constant * A.apply(k.coefficients).norm() * std::sqrt(rep.f_sq_mean);
  rep.bound_dm = std::sqrt(rep.weight_sq_mean * rep.f_sq_mean);
  rep.pass_explicit = rep.estimate <= rep.bound_explicit + z_max * rep.se;
  rep.pass_dm = rep.estimate <= rep.bound_dm + z_max * rep.se;
  return rep;
}

MeanTestResult form_energy(const std::vector<Vector>& samples, const CylinderFunction& f,
                           const CylinderFunction& g, const Vector& k) {
  MomentAccum acc;
  for (const Vector& x : samples) acc.add(f.dderiv(x, k) * g.dderiv(x, k));
  MeanTestResult r;
  r.mean = acc.mean();
  r.se = acc.std_error();
  r.z = acc.z_score();
  r.count = acc.count;
  return r;
}

// ---------------------------------------------------------------------------
// Contraction

ContractionReport contraction_check(const Vector& x0, const Vector& y0, const SpectralOperator& A,
                                    const SigmaOperator& sig, const DriftModel& b,
                                    const SimGrid& grid, std::uint64_t seed,
                                    std::uint64_t path_index, double kappa) {
  if (!b.dissipativity) throw ConfigError("contraction_check: drift needs a dissipativity constant");
  ContractionReport rep;
  rep.rate = A.lambda_min() + *b.dissipativity;
  rep.kappa = kappa;
  if (!(rep.rate > 0.0)) throw ConfigError("contraction_check: configuration is not dissipative");

  NoisePath noise = NoisePath::generate(seed, path_index, grid, A.dim());
  PathSample px = simulate_semilinear(x0, A, sig, b, grid, noise);
  PathSample py = simulate_semilinear(y0, A, sig, b, grid, noise);

  const double d0 = (x0 - y0).norm();
  const double dt = grid.dt();
  for (Index j = 0; j <= grid.steps; ++j) {
    const double lhs = (px.states.col(j) - py.states.col(j)).norm();
    const double bound = std::exp(-rep.rate * grid.time(j)) * d0 * (1.0 + kappa * dt);
    if (d0 == 0.0) {
      if (lhs != 0.0 && rep.first_violation < 0) {
        rep.pass = false;
        rep.first_violation = j;
      }
      continue;
    }
    rep.max_ratio = std::max(rep.max_ratio, lhs / (std::exp(-rep.rate * grid.time(j)) * d0));
    if (lhs > bound && rep.first_violation < 0) {
      rep.pass = false;
      rep.first_violation = j;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Rejection sampler

std::vector<Vector> sample_gibbs_marginal(const Vector& a, double delta, Index count,
                                          std::uint64_t seed) {
  if (a.minCoeff() <= 0.0) throw ConfigError("gibbs marginal: coefficients must be positive");
  const Index n = a.size();
  std::vector<Vector> out;
  out.reserve(count);
  PathRng rng = rng_for_path(seed, 0, PathRng::Domain::auxiliary);
  // coordinatewise target exp(-a x^2 - 2 delta cos x); envelope N(0, 1/(2a))
  // with acceptance exp(-2 delta cos x - 2|delta|).
  for (Index s = 0; s < count; ++s) {
    Vector x(n);
    for (Index i = 0; i < n; ++i) {
      const double sd = 1.0 / std::sqrt(2.0 * a(i));
      for (;;) {
        const double cand = sd * rng.next_gaussian();
        const double accept = std::exp(-2.0 * delta * std::cos(cand) - 2.0 * std::abs(delta));
        if (rng.next_unit() <= accept) {
          x(i) = cand;
          break;
        }
      }
    }
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace ibplab
