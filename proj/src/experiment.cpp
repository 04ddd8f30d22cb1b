#include "ibplab/experiment.hpp"

#include <cmath>
#include <sstream>

#include "ibplab/measures.hpp"
#include "ibplab/parallel.hpp"
#include "ibplab/weights.hpp"

namespace ibplab {

namespace {

FunctionCheck assemble_check(const std::string& name, const MomentAccum& lhs,
                             const MomentAccum& rhs, const MomentAccum& diff,
                             const MomentAccum& diff_half, double dt, double z_max,
                             double kappa_min) {
  FunctionCheck c;
  c.name = name;
  c.lhs_mean = lhs.mean();
  c.lhs_se = lhs.std_error();
  c.rhs_mean = rhs.mean();
  c.rhs_se = rhs.std_error();
  c.diff_mean = diff.mean();
  c.diff_se = diff.std_error();
  c.z = diff.z_score();
  c.diff_mean_half = diff_half.mean();
  c.diff_se_half = diff_half.std_error();
  c.kappa = std::max(kappa_min, 2.0 * std::abs(c.diff_mean - c.diff_mean_half) / dt);
  c.pass = std::abs(c.diff_mean) <= z_max * c.diff_se + c.kappa * dt;
  return c;
}

GirsanovCheck assemble_girsanov(double eps, const MomentAccum& r, const MomentAccum& dev,
                                double z_max) {
  GirsanovCheck g;
  g.epsilon = eps;
  g.r_mean = r.mean();
  g.r_se = r.std_error();
  g.r_z = r.std_error() > 0 ? (r.mean() - 1.0) / r.std_error() : 0.0;
  g.dev_mean = dev.mean();
  g.dev_se = dev.std_error();
  g.pass = std::abs(g.r_z) <= z_max;
  return g;
}

/// dev(eps) ~ c * eps: halving eps should about halve the deviation. Allow
/// generous statistical slack around the factor 1/2.
bool girsanov_slope_ok(const std::vector<GirsanovCheck>& gs, double z_max) {
  bool ok = true;
  for (std::size_t i = 1; i < gs.size(); ++i) {
    const auto& big = gs[i - 1];
    const auto& small = gs[i];
    const double ratio = small.epsilon / big.epsilon;  // usually 1/2
    const double slack = z_max * (std::abs(big.dev_se) * ratio + small.dev_se) + 1e-12;
    ok = ok && std::abs(small.dev_mean) <= (ratio + 0.25) * std::abs(big.dev_mean) + slack;
  }
  return ok;
}

void fold_weight_stats(MCReport& rep, const MomentAccum& m, const MomentAccum& msq) {
  rep.weight_mean = m.mean();
  rep.weight_se = m.std_error();
  rep.weight_sq_mean = msq.mean();
  rep.weight_sq_se = msq.std_error();
}

bool weight_mean_ok(const MCReport& rep) {
  return std::abs(rep.weight_mean) <= rep.z_max * rep.weight_se;
}

}  // namespace

MCReport run_ibp_experiment(const ExperimentConfig& cfg) {
  if (cfg.model == "semilinear") return run_ibp_semilinear(cfg);
  if (cfg.model == "hamiltonian") return run_ibp_hamiltonian(cfg);
  if (cfg.model == "delay") return run_ibp_delay(cfg);
  throw ConfigError("run_ibp_experiment: model '" + cfg.model + "' is not a path model");
}

// ---------------------------------------------------------------------------
// Semilinear

MCReport run_ibp_semilinear(const ExperimentConfig& cfg) {
  const SpectralOperator A = cfg.make_operator();
  const SigmaOperator sig = cfg.make_sigma();
  const DriftModel b = cfg.make_state_drift(A);
  const SimGrid grid = cfg.make_grid();
  if (cfg.dir_k.size() != A.dim()) throw ConfigError("direction.k: wrong dimension");
  const EigenDirection k(cfg.dir_k);
  const Vector x0 = cfg.x0.size() ? cfg.x0 : Vector::Zero(A.dim());
  if (x0.size() != A.dim()) throw ConfigError("initial.x0: wrong dimension");
  const auto dict = cfg.make_dictionary(A.dim());
  const std::size_t F = dict.size();
  const std::size_t slots = 3 * F + 2;

  auto run_at = [&](const SimGrid& g) {
    const SemilinearWeightPlan plan(k, A, g);
    auto work = [&](std::uint64_t i, StatsBlock& blk) {
      thread_local PathSample path;
      thread_local NoisePath noise;
      noise.regenerate(cfg.seed, i, g, A.dim());
      simulate_semilinear_into(path, x0, A, sig, b, g, noise);
      const double m = plan.evaluate(path, b, sig);
      const Vector xt = path.terminal();
      for (std::size_t fi = 0; fi < F; ++fi) {
        const double lhs = dict[fi].dderiv(xt, k.coefficients);
        const double rhs = dict[fi].eval(xt) * m;
        blk[3 * fi].add(lhs);
        blk[3 * fi + 1].add(rhs);
        blk[3 * fi + 2].add(lhs - rhs);
      }
      blk[3 * F].add(m);
      blk[3 * F + 1].add(m * m);
    };
    return mc_run(cfg.paths, slots, work, cfg.workers, cfg.chunk);
  };

  const StatsBlock full = run_at(grid);
  const StatsBlock half = run_at(grid.refined());

  MCReport rep;
  rep.model = cfg.model;
  rep.paths = cfg.paths;
  rep.seed = cfg.seed;
  rep.T = grid.horizon;
  rep.dt = grid.dt();
  rep.dt_half = grid.refined().dt();
  rep.z_max = cfg.z_max;
  rep.kappa_min = cfg.kappa_min;
  rep.config_hash = config_hash(cfg.raw);
  bool all = true;
  for (std::size_t fi = 0; fi < F; ++fi) {
    rep.checks.push_back(assemble_check(dict[fi].name(), full[3 * fi], full[3 * fi + 1],
                                        full[3 * fi + 2], half[3 * fi + 2], rep.dt, cfg.z_max,
                                        cfg.kappa_min));
    all = all && rep.checks.back().pass;
  }
  fold_weight_stats(rep, full[3 * F], full[3 * F + 1]);
  rep.weight_l2_bound = semilinear_weight_l2_bound(k, b, A, sig, grid.horizon);
  rep.weight_l2_ok =
      rep.weight_sq_mean <= rep.weight_l2_bound + cfg.z_max * full[3 * F + 1].std_error();
  all = all && weight_mean_ok(rep) && rep.weight_l2_ok;
  rep.all_pass = all;
  return rep;
}

// ---------------------------------------------------------------------------
// Two-component system

namespace {
DriftModel hamiltonian_drift(const ExperimentConfig& cfg, const SpectralOperator& A) {
  const Index xn = cfg.x_dim;
  const Index yn = cfg.n;
  if (cfg.drift_name == "zero") {
    DriftModel z = make_zero_drift(yn);
    z.in_dim = xn + yn;
    return z;
  }
  if (xn != yn) throw ConfigError("nonzero drifts require x_dim == n");
  DriftModel on_x = registry_get_state(cfg.drift_name, cfg.drift_params, xn, &A);
  return lift_position_drift(on_x, xn, yn);
}
}  // namespace

MCReport run_ibp_hamiltonian(const ExperimentConfig& cfg) {
  const SpectralOperator A = cfg.make_operator();
  const SigmaOperator sig = cfg.make_sigma();
  const Matrix B = cfg.make_b_matrix();
  const Index xn = cfg.x_dim;
  const Index yn = cfg.n;
  const DriftModel b = hamiltonian_drift(cfg, A);
  const SimGrid grid = cfg.make_grid();
  if (cfg.dir_k1.size() != xn || cfg.dir_k2.size() != yn) {
    throw ConfigError("direction.k1/k2: wrong dimension");
  }
  const HamDirection dir = make_ham_direction(A, B, cfg.dir_k1, cfg.dir_k2);
  const PhiPsi pp = default_phi_psi(grid.horizon, dir.theta1, dir.theta2);
  const Vector x0 = cfg.x0.size() ? cfg.x0 : Vector::Zero(xn);
  const Vector y0 = cfg.y0.size() ? cfg.y0 : Vector::Zero(yn);
  if (x0.size() != xn || y0.size() != yn) throw ConfigError("initial x0/y0: wrong dimension");
  Vector k_stacked(xn + yn);
  k_stacked << dir.k1, dir.k2;
  const auto dict = cfg.make_dictionary(xn + yn);
  const std::size_t F = dict.size();
  const std::size_t E = cfg.girsanov_epsilons.size();
  const std::size_t slots = 3 * F + 2 + 2 * E;

  auto run_at = [&](const SimGrid& g, bool with_girsanov) {
    const HamIngredients ing = ham_h_theta(pp, dir, g);
    std::vector<ShiftSpec> shifts;
    if (with_girsanov) {
      for (double eps : cfg.girsanov_epsilons) shifts.push_back(ShiftSpec{eps, ing.h_prime});
    }
    auto work = [&](std::uint64_t i, StatsBlock& blk) {
      thread_local HamPath base, shifted;
      thread_local NoisePath noise;
      noise.regenerate(cfg.seed, i, g, yn);
      simulate_hamiltonian_into(base, x0, y0, B, A, sig, b, g, noise);
      const double m = hamiltonian_weight(base, ing, b, sig);
      const Vector zt = base.terminal_stacked();
      for (std::size_t fi = 0; fi < F; ++fi) {
        const double lhs = dict[fi].dderiv(zt, k_stacked);
        const double rhs = dict[fi].eval(zt) * m;
        blk[3 * fi].add(lhs);
        blk[3 * fi + 1].add(rhs);
        blk[3 * fi + 2].add(lhs - rhs);
      }
      blk[3 * F].add(m);
      blk[3 * F + 1].add(m * m);
      for (std::size_t ei = 0; ei < shifts.size(); ++ei) {
        simulate_hamiltonian_into(shifted, x0, y0, B, A, sig, b, g, noise, &shifts[ei], &base);
        const Matrix xi = girsanov_xi_hamiltonian(base, shifted, b, shifts[ei]);
        const GirsanovResult r = girsanov_density(noise, xi, sig);
        blk[3 * F + 2 + 2 * ei].add(r.density);
        blk[3 * F + 2 + 2 * ei + 1].add((1.0 - r.density) / shifts[ei].epsilon - m);
      }
    };
    return mc_run(cfg.paths, slots, work, cfg.workers, cfg.chunk);
  };

  const StatsBlock full = run_at(grid, true);
  const StatsBlock half = run_at(grid.refined(), false);

  MCReport rep;
  rep.model = cfg.model;
  rep.paths = cfg.paths;
  rep.seed = cfg.seed;
  rep.T = grid.horizon;
  rep.dt = grid.dt();
  rep.dt_half = grid.refined().dt();
  rep.z_max = cfg.z_max;
  rep.kappa_min = cfg.kappa_min;
  rep.config_hash = config_hash(cfg.raw);
  bool all = true;
  for (std::size_t fi = 0; fi < F; ++fi) {
    rep.checks.push_back(assemble_check(dict[fi].name(), full[3 * fi], full[3 * fi + 1],
                                        full[3 * fi + 2], half[3 * fi + 2], rep.dt, cfg.z_max,
                                        cfg.kappa_min));
    all = all && rep.checks.back().pass;
  }
  fold_weight_stats(rep, full[3 * F], full[3 * F + 1]);
  all = all && weight_mean_ok(rep);

  for (std::size_t ei = 0; ei < E; ++ei) {
    rep.girsanov.push_back(assemble_girsanov(cfg.girsanov_epsilons[ei], full[3 * F + 2 + 2 * ei],
                                             full[3 * F + 2 + 2 * ei + 1], cfg.z_max));
    all = all && rep.girsanov.back().pass;
  }
  if (E >= 2) all = all && girsanov_slope_ok(rep.girsanov, cfg.z_max);

  // deterministic shift identities on one representative path
  {
    const HamIngredients ing = ham_h_theta(pp, dir, grid);
    NoisePath noise = NoisePath::generate(cfg.seed, 0, grid, yn);
    HamPath base = simulate_hamiltonian(x0, y0, B, A, sig, b, grid, noise);
    for (double eps : cfg.girsanov_epsilons.empty() ? std::vector<double>{0.1, 0.01}
                                                    : cfg.girsanov_epsilons) {
      ShiftSpec spec{eps, ing.h_prime};
      HamPath shifted = simulate_hamiltonian(x0, y0, B, A, sig, b, grid, noise, &spec, &base);
      ShiftIdentityCheck sc;
      sc.epsilon = eps;
      Vector term(xn + yn);
      term << shifted.x_states.col(grid.steps) - base.x_states.col(grid.steps) - eps * dir.k1,
          shifted.y_states.col(grid.steps) - base.y_states.col(grid.steps) - eps * dir.k2;
      sc.terminal_err = term.norm() / eps;
      double worst = 0.0;
      for (Index j = 0; j <= grid.steps; ++j) {
        worst = std::max(worst, (shifted.y_states.col(j) - base.y_states.col(j) -
                                 eps * ing.h_tilde.col(j))
                                    .norm());
      }
      sc.nodewise_err = worst / eps;
      sc.bound = cfg.shift_check_c * grid.dt();
      sc.pass = sc.terminal_err <= sc.bound && sc.nodewise_err <= sc.bound;
      rep.shift_checks.push_back(sc);
      all = all && sc.pass;
    }
  }
  rep.all_pass = all;
  return rep;
}

// ---------------------------------------------------------------------------
// Delay

MCReport run_ibp_delay(const ExperimentConfig& cfg) {
  const SpectralOperator A = cfg.make_operator();
  const SigmaOperator sig = cfg.make_sigma();
  const SegmentDriftModel b = cfg.make_segment_drift();
  const SimGrid grid = cfg.make_grid();
  const double tau = cfg.tau;
  const auto dict = cfg.make_segment_dictionary();
  const std::size_t F = dict.size();
  const std::size_t E = cfg.girsanov_epsilons.size();
  const std::size_t slots = 3 * F + 4 + F + 2 * E;

  auto build_direction = [&](const SimGrid& g) {
    return make_delay_direction(
        A, tau, delay_nodes_for(tau, g), [&](double th) { return cfg.eta_at(th); },
        [&](double th) { return cfg.eta_prime_at(th); });
  };

  auto run_at = [&](const SimGrid& g, bool with_girsanov) {
    const Index m = delay_nodes_for(tau, g);
    const DelayDirection dir = build_direction(g);
    const Matrix gamma = delay_gamma(dir, A, g);
    const Matrix pert = delay_perturbation(dir, A, g);
    const Matrix theta = delay_theta(gamma, g, m);
    const Matrix xi0 = cfg.initial_segment(g);
    const SegmentView eta_view(dir.eta, 0, m + 1);
    std::vector<ShiftSpec> shifts;
    if (with_girsanov) {
      for (double eps : cfg.girsanov_epsilons) shifts.push_back(ShiftSpec{eps, gamma});
    }
    auto work = [&](std::uint64_t i, StatsBlock& blk) {
      thread_local DelayPath base, shifted;
      thread_local NoisePath noise;
      noise.regenerate(cfg.seed, i, g, A.dim());
      simulate_delay_into(base, xi0, A, sig, b, g, tau, noise);
      const double md = delay_weight(base, gamma, pert, b, sig);
      const double mt = delay_weight(base, gamma, theta, b, sig);
      const SegmentView seg = base.terminal_segment();
      for (std::size_t fi = 0; fi < F; ++fi) {
        const double lhs = dict[fi].dderiv_segment(seg, eta_view, tau);
        const double fval = dict[fi].eval_segment(seg, tau);
        blk[3 * fi].add(lhs);
        blk[3 * fi + 1].add(fval * md);
        blk[3 * fi + 2].add(lhs - fval * md);
        blk[3 * F + 4 + fi].add(lhs - fval * mt);
      }
      blk[3 * F].add(md);
      blk[3 * F + 1].add(md * md);
      blk[3 * F + 2].add(mt);
      blk[3 * F + 3].add(mt * mt);
      for (std::size_t ei = 0; ei < shifts.size(); ++ei) {
        simulate_delay_into(shifted, xi0, A, sig, b, g, tau, noise, &shifts[ei], &base);
        const Matrix xi = girsanov_xi_delay(base, shifted, b, shifts[ei]);
        const GirsanovResult r = girsanov_density(noise, xi, sig);
        blk[3 * F + 4 + F + 2 * ei].add(r.density);
        blk[3 * F + 4 + F + 2 * ei + 1].add((1.0 - r.density) / shifts[ei].epsilon - md);
      }
    };
    return mc_run(cfg.paths, slots, work, cfg.workers, cfg.chunk);
  };

  const StatsBlock full = run_at(grid, true);
  const StatsBlock half = run_at(grid.refined(), false);

  MCReport rep;
  rep.model = cfg.model;
  rep.paths = cfg.paths;
  rep.seed = cfg.seed;
  rep.T = grid.horizon;
  rep.dt = grid.dt();
  rep.dt_half = grid.refined().dt();
  rep.z_max = cfg.z_max;
  rep.kappa_min = cfg.kappa_min;
  rep.config_hash = config_hash(cfg.raw);
  bool all = true;
  for (std::size_t fi = 0; fi < F; ++fi) {
    rep.checks.push_back(assemble_check(dict[fi].name(), full[3 * fi], full[3 * fi + 1],
                                        full[3 * fi + 2], half[3 * fi + 2], rep.dt, cfg.z_max,
                                        cfg.kappa_min));
    all = all && rep.checks.back().pass;
  }
  fold_weight_stats(rep, full[3 * F], full[3 * F + 1]);
  all = all && weight_mean_ok(rep);
  rep.has_theta_diagnostic = true;
  rep.theta_weight_mean = full[3 * F + 2].mean();
  rep.theta_weight_se = full[3 * F + 2].std_error();
  for (std::size_t fi = 0; fi < F; ++fi) rep.theta_diff_z.push_back(full[3 * F + 4 + fi].z_score());

  for (std::size_t ei = 0; ei < E; ++ei) {
    rep.girsanov.push_back(assemble_girsanov(cfg.girsanov_epsilons[ei],
                                             full[3 * F + 4 + F + 2 * ei],
                                             full[3 * F + 4 + F + 2 * ei + 1], cfg.z_max));
    all = all && rep.girsanov.back().pass;
  }
  if (E >= 2) all = all && girsanov_slope_ok(rep.girsanov, cfg.z_max);

  // deterministic final-segment shift identity on one representative path
  {
    const Index m = delay_nodes_for(tau, grid);
    const DelayDirection dir = build_direction(grid);
    const Matrix gamma = delay_gamma(dir, A, grid);
    const Matrix pert = delay_perturbation(dir, A, grid);
    const Matrix xi0 = cfg.initial_segment(grid);
    NoisePath noise = NoisePath::generate(cfg.seed, 0, grid, A.dim());
    DelayPath base = simulate_delay(xi0, A, sig, b, grid, tau, noise);
    for (double eps : cfg.girsanov_epsilons.empty() ? std::vector<double>{0.1, 0.01}
                                                    : cfg.girsanov_epsilons) {
      ShiftSpec spec{eps, gamma};
      DelayPath shifted = simulate_delay(xi0, A, sig, b, grid, tau, noise, &spec, &base);
      ShiftIdentityCheck sc;
      sc.epsilon = eps;
      double worst_final = 0.0;
      for (Index l = 0; l <= m; ++l) {
        const Index j = grid.steps - m + l;
        worst_final = std::max(
            worst_final, (shifted.state(j) - base.state(j) - eps * dir.eta.col(l)).norm());
      }
      sc.terminal_err = worst_final / eps;
      double worst = 0.0;
      for (Index j = 0; j <= grid.steps; ++j) {
        worst = std::max(worst,
                         (shifted.state(j) - base.state(j) - eps * pert.col(j + m)).norm());
      }
      sc.nodewise_err = worst / eps;
      sc.bound = cfg.shift_check_c * grid.dt();
      sc.pass = sc.terminal_err <= sc.bound && sc.nodewise_err <= sc.bound;
      rep.shift_checks.push_back(sc);
      all = all && sc.pass;
    }
  }
  rep.all_pass = all;
  return rep;
}

// ---------------------------------------------------------------------------
// Invariance / oracle

namespace {

struct LinearKineticSystem {
  Matrix a_mat;      // d x d, negative definite (diagonal here)
  Matrix f_full;     // 2d x 2d
  Matrix s_full;     // 2d x d
  Matrix c_balanced; // blkdiag((2Q)^{-1}, (-2A)^{-1})
  Matrix c_paper;    // blkdiag(Q^{-1}, (-A)^{-1})
  Vector q_diag;
  DriftModel lifted; // b(x,y) = A^{-1} Q x, stacked
};

LinearKineticSystem build_linear_kinetic(const ExperimentConfig& cfg, const SpectralOperator& A) {
  if (cfg.inv_q_diag.size() != A.dim()) {
    throw ConfigError("invariance.Q: need a diagonal of length n");
  }
  if (cfg.inv_q_diag.minCoeff() <= 0.0) throw ConfigError("invariance.Q must be positive");
  const Index d = A.dim();
  LinearKineticSystem sys;
  sys.q_diag = cfg.inv_q_diag;
  const Vector lam = A.eigenvalues();
  sys.a_mat = (-lam).asDiagonal();
  Matrix ainv_q = (-(sys.q_diag.array() / lam.array())).matrix().asDiagonal();
  sys.f_full = Matrix::Zero(2 * d, 2 * d);
  sys.f_full.topRightCorner(d, d) = Matrix::Identity(d, d);
  sys.f_full.bottomLeftCorner(d, d) = ainv_q;
  sys.f_full.bottomRightCorner(d, d) = sys.a_mat;
  sys.s_full = Matrix::Zero(2 * d, d);
  sys.s_full.bottomRows(d) = Matrix::Identity(d, d);
  sys.c_balanced = Matrix::Zero(2 * d, 2 * d);
  sys.c_balanced.topLeftCorner(d, d) = (0.5 * sys.q_diag.cwiseInverse()).asDiagonal();
  sys.c_balanced.bottomRightCorner(d, d) = (0.5 * lam.cwiseInverse()).asDiagonal();
  sys.c_paper = Matrix::Zero(2 * d, 2 * d);
  sys.c_paper.topLeftCorner(d, d) = sys.q_diag.cwiseInverse().asDiagonal();
  sys.c_paper.bottomRightCorner(d, d) = lam.cwiseInverse().asDiagonal();
  sys.lifted = lift_position_drift(make_linear_drift(ainv_q), d, d);
  return sys;
}

Json fp_report_json(const FpResidualReport& r) {
  return Json{{"max_residual", r.max_residual},
              {"mean_residual", r.mean_residual},
              {"grid_warning", r.grid_warning}};
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Json oracle_block(const ExperimentConfig& cfg) {
  const SpectralOperator A = cfg.make_operator();
  const Index d = A.dim();
  if (d > 2) throw ConfigError("oracle: stationary-density grids are limited to d <= 2");
  Json out;
  out["dim"] = d;

  if (cfg.drift_name == "gibbs_gradient") {
    // nonlinear potential: stationarity defects only
    Vector a = cfg.drift_params.vector ? *cfg.drift_params.vector : Vector::Ones(d);
    const double delta = cfg.drift_params.scalar_or("delta", 0.0);
    const Potential v = cosine_perturbed_potential(a, delta);
    const Matrix a_mat = (-A.eigenvalues()).asDiagonal();
    const Vector lam = A.eigenvalues();
    auto b_fn = [&](const Vector& x) {
      return (-(a.array() * x.array() - delta * x.array().sin()) / lam.array()).matrix().eval();
    };
    const auto balanced = fp_residual(kinetic_exponent_balanced(a_mat, v), a_mat, b_fn, d);
    const auto displayed = fp_residual(kinetic_exponent_displayed(a_mat, v), a_mat, b_fn, d);
    out["fp_residual"] = Json{{"balanced", fp_report_json(balanced)},
                              {"displayed", fp_report_json(displayed)}};
    out["verdict"] = Json{
        {"balanced", balanced.max_residual < 1e-8 ? "stationary" : "not stationary"},
        {"displayed", displayed.max_residual < 1e-8 ? "stationary" : "not stationary"}};
    return out;
  }

  const LinearKineticSystem sys = build_linear_kinetic(cfg, A);
  const Matrix c_lyap = lyapunov_stationary_cov(sys.f_full, sys.s_full);
  const double lyap_res = lyapunov_residual(sys.f_full, sys.s_full, c_lyap);
  const double analytic_gap = (c_lyap - sys.c_balanced).cwiseAbs().maxCoeff();
  const double paper_lyap_res = lyapunov_residual(sys.f_full, sys.s_full, sys.c_paper);

  const Potential v = quadratic_potential(Matrix(sys.q_diag.asDiagonal()));
  auto b_fn = [&](const Vector& x) {
    return (-(sys.q_diag.array() * x.array()) / A.eigenvalues().array()).matrix().eval();
  };
  const auto balanced = fp_residual(kinetic_exponent_balanced(sys.a_mat, v), sys.a_mat, b_fn, d);
  const auto displayed = fp_residual(kinetic_exponent_displayed(sys.a_mat, v), sys.a_mat, b_fn, d);
  const auto gauss_lyap =
      fp_residual(gaussian_exponent(c_lyap, d), sys.a_mat, b_fn, d);
  const auto gauss_paper =
      fp_residual(gaussian_exponent(sys.c_paper, d), sys.a_mat, b_fn, d);

  out["lyapunov"] = Json{{"covariance", matrix_to_json(c_lyap)},
                         {"residual", lyap_res},
                         {"balanced_gap", analytic_gap},
                         {"paper_candidate_residual", paper_lyap_res}};
  out["fp_residual"] = Json{{"balanced", fp_report_json(balanced)},
                            {"displayed", fp_report_json(displayed)},
                            {"gaussian_lyapunov", fp_report_json(gauss_lyap)},
                            {"gaussian_paper", fp_report_json(gauss_paper)}};
  out["verdict"] = Json{
      {"balanced", balanced.max_residual < 1e-8 ? "stationary" : "not stationary"},
      {"displayed", displayed.max_residual < 1e-8 ? "stationary" : "not stationary"},
      {"paper_product_measure",
       paper_lyap_res < 1e-10 ? "stationary" : "not stationary (constant-factor discrepancy)"}};
  out["analytic_ok"] = lyap_res < 1e-10 && analytic_gap <= 1e-8 &&
                       balanced.max_residual < 1e-8 && gauss_lyap.max_residual < 1e-8;
  return out;
}

}  // namespace

Json run_oracle(const ExperimentConfig& cfg) {
  Json out = oracle_block(cfg);
  out["config_hash"] = config_hash(cfg.raw);
  out["all_pass"] = !out.contains("analytic_ok") || out["analytic_ok"].get<bool>();
  return out;
}

Json run_invariance(const ExperimentConfig& cfg) {
  const SpectralOperator A = cfg.make_operator();
  const Index d = A.dim();
  if (cfg.sigma_kind != "identity" || cfg.b_kind != "identity") {
    throw ConfigError("invariance run expects sigma = identity and B = identity");
  }
  const SigmaOperator sig = SigmaOperator::identity(d);
  const Matrix B = Matrix::Identity(d, d);

  Json out = oracle_block(cfg);
  const LinearKineticSystem sys = build_linear_kinetic(cfg, A);
  const Matrix c_lyap = lyapunov_stationary_cov(sys.f_full, sys.s_full);

  // long-run empirical covariance against the analytic one
  const std::uint64_t burn = cfg.chain_steps / 10;
  const Matrix c_emp = empirical_stationary_cov_hamiltonian(
      B, A, sig, sys.lifted, cfg.chain_dt, cfg.chain_steps, burn, cfg.seed + 1);
  const double emp_rel = (c_emp - c_lyap).norm() / c_lyap.norm();
  out["empirical"] = Json{{"covariance", matrix_to_json(c_emp)},
                          {"relative_gap", emp_rel},
                          {"chain_steps", cfg.chain_steps},
                          {"chain_dt", cfg.chain_dt}};

  // stationarity z-tests from the exact reference
  const GaussianReference ref(c_lyap);
  PathRng draw(cfg.seed, 1ULL << 33, PathRng::Domain::auxiliary);
  std::vector<Vector> samples;
  samples.reserve(cfg.inv_samples);
  for (Index i = 0; i < cfg.inv_samples; ++i) samples.push_back(ref.sample(draw));

  const SimGrid sgrid(cfg.stationarity_T, cfg.steps);
  auto evolve = [&](const Vector& z, std::uint64_t i) {
    NoisePath noise = NoisePath::generate(cfg.seed, i, sgrid, d);
    HamPath p = simulate_hamiltonian(z.head(d), z.tail(d), B, A, sig, sys.lifted, sgrid, noise);
    return p.terminal_stacked();
  };
  const auto dict = cfg.make_dictionary(2 * d);
  Json stationarity = Json::array();
  bool z_ok = true;
  for (const auto& f : dict) {
    const MeanTestResult r = stationarity_check(samples, evolve, f);
    stationarity.push_back(
        Json{{"name", f.name()}, {"mean", r.mean}, {"se", r.se}, {"z", r.z}});
    z_ok = z_ok && std::abs(r.z) <= cfg.z_max;
  }
  out["stationarity"] = stationarity;

  const bool analytic_ok = out["analytic_ok"].get<bool>();
  out["all_pass"] = analytic_ok && emp_rel <= 0.05 && z_ok;
  out["config_hash"] = config_hash(cfg.raw);
  return out;
}

Json run_fomin(const ExperimentConfig& cfg) {
  const SpectralOperator A = cfg.make_operator();
  const SigmaOperator sig = cfg.make_sigma();
  const DriftModel b = cfg.make_state_drift(A);
  const SimGrid grid = cfg.make_grid();

  ErgodicConfig ec = default_ergodic_config(A, b, cfg.fomin_samples, cfg.seed);
  ec.dt = cfg.sampler_dt;
  const SampleSet mu = sample_invariant(A, sig, b, ec);

  std::vector<Vector> dirs = cfg.fomin_directions;
  if (dirs.empty()) dirs.push_back(Vector::Unit(A.dim(), 0));
  const auto dict = cfg.make_dictionary(A.dim());

  Json out;
  out["dissipativity_warning"] = mu.dissipativity_warning;
  out["constant"] = fomin_constant(A, sig, b.lipschitz.value_or(0.0));
  Json rows = Json::array();
  bool all = true;
  for (const Vector& kv : dirs) {
    if (kv.size() != A.dim()) throw ConfigError("fomin.directions: wrong dimension");
    const EigenDirection k(kv);
    for (const auto& f : dict) {
      const FominReport r =
          fomin_check(mu.states, A, sig, b, grid, k, f, cfg.seed, cfg.z_max, cfg.workers);
      rows.push_back(Json{{"direction", std::vector<double>(kv.data(), kv.data() + kv.size())},
                          {"function", f.name()},
                          {"estimate", r.estimate},
                          {"se", r.se},
                          {"bound_explicit", r.bound_explicit},
                          {"bound_dm", r.bound_dm},
                          {"weight_sq_mean", r.weight_sq_mean},
                          {"f_sq_mean", r.f_sq_mean},
                          {"pass_explicit", r.pass_explicit},
                          {"pass_dm", r.pass_dm}});
      all = all && r.pass_explicit && r.pass_dm;
    }
  }
  out["checks"] = rows;
  out["samples"] = cfg.fomin_samples;
  out["all_pass"] = all;
  out["config_hash"] = config_hash(cfg.raw);
  return out;
}

Json run_contraction(const ExperimentConfig& cfg) {
  const SpectralOperator A = cfg.make_operator();
  const SigmaOperator sig = cfg.make_sigma();
  const DriftModel b = cfg.make_state_drift(A);
  const SimGrid grid = cfg.make_grid();
  const Vector x0 = cfg.contraction_x0.size() ? cfg.contraction_x0 : Vector::Ones(A.dim());
  const Vector y0 = cfg.contraction_y0.size() ? cfg.contraction_y0 : Vector::Zero(A.dim());
  const ContractionReport r =
      contraction_check(x0, y0, A, sig, b, grid, cfg.seed, 0, cfg.contraction_kappa);
  Json out;
  out["pass"] = r.pass;
  out["rate"] = r.rate;
  out["kappa"] = r.kappa;
  out["max_ratio"] = r.max_ratio;
  out["first_violation"] = r.first_violation;
  out["all_pass"] = r.pass;
  out["config_hash"] = config_hash(cfg.raw);
  return out;
}

bool report_passes(const Json& report) {
  return report.contains("all_pass") && report["all_pass"].get<bool>();
}

// ---------------------------------------------------------------------------
// Ingredient tables and path dumps

IngredientTable ingredient_table(const ExperimentConfig& cfg) {
  IngredientTable t;
  const SpectralOperator A = cfg.make_operator();
  const SimGrid grid = cfg.make_grid();
  if (cfg.model == "hamiltonian") {
    const Matrix B = cfg.make_b_matrix();
    const HamDirection dir = make_ham_direction(A, B, cfg.dir_k1, cfg.dir_k2);
    const PhiPsi pp = default_phi_psi(grid.horizon, dir.theta1, dir.theta2);
    const HamIngredients ing = ham_h_theta(pp, dir, grid);
    std::vector<double> phis, psis, hp, ht, th;
    for (Index j = 0; j <= grid.steps; ++j) {
      const double time = grid.time(j);
      t.times.push_back(time);
      phis.push_back(pp.phi(time));
      psis.push_back(pp.psi(time));
      hp.push_back(ing.h_prime.col(j).norm());
      ht.push_back(ing.h_tilde.col(j).norm());
      th.push_back(ing.theta_x.col(j).norm());
    }
    t.series = {{"phi", phis}, {"psi", psis}, {"|h'|", hp}, {"|h~|", ht}, {"|Theta_x|", th}};
    return t;
  }
  if (cfg.model == "delay") {
    const Index m = delay_nodes_for(cfg.tau, grid);
    const DelayDirection dir = make_delay_direction(
        A, cfg.tau, m, [&](double th) { return cfg.eta_at(th); },
        [&](double th) { return cfg.eta_prime_at(th); });
    const Matrix gamma = delay_gamma(dir, A, grid);
    const Matrix pert = delay_perturbation(dir, A, grid);
    const Matrix theta = delay_theta(gamma, grid, m);
    std::vector<double> gs, ds, ts;
    for (Index j = -m; j <= grid.steps; ++j) {
      t.times.push_back(grid.dt() * static_cast<double>(j));
      gs.push_back(j >= 0 ? gamma.col(j).norm() : 0.0);
      ds.push_back(pert.col(j + m).norm());
      ts.push_back(theta.col(j + m).norm());
    }
    t.series = {{"|Gamma|", gs}, {"|D|", ds}, {"|Theta|", ts}};
    return t;
  }
  // semilinear: per-active-mode g factors
  const EigenDirection k(cfg.dir_k.size() ? cfg.dir_k : Vector::Unit(A.dim(), 0));
  for (Index j = 0; j <= grid.steps; ++j) t.times.push_back(grid.time(j));
  for (Index i = 0; i < A.dim(); ++i) {
    if (k.coefficients(i) == 0.0) continue;
    const double lam = -A.eigenvalues()(i);
    std::vector<double> g;
    for (Index j = 0; j <= grid.steps; ++j) {
      g.push_back(eigen_g(lam, grid.time(j), std::abs(lam) * grid.horizon));
    }
    t.series.emplace_back("g_mode_" + std::to_string(i + 1), std::move(g));
  }
  return t;
}

std::string ingredient_csv(const IngredientTable& table) {
  std::ostringstream s;
  s.precision(17);
  s << "t";
  for (const auto& [name, ys] : table.series) s << ',' << name;
  s << '\n';
  for (std::size_t r = 0; r < table.times.size(); ++r) {
    s << table.times[r];
    for (const auto& [name, ys] : table.series) s << ',' << (r < ys.size() ? ys[r] : 0.0);
    s << '\n';
  }
  return s.str();
}

std::string sample_path_csv(const ExperimentConfig& cfg, std::uint64_t path_index) {
  const SpectralOperator A = cfg.make_operator();
  const SigmaOperator sig = cfg.make_sigma();
  const SimGrid grid = cfg.make_grid();
  std::ostringstream s;
  s.precision(17);
  if (cfg.model == "delay") {
    const SegmentDriftModel b = cfg.make_segment_drift();
    const Matrix xi0 = cfg.initial_segment(grid);
    NoisePath noise = NoisePath::generate(cfg.seed, path_index, grid, A.dim());
    DelayPath p = simulate_delay(xi0, A, sig, b, grid, cfg.tau, noise);
    s << "t";
    for (Index i = 0; i < A.dim(); ++i) s << ",X_" << (i + 1);
    s << '\n';
    for (Index j = -p.delay_nodes; j <= grid.steps; ++j) {
      s << grid.dt() * static_cast<double>(j);
      for (Index i = 0; i < A.dim(); ++i) s << ',' << p.state(j)(i);
      s << '\n';
    }
    return s.str();
  }
  if (cfg.model == "hamiltonian") {
    const Matrix B = cfg.make_b_matrix();
    const DriftModel b = hamiltonian_drift(cfg, A);
    const Vector x0 = cfg.x0.size() ? cfg.x0 : Vector::Zero(cfg.x_dim);
    const Vector y0 = cfg.y0.size() ? cfg.y0 : Vector::Zero(cfg.n);
    NoisePath noise = NoisePath::generate(cfg.seed, path_index, grid, cfg.n);
    HamPath p = simulate_hamiltonian(x0, y0, B, A, sig, b, grid, noise);
    s << "t";
    for (Index i = 0; i < cfg.x_dim; ++i) s << ",X_" << (i + 1);
    for (Index i = 0; i < cfg.n; ++i) s << ",Y_" << (i + 1);
    s << '\n';
    for (Index j = 0; j <= grid.steps; ++j) {
      s << grid.time(j);
      for (Index i = 0; i < cfg.x_dim; ++i) s << ',' << p.x_states(i, j);
      for (Index i = 0; i < cfg.n; ++i) s << ',' << p.y_states(i, j);
      s << '\n';
    }
    return s.str();
  }
  const DriftModel b = cfg.make_state_drift(A);
  const Vector x0 = cfg.x0.size() ? cfg.x0 : Vector::Zero(A.dim());
  NoisePath noise = NoisePath::generate(cfg.seed, path_index, grid, A.dim());
  PathSample p = simulate_semilinear(x0, A, sig, b, grid, noise);
  s << "t";
  for (Index i = 0; i < A.dim(); ++i) s << ",X_" << (i + 1);
  s << '\n';
  for (Index j = 0; j <= grid.steps; ++j) {
    s << grid.time(j);
    for (Index i = 0; i < A.dim(); ++i) s << ',' << p.states(i, j);
    s << '\n';
  }
  return s.str();
}

}  // namespace ibplab
