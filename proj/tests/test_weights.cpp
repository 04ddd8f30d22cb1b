#include <doctest.h>

#include <cmath>

#include "ibplab/quadrature.hpp"
#include "ibplab/simulate.hpp"
#include "ibplab/stats.hpp"
#include "ibplab/weights.hpp"

using namespace ibplab;

TEST_CASE("per-mode g factor and its small-eigenvalue branches") {
  CHECK(eigen_g(-1.0, 0.5, 0.5) == doctest::Approx((1.0 - std::exp(-0.5))).epsilon(1e-15));
  CHECK(eigen_g(0.0, 0.7, 0.0) == 0.7);
  // series branch agrees with the exact value
  const double lam = -1e-7;
  CHECK(eigen_g(lam, 0.5, 1e-7) ==
        doctest::Approx(std::expm1(lam * 0.5) / lam).epsilon(1e-12));
}

TEST_CASE("direction types validate their inputs") {
  CHECK_THROWS_AS(EigenDirection{Vector::Zero(3)}, ConfigError);
  CHECK_NOTHROW(EigenDirection::unit(3, 2));
  SpectralOperator A{(Vector(2) << 1.0, 2.0).finished()};
  // k2 not an eigenvector direction of the diagonal operator
  CHECK_THROWS_AS(
      make_ham_direction(A, Matrix::Identity(2, 2), (Vector(2) << 1.0, 0.0).finished(),
                         (Vector(2) << 1.0, 1.0).finished()),
      ConfigError);
  HamDirection d = make_ham_direction(A, Matrix::Identity(2, 2),
                                      (Vector(2) << 1.0, 0.0).finished(),
                                      (Vector(2) << 0.0, 2.0).finished());
  CHECK(d.theta1 == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(d.theta2 == doctest::Approx(-2.0).epsilon(1e-14));
}

TEST_CASE("ornstein-uhlenbeck weight: closed form, identity, and isometry") {
  SpectralOperator A{(Vector(1) << 1.0).finished()};
  SigmaOperator sig = SigmaOperator::identity(1);
  DriftModel b = make_zero_drift(1);
  SimGrid grid(1.0, 512);
  EigenDirection k(Vector::Ones(1));
  SemilinearWeightPlan plan(k, A, grid);

  const double pref = 1.0 / (1.0 - std::exp(-1.0));
  MomentAccum fm, msq, m_acc;
  const int paths = 20000;
  for (int i = 0; i < paths; ++i) {
    NoisePath noise = NoisePath::generate(101, i, grid, 1);
    PathSample p = simulate_semilinear((Vector(1) << 0.3).finished(), A, sig, b, grid, noise);
    const double m = plan.evaluate(p, b, sig);
    // drift-free weight is the scaled terminal Brownian value
    CHECK(m == doctest::Approx(pref * noise.increments.sum()).epsilon(1e-12));
    fm.add(p.terminal()(0) * m);
    msq.add(m * m);
    m_acc.add(m);
  }
  // derivative identity for f(x) = x: E[X_T M] = 1
  CHECK(std::abs(fm.mean() - 1.0) <= 3.0 * fm.std_error() + 2.0 * grid.dt());
  // Ito isometry: E[M^2] = T / g(T)^2
  CHECK(std::abs(msq.mean() - pref * pref) <= 3.0 * msq.std_error());
  // zero mean
  CHECK(std::abs(m_acc.mean()) <= 3.0 * m_acc.std_error());
  // quadrature bound equals the isometry value for the drift-free case
  const double bound = semilinear_weight_l2_bound(k, b, A, sig, 1.0);
  CHECK(bound == doctest::Approx(pref * pref).epsilon(1e-10));
}

TEST_CASE("weight is linear in the direction, pathwise") {
  SpectralOperator A{(Vector(2) << 1.0, 4.0).finished()};
  SigmaOperator sig = SigmaOperator::diagonal((Vector(2) << 1.0, 0.7).finished());
  DriftModel b = make_sine_drift(2, 0.5);
  SimGrid grid(1.0, 128);
  NoisePath noise = NoisePath::generate(7, 3, grid, 2);
  PathSample p = simulate_semilinear(Vector::Zero(2), A, sig, b, grid, noise);

  EigenDirection k1(Vector::Unit(2, 0));
  EigenDirection k2(Vector::Unit(2, 1));
  Vector mixed = (Vector(2) << 2.0, -0.5).finished();
  EigenDirection km(mixed);
  const double w1 = semilinear_weight(p, k1, b, A, sig);
  const double w2 = semilinear_weight(p, k2, b, A, sig);
  const double wm = semilinear_weight(p, km, b, A, sig);
  CHECK(wm == doctest::Approx(2.0 * w1 - 0.5 * w2).epsilon(1e-12));

  EigenDirection scaled((Vector(2) << 6.0, -1.5).finished());
  CHECK(semilinear_weight(p, scaled, b, A, sig) == doctest::Approx(3.0 * wm).epsilon(1e-12));
}

TEST_CASE("default scalar weight pair satisfies its constraints") {
  PhiPsi pp = default_phi_psi(1.0, 0.0, 0.0);
  // phi(t) = 6 t (1 - t) when theta1 = 0, T = 1
  for (double t : {0.1, 0.35, 0.8}) {
    CHECK(pp.phi(t) == doctest::Approx(6.0 * t * (1.0 - t)).epsilon(1e-12));
  }
  CHECK(integrate([&](double t) { return pp.phi(t); }, 0.0, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(integrate([&](double t) { return 3.0 * t * t - 2.0 * t; }, 0.0, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pp.psi(0.0) == 0.0);
  CHECK(pp.psi(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(check_ph_constraints(pp).cwiseAbs().maxCoeff() < 1e-13);

  PhiPsi pp2 = default_phi_psi(1.5, -1.0, 2.0);
  CHECK(check_ph_constraints(pp2).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(pp2.phi(0.0) == 0.0);
  CHECK(pp2.phi(1.5) == 0.0);
}

TEST_CASE("constraint residuals detect a perturbed pair") {
  PhiPsi pp = default_phi_psi(1.0, 0.5, -0.25);
  PhiPsi bad = pp;
  auto base_phi = pp.phi;
  bad.phi = [base_phi](double t) {
    const double bump = std::sin(M_PI * t);
    return base_phi(t) + 0.1 * bump * bump;
  };
  const auto r = check_ph_constraints(bad);
  CHECK(r.cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("twenty random draws satisfy the constraints below 1e-10") {
  PathRng rng(404, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const double T = 0.5 + 1.5 * rng.next_unit();
    const double t1 = -3.0 + 6.0 * rng.next_unit();
    const double t2 = -3.0 + 6.0 * rng.next_unit();
    PhiPsi pp = default_phi_psi(T, t1, t2);
    CHECK(check_ph_constraints(pp).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("shifted-system ingredients hit the endpoint identities") {
  SpectralOperator A{(Vector(2) << 1.0, 2.0).finished()};
  SUBCASE("identity coupling") {
    const Matrix B = Matrix::Identity(2, 2);
    const HamDirection dir = make_ham_direction(A, B, (Vector(2) << 1.0, 0.0).finished(),
                                                (Vector(2) << 0.0, 1.0).finished());
    const SimGrid grid(1.0, 1024);
    const PhiPsi pp = default_phi_psi(1.0, dir.theta1, dir.theta2);
    const HamIngredients ing = ham_h_theta(pp, dir, grid);
    CHECK(ing.theta_full.col(0).norm() == 0.0);
    CHECK((ing.h_tilde.col(grid.steps) - dir.k2).norm() < 1e-12);
    Vector want(4);
    want << dir.k1, dir.k2;
    CHECK((ing.theta_full.col(grid.steps) - want).norm() < 1e-8);
  }
  SUBCASE("diagonal non-identity coupling") {
    Matrix B = (Matrix(2, 2) << 2.0, 0.0, 0.0, 3.0).finished();
    const HamDirection dir = make_ham_direction(A, B, (Vector(2) << 2.0, 0.0).finished(),
                                                (Vector(2) << 0.0, 1.0).finished());
    const SimGrid grid(0.8, 1024);
    const PhiPsi pp = default_phi_psi(0.8, dir.theta1, dir.theta2);
    const HamIngredients ing = ham_h_theta(pp, dir, grid);
    Vector want(4);
    want << dir.k1, dir.k2;
    CHECK((ing.theta_full.col(grid.steps) - want).norm() < 1e-8);
  }
}

TEST_CASE("shared-noise shift lands on the requested terminal direction") {
  SpectralOperator A{(Vector(2) << 1.0, 2.0).finished()};
  SigmaOperator sig = SigmaOperator::identity(2);
  const Matrix B = Matrix::Identity(2, 2);
  DriftModel b = make_zero_drift(2);
  b.in_dim = 4;
  const SimGrid grid(1.0, 1024);
  const HamDirection dir = make_ham_direction(A, B, (Vector(2) << 1.0, 0.0).finished(),
                                              (Vector(2) << 0.0, 1.0).finished());
  const PhiPsi pp = default_phi_psi(1.0, dir.theta1, dir.theta2);
  const HamIngredients ing = ham_h_theta(pp, dir, grid);
  NoisePath noise = NoisePath::generate(55, 4, grid, 2);
  Vector x0 = (Vector(2) << 0.2, -0.1).finished();
  Vector y0 = (Vector(2) << 0.0, 0.3).finished();
  HamPath base = simulate_hamiltonian(x0, y0, B, A, sig, b, grid, noise);
  for (double eps : {0.1, 0.01}) {
    ShiftSpec spec{eps, ing.h_prime};
    HamPath moved = simulate_hamiltonian(x0, y0, B, A, sig, b, grid, noise, &spec, &base);
    // nodewise velocity perturbation follows h~
    double worst = 0.0;
    for (Index j = 0; j <= grid.steps; ++j) {
      worst = std::max(worst, (moved.y_states.col(j) - base.y_states.col(j) -
                               eps * ing.h_tilde.col(j))
                                  .norm());
    }
    CHECK(worst / eps <= 5.0 * grid.dt());
    Vector gap(4);
    gap << moved.x_states.col(grid.steps) - base.x_states.col(grid.steps) - eps * dir.k1,
        moved.y_states.col(grid.steps) - base.y_states.col(grid.steps) - eps * dir.k2;
    CHECK(gap.norm() / eps <= 5.0 * grid.dt());
  }
}

TEST_CASE("drift-free weight for the two-component system obeys the isometry") {
  SpectralOperator A{(Vector(2) << 1.0, 2.0).finished()};
  SigmaOperator sig = SigmaOperator::identity(2);
  const Matrix B = Matrix::Identity(2, 2);
  DriftModel b = make_zero_drift(2);
  b.in_dim = 4;
  const SimGrid grid(1.0, 256);
  const HamDirection dir = make_ham_direction(A, B, (Vector(2) << 1.0, 0.0).finished(),
                                              (Vector(2) << 0.0, 1.0).finished());
  const PhiPsi pp = default_phi_psi(1.0, dir.theta1, dir.theta2);
  const HamIngredients ing = ham_h_theta(pp, dir, grid);
  const double iso = integrate(
      [&](double t) {
        Vector hp = pp.dphi(t) * std::exp(dir.theta1 * (t - 1.0)) * dir.b_pinv_k1 +
                    pp.dpsi(t) * std::exp(dir.theta2 * (t - 1.0)) * dir.k2;
        return hp.squaredNorm();
      },
      0.0, 1.0, 1e-10);

  MomentAccum m_acc, msq;
  const int paths = 20000;
  for (int i = 0; i < paths; ++i) {
    NoisePath noise = NoisePath::generate(606, i, grid, 2);
    HamPath p = simulate_hamiltonian(Vector::Zero(2), Vector::Zero(2), B, A, sig, b, grid, noise);
    const double m = hamiltonian_weight(p, ing, b, sig);
    m_acc.add(m);
    msq.add(m * m);
  }
  CHECK(std::abs(m_acc.mean()) <= 3.0 * m_acc.std_error());
  CHECK(std::abs(msq.mean() - iso) <= 3.0 * msq.std_error() + 20.0 * grid.dt());
}

TEST_CASE("delay tables: endpoints, continuity, and the convolution oracle") {
  SpectralOperator A{(Vector(1) << 1.0).finished()};
  const double T = 1.0, tau = 0.5;
  const SimGrid grid(T, 512);
  const Index m = delay_nodes_for(tau, grid);
  // eta(theta) = cos(theta) + 0.5, a curve with nonzero derivative
  auto eta = [](double th) { return (Vector(1) << std::cos(th) + 0.5).finished(); };
  auto etap = [](double th) { return (Vector(1) << -std::sin(th)).finished(); };
  const DelayDirection dir = make_delay_direction(A, tau, m, eta, etap);
  const Matrix gamma = delay_gamma(dir, A, grid);
  const Matrix pert = delay_perturbation(dir, A, grid);

  // boundary values of the two branches
  const double eta_mtau = eta(-tau)(0);
  CHECK(gamma(0, 0) ==
        doctest::Approx(eta_mtau / (T - tau) * std::exp(T - tau)).epsilon(1e-12));
  // at t = T: eta'(0) - A eta(0) = eta'(0) + eta(0)
  CHECK(gamma(0, grid.steps) == doctest::Approx(etap(0.0)(0) + eta(0.0)(0)).epsilon(1e-12));

  // D vanishes on [-tau, 0], matches eta on the final segment, is continuous
  // at T - tau
  for (Index l = 0; l <= m; ++l) CHECK(pert(0, l) == 0.0);
  for (Index l = 0; l <= m; ++l) {
    const Index j = grid.steps - m + l;
    CHECK(pert(0, j + m) == doctest::Approx(dir.eta(0, l)).epsilon(1e-12));
  }
  const Index j_switch = grid.steps - m;
  const double left = (grid.time(j_switch) / (T - tau)) *
                      std::exp(grid.time(j_switch) + tau - T) * eta_mtau;
  CHECK(pert(0, j_switch + m) == doctest::Approx(left).epsilon(1e-12));
  CHECK(pert(0, j_switch + m) == doctest::Approx(eta_mtau).epsilon(1e-12));

  // independent oracle: D(t) = int_0^t e^{(t-s)A} Gamma(s) ds by fine
  // trapezoid on the analytic branch formulas
  auto gamma_exact = [&](double s) {
    if (s <= T - tau) return eta_mtau / (T - tau) * std::exp(-(s + tau - T));
    return etap(s - T)(0) + eta(s - T)(0);
  };
  auto conv = [&](double t) {
    auto piece = [&](double a2, double b2) {
      const int fine = 20000;
      double acc = 0.0;
      const double h = (b2 - a2) / fine;
      if (h <= 0.0) return 0.0;
      for (int i = 0; i <= fine; ++i) {
        const double s = a2 + h * i;
        const double w = (i == 0 || i == fine) ? 0.5 : 1.0;
        acc += w * h * std::exp(-(t - s)) * gamma_exact(s);
      }
      return acc;
    };
    if (t <= T - tau) return piece(0.0, t);
    return piece(0.0, T - tau) + piece(T - tau, t);
  };
  for (double t : {0.25, 0.5, 0.75, 0.9}) {
    const Index j = static_cast<Index>(std::llround(t / grid.dt()));
    CHECK(pert(0, j + m) == doctest::Approx(conv(grid.time(j))).epsilon(1e-6));
  }

  // zero direction gives zero tables
  const DelayDirection zero = make_constant_delay_direction(A, tau, m, Vector::Zero(1));
  CHECK(delay_gamma(zero, A, grid).isZero(0.0));
  CHECK(delay_perturbation(zero, A, grid).isZero(0.0));
}

TEST_CASE("delay shift realizes the perturbation and the final segment") {
  SpectralOperator A{(Vector(1) << 1.0).finished()};
  SigmaOperator sig = SigmaOperator::identity(1);
  SegmentDriftModel b = make_delay_terminal_drift(1, 0.5, 0.5);
  const SimGrid grid(1.0, 512);
  const Index m = delay_nodes_for(0.5, grid);
  const DelayDirection dir = make_constant_delay_direction(A, 0.5, m, Vector::Ones(1));
  const Matrix gamma = delay_gamma(dir, A, grid);
  const Matrix pert = delay_perturbation(dir, A, grid);
  const Matrix xi0 = Matrix::Constant(1, m + 1, 0.25);
  NoisePath noise = NoisePath::generate(77, 0, grid, 1);
  DelayPath base = simulate_delay(xi0, A, sig, b, grid, 0.5, noise);
  for (double eps : {0.1, 0.01}) {
    ShiftSpec spec{eps, gamma};
    DelayPath moved = simulate_delay(xi0, A, sig, b, grid, 0.5, noise, &spec, &base);
    double worst_nodewise = 0.0;
    for (Index j = 0; j <= grid.steps; ++j) {
      worst_nodewise = std::max(
          worst_nodewise, std::abs(moved.state(j)(0) - base.state(j)(0) - eps * pert(0, j + m)));
    }
    CHECK(worst_nodewise / eps <= 5.0 * grid.dt());
    double worst_final = 0.0;
    for (Index l = 0; l <= m; ++l) {
      const Index j = grid.steps - m + l;
      worst_final = std::max(
          worst_final, std::abs(moved.state(j)(0) - base.state(j)(0) - eps * dir.eta(0, l)));
    }
    CHECK(worst_final / eps <= 5.0 * grid.dt());
  }
}

TEST_CASE("terminal-lag drift correction is supported on (tau, T]") {
  SpectralOperator A{(Vector(1) << 1.0).finished()};
  const SimGrid grid(1.0, 256);
  const Index m = delay_nodes_for(0.5, grid);
  const DelayDirection dir = make_constant_delay_direction(A, 0.5, m, Vector::Ones(1));
  const Matrix pert = delay_perturbation(dir, A, grid);
  SegmentDriftModel b = make_delay_terminal_drift(1, 0.5, 0.5);
  Matrix states = Matrix::Constant(1, grid.steps + m + 1, 0.3);
  // D(t_j - tau) = 0 exactly for t_j <= tau
  for (Index j = 0; j * grid.dt() <= 0.5 + 1e-12 && j < grid.steps; ++j) {
    SegmentView seg(states, j, m + 1);
    SegmentView dseg(pert, j, m + 1);
    CHECK(b.dderiv(seg, dseg).isZero(0.0));
  }
  const Index late = static_cast<Index>(0.75 / grid.dt());
  SegmentView seg(states, late, m + 1);
  SegmentView dseg(pert, late, m + 1);
  CHECK(b.dderiv(seg, dseg).norm() > 0.0);
}

TEST_CASE("drift-free delay weight has zero mean") {
  SpectralOperator A{(Vector(1) << 1.0).finished()};
  SigmaOperator sig = SigmaOperator::identity(1);
  SegmentDriftModel b;
  b.name = "zero";
  b.dim = 1;
  b.tau = 0.5;
  b.is_zero = true;
  const SimGrid grid(1.0, 128);
  const Index m = delay_nodes_for(0.5, grid);
  const DelayDirection dir = make_constant_delay_direction(A, 0.5, m, Vector::Ones(1));
  const Matrix gamma = delay_gamma(dir, A, grid);
  const Matrix pert = delay_perturbation(dir, A, grid);
  const Matrix xi0 = Matrix::Zero(1, m + 1);
  MomentAccum acc;
  for (int i = 0; i < 20000; ++i) {
    NoisePath noise = NoisePath::generate(88, i, grid, 1);
    DelayPath p = simulate_delay(xi0, A, sig, b, grid, 0.5, noise);
    acc.add(delay_weight(p, gamma, pert, b, sig));
  }
  CHECK(std::abs(acc.mean()) <= 3.0 * acc.std_error());
}

TEST_CASE("girsanov density: exactness, martingale mean, small-shift expansion") {
  SpectralOperator A{(Vector(1) << 1.0).finished()};
  SigmaOperator sig = SigmaOperator::identity(1);
  DriftModel b = make_zero_drift(1);
  const SimGrid grid(1.0, 128);

  // zero perturbation has density one
  NoisePath noise = NoisePath::generate(5, 0, grid, 1);
  CHECK(girsanov_density(noise, Matrix::Zero(1, grid.steps + 1), sig).density == 1.0);

  // manual recomputation on a tiny grid
  {
    SimGrid tiny(0.5, 4);
    NoisePath np = NoisePath::generate(6, 1, tiny, 1);
    Matrix xi(1, 5);
    xi << 0.1, -0.2, 0.3, 0.05, -0.1;
    double ito = 0.0;
    for (int j = 0; j < 4; ++j) ito += xi(0, j) * np.increments(0, j);
    double quad = 0.0;
    for (int j = 0; j < 4; ++j) {
      quad += 0.5 * tiny.dt() * (xi(0, j) * xi(0, j) + xi(0, j + 1) * xi(0, j + 1));
    }
    const GirsanovResult r = girsanov_density(np, xi, sig);
    CHECK(r.density == doctest::Approx(std::exp(-ito - 0.5 * quad)).epsilon(1e-14));
    CHECK(!r.clamped);
  }

  // constant drift shift on the decaying scalar model: E[R] = 1 and the
  // normalized expansion converges to the matching stochastic integral
  const double eps_big = 0.1, eps_small = 0.05;
  ShiftSpec s_big = ShiftSpec::tabulate(eps_big, grid, 1,
                                        [](double) { return Vector::Ones(1).eval(); });
  ShiftSpec s_small = s_big;
  s_small.epsilon = eps_small;
  MomentAccum r_mean, dev_big, dev_small;
  for (int i = 0; i < 20000; ++i) {
    NoisePath np = NoisePath::generate(909, i, grid, 1);
    PathSample base = simulate_semilinear(Vector::Zero(1), A, sig, b, grid, np);
    PathSample moved_b = simulate_semilinear(Vector::Zero(1), A, sig, b, grid, np, &s_big);
    PathSample moved_s = simulate_semilinear(Vector::Zero(1), A, sig, b, grid, np, &s_small);
    const double ito = np.increments.sum();  // int <1, dW>
    const GirsanovResult rb =
        girsanov_density(np, girsanov_xi_semilinear(base, moved_b, b, s_big), sig);
    const GirsanovResult rs =
        girsanov_density(np, girsanov_xi_semilinear(base, moved_s, b, s_small), sig);
    r_mean.add(rb.density);
    dev_big.add((1.0 - rb.density) / eps_big - ito);
    dev_small.add((1.0 - rs.density) / eps_small - ito);
  }
  CHECK(std::abs(r_mean.mean() - 1.0) <= 3.0 * r_mean.std_error());
  // deviation scales linearly in eps
  CHECK(std::abs(dev_small.mean()) <=
        0.75 * std::abs(dev_big.mean()) +
            3.0 * (dev_big.std_error() + dev_small.std_error()));
}

TEST_CASE("girsanov overflow is clamped and flagged") {
  SigmaOperator sig = SigmaOperator::identity(1);
  SimGrid grid(1.0, 8);
  NoisePath np = NoisePath::generate(1, 1, grid, 1);
  Matrix xi = Matrix::Constant(1, 9, 1e6);
  const GirsanovResult r = girsanov_density(np, xi, sig);
  CHECK(r.clamped);
  CHECK(std::isfinite(r.density));
}
