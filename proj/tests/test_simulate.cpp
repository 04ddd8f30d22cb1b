#include <doctest.h>

#include <cmath>

#include "ibplab/simulate.hpp"
#include "ibplab/stats.hpp"

using namespace ibplab;

namespace {
NoisePath silent_noise(const SimGrid& grid, Index n) {
  NoisePath np;
  np.dt = grid.dt();
  np.increments = Matrix::Zero(n, grid.steps);
  return np;
}
}  // namespace

TEST_CASE("pure decay reproduces the scalar exponential") {
  SpectralOperator A{(Vector(1) << 1.0).finished()};
  SigmaOperator sig = SigmaOperator::identity(1);
  DriftModel b = make_zero_drift(1);
  SimGrid grid(1.0, 1024);
  NoisePath noise = silent_noise(grid, 1);
  PathSample p = simulate_semilinear((Vector(1) << 1.0).finished(), A, sig, b, grid, noise);
  CHECK(p.terminal()(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(p.states(0, 0) == 1.0);
}

TEST_CASE("constant shift realizes the variation-of-constants integral") {
  SpectralOperator A{(Vector(1) << 2.0).finished()};
  SigmaOperator sig = SigmaOperator::identity(1);
  DriftModel b = make_zero_drift(1);
  SimGrid grid(1.0, 1024);
  NoisePath noise = silent_noise(grid, 1);
  const double eps = 0.1;
  ShiftSpec shift = ShiftSpec::tabulate(eps, grid, 1, [](double) {
    return (Vector(1) << 1.0).finished();
  });
  PathSample base = simulate_semilinear(Vector::Zero(1), A, sig, b, grid, noise);
  PathSample moved = simulate_semilinear(Vector::Zero(1), A, sig, b, grid, noise, &shift);
  const double lam = 2.0;
  const double target = eps * (1.0 - std::exp(-lam * grid.horizon)) / lam;
  CHECK(std::abs(moved.terminal()(0) - base.terminal()(0) - target) <= 5.0 * eps * grid.dt());
}

TEST_CASE("same noise path is bitwise deterministic") {
  SpectralOperator A{(Vector(2) << 1.0, 4.0).finished()};
  SigmaOperator sig = SigmaOperator::diagonal((Vector(2) << 1.0, 0.5).finished());
  SimGrid grid(1.0, 256);
  NoisePath noise = NoisePath::generate(5, 17, grid, 2);
  Vector x0 = (Vector(2) << 0.3, -0.2).finished();

  DriftModel zero = make_zero_drift(2);
  PathSample a = simulate_semilinear(x0, A, sig, zero, grid, noise);
  PathSample b = simulate_semilinear(x0, A, sig, zero, grid, noise);
  CHECK(a.states == b.states);

  // zero-amplitude shift changes nothing, bit for bit
  ShiftSpec nil = ShiftSpec::tabulate(0.0, grid, 2, [](double) { return Vector::Ones(2).eval(); });
  PathSample c = simulate_semilinear(x0, A, sig, zero, grid, noise, &nil);
  CHECK(a.states == c.states);
}

TEST_CASE("ornstein-uhlenbeck weak error is first order with deterministic halving") {
  SpectralOperator A{(Vector(1) << 1.0).finished()};
  SigmaOperator sig = SigmaOperator::identity(1);
  DriftModel b = make_zero_drift(1);
  const double T = 1.0, lam = 1.0;
  const double x0v = 1.0;
  const double cont_var = (1.0 - std::exp(-2.0 * lam * T)) / (2.0 * lam);

  // the scheme's terminal variance has a closed form; its defect halves with dt
  auto discrete_var = [&](Index steps) {
    const double dt = T / double(steps);
    const double a = std::exp(-2.0 * lam * dt);
    return dt * (1.0 - std::pow(a, steps)) / (1.0 - a);
  };
  const double err_full = std::abs(discrete_var(64) - cont_var);
  const double err_half = std::abs(discrete_var(128) - cont_var);
  CHECK(err_half / err_full > 0.4);
  CHECK(err_half / err_full < 0.6);

  // and the sampled variance sits on the discrete value within noise
  SimGrid grid(T, 64);
  MomentAccum acc;
  const int paths = 20000;
  for (int i = 0; i < paths; ++i) {
    NoisePath noise = NoisePath::generate(33, i, grid, 1);
    PathSample p =
        simulate_semilinear((Vector(1) << x0v).finished(), A, sig, b, grid, noise);
    acc.add(p.terminal()(0));
  }
  CHECK(std::abs(acc.mean() - std::exp(-lam * T) * x0v) < 4.0 * acc.std_error());
  const double sample_var = acc.variance();
  const double se_var = sample_var * std::sqrt(2.0 / paths);
  CHECK(std::abs(sample_var - discrete_var(64)) < 4.0 * se_var);
}

TEST_CASE("shift response is linear in epsilon") {
  SpectralOperator A{(Vector(1) << 1.0).finished()};
  SigmaOperator sig = SigmaOperator::identity(1);
  DriftModel b = make_zero_drift(1);
  SimGrid grid(1.0, 128);
  NoisePath noise = NoisePath::generate(3, 2, grid, 1);
  Vector x0 = (Vector(1) << 0.5).finished();
  ShiftSpec s1 = ShiftSpec::tabulate(0.1, grid, 1, [](double t) {
    return (Vector(1) << std::sin(t)).finished();
  });
  ShiftSpec s2 = s1;
  s2.epsilon = 0.2;
  PathSample base = simulate_semilinear(x0, A, sig, b, grid, noise);
  PathSample p1 = simulate_semilinear(x0, A, sig, b, grid, noise, &s1);
  PathSample p2 = simulate_semilinear(x0, A, sig, b, grid, noise, &s2);
  Matrix d1 = p1.states - base.states;
  Matrix d2 = p2.states - base.states;
  CHECK((d2 - 2.0 * d1).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("two-component system: zero velocity keeps the position frozen") {
  SpectralOperator A{(Vector(2) << 1.0, 2.0).finished()};
  SigmaOperator sig = SigmaOperator::identity(2);
  DriftModel b = make_zero_drift(2);
  b.in_dim = 4;
  SimGrid grid(1.0, 128);
  NoisePath noise = silent_noise(grid, 2);
  Vector x0 = (Vector(2) << 0.7, -0.3).finished();
  HamPath p = simulate_hamiltonian(x0, Vector::Zero(2), Matrix::Identity(2, 2), A, sig, b, grid,
                                   noise);
  for (Index j = 0; j <= grid.steps; ++j) CHECK((p.x_states.col(j) - x0).norm() == 0.0);
}

TEST_CASE("shifted two-component run requires the base path") {
  SpectralOperator A{(Vector(1) << 1.0).finished()};
  SigmaOperator sig = SigmaOperator::identity(1);
  DriftModel b = make_zero_drift(1);
  b.in_dim = 2;
  SimGrid grid(1.0, 32);
  NoisePath noise = silent_noise(grid, 1);
  ShiftSpec spec = ShiftSpec::tabulate(0.1, grid, 1, [](double) { return Vector::Ones(1).eval(); });
  CHECK_THROWS_AS(simulate_hamiltonian(Vector::Zero(1), Vector::Zero(1), Matrix::Identity(1, 1), A,
                                       sig, b, grid, noise, &spec, nullptr),
                  ConfigError);
}

TEST_CASE("delay simulation: constant segment decays like the semigroup") {
  SpectralOperator A{(Vector(1) << 1.0).finished()};
  SigmaOperator sig = SigmaOperator::identity(1);
  DriftModel dummy = make_zero_drift(1);
  (void)dummy;
  SegmentDriftModel b;
  b.name = "zero";
  b.dim = 1;
  b.tau = 0.5;
  b.is_zero = true;
  SimGrid grid(1.0, 256);
  NoisePath noise = silent_noise(grid, 1);
  Matrix xi0 = Matrix::Constant(1, 129, 0.8);  // tau = 0.5 -> m = 128
  DelayPath p = simulate_delay(xi0, A, sig, b, grid, 0.5, noise);
  CHECK(p.history.leftCols(129) == xi0);
  CHECK(p.state(grid.steps)(0) == doctest::Approx(0.8 * std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("delay grid alignment is enforced") {
  SimGrid grid(1.0, 100);
  CHECK_THROWS_AS(delay_nodes_for(0.333, grid), ConfigError);
  CHECK_THROWS_AS(delay_nodes_for(0.0, grid), ConfigError);
  CHECK(delay_nodes_for(0.5, grid) == 50);
}

TEST_CASE("divergent drift raises a simulation error with a step index") {
  SpectralOperator A{(Vector(1) << 1.0).finished()};
  SigmaOperator sig = SigmaOperator::identity(1);
  DriftModel boom = make_linear_drift(Matrix::Constant(1, 1, 1e200));
  SimGrid grid(1.0, 64);
  NoisePath noise = silent_noise(grid, 1);
  try {
    simulate_semilinear((Vector(1) << 1.0).finished(), A, sig, boom, grid, noise);
    CHECK(false);
  } catch (const SimulationError& e) {
    CHECK(e.step() >= 1);
  }
}
