#include <doctest.h>

#include <cmath>

#include "ibplab/drift.hpp"
#include "ibplab/rng.hpp"

using namespace ibplab;

namespace {
// central finite difference of eval along k
Vector fd_dderiv(const DriftModel& m, const Vector& x, const Vector& k, double eps) {
  return (m.eval(x + eps * k) - m.eval(x - eps * k)) / (2.0 * eps);
}
}  // namespace

TEST_CASE("registry basics") {
  DriftParams none;
  auto zero = registry_get_state("zero", none, 3);
  PathRng rng(1, 0);
  CHECK(zero.eval(gaussian_vector(rng, 3)).isZero(0.0));
  CHECK(zero.is_zero);

  DriftParams sine_params;
  sine_params.scalars["c"] = 0.5;
  auto sine = registry_get_state("sine", sine_params, 1);
  Vector x = (Vector(1) << 0.7).finished();
  Vector k = (Vector(1) << 2.0).finished();
  CHECK(sine.dderiv(x, k)(0) == doctest::Approx(0.5 * std::cos(0.7) * 2.0).epsilon(1e-15));

  CHECK_THROWS_AS(registry_get("nope", none, 2), ConfigError);
  DriftParams no_tau;
  no_tau.scalars["c"] = 1.0;
  CHECK_THROWS_AS(registry_get("delay_terminal", no_tau, 2), ConfigError);
  CHECK_THROWS_AS(registry_get_segment("sine", sine_params, 1), ConfigError);
}

TEST_CASE("delay terminal drift evaluates F at the oldest node") {
  DriftParams p;
  p.scalars["c"] = 1.0;
  p.scalars["tau"] = 0.5;
  auto b = registry_get_segment("delay_terminal", p, 2);
  Matrix seg(2, 5);
  for (Index l = 0; l < 5; ++l) seg.col(l) = Vector::Constant(2, 0.1 * double(l + 1));
  SegmentView view(seg, 0, 5);
  Vector out = b.eval(view);
  CHECK(out(0) == doctest::Approx(std::tanh(0.1)).epsilon(1e-15));
  CHECK(out(1) == doctest::Approx(std::tanh(0.1)).epsilon(1e-15));

  // derivative only sees the oldest node of the direction segment
  Matrix dir = Matrix::Zero(2, 5);
  dir.col(0) = Vector::Constant(2, 1.0);
  const double th = std::tanh(0.1);
  CHECK(b.dderiv(view, SegmentView(dir, 0, 5))(0) == doctest::Approx(1.0 - th * th).epsilon(1e-15));
  dir.col(0).setZero();
  dir.col(4) = Vector::Constant(2, 1.0);
  CHECK(b.dderiv(view, SegmentView(dir, 0, 5)).isZero(0.0));
}

TEST_CASE("directional derivatives: homogeneity and finite differences") {
  SpectralOperator A{(Vector(3) << 1.0, 4.0, 9.0).finished()};
  DriftParams sine_params, lin_params, gibbs_params;
  sine_params.scalars["c"] = 0.5;
  Matrix m(3, 3);
  m << -1.0, 0.2, 0.0, 0.2, -2.0, 0.1, 0.0, 0.1, -0.5;
  lin_params.matrix = m;
  gibbs_params.vector = (Vector(3) << 1.0, 2.0, 0.5).finished();
  gibbs_params.scalars["delta"] = 0.3;

  std::vector<DriftModel> models;
  models.push_back(registry_get_state("sine", sine_params, 3));
  models.push_back(registry_get_state("linear", lin_params, 3));
  models.push_back(registry_get_state("gibbs_gradient", gibbs_params, 3, &A));

  PathRng rng(17, 0);
  for (const auto& model : models) {
    for (int rep = 0; rep < 5; ++rep) {
      Vector x = gaussian_vector(rng, 3);
      Vector k = gaussian_vector(rng, 3);
      const double alpha = 2.0 * rng.next_unit() - 1.0;
      CHECK((model.dderiv(x, alpha * k) - alpha * model.dderiv(x, k)).norm() <=
            1e-12 * (1.0 + model.dderiv(x, k).norm()));
      const double scale = std::max(1.0, k.norm());
      Vector fd = fd_dderiv(model, x, k, 1e-4 / scale);
      CHECK((fd - model.dderiv(x, k)).norm() <= 1e-6 * scale);
    }
  }
}

TEST_CASE("sigma-weighted derivative bounds dominate a sampled grid") {
  SpectralOperator A{(Vector(2) << 1.0, 4.0).finished()};
  SigmaOperator sig = SigmaOperator::diagonal((Vector(2) << 1.0, 0.5).finished());
  DriftParams p;
  p.scalars["c"] = 0.7;
  auto sine = registry_get_state("sine", p, 2);
  DriftParams g;
  g.vector = (Vector(2) << 1.0, 1.5).finished();
  g.scalars["delta"] = 0.2;
  auto gibbs = registry_get_state("gibbs_gradient", g, 2, &A);

  PathRng rng(23, 0);
  for (const auto& model : {sine, gibbs}) {
    Vector k = gaussian_vector(rng, 2);
    const double bound = model.sigma_dderiv_bound(k, sig);
    for (int rep = 0; rep < 200; ++rep) {
      Vector x = 3.0 * gaussian_vector(rng, 2);
      CHECK(sig.sigma_norm(model.dderiv(x, k)) <= bound * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("gauss-hermite rule integrates moments exactly") {
  Vector u, w;
  gauss_hermite(21, u, w);
  const double spi = std::sqrt(M_PI);
  double m0 = 0, m2 = 0, m4 = 0, m10 = 0;
  for (Index j = 0; j < 21; ++j) {
    m0 += w(j);
    m2 += w(j) * u(j) * u(j);
    m4 += w(j) * std::pow(u(j), 4);
    m10 += w(j) * std::pow(u(j), 10);
  }
  CHECK(m0 == doctest::Approx(spi).epsilon(1e-13));
  CHECK(m2 == doctest::Approx(0.5 * spi).epsilon(1e-13));
  CHECK(m4 == doctest::Approx(0.75 * spi).epsilon(1e-13));
  // int u^10 e^{-u^2} = (9!!/2^5) sqrt(pi) = 945/32 sqrt(pi)
  CHECK(m10 == doctest::Approx(945.0 / 32.0 * spi).epsilon(1e-12));
  CHECK_THROWS_AS(gauss_hermite(2, u, w), ConfigError);
}

TEST_CASE("mollified linear drift is exact") {
  Matrix m(2, 2);
  m << -1.0, 0.5, 0.0, -2.0;
  auto lin = make_linear_drift(m);
  Vector k = (Vector(2) << 1.0, -1.0).finished();
  auto smooth = mollify_directional(lin, k, 0.3, 11);
  PathRng rng(29, 0);
  for (int rep = 0; rep < 5; ++rep) {
    Vector x = gaussian_vector(rng, 2);
    CHECK((smooth.eval(x) - lin.eval(x)).norm() <= 1e-12 * (1.0 + lin.eval(x).norm()));
    Vector d = gaussian_vector(rng, 2);
    CHECK((smooth.dderiv(x, d) - lin.dderiv(x, d)).norm() <= 1e-11);
  }
}

TEST_CASE("mollified sine matches the closed-form gaussian smoothing") {
  auto sine = make_sine_drift(1, 1.0);
  Vector k = (Vector(1) << 1.0).finished();
  const double eps = 0.2;
  auto smooth = mollify_directional(sine, k, eps, 21);
  // E[sin(x + sqrt(eps) Z)] = e^{-eps/2} sin(x)
  for (double x : {0.0, 0.4, -1.1, 2.5}) {
    Vector xv = (Vector(1) << x).finished();
    CHECK(smooth.eval(xv)(0) ==
          doctest::Approx(std::exp(-eps / 2.0) * std::sin(x)).epsilon(1e-10));
  }
  // kernel-route derivative at 0 equals e^{-eps/2}
  Vector zero = Vector::Zero(1);
  CHECK(smooth.eval(zero)(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(smooth.dderiv(zero, k)(0) == doctest::Approx(std::exp(-0.1)).epsilon(1e-10));
}

TEST_CASE("mollification error vanishes linearly in eps") {
  auto sine = make_sine_drift(1, 1.0);
  Vector k = (Vector(1) << 1.0).finished();
  for (double eps : {0.2, 0.1, 0.05, 0.01}) {
    auto smooth = mollify_directional(sine, k, eps, 21);
    double worst = 0.0;
    for (double x = -3.0; x <= 3.0; x += 0.25) {
      Vector xv = (Vector(1) << x).finished();
      worst = std::max(worst, std::abs(smooth.eval(xv)(0) - std::sin(x)));
    }
    CHECK(worst <= eps);  // |e^{-eps/2} - 1| <= eps/2 on |sin| <= 1
  }
}

TEST_CASE("mollified derivative bound is independent of eps") {
  auto tanh_like = make_delay_terminal_drift(2, 0.8, 0.5);  // segment model, not mollified here
  (void)tanh_like;
  auto sine = make_sine_drift(2, 0.5);
  SigmaOperator sig = SigmaOperator::diagonal((Vector(2) << 1.0, 0.5).finished());
  Vector k = (Vector(2) << 1.0, 0.25).finished();
  const double base_bound = sine.sigma_dderiv_bound(k, sig);
  for (double eps : {0.5, 0.1, 0.02}) {
    auto smooth = mollify_directional(sine, k, eps, 21);
    CHECK(smooth.sigma_dderiv_bound(k, sig) == doctest::Approx(base_bound).epsilon(1e-14));
  }
}

TEST_CASE("mollified drift without base derivative rejects transverse directions") {
  auto sine = make_sine_drift(2, 1.0);
  sine.dderiv = nullptr;
  Vector k = (Vector(2) << 1.0, 0.0).finished();
  auto smooth = mollify_directional(sine, k, 0.1, 11);
  Vector x = Vector::Zero(2);
  CHECK_NOTHROW(smooth.dderiv(x, k));
  CHECK_NOTHROW(smooth.dderiv(x, 2.5 * k));
  CHECK_THROWS_AS(smooth.dderiv(x, (Vector(2) << 0.0, 1.0).finished()), ConfigError);
}

TEST_CASE("position-lifted drift ignores the velocity block") {
  SpectralOperator A{(Vector(2) << 1.0, 2.0).finished()};
  DriftParams g;
  g.vector = (Vector(2) << 1.0, 1.0).finished();
  g.scalars["delta"] = 0.3;
  auto on_x = registry_get_state("gibbs_gradient", g, 2, &A);
  auto lifted = lift_position_drift(on_x, 2, 2);
  PathRng rng(31, 0);
  Vector x = gaussian_vector(rng, 2);
  Vector y1 = gaussian_vector(rng, 2);
  Vector y2 = gaussian_vector(rng, 2);
  Vector z1(4), z2(4);
  z1 << x, y1;
  z2 << x, y2;
  CHECK(lifted.eval(z1) == lifted.eval(z2));
  Vector dir(4);
  dir << 0.0, 0.0, 1.0, 1.0;  // pure velocity direction
  CHECK(lifted.dderiv(z1, dir).isZero(0.0));
}
