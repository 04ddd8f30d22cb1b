#include <doctest.h>

#include <cmath>

#include "ibplab/rng.hpp"
#include "ibplab/spectral.hpp"

using namespace ibplab;

TEST_CASE("diagonal action of A") {
  SpectralOperator op{(Vector(2) << 1.0, 4.0).finished()};
  Vector x = (Vector(2) << 1.0, 1.0).finished();
  Vector ax = apply_A(op, x);
  CHECK(ax(0) == -1.0);
  CHECK(ax(1) == -4.0);

  CHECK(apply_A(op, Vector::Zero(2)).isZero(0.0));

  SpectralOperator scalar{(Vector(1) << 2.0).finished()};
  CHECK(apply_A(scalar, (Vector(1) << 3.0).finished())(0) == -6.0);
}

TEST_CASE("semigroup values against scalar exponentials") {
  SpectralOperator op{(Vector(2) << 1.0, 4.0).finished()};
  Vector x = (Vector(2) << 1.0, 1.0).finished();

  // t = 0 is the identity, exactly
  CHECK(semigroup_apply(op, 0.0, x) == x);

  SpectralOperator one{(Vector(1) << 1.0).finished()};
  CHECK(semigroup_apply(one, std::log(2.0), (Vector(1) << 1.0).finished())(0) ==
        doctest::Approx(0.5).epsilon(1e-15));

  Vector y = semigroup_apply(op, 1.0, x);
  CHECK(y(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(y(1) == doctest::Approx(std::exp(-4.0)).epsilon(1e-15));
}

TEST_CASE("semigroup composition and contraction") {
  SpectralOperator op{(Vector(3) << 0.5, 2.0, 9.0).finished()};
  PathRng rng(5, 0);
  for (int rep = 0; rep < 20; ++rep) {
    Vector x = gaussian_vector(rng, 3);
    const double s = rng.next_unit();
    const double t = 2.0 * rng.next_unit();
    Vector both = semigroup_apply(op, s + t, x);
    Vector chained = semigroup_apply(op, s, semigroup_apply(op, t, x));
    CHECK((both - chained).norm() <= 1e-14 * x.norm());
    CHECK(semigroup_apply(op, t, x).norm() <= std::exp(-0.5 * t) * x.norm() * (1.0 + 1e-14));
  }
  CHECK_THROWS_AS(semigroup_apply(op, -0.1, Vector::Zero(3)), ConfigError);
}

TEST_CASE("spectrum validation") {
  CHECK_THROWS_AS(SpectralOperator{Vector::Zero(0)}, ConfigError);
  CHECK_THROWS_AS(SpectralOperator{(Vector(2) << 1.0, 0.0).finished()}, ConfigError);
  CHECK_THROWS_AS(SpectralOperator{(Vector(2) << 2.0, 1.0).finished()}, ConfigError);
  SpectralOperator pl = SpectralOperator::power_law(4, 2.0);
  CHECK(pl.eigenvalues()(3) == 16.0);
  CHECK(pl.inverse_trace() == doctest::Approx(1.0 + 0.25 + 1.0 / 9 + 1.0 / 16).epsilon(1e-15));
}

TEST_CASE("sigma norm on diagonal operators") {
  SigmaOperator id = SigmaOperator::identity(3);
  PathRng rng(6, 0);
  Vector x = gaussian_vector(rng, 3);
  CHECK(id.sigma_norm(x) == doctest::Approx(x.norm()).epsilon(1e-14));

  SigmaOperator two = SigmaOperator::diagonal((Vector(1) << 2.0).finished());
  CHECK(two.sigma_norm((Vector(1) << 2.0).finished()) == doctest::Approx(1.0).epsilon(1e-14));

  SigmaOperator half = SigmaOperator::diagonal((Vector(2) << 1.0, 0.5).finished());
  CHECK(half.sigma_norm((Vector(2) << 1.0, 1.0).finished()) ==
        doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));
}

TEST_CASE("sigma norm unwinds the square root on random SPD operators") {
  PathRng rng(7, 0);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix g(3, 3);
    for (Index i = 0; i < 3; ++i) g.col(i) = gaussian_vector(rng, 3);
    Matrix m = g + 4.0 * Matrix::Identity(3, 3);  // comfortably invertible
    SigmaOperator sig = SigmaOperator::dense(m);
    Vector y = gaussian_vector(rng, 3);
    // |y| recovered from x = (sigma sigma*)^{1/2} y
    Vector x = sig.apply_sqrt_cov(y);
    CHECK(sig.sigma_norm(x) == doctest::Approx(y.norm()).epsilon(1e-10));
    // lower bound |x| / |sigma|
    Vector z = gaussian_vector(rng, 3);
    CHECK(sig.sigma_norm(z) >= z.norm() / sig.op_norm() * (1.0 - 1e-12));
    // sigma^{-1} and (sigma sigma*)^{-1/2} give the same norm
    CHECK(sig.apply_inverse(z).norm() == doctest::Approx(sig.sigma_norm(z)).epsilon(1e-10));
  }
}

TEST_CASE("sigma construction rejects near-singular covariance") {
  CHECK_THROWS_AS(SigmaOperator::diagonal((Vector(2) << 1.0, 1e-7).finished()), ConfigError);
  Matrix singular(2, 2);
  singular << 1.0, 1.0, 1.0, 1.0;
  CHECK_THROWS_AS(SigmaOperator::dense(singular), ConfigError);
}

TEST_CASE("phi1 factors match the exact integral of the semigroup") {
  SpectralOperator op{(Vector(2) << 1.0, 16.0).finished()};
  const double dt = 1.0 / 1024;
  Vector phi1 = op.phi1_factors(dt);
  for (Index i = 0; i < 2; ++i) {
    const double lam = op.eigenvalues()(i);
    CHECK(phi1(i) == doctest::Approx((1.0 - std::exp(-lam * dt)) / lam).epsilon(1e-13));
  }
}
