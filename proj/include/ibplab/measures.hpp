#pragma once

#include <functional>
#include <vector>

#include "ibplab/cylinder.hpp"
#include "ibplab/directions.hpp"
#include "ibplab/drift.hpp"
#include "ibplab/simulate.hpp"
#include "ibplab/spectral.hpp"

namespace ibplab {

// ---------------------------------------------------------------------------
// Ergodic sampling

struct ErgodicConfig {
  double burn_in = 10.0;
  double gap = 1.0;
  Index count = 1000;
  std::uint64_t seed = 1;
  double dt = 1.0 / 512.0;
  int chains = 8;
};

/// burn_in = 10/(c1+c2) when the drift carries a dissipativity constant,
/// else 10/lambda_1; gap = 1/lambda_1.
ErgodicConfig default_ergodic_config(const SpectralOperator& A, const DriftModel& b, Index count,
                                     std::uint64_t seed);

struct SampleSet {
  std::vector<Vector> states;
  bool dissipativity_warning = false;
};

/// Approximately stationary states after burn-in, thinned by `gap` model time.
/// Chains are independent (seeded by chain index) and concatenated in chain
/// order, so the output is deterministic for any execution schedule.
SampleSet sample_invariant(const SpectralOperator& A, const SigmaOperator& sig,
                           const DriftModel& b, const ErgodicConfig& cfg);

/// Same for the two-component system; samples are stacked (x, y).
SampleSet sample_invariant_hamiltonian(const Matrix& B, const SpectralOperator& A,
                                       const SigmaOperator& sig, const DriftModel& b,
                                       const ErgodicConfig& cfg);

/// Long single-run empirical covariance of the stacked state (time average
/// after burn-in), the cheap cross-check for the analytic oracles.
Matrix empirical_stationary_cov_hamiltonian(const Matrix& B, const SpectralOperator& A,
                                            const SigmaOperator& sig, const DriftModel& b,
                                            double dt, std::uint64_t total_steps,
                                            std::uint64_t burn_in_steps, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Exact references

class GaussianReference {
 public:
  explicit GaussianReference(Matrix covariance);
  const Matrix& covariance() const { return cov_; }
  Vector sample(PathRng& rng) const;

 private:
  Matrix cov_;
  Matrix chol_;
};

/// Solves F C + C F* + S S* = 0 for the stationary covariance of a linear
/// diffusion dZ = F Z dt + S dW. F must be Hurwitz.
Matrix lyapunov_stationary_cov(const Matrix& F, const Matrix& S);

/// Residual |F C + C F* + S S*| (max abs entry), for reporting.
double lyapunov_residual(const Matrix& F, const Matrix& S, const Matrix& C);

// ---------------------------------------------------------------------------
// Stationary Fokker-Planck residual oracle for the kinetic generator
//   L = <y, grad_x> + <A y + b(x), grad_y> + (1/2) lap_y
// acting on densities proportional to e^{G(x,y)}.

struct Potential {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> grad;
};

Potential quadratic_potential(Matrix q);                       // (1/2) x^T Q x
Potential cosine_perturbed_potential(Vector a, double delta);  // sum a_i x_i^2/2 + delta cos x_i

struct DensityExponent {
  std::string name;
  std::function<Vector(const Vector&, const Vector&)> grad_x;
  std::function<Vector(const Vector&, const Vector&)> grad_y;
  std::function<double(const Vector&, const Vector&)> lap_y;
};

/// Exponent -2 V(x) + <A y, y>, the form that balances the kinetic generator.
DensityExponent kinetic_exponent_balanced(const Matrix& a_matrix, const Potential& v);
/// Exponent -V(x) + (lambda/2) <A y, y> with lambda = smallest eigenvalue of
/// -A; evaluated as a hypothesis, not assumed stationary.
DensityExponent kinetic_exponent_displayed(const Matrix& a_matrix, const Potential& v);
/// Exponent of a centred Gaussian with the given stacked covariance.
DensityExponent gaussian_exponent(const Matrix& covariance, Index x_dim);

struct FpResidualReport {
  double max_residual = 0.0;
  double mean_residual = 0.0;
  bool grid_warning = false;
};

/// Max over a tensor grid [-radius, radius]^{2d} of
///   |<y, grad_x G> + tr A + <A y + b(x), grad_y G> - (1/2) lap_y G - (1/2)|grad_y G|^2|,
/// the stationarity defect of e^G under the kinetic generator. d <= 2.
FpResidualReport fp_residual(const DensityExponent& g, const Matrix& a_matrix,
                             const std::function<Vector(const Vector&)>& b, Index d,
                             double radius = 3.0, Index points_per_axis = 9);

// ---------------------------------------------------------------------------
// Invariance / closability / Fomin checks

struct MeanTestResult {
  double mean = 0.0;
  double se = 0.0;
  double z = 0.0;
  std::int64_t count = 0;
};

/// Paired estimate of E[f(x) - f(X^x(t))] over the samples with fresh noise
/// per sample; z ~ 0 when the sample law is invariant.
MeanTestResult stationarity_check(const std::vector<Vector>& samples,
                                  const std::function<Vector(const Vector&, std::uint64_t)>& evolve,
                                  const CylinderFunction& f);

struct ChainCheckResult {
  double mean = 0.0, se = 0.0, z = 0.0;
  double mean_half = 0.0, se_half = 0.0;
  double lhs_mean = 0.0, rhs_mean = 0.0;
  double kappa = 0.0, dt = 0.0;
  bool pass = false;
};

/// Paired Monte Carlo of d_k f(x) - f(X^x(T)) M_{x,T} with x drawn from the
/// supplied samples, run at dt and dt/2; passes when the paired mean is within
/// z_max * SE + kappa * dt.
ChainCheckResult closability_chain_check(const std::vector<Vector>& samples,
                                         const SpectralOperator& A, const SigmaOperator& sig,
                                         const DriftModel& b, const SimGrid& grid,
                                         const EigenDirection& k, const CylinderFunction& f,
                                         std::uint64_t seed, double z_max = 3.0,
                                         double kappa_min = 1.0, int workers = 0);

/// C = (|sigma^{-1}| sqrt(alpha) / (e-1)) (1 + ((e-1)/lambda_1) lip),
/// alpha = sum 1/lambda_i.
double fomin_constant(const SpectralOperator& A, const SigmaOperator& sig, double lip);

struct FominReport {
  Vector direction;
  double estimate = 0.0;  // |mu(d_k f)|
  double se = 0.0;
  double bound_explicit = 0.0;  // C |Ak| ||f||_{L2(mu)}
  double bound_dm = 0.0;        // sqrt(E[M^2] mu(f^2))
  double constant = 0.0;
  double weight_sq_mean = 0.0;
  double f_sq_mean = 0.0;
  bool pass_explicit = false;
  bool pass_dm = false;
};

FominReport fomin_check(const std::vector<Vector>& samples, const SpectralOperator& A,
                        const SigmaOperator& sig, const DriftModel& b, const SimGrid& grid,
                        const EigenDirection& k, const CylinderFunction& f, std::uint64_t seed,
                        double z_max = 3.0, int workers = 0);

MeanTestResult form_energy(const std::vector<Vector>& samples, const CylinderFunction& f,
                           const CylinderFunction& g, const Vector& k);

// ---------------------------------------------------------------------------
// Synchronous-coupling contraction

struct ContractionReport {
  bool pass = true;
  Index first_violation = -1;
  double max_ratio = 0.0;  // max_j |X-Y|(t_j) / (e^{-(c1+c2) t_j} |x0-y0|)
  double rate = 0.0;       // c1 + c2
  double kappa = 0.0;
};

/// Runs two trajectories with the same noise and checks the pathwise decay
///   |X^x(t_j) - X^y(t_j)| <= e^{-(c1+c2) t_j} |x0 - y0| (1 + kappa dt)
/// at every node. c1 = lambda_1, c2 from the drift's dissipativity constant.
ContractionReport contraction_check(const Vector& x0, const Vector& y0, const SpectralOperator& A,
                                    const SigmaOperator& sig, const DriftModel& b,
                                    const SimGrid& grid, std::uint64_t seed,
                                    std::uint64_t path_index = 0, double kappa = 4.0);

// ---------------------------------------------------------------------------
// Exact-sample reference for the cosine-perturbed Gibbs marginal

/// Rejection sampling from density proportional to exp(-2V) with
/// V = sum_i (a_i x_i^2/2 + delta cos x_i), using the Gaussian envelope
/// N(0, diag(1/(2 a_i))). Exact, independent of any SDE integrator.
std::vector<Vector> sample_gibbs_marginal(const Vector& a, double delta, Index count,
                                          std::uint64_t seed);

}  // namespace ibplab
