#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ibplab/cylinder.hpp"
#include "ibplab/drift.hpp"
#include "ibplab/grid.hpp"
#include "ibplab/spectral.hpp"

namespace ibplab {

using Json = nlohmann::json;

/// Parsed experiment description. See docs/config.md for the schema; the raw
/// (effective) JSON is kept for hashing and reports.
struct ExperimentConfig {
  Json raw;
  std::string model;  // semilinear | hamiltonian | delay | invariance | fomin | contraction

  // operator spec
  Index n = 1;
  std::string eigen_rule = "pow";  // pow | list
  double eigen_p = 2.0;
  double eigen_scale = 1.0;
  Vector eigen_values;

  // noise operator spec
  std::string sigma_kind = "identity";  // identity | diag_pow | diag | dense
  double sigma_p = 0.0;
  double sigma_scale = 1.0;
  Vector sigma_values;
  Matrix sigma_dense;

  // drift
  std::string drift_name = "zero";
  DriftParams drift_params;

  // time grid
  double T = 1.0;
  Index steps = 1024;
  double tau = 0.0;

  // monte carlo
  std::uint64_t paths = 100000;
  std::uint64_t seed = 42;
  double z_max = 3.0;
  double kappa_min = 1.0;
  int workers = 0;
  std::uint64_t chunk = 1024;

  // directions
  Vector dir_k;             // semilinear
  Vector dir_k1, dir_k2;    // hamiltonian
  std::string eta_kind = "const";  // const | ramp
  Vector eta_v0, eta_v1;

  // initial conditions
  Vector x0, y0;
  std::string segment_kind = "const";  // const | ramp
  Vector segment_v0, segment_v1;

  // position/velocity coupling
  std::string b_kind = "identity";  // identity | dense
  Matrix b_dense;
  Index x_dim = 0;

  // girsanov block
  std::vector<double> girsanov_epsilons;
  double shift_check_c = 10.0;

  // test functions (empty -> default dictionary)
  Json test_functions;

  // invariance / oracle block
  Vector inv_q_diag;
  std::uint64_t chain_steps = 1000000;
  double chain_dt = 1.0 / 512.0;
  Index inv_samples = 10000;
  double stationarity_T = 1.0;

  // fomin block
  std::vector<Vector> fomin_directions;
  Index fomin_samples = 20000;
  double sampler_dt = 1.0 / 512.0;

  // contraction block
  Vector contraction_x0, contraction_y0;
  double contraction_kappa = 4.0;

  // output
  int dump_paths = 0;

  SpectralOperator make_operator() const;
  SigmaOperator make_sigma() const;
  DriftModel make_state_drift(const SpectralOperator& A) const;
  SegmentDriftModel make_segment_drift() const;
  SimGrid make_grid() const;
  Matrix make_b_matrix() const;
  Matrix initial_segment(const SimGrid& grid) const;
  Vector eta_at(double theta) const;
  Vector eta_prime_at(double theta) const;
  std::vector<CylinderFunction> make_dictionary(Index state_dim) const;
  std::vector<CylinderFunction> make_segment_dictionary() const;
};

ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config_file(const std::string& path);

/// FNV-1a content hash of the canonical serialization.
std::string config_hash(const Json& j);

}  // namespace ibplab
