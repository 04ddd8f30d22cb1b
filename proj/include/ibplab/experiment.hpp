#pragma once

#include <string>

#include "ibplab/config.hpp"
#include "ibplab/report.hpp"

namespace ibplab {

/// Paired-path verification runs; dispatches on cfg.model.
MCReport run_ibp_experiment(const ExperimentConfig& cfg);
MCReport run_ibp_semilinear(const ExperimentConfig& cfg);
MCReport run_ibp_hamiltonian(const ExperimentConfig& cfg);
MCReport run_ibp_delay(const ExperimentConfig& cfg);

/// Invariant-measure verification for the linear two-component system:
/// Lyapunov covariance, stationarity defect of the candidate densities,
/// long-run empirical covariance, and a stationarity z-test dictionary.
Json run_invariance(const ExperimentConfig& cfg);

/// Derivative bounds of the invariant measure over a direction/function grid.
Json run_fomin(const ExperimentConfig& cfg);

/// Synchronous-coupling decay check.
Json run_contraction(const ExperimentConfig& cfg);

/// The analytic deciders alone (Lyapunov + stationary-density residuals),
/// fast enough for interactive use.
Json run_oracle(const ExperimentConfig& cfg);

/// True when the report's top-level all_pass flag is set.
bool report_passes(const Json& report);

/// Weight-ingredient tables for plotting/CSV (phi, psi, h', h~, |Theta|
/// for the two-component system; Gamma, D, Theta norms for the delay model;
/// per-mode g factors for the semilinear model).
struct IngredientTable {
  std::vector<double> times;
  std::vector<std::pair<std::string, std::vector<double>>> series;
};
IngredientTable ingredient_table(const ExperimentConfig& cfg);
std::string ingredient_csv(const IngredientTable& table);

/// CSV dump of one simulated trajectory (columns t, X_1..X_n).
std::string sample_path_csv(const ExperimentConfig& cfg, std::uint64_t path_index);

}  // namespace ibplab
