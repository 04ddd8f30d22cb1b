#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ibplab/types.hpp"

namespace ibplab {

using Json = nlohmann::json;

/// Paired verification of one test function: lhs = d_k f at the terminal
/// state, rhs = f * weight from the same path. The pass rule is
///   |diff_mean| <= z_max * diff_se + kappa * dt
/// with kappa estimated from the dt/2 companion run (floored at kappa_min).
struct FunctionCheck {
  std::string name;
  double lhs_mean = 0, lhs_se = 0;
  double rhs_mean = 0, rhs_se = 0;
  double diff_mean = 0, diff_se = 0, z = 0;
  double diff_mean_half = 0, diff_se_half = 0;
  double kappa = 0;
  bool pass = false;
};

struct GirsanovCheck {
  double epsilon = 0;
  double r_mean = 0, r_se = 0, r_z = 0;     // E[R] - 1 test
  double dev_mean = 0, dev_se = 0;          // (1-R)/eps - weight
  bool clamped = false;
  bool pass = false;
};

/// Deterministic shared-noise shift identity, evaluated on one path:
/// terminal error |Z_eps(T) - Z(T) - eps k| / eps and the worst nodewise
/// deviation from the predicted perturbation, both expected to be O(dt).
struct ShiftIdentityCheck {
  double epsilon = 0;
  double terminal_err = 0;  // already divided by eps
  double nodewise_err = 0;  // already divided by eps
  double bound = 0;         // C * dt
  bool pass = false;
};

struct MCReport {
  std::string model;
  std::uint64_t paths = 0;
  std::uint64_t seed = 0;
  double T = 0, dt = 0, dt_half = 0;
  double z_max = 3.0, kappa_min = 0;
  std::string config_hash;
  std::vector<FunctionCheck> checks;
  double weight_mean = 0, weight_se = 0;
  double weight_sq_mean = 0, weight_sq_se = 0;
  double weight_l2_bound = -1;  // semilinear quadrature bound; < 0 when n/a
  bool weight_l2_ok = true;
  std::vector<GirsanovCheck> girsanov;
  std::vector<ShiftIdentityCheck> shift_checks;
  // delay diagnostic: same weight with the plain running-integral direction
  bool has_theta_diagnostic = false;
  double theta_weight_mean = 0, theta_weight_se = 0;
  std::vector<double> theta_diff_z;
  bool all_pass = false;

  Json to_json() const;
  static MCReport from_json(const Json& j);
};

/// Minimal SVG writers for the `plot` subcommand.
std::string svg_line_chart(const std::string& title, const std::vector<double>& xs,
                           const std::vector<std::pair<std::string, std::vector<double>>>& series);
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values, double marker = 0.0);

/// Tabular CSV of the per-function checks.
std::string report_csv(const MCReport& r);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace ibplab
