#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ibplab {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown on invalid construction parameters or malformed configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a trajectory leaves the representable range (NaN/overflow).
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, Index step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  Index step() const { return step_; }

 private:
  Index step_;
};

}  // namespace ibplab
