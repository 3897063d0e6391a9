#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmix/covariance.hpp"
#include "kmix/report.hpp"
#include "kmix/scalar_solver.hpp"

// JSON run configuration. Parsing is strict: unknown keys, missing required
// keys and out-of-range values are all errors with a path-qualified message.
// The schema is documented in docs/config_schema.json.

namespace kmix {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { verify, dispersion, lyapunov, mixing, snapshot };

struct DispersionConfig {
  std::size_t trajectories = 100000;
  double horizon = 2.0;
  double dt = 1e-3;
  std::vector<double> r0;  // defaults to rho0 * e1
  double rho0 = 1.0;
  std::vector<double> s_values{0.0, 1.0};
  std::vector<double> sample_times;
};

struct LyapunovConfig {
  std::size_t trajectories = 10000;
  double horizon = 10.0;
  double dt = 0.0;  // 0 = default step rule
  bool random_directions = false;
};

struct MixingConfig {
  int n = 256;
  double L = 2.0 * 3.14159265358979323846;
  int k_min = 1;
  int k_max = 8;
  std::size_t realizations = 32;
  double horizon = 3.0;
  double dt = 0.0;  // 0 = stability bound
  double kappa = 0.0;
  double s = 0.5;
  double bump_sigma = 0.0;  // 0 = L/48
  ForcingSpec forcing;
  int record_points = 96;
};

struct SnapshotConfig {
  int n = 128;
  double L = 2.0 * 3.14159265358979323846;
  int k_min = 1;
  int k_max = 8;
  double horizon = 0.0;  // evolve the bump this long before the final frame
  double kappa = 0.0;
  double bump_sigma = 0.0;
  std::vector<double> times;  // scalar frames to write
};

struct RunConfig {
  CovarianceSpec model;
  ExperimentKind kind = ExperimentKind::verify;
  std::uint64_t seed = 0;  // mandatory in the file
  int workers = 1;
  std::string output_dir = ".";

  DispersionConfig dispersion;
  LyapunovConfig lyapunov;
  MixingConfig mixing;
  SnapshotConfig snapshot;

  json resolved() const;  // full config with defaults filled, for the report
};

// Parses and validates; throws ConfigError with a path-qualified message.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_json(const json& j);

}  // namespace kmix
