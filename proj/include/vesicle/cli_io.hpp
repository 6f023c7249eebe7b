#pragma once

// Run configuration, result files and the command-line entry point.
//
// Configurations are JSON documents; see README.md for the keys.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vesicle/error.hpp"
#include "vesicle/suspension_sim.hpp"

namespace vesicle {

/// A configuration error; `key()` is the dotted path of the offending entry.
class ConfigError : public InvalidInput {
 public:
  ConfigError(std::string key, const std::string& message)
      : InvalidInput("config key '" + key + "': " + message), key_(std::move(key)) {}
  [[nodiscard]] const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct VesicleSpec {
  enum class Shape { ellipse, points };
  Shape shape = Shape::ellipse;
  double a = 1.0;  // semi-axis along x before rotation
  double b = 3.0;  // semi-axis along y before rotation
  std::string file;  // whitespace-separated "x y" rows, for Shape::points
  Eigen::Vector2d center{0, 0};
  double rotation = 0;
  double nu = 1.0;
  double kappa_b = 0.1;
  int nodes = 64;
  double perturbation = 0;  // relative amplitude of random radial noise

  bool operator==(const VesicleSpec&) const = default;
};

struct RunConfig {
  FarFieldFlow flow = FarFieldFlow::shear(1.0);
  std::vector<VesicleSpec> vesicles;
  enum class TimeMode { fixed, adaptive };
  TimeMode mode = TimeMode::adaptive;
  int steps = 100;           // fixed mode
  double tolerance = 1e-2;   // adaptive mode
  double horizon = 1.0;
  int n_sdc = 1;
  int p = 5;
  double gmres_tolerance = 1e-10;
  int gmres_max_iterations = 300;
  int order = 0;  // 0: n_sdc + 1
  double beta_down = 0.6;
  double beta_up = 1.5;
  double beta_scale = 0.94868329805051377;  // √0.9
  double dt_initial = 0;  // 0: T/100
  double dt_floor_factor = 1e-12;
  int upsampling = 4;
  double near_threshold = 5.0;
  bool consistent_initial_tension = true;
  bool consistent_velocity = false;
  std::string output = "out";
  double snapshot_interval = 0;  // 0: initial and final state only
  unsigned long long seed = 0;

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(const std::string& text);
std::string render_config(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

Suspension build_suspension(const RunConfig& config);
SimulationConfig simulation_config(const RunConfig& config);

struct Snapshot {
  double t;
  Configuration vesicles;
};

/// Collects snapshots every `interval` (0: first and last only) from the
/// simulation observer.
class SnapshotRecorder {
 public:
  explicit SnapshotRecorder(double interval) : interval_(interval) {}
  void operator()(const Suspension& s);
  /// Makes sure the final state is present.
  void finalize(const Suspension& s);
  [[nodiscard]] const std::vector<Snapshot>& snapshots() const { return snapshots_; }

 private:
  double interval_;
  double next_ = 0;
  std::optional<Snapshot> latest_;
  std::vector<Snapshot> snapshots_;
};

/// steps.csv, snapshots.csv and summary.json in `directory`.
void write_outputs(const std::filesystem::path& directory, const RunConfig& config,
                   const RunDiagnostics& diagnostics, const std::vector<Snapshot>& snapshots);

/// Least-squares slope of −log e against log m.
double fitted_order(const std::vector<int>& steps, const std::vector<double>& errors);

struct VerifyCheck {
  std::string name;
  bool passed;
  std::string detail;
};

/// Quick built-in identity checks.
std::vector<VerifyCheck> run_verify();

int cli_main(int argc, char** argv);

}  // namespace vesicle
