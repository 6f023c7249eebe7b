#pragma once

// Time loop for a vesicle suspension: fixed or adaptive macro steps, rollback
// of rejected steps, and per-step diagnostics.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vesicle/far_field.hpp"
#include "vesicle/sdc_stepper.hpp"
#include "vesicle/step_controller.hpp"

namespace vesicle {

struct Suspension {
  Configuration vesicles;
  FarFieldFlow flow;
  double t = 0;
};

struct StepRecord {
  double t = 0;   // start of the attempted step
  double dt = 0;
  bool accepted = false;
  double error_area = 0;    // max_j |A_j − A_j(0)| / A_j(0) after the step
  double error_length = 0;
  long gmres_iterations = 0;  // this step
  long matvecs_total = 0;     // cumulative
  double wall_seconds = 0;    // cumulative
};

struct RunDiagnostics {
  std::vector<StepRecord> steps;
  std::vector<double> sample_times;  // t = 0 and after every accepted step
  std::vector<std::vector<Eigen::Vector2d>> trackers;  // per sample, per vesicle
  std::vector<std::vector<Eigen::Vector2d>> centroids;
  std::vector<std::vector<double>> inclinations;       // per sample, per vesicle
  int accepts = 0;
  int rejects = 0;
  double error_area = 0;
  double error_length = 0;
  long matvecs = 0;
  long gmres_iterations = 0;
  double wall_seconds = 0;
  bool completed = false;
  std::string failure;
};

struct SimulationConfig {
  int p = 5;
  int n_sdc = 1;
  StepperConfig stepper;
  /// β constants, order and tolerance; horizon is overwritten by the run.
  ControllerConfig controller;
  /// 0 selects n_sdc + 1.
  int order = 0;
  /// 0 selects T/100.
  double dt_initial = 0;
  double dt_floor_factor = 1e-12;
  /// Replace the initial tension by the one enforcing inextensibility at t = 0.
  bool consistent_initial_tension = true;
  /// Called with the state at every sample time.
  std::function<void(const Suspension&)> observer;

  void validate() const;
};

struct RunResult {
  Suspension final;
  RunDiagnostics diagnostics;
};

/// m uniform steps of size T/m.
RunResult run_fixed(Suspension suspension, int m, double horizon, const SimulationConfig& config);

/// Controller-driven steps until t = T.
RunResult run_adaptive(Suspension suspension, double tolerance, double horizon,
                       const SimulationConfig& config);

/// Tension satisfying the inextensibility constraint for the current shapes.
void initialize_tension(Suspension& suspension, const StepperConfig& config);

/// Node 0 of each vesicle.
std::vector<Eigen::Vector2d> tracker_points(const Suspension& suspension);

/// Arclength-weighted centroid of the boundary.
Eigen::Vector2d boundary_centroid(const ClosedCurve& curve);

/// Principal-axis angle in (−π/2, π/2] from the arclength-weighted second
/// moment of the boundary about its centroid.
double inclination_angle(const ClosedCurve& curve);

/// Unwrapped polar angle of the tracker about the boundary centroid,
/// divided by 2π (counterclockwise positive). `points` and `centers` are
/// sampled in time.
double winding_count(const std::vector<Eigen::Vector2d>& points, const std::vector<Eigen::Vector2d>& centers);

/// Unwraps a sequence of angles with period `period`.
std::vector<double> unwrap(const std::vector<double>& angles, double period);

/// max_j |A_j − A_j⁰| / A_j⁰ and the same for length.
std::pair<double, double> conservation_errors(const Configuration& now, const Configuration& initial);

}  // namespace vesicle
