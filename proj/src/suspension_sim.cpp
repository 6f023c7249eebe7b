#include "vesicle/suspension_sim.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>
#include <tuple>

#include "vesicle/error.hpp"

namespace vesicle {
namespace {

using Clock = std::chrono::steady_clock;

class Runner {
 public:
  Runner(Suspension s, double horizon, const SimulationConfig& config)
      : config_(config), horizon_(horizon), grid_(lobatto_grid(config.p)), start_(Clock::now()) {
    config.validate();
    if (!(horizon > 0) || !std::isfinite(horizon)) throw InvalidInput("horizon must be positive");
    if (s.vesicles.empty()) throw InvalidInput("suspension has no vesicles");
    if (config.consistent_initial_tension) initialize_tension(s, config.stepper);
    result_.final = std::move(s);
    initial_ = result_.final.vesicles;
    sample();
  }

  // Attempts one step from the current state. Returns the proposed state or
  // nothing when the step failed.
  std::optional<MacroStepResult> attempt(double dt) {
    try {
      MacroStepResult r = macro_step(result_.final.vesicles, result_.final.flow, result_.final.t, dt,
                                     config_.n_sdc, grid_, config_.stepper, ops_);
      counters_.gmres_iterations += r.counters.gmres_iterations;
      counters_.matvecs += r.counters.matvecs;
      return r;
    } catch (const SolverError& e) {
      note_failure(e.what());
    } catch (const GeometryError& e) {
      note_failure(e.what());
    } catch (const AssemblyError& e) {
      note_failure(e.what());
    }
    return std::nullopt;
  }

  void record(double dt, bool accepted, const Configuration& state, long iterations) {
    StepRecord rec;
    rec.t = result_.final.t;
    rec.dt = dt;
    rec.accepted = accepted;
    std::tie(rec.error_area, rec.error_length) = conservation_errors(state, initial_);
    rec.gmres_iterations = iterations;
    rec.matvecs_total = counters_.matvecs;
    rec.wall_seconds = elapsed();
    result_.diagnostics.steps.push_back(rec);
    (accepted ? result_.diagnostics.accepts : result_.diagnostics.rejects)++;
  }

  void commit(MacroStepResult&& r, double t_new) {
    result_.final.vesicles = std::move(r.state);
    result_.final.t = t_new;
    ops_ = std::move(r.operators);
    sample();
  }

  RunResult finish(bool completed) {
    RunDiagnostics& d = result_.diagnostics;
    d.completed = completed;
    std::tie(d.error_area, d.error_length) = conservation_errors(result_.final.vesicles, initial_);
    d.matvecs = counters_.matvecs;
    d.gmres_iterations = counters_.gmres_iterations;
    d.wall_seconds = elapsed();
    return std::move(result_);
  }

  void fail(const std::string& why) { result_.diagnostics.failure = why; }
  [[nodiscard]] const std::string& last_failure() const { return last_failure_; }
  [[nodiscard]] const Suspension& current() const { return result_.final; }
  [[nodiscard]] const Configuration& initial() const { return initial_; }
  [[nodiscard]] double horizon() const { return horizon_; }

 private:
  void note_failure(const char* what) { last_failure_ = what; }

  void sample() {
    RunDiagnostics& d = result_.diagnostics;
    const Suspension& s = result_.final;
    d.sample_times.push_back(s.t);
    d.trackers.push_back(tracker_points(s));
    std::vector<Eigen::Vector2d> c;
    std::vector<double> inc;
    for (const auto& v : s.vesicles) {
      c.push_back(boundary_centroid(v.curve));
      inc.push_back(inclination_angle(v.curve));
    }
    d.centroids.push_back(std::move(c));
    d.inclinations.push_back(std::move(inc));
    if (config_.observer) config_.observer(s);
  }

  [[nodiscard]] double elapsed() const {
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }

  const SimulationConfig& config_;
  double horizon_;
  LobattoGrid grid_;
  Clock::time_point start_;
  RunResult result_;
  Configuration initial_;
  std::shared_ptr<const SuspensionOperators> ops_;
  SolverCounters counters_;
  std::string last_failure_;
};

}  // namespace

void SimulationConfig::validate() const {
  if (p < 3) throw InvalidInput("p must be at least 3");
  if (n_sdc < 0) throw InvalidInput("n_sdc must be non-negative");
  if (order < 0) throw InvalidInput("order must be non-negative");
  if (!(dt_initial >= 0)) throw InvalidInput("dt_initial must be non-negative");
  if (!(dt_floor_factor > 0)) throw InvalidInput("dt_floor_factor must be positive");
  stepper.gmres.validate();
  stepper.kernels.validate();
}

RunResult run_fixed(Suspension suspension, int m, double horizon, const SimulationConfig& config) {
  if (m < 1) throw InvalidInput("run_fixed: need at least one step");
  Runner run(std::move(suspension), horizon, config);
  const double t0 = run.current().t;
  const double dt = horizon / m;
  for (int k = 0; k < m; ++k) {
    std::optional<MacroStepResult> r = run.attempt(dt);
    if (!r) {
      run.record(dt, false, run.current().vesicles, 0);
      run.fail(run.last_failure());
      return run.finish(false);
    }
    run.record(dt, true, r->state, r->counters.gmres_iterations);
    run.commit(std::move(*r), k + 1 == m ? t0 + horizon : t0 + (k + 1) * dt);
  }
  return run.finish(true);
}

RunResult run_adaptive(Suspension suspension, double tolerance, double horizon,
                       const SimulationConfig& config) {
  if (!(tolerance > 0)) throw InvalidInput("run_adaptive: tolerance must be positive");
  ControllerConfig ctrl = config.controller;
  ctrl.tolerance = tolerance;
  ctrl.horizon = horizon;
  ctrl.order = config.order > 0 ? config.order : config.n_sdc + 1;
  ctrl.validate();

  suspension.t = 0;
  Runner run(std::move(suspension), horizon, config);
  const double floor = config.dt_floor_factor * horizon;
  double dt = config.dt_initial > 0 ? config.dt_initial : horizon / 100;

  while (run.current().t < horizon) {
    const double t = run.current().t;
    const bool last = dt >= horizon - t;
    if (last) dt = horizon - t;

    std::optional<MacroStepResult> r = run.attempt(dt);
    bool accepted = false;
    double dt_opt = ctrl.beta_down * dt;
    if (r) {
      std::vector<ConservationSample> samples;
      const Configuration& now = run.current().vesicles;
      for (std::size_t j = 0; j < now.size(); ++j) {
        samples.push_back({area(now[j].curve), area(r->state[j].curve), area(run.initial()[j].curve),
                           length(now[j].curve), length(r->state[j].curve), length(run.initial()[j].curve)});
      }
      accepted = accept_step(samples, t, dt, ctrl);
      dt_opt = dt_optimal(samples, t, dt, ctrl);
      run.record(dt, accepted, r->state, r->counters.gmres_iterations);
    } else {
      run.record(dt, false, run.current().vesicles, 0);
    }

    if (accepted) run.commit(std::move(*r), last ? horizon : t + dt);
    const double t_next = run.current().t;
    if (t_next >= horizon) break;
    const double dt_new = next_dt(dt, dt_opt, accepted, ctrl, horizon - t_next);
    if (dt_new < floor && dt_new < horizon - t_next) {
      run.fail("time step " + std::to_string(dt_new) + " fell below the floor " + std::to_string(floor) +
               (run.last_failure().empty() ? "" : "; last solver failure: " + run.last_failure()));
      return run.finish(false);
    }
    dt = dt_new;
  }
  return run.finish(true);
}

void initialize_tension(Suspension& suspension, const StepperConfig& config) {
  const SuspensionOperators ops(suspension.vesicles, config.kernels);
  Eigen::VectorXd background(ops.layout().field_size());
  for (int j = 0; j < ops.size(); ++j) {
    background.segment(ops.layout().field_offset(j), 2 * ops.layout().nodes(j)) =
        suspension.flow.evaluate(suspension.vesicles[j].curve.coords());
  }
  const GmresResult r = solve_tension(ops, background, config.gmres);
  for (int j = 0; j < ops.size(); ++j) {
    const int n = ops.layout().nodes(j);
    suspension.vesicles[j].tension = r.solution.segment(ops.layout().operand_offset(j) + 2 * n, n);
  }
}

std::vector<Eigen::Vector2d> tracker_points(const Suspension& suspension) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(suspension.vesicles.size());
  for (const auto& v : suspension.vesicles) out.push_back(v.curve.point(0));
  return out;
}

Eigen::Vector2d boundary_centroid(const ClosedCurve& curve) {
  const Eigen::VectorXd w = geometry(curve).weights;
  return Eigen::Vector2d(w.dot(curve.x()), w.dot(curve.y())) / w.sum();
}

double inclination_angle(const ClosedCurve& curve) {
  const Eigen::VectorXd w = geometry(curve).weights;
  const Eigen::Vector2d c = Eigen::Vector2d(w.dot(curve.x()), w.dot(curve.y())) / w.sum();
  const Eigen::ArrayXd dx = curve.x().array() - c.x();
  const Eigen::ArrayXd dy = curve.y().array() - c.y();
  const double jxx = (w.array() * dx * dx).sum();
  const double jyy = (w.array() * dy * dy).sum();
  const double jxy = (w.array() * dx * dy).sum();
  double a = 0.5 * std::atan2(2 * jxy, jxx - jyy);
  if (a <= -0.5 * std::numbers::pi) a += std::numbers::pi;
  return a;
}

std::vector<double> unwrap(const std::vector<double>& angles, double period) {
  std::vector<double> out(angles.size());
  if (angles.empty()) return out;
  out[0] = angles[0];
  for (std::size_t i = 1; i < angles.size(); ++i) {
    double d = std::remainder(angles[i] - angles[i - 1], period);
    out[i] = out[i - 1] + d;
  }
  return out;
}

double winding_count(const std::vector<Eigen::Vector2d>& points, const std::vector<Eigen::Vector2d>& centers) {
  if (points.size() != centers.size()) throw InvalidInput("winding_count: size mismatch");
  if (points.size() < 2) return 0;
  std::vector<double> ang;
  ang.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Eigen::Vector2d d = points[i] - centers[i];
    ang.push_back(std::atan2(d.y(), d.x()));
  }
  const std::vector<double> u = unwrap(ang, 2 * std::numbers::pi);
  return (u.back() - u.front()) / (2 * std::numbers::pi);
}

std::pair<double, double> conservation_errors(const Configuration& now, const Configuration& initial) {
  if (now.size() != initial.size()) throw InvalidInput("conservation_errors: vesicle count mismatch");
  double ea = 0, el = 0;
  for (std::size_t j = 0; j < now.size(); ++j) {
    const double a0 = area(initial[j].curve), l0 = length(initial[j].curve);
    ea = std::max(ea, std::abs(area(now[j].curve) - a0) / a0);
    el = std::max(el, std::abs(length(now[j].curve) - l0) / l0);
  }
  return {ea, el};
}

}  // namespace vesicle
