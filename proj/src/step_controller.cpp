#include "vesicle/step_controller.hpp"

#include <algorithm>
#include <string>

#include "vesicle/error.hpp"

namespace vesicle {
namespace {

void check_times(double t, double dt, const ControllerConfig& c) {
  if (!(t < c.horizon)) throw InvalidInput("step controller: t = " + std::to_string(t) + " is not before the horizon");
  if (!(dt > 0) || !std::isfinite(dt)) throw InvalidInput("step controller: dt must be positive");
}

void check_quantity(double q_t, double q_new, double q_0) {
  if (!(q_t > 0) || !(q_0 > 0) || !std::isfinite(q_new))
    throw InvalidInput("step controller: areas and lengths must be positive and finite");
}

double budget(double q_t, double q_0, const ControllerConfig& c) {
  return c.tolerance - std::abs(q_t - q_0) / q_t;
}

}  // namespace

void ControllerConfig::validate() const {
  if (!(tolerance > 0)) throw InvalidInput("tolerance must be positive");
  if (!(horizon > 0)) throw InvalidInput("horizon must be positive");
  if (order < 1) throw InvalidInput("order must be at least 1");
  if (!(beta_down > 0 && beta_down < 1)) throw InvalidInput("beta_down must lie in (0, 1)");
  if (!(beta_up > 1) || !std::isfinite(beta_up)) throw InvalidInput("beta_up must exceed 1");
  if (!(beta_scale > 0 && beta_scale < 1)) throw InvalidInput("beta_scale must lie in (0, 1)");
}

bool channel_accepts(double q_t, double q_new, double q_0, double t, double dt, const ControllerConfig& c) {
  check_times(t, dt, c);
  check_quantity(q_t, q_new, q_0);
  const double b = budget(q_t, q_0, c);
  if (b < 0) return false;
  return std::abs(q_new - q_t) <= q_t * dt / (c.horizon - t) * b;
}

double channel_dt_optimal(double q_t, double q_new, double q_0, double t, double dt,
                          const ControllerConfig& c) {
  check_times(t, dt, c);
  check_quantity(q_t, q_new, q_0);
  const double local = std::abs(q_new - q_t);
  const double b = budget(q_t, q_0, c);
  if (b < 0) return c.beta_down * dt;
  if (local == 0) return std::numeric_limits<double>::infinity();
  return std::pow(q_t / local * dt / (c.horizon - t) * b, 1.0 / c.order) * dt;
}

bool accept_step(std::span<const ConservationSample> samples, double t, double dt,
                 const ControllerConfig& c) {
  if (samples.empty()) throw InvalidInput("accept_step: no vesicles");
  return std::all_of(samples.begin(), samples.end(), [&](const ConservationSample& s) {
    return channel_accepts(s.area_t, s.area_new, s.area_0, t, dt, c) &&
           channel_accepts(s.length_t, s.length_new, s.length_0, t, dt, c);
  });
}

double dt_optimal(std::span<const ConservationSample> samples, double t, double dt,
                  const ControllerConfig& c) {
  if (samples.empty()) throw InvalidInput("dt_optimal: no vesicles");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    best = std::min(best, channel_dt_optimal(s.area_t, s.area_new, s.area_0, t, dt, c));
    best = std::min(best, channel_dt_optimal(s.length_t, s.length_new, s.length_0, t, dt, c));
  }
  return best;
}

double next_dt(double dt, double dt_opt, bool accepted, const ControllerConfig& c, double time_left) {
  if (!(dt > 0)) throw InvalidInput("next_dt: dt must be positive");
  const double cap = accepted ? c.beta_up * dt : dt;
  const double scaled = std::pow(c.beta_scale, 1.0 / c.order) * std::min(cap, std::max(dt_opt, c.beta_down * dt));
  return std::min(scaled, time_left);
}

}  // namespace vesicle
