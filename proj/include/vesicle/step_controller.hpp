#pragma once

// Time-step acceptance and selection from area and length conservation.
//
// With remaining budget b = ε − |Q(t) − Q(0)|/Q(t) for Q ∈ {A, L}, a step is
// accepted when |Q(t+Δt) − Q(t)| ≤ Q(t) Δt/(T − t) · b for every vesicle.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace vesicle {

struct ControllerConfig {
  double tolerance = 1e-2;
  double horizon = 1.0;
  int order = 2;
  double beta_down = 0.6;
  double beta_up = 1.5;
  double beta_scale = std::sqrt(0.9);

  void validate() const;
  bool operator==(const ControllerConfig&) const = default;
};

/// Area and length of one vesicle at t, at t + Δt and at time 0.
struct ConservationSample {
  double area_t, area_new, area_0;
  double length_t, length_new, length_0;
};

struct ControllerState {
  ControllerConfig config;
  int accepts = 0;
  int rejects = 0;
  bool last_rejected = false;
};

/// One channel (area or length) of the acceptance bound.
bool channel_accepts(double q_t, double q_new, double q_0, double t, double dt, const ControllerConfig& c);

/// One channel of Δt_opt; +∞ for zero local error, β_down·Δt for an exhausted budget.
double channel_dt_optimal(double q_t, double q_new, double q_0, double t, double dt,
                          const ControllerConfig& c);

bool accept_step(std::span<const ConservationSample> samples, double t, double dt,
                 const ControllerConfig& c);
inline bool accept_step(const ConservationSample& s, double t, double dt, const ControllerConfig& c) {
  return accept_step(std::span(&s, 1), t, dt, c);
}

double dt_optimal(std::span<const ConservationSample> samples, double t, double dt,
                  const ControllerConfig& c);
inline double dt_optimal(const ConservationSample& s, double t, double dt, const ControllerConfig& c) {
  return dt_optimal(std::span(&s, 1), t, dt, c);
}

/// β_scale^{1/k} min(β_up Δt, max(Δt_opt, β_down Δt)) after acceptance,
/// with Δt in place of β_up Δt after rejection, then clamped to `time_left`.
double next_dt(double dt, double dt_opt, bool accepted, const ControllerConfig& c,
               double time_left = std::numeric_limits<double>::infinity());

}  // namespace vesicle
