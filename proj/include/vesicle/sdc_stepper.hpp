#pragma once

// Spectral deferred correction over one macro step [t, t + Δt].
//
// A first-order provisional sweep marches the semi-implicit substep across the
// Gauss-Lobatto nodes. Each correction sweep solves the same kind of system for
// the error of the provisional solution, driven by the Picard residual
//
//   r(τ) = x₀ − x̃(τ) + ∫₀^τ ṽ,
//
// and raises the order of the last-node solution by one.

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "vesicle/far_field.hpp"
#include "vesicle/gmres.hpp"
#include "vesicle/imex_system.hpp"

namespace vesicle {

using Configuration = std::vector<VesicleState>;

struct LobattoGrid {
  std::vector<double> nodes;  // on [0, 1], endpoints included
  Eigen::MatrixXd integration;  // (j, i) = ∫₀^{τ_j} ℓ_i

  [[nodiscard]] int size() const { return static_cast<int>(nodes.size()); }
};

LobattoGrid lobatto_grid(int p);

struct StepperConfig {
  GmresConfig gmres;
  LayerPotentialConfig kernels;
  /// Evaluate ṽ with the tension that makes it inextensible instead of the
  /// provisional tension σ̃.
  bool consistent_velocity = false;
};

/// Running totals of linear-solver work.
struct SolverCounters {
  long gmres_iterations = 0;
  long matvecs = 0;

  void add(const GmresResult& r) {
    gmres_iterations += r.iterations;
    matvecs += r.matvecs;
  }
};

struct LobattoStage {
  double t = 0;
  double dt = 0;
  std::vector<Configuration> states;  // one per node
  std::vector<std::shared_ptr<const SuspensionOperators>> operators;  // at `states`
  std::vector<Eigen::VectorXd> velocities;  // ṽ per node, field layout
  std::vector<Eigen::VectorXd> residuals;   // r per node, field layout
};

/// ṽ = (αI − D)⁻¹ (v∞ + S(−Bx + Tσ)) at the configuration of `ops`.
Eigen::VectorXd provisional_velocity(const SuspensionOperators& ops, const FarFieldFlow& flow,
                                     const GmresConfig& config, SolverCounters* counters = nullptr);

/// Velocity of the configuration of `ops` with its inextensible tension
/// (the tensions stored in `ops` are ignored).
Eigen::VectorXd consistent_velocity(const SuspensionOperators& ops, const FarFieldFlow& flow,
                                    const GmresConfig& config, SolverCounters* counters = nullptr);

/// Node positions concatenated in field layout.
Eigen::VectorXd positions(const Configuration& config);

/// Provisional states at all nodes; velocities and residuals are left empty.
/// `start_ops` may carry the operators already built at `start`.
LobattoStage provisional_sweep(const Configuration& start, const FarFieldFlow& flow, double t, double dt,
                               const LobattoGrid& grid, const StepperConfig& config,
                               SolverCounters& counters,
                               std::shared_ptr<const SuspensionOperators> start_ops = nullptr);

/// Fills stage.velocities (when absent) and stage.residuals.
void compute_residual(LobattoStage& stage, const LobattoGrid& grid, const FarFieldFlow& flow,
                      const StepperConfig& config, SolverCounters& counters);

/// r_j = x₀ − x̃_j + Δt Σ_i W_ji ṽ_i from given nodal positions and velocities.
std::vector<Eigen::VectorXd> picard_residual(const std::vector<Eigen::VectorXd>& positions,
                                             const std::vector<Eigen::VectorXd>& velocities,
                                             double dt, const LobattoGrid& grid);

/// Solves for the error at every node, adds it to the provisional solution and
/// refreshes velocities and residuals.
void correction_sweep(LobattoStage& stage, const LobattoGrid& grid, const FarFieldFlow& flow,
                      const StepperConfig& config, SolverCounters& counters);

/// max over nodes and components of |r|.
double max_residual(const LobattoStage& stage);

/// max over nodes and vesicles of |x̃_θ·x̃_θ / J₀² − 1|, J₀ the node-0 jacobian.
double max_stretch(const LobattoStage& stage);

struct MacroStepResult {
  Configuration state;
  std::shared_ptr<const SuspensionOperators> operators;  // at `state`
  std::vector<double> residual_norms;  // after the provisional sweep and each correction
  SolverCounters counters;
};

MacroStepResult macro_step(const Configuration& start, const FarFieldFlow& flow, double t, double dt,
                           int n_sdc, const LobattoGrid& grid, const StepperConfig& config,
                           std::shared_ptr<const SuspensionOperators> start_ops = nullptr);

}  // namespace vesicle
