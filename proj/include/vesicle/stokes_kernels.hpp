#pragma once

// 2D Stokes single- and double-layer potentials on closed curves.
//
//   S f(x) = 1/(4π μ0) ∮ (-I log ρ + r⊗r/ρ²) f ds_y
//   D u(x) = (1-ν)/π   ∮ (r·n/ρ²)(r⊗r/ρ²) u ds_y,   r = x - y, n outward
//
// Self interaction: S uses a periodic log-kernel product quadrature for the
// -I log ρ part and the trapezoid rule with diagonal limit t⊗t for the rest.
// D is smooth on the curve; its diagonal limit is -(κ/2) t⊗t (principal value).
// Off-curve targets use the trapezoid rule on a Fourier-upsampled copy of the
// source; targets within a few local spacings of the curve are evaluated by
// interpolating along the normal ray between the on-curve limit and points at
// a safe distance, where the upsampled rule alone is accurate.

#include <Eigen/Core>

#include "vesicle/spectral_curve.hpp"

namespace vesicle {

struct LayerPotentialConfig {
  int upsampling_factor = 4;
  double near_threshold_factor = 5.0;  // in units of the local arclength spacing
  double outer_viscosity = 1.0;

  void validate() const;
};

enum class KernelKind { single_layer, double_layer };

/// Precomputed quadrature data for one source curve.
///
/// All matrices act on densities sampled at the source nodes in planar-field
/// layout and return velocities at targets in planar-field layout.
class LayerSource {
 public:
  LayerSource(const ClosedCurve& curve, double nu, const LayerPotentialConfig& config = {});

  [[nodiscard]] const ClosedCurve& curve() const { return curve_; }
  [[nodiscard]] const CurveGeometry& geometry() const { return geom_; }
  [[nodiscard]] double nu() const { return nu_; }
  [[nodiscard]] const LayerPotentialConfig& config() const { return config_; }

  /// 2N×2N self-evaluation matrices (target = source nodes).
  [[nodiscard]] const Eigen::MatrixXd& slp_self() const { return slp_self_; }
  /// Principal value, including the (1-ν)/π factor.
  [[nodiscard]] const Eigen::MatrixXd& dlp_self() const { return dlp_self_; }

  /// Matrix for targets off the source curve (2P rows for P targets). Near
  /// targets are routed through the near-singular scheme automatically.
  [[nodiscard]] Eigen::MatrixXd target_matrix(KernelKind kind,
                                              const Eigen::Ref<const Eigen::VectorXd>& targets) const;

  /// Plain upsampled-trapezoid rows, no near-singular treatment.
  [[nodiscard]] Eigen::MatrixXd upsampled_matrix(KernelKind kind,
                                                 const Eigen::Ref<const Eigen::VectorXd>& targets) const;

  /// Near-singular rows; every target must lie within the near threshold.
  [[nodiscard]] Eigen::MatrixXd near_singular_matrix(
      KernelKind kind, const Eigen::Ref<const Eigen::VectorXd>& targets) const;

  /// True when the point is within near_threshold_factor local spacings of the curve.
  [[nodiscard]] bool is_near(const Eigen::Vector2d& z) const;

  struct Projection {
    double theta;           // parameter of the closest boundary point
    Eigen::Vector2d point;  // closest boundary point
    Eigen::Vector2d normal; // outward unit normal there
    double distance;
    double spacing;         // local arclength spacing |x_θ|·2π/N
  };
  /// Closest point on the trigonometric interpolant of the curve (Newton from the nearest fine node).
  [[nodiscard]] Projection project(const Eigen::Vector2d& z) const;

 private:
  [[nodiscard]] int nearest_fine_node(const Eigen::Vector2d& z) const;
  // 2×2M block of fine-grid kernel values times weights for one target.
  void fine_kernel_rows(KernelKind kind, const Eigen::Vector2d& z, Eigen::Ref<Eigen::MatrixXd> out) const;

  ClosedCurve curve_;
  CurveGeometry geom_;
  double nu_;
  LayerPotentialConfig config_;
  Eigen::MatrixXd slp_self_;
  Eigen::MatrixXd dlp_self_;

  // Upsampled copy of the source.
  Eigen::MatrixXd upsample_;  // M×N
  Eigen::VectorXd fine_coords_;
  Eigen::VectorXd fine_normal_;
  Eigen::VectorXd fine_weights_;
  Eigen::VectorXd fine_jacobian_;
  TrigInterpolant x_interp_;
  TrigInterpolant y_interp_;
};

/// Weights of the periodic log-kernel product quadrature:
/// ∫₀^{2π} log(4 sin²((θ_i-τ)/2)) φ(τ) dτ ≈ Σ_j R[(i-j) mod N] φ(θ_j).
Eigen::VectorXd log_kernel_weights(int n);

/// Single-layer velocity at `targets` (planar layout) from `density` on `source`.
/// `self_eval` means the targets are the source nodes themselves.
Eigen::VectorXd slp_apply(const ClosedCurve& source, const Eigen::Ref<const Eigen::VectorXd>& density,
                          const Eigen::Ref<const Eigen::VectorXd>& targets, bool self_eval,
                          const LayerPotentialConfig& config = {});

Eigen::VectorXd dlp_apply(const ClosedCurve& source, double nu,
                          const Eigen::Ref<const Eigen::VectorXd>& velocity_density,
                          const Eigen::Ref<const Eigen::VectorXd>& targets, bool self_eval,
                          const LayerPotentialConfig& config = {});

/// Near-singular evaluation; throws InvalidInput if a target is not near the source.
Eigen::VectorXd near_singular_eval(const ClosedCurve& source, double nu, KernelKind kind,
                                   const Eigen::Ref<const Eigen::VectorXd>& density,
                                   const Eigen::Ref<const Eigen::VectorXd>& targets,
                                   const LayerPotentialConfig& config = {});

}  // namespace vesicle
