#pragma once

// Membrane operators on one vesicle:
//   bending     B f = κ_b f_ssss
//   tension     T σ = (σ x_s)_s
//   divergence  Div f = x_s · f_s
// and the stress jump  -B x + T σ.

#include <Eigen/Core>

#include "vesicle/spectral_curve.hpp"

namespace vesicle {

struct VesicleState {
  ClosedCurve curve;
  Eigen::VectorXd tension;  // N
  double nu = 1.0;          // interior/exterior viscosity ratio
  double kappa_b = 1.0;     // bending modulus

  VesicleState(ClosedCurve c, Eigen::VectorXd sigma, double nu_, double kappa);
  VesicleState(ClosedCurve c, double nu_, double kappa);  // zero tension

  bool operator==(const VesicleState&) const = default;
};

Eigen::VectorXd bending_apply(const ClosedCurve& curve, double kappa_b,
                              const Eigen::Ref<const Eigen::VectorXd>& field);
Eigen::VectorXd tension_apply(const ClosedCurve& curve, const Eigen::Ref<const Eigen::VectorXd>& sigma);
Eigen::VectorXd surface_divergence(const ClosedCurve& curve,
                                   const Eigen::Ref<const Eigen::VectorXd>& field);
Eigen::VectorXd traction(const VesicleState& state);

/// Dense matrices of the three operators at a fixed curve, plus the pieces
/// they are built from. Used to assemble the per-vesicle preconditioner blocks.
struct MembraneMatrices {
  Eigen::MatrixXd ds;          // N×N, d/ds
  Eigen::MatrixXd bending;     // 2N×2N, κ_b d⁴/ds⁴ per component
  Eigen::MatrixXd tension;     // 2N×N
  Eigen::MatrixXd divergence;  // N×2N
};

MembraneMatrices membrane_matrices(const ClosedCurve& curve, double kappa_b);

}  // namespace vesicle
