#pragma once

// Linear systems of one semi-implicit substep.
//
// Both the provisional step and the SDC correction step solve
//
//   (α/Δt) X − (1/Δt) D X + S (B X − T Σ) = rhs_position
//   (1/Δt) C X                            = rhs_constraint
//
// per vesicle, with the layer potentials S, D coupling all vesicles. X is the
// new position (provisional) or the position error (correction); Σ is the
// tension or its error. The operators are frozen at one configuration. The
// constraint row C is Div at that configuration (provisional), or
// x̃_{s0}·(·)_{s0} with the arclength frame of the first Lobatto node
// (correction).
//
// Operand layout: per vesicle [x (N), y (N), σ (N)], vesicles concatenated.
// Field layout: per vesicle [x (N), y (N)], vesicles concatenated.

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/QR>

#include "vesicle/gmres.hpp"
#include "vesicle/membrane_ops.hpp"
#include "vesicle/stokes_kernels.hpp"

namespace vesicle {

/// Offsets of each vesicle inside a concatenated operand or field vector.
class SystemLayout {
 public:
  explicit SystemLayout(std::vector<int> sizes);

  [[nodiscard]] int vesicles() const { return static_cast<int>(sizes_.size()); }
  [[nodiscard]] int nodes(int j) const { return sizes_[j]; }
  [[nodiscard]] Eigen::Index field_offset(int j) const { return field_offsets_[j]; }
  [[nodiscard]] Eigen::Index operand_offset(int j) const { return operand_offsets_[j]; }
  [[nodiscard]] Eigen::Index field_size() const { return field_offsets_.back(); }
  [[nodiscard]] Eigen::Index operand_size() const { return operand_offsets_.back(); }

  bool operator==(const SystemLayout&) const = default;

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::Index> field_offsets_;
  std::vector<Eigen::Index> operand_offsets_;
};

/// Layer potentials and membrane matrices discretized at one configuration.
class SuspensionOperators {
 public:
  SuspensionOperators(std::span<const VesicleState> vesicles, const LayerPotentialConfig& config);

  [[nodiscard]] const SystemLayout& layout() const { return layout_; }
  [[nodiscard]] int size() const { return layout_.vesicles(); }
  [[nodiscard]] const VesicleState& vesicle(int j) const { return vesicles_[j]; }
  [[nodiscard]] double alpha(int j) const { return 0.5 * (1 + vesicles_[j].nu); }
  [[nodiscard]] const LayerSource& source(int j) const { return *sources_[j]; }
  [[nodiscard]] const MembraneMatrices& membrane(int j) const { return membrane_[j]; }
  [[nodiscard]] const Eigen::VectorXd& jacobian(int j) const { return sources_[j]->geometry().jacobian; }

  /// Layer-potential blocks: velocity on vesicle j from density on vesicle k.
  [[nodiscard]] const Eigen::MatrixXd& slp(int j, int k) const;
  [[nodiscard]] const Eigen::MatrixXd& dlp(int j, int k) const;

  /// Σ_k S_jk f_k and Σ_k D_jk u_k for all j (field layout).
  [[nodiscard]] Eigen::VectorXd apply_slp(const Eigen::VectorXd& density) const;
  [[nodiscard]] Eigen::VectorXd apply_dlp(const Eigen::VectorXd& density) const;

  /// Σ_k S_jk (−B_k x_k + T_k σ_k) using the current positions and tensions.
  [[nodiscard]] Eigen::VectorXd membrane_velocity() const;

 private:
  SystemLayout layout_;
  std::vector<VesicleState> vesicles_;
  std::vector<std::unique_ptr<LayerSource>> sources_;
  std::vector<MembraneMatrices> membrane_;
  std::vector<Eigen::MatrixXd> slp_cross_;  // j*M + k, empty on the diagonal
  std::vector<Eigen::MatrixXd> dlp_cross_;
};

enum class SystemKind { provisional, correction };

/// The substep operator. `reference_jacobian` (per vesicle |x_θ| at the first
/// Lobatto node) is required for SystemKind::correction.
class ImexOperator {
 public:
  ImexOperator(const SuspensionOperators& ops, double dt, SystemKind kind,
               std::vector<Eigen::VectorXd> reference_jacobian = {});

  [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& operand) const;
  /// Scaled constraint rows C_j·field_j / Δt for one vesicle.
  [[nodiscard]] Eigen::VectorXd constraint(int j, const Eigen::Ref<const Eigen::VectorXd>& field) const;

  [[nodiscard]] const SuspensionOperators& operators() const { return *ops_; }
  [[nodiscard]] double dt() const { return dt_; }
  [[nodiscard]] SystemKind kind() const { return kind_; }
  /// Per-node factor turning Div into the constraint row (all ones for provisional).
  [[nodiscard]] const Eigen::VectorXd& constraint_scale(int j) const { return scale_[j]; }

 private:
  const SuspensionOperators* ops_;
  double dt_;
  SystemKind kind_;
  std::vector<Eigen::VectorXd> scale_;
};

/// Dense LU of each vesicle's diagonal block, ignoring inter-vesicle coupling.
/// Blocks with a small null space (a circular vesicle) use the pseudo-inverse.
class BlockPreconditioner {
 public:
  [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  [[nodiscard]] const Eigen::MatrixXd& block(int j) const { return blocks_[j]; }

 private:
  friend BlockPreconditioner build_preconditioner(const ImexOperator& op);
  friend BlockPreconditioner build_velocity_preconditioner(const SuspensionOperators& ops);
  friend GmresResult solve_tension(const SuspensionOperators&, const Eigen::VectorXd&,
                                   const GmresConfig&);
  void add_block(Eigen::MatrixXd block, Eigen::Index offset);

  std::vector<Eigen::MatrixXd> blocks_;
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lu_;
  std::vector<Eigen::MatrixXd> pinv_;  // nonempty for rank-deficient blocks
  std::vector<Eigen::Index> offsets_;
};

BlockPreconditioner build_preconditioner(const ImexOperator& op);

/// Per-vesicle α I − D_jj blocks for the velocity system.
BlockPreconditioner build_velocity_preconditioner(const SuspensionOperators& ops);

Eigen::VectorXd provisional_matvec(const SuspensionOperators& ops, const Eigen::VectorXd& operand,
                                   double dt);
Eigen::VectorXd correction_matvec(const SuspensionOperators& ops,
                                  const std::vector<Eigen::VectorXd>& reference_jacobian,
                                  const Eigen::VectorXd& operand, double dt);

/// (α I − D) u, all vesicles.
Eigen::VectorXd velocity_matvec(const SuspensionOperators& ops, const Eigen::VectorXd& velocity);

/// Solve op·X = rhs with GMRES and the exact block-diagonal preconditioner.
GmresResult solve_imex(const ImexOperator& op, const Eigen::VectorXd& rhs, const GmresConfig& config,
                       const Eigen::VectorXd* initial_guess = nullptr);

/// Solve (α I − D) u = rhs.
GmresResult solve_velocity(const SuspensionOperators& ops, const Eigen::VectorXd& rhs,
                           const GmresConfig& config);

/// Instantaneous velocity and tension of the frozen configuration:
///
///   α u − D u − S T σ = v∞ − S B x,   Div u = 0.
///
/// `background` is v∞ at the nodes (field layout); the solution is in operand
/// layout [u, σ].
GmresResult solve_tension(const SuspensionOperators& ops, const Eigen::VectorXd& background,
                          const GmresConfig& config);

}  // namespace vesicle
