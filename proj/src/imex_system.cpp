#include "vesicle/imex_system.hpp"

#include <cmath>

#include "vesicle/error.hpp"

namespace vesicle {

SystemLayout::SystemLayout(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  field_offsets_.reserve(sizes_.size() + 1);
  operand_offsets_.reserve(sizes_.size() + 1);
  field_offsets_.push_back(0);
  operand_offsets_.push_back(0);
  for (int n : sizes_) {
    if (n <= 0) throw InvalidInput("SystemLayout: vesicle node counts must be positive");
    field_offsets_.push_back(field_offsets_.back() + 2 * n);
    operand_offsets_.push_back(operand_offsets_.back() + 3 * n);
  }
}

namespace {

std::vector<int> node_counts(std::span<const VesicleState> vesicles) {
  std::vector<int> n;
  n.reserve(vesicles.size());
  for (const auto& v : vesicles) n.push_back(v.curve.size());
  return n;
}

}  // namespace

SuspensionOperators::SuspensionOperators(std::span<const VesicleState> vesicles,
                                         const LayerPotentialConfig& config)
    : layout_(node_counts(vesicles)), vesicles_(vesicles.begin(), vesicles.end()) {
  if (vesicles_.empty()) throw InvalidInput("SuspensionOperators: no vesicles");
  const int m = size();
  sources_.reserve(m);
  membrane_.reserve(m);
  for (const auto& v : vesicles_) {
    sources_.push_back(std::make_unique<LayerSource>(v.curve, v.nu, config));
    membrane_.push_back(membrane_matrices(v.curve, v.kappa_b));
  }
  slp_cross_.resize(static_cast<std::size_t>(m * m));
  dlp_cross_.resize(static_cast<std::size_t>(m * m));
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      if (j == k) continue;
      const Eigen::VectorXd& targets = vesicles_[j].curve.coords();
      slp_cross_[j * m + k] = sources_[k]->target_matrix(KernelKind::single_layer, targets);
      dlp_cross_[j * m + k] = sources_[k]->target_matrix(KernelKind::double_layer, targets);
    }
  }
}

const Eigen::MatrixXd& SuspensionOperators::slp(int j, int k) const {
  return j == k ? sources_[j]->slp_self() : slp_cross_[j * size() + k];
}

const Eigen::MatrixXd& SuspensionOperators::dlp(int j, int k) const {
  return j == k ? sources_[j]->dlp_self() : dlp_cross_[j * size() + k];
}

Eigen::VectorXd SuspensionOperators::apply_slp(const Eigen::VectorXd& density) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout_.field_size());
  for (int j = 0; j < size(); ++j) {
    auto oj = out.segment(layout_.field_offset(j), 2 * layout_.nodes(j));
    for (int k = 0; k < size(); ++k)
      oj.noalias() += slp(j, k) * density.segment(layout_.field_offset(k), 2 * layout_.nodes(k));
  }
  return out;
}

Eigen::VectorXd SuspensionOperators::apply_dlp(const Eigen::VectorXd& density) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout_.field_size());
  for (int j = 0; j < size(); ++j) {
    auto oj = out.segment(layout_.field_offset(j), 2 * layout_.nodes(j));
    for (int k = 0; k < size(); ++k) {
      if (vesicles_[k].nu == 1.0) continue;
      oj.noalias() += dlp(j, k) * density.segment(layout_.field_offset(k), 2 * layout_.nodes(k));
    }
  }
  return out;
}

Eigen::VectorXd SuspensionOperators::membrane_velocity() const {
  Eigen::VectorXd force(layout_.field_size());
  for (int j = 0; j < size(); ++j)
    force.segment(layout_.field_offset(j), 2 * layout_.nodes(j)) = traction(vesicles_[j]);
  return apply_slp(force);
}

ImexOperator::ImexOperator(const SuspensionOperators& ops, double dt, SystemKind kind,
                           std::vector<Eigen::VectorXd> reference_jacobian)
    : ops_(&ops), dt_(dt), kind_(kind) {
  if (!(dt > 0)) throw InvalidInput("ImexOperator: dt must be positive");
  scale_.reserve(ops.size());
  for (int j = 0; j < ops.size(); ++j) {
    const int n = ops.layout().nodes(j);
    if (kind == SystemKind::provisional) {
      scale_.push_back(Eigen::VectorXd::Ones(n));
      continue;
    }
    if (static_cast<int>(reference_jacobian.size()) != ops.size() ||
        reference_jacobian[j].size() != n) {
      throw InvalidInput("ImexOperator: correction system needs reference jacobians for every vesicle");
    }
    // x̃_θ·f_θ / J0² = (J̃/J0)² · Div(x̃) f
    scale_.push_back((ops.jacobian(j).array() / reference_jacobian[j].array()).square().matrix());
  }
}

Eigen::VectorXd ImexOperator::constraint(int j, const Eigen::Ref<const Eigen::VectorXd>& field) const {
  const VesicleState& v = ops_->vesicle(j);
  return scale_[j].cwiseProduct(surface_divergence(v.curve, field)) / dt_;
}

Eigen::VectorXd ImexOperator::apply(const Eigen::VectorXd& operand) const {
  const SystemLayout& lay = ops_->layout();
  if (operand.size() != lay.operand_size()) throw InvalidInput("ImexOperator: operand size mismatch");

  Eigen::VectorXd positions(lay.field_size());
  Eigen::VectorXd forces(lay.field_size());
  for (int j = 0; j < ops_->size(); ++j) {
    const int n = lay.nodes(j);
    const VesicleState& v = ops_->vesicle(j);
    const auto xj = operand.segment(lay.operand_offset(j), 2 * n);
    const auto sj = operand.segment(lay.operand_offset(j) + 2 * n, n);
    positions.segment(lay.field_offset(j), 2 * n) = xj;
    forces.segment(lay.field_offset(j), 2 * n) =
        bending_apply(v.curve, v.kappa_b, xj) - tension_apply(v.curve, sj);
  }
  const Eigen::VectorXd slp_part = ops_->apply_slp(forces);
  const Eigen::VectorXd dlp_part = ops_->apply_dlp(positions);

  Eigen::VectorXd out(lay.operand_size());
  for (int j = 0; j < ops_->size(); ++j) {
    const int n = lay.nodes(j);
    const auto fo = lay.field_offset(j);
    out.segment(lay.operand_offset(j), 2 * n) =
        (ops_->alpha(j) / dt_) * positions.segment(fo, 2 * n) - dlp_part.segment(fo, 2 * n) / dt_ +
        slp_part.segment(fo, 2 * n);
    out.segment(lay.operand_offset(j) + 2 * n, n) = constraint(j, positions.segment(fo, 2 * n));
  }
  return out;
}

void BlockPreconditioner::add_block(Eigen::MatrixXd block, Eigen::Index offset) {
  if (!block.allFinite()) throw AssemblyError("preconditioner block has non-finite entries");
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(block);
  const double rc = lu.rcond();
  Eigen::MatrixXd pinv;
  if (!(rc > 1e-13)) {
    // A circle leaves constant tension undetermined; solve such blocks in the
    // least-squares sense. Anything more deficient is a broken geometry.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(block);
    cod.setThreshold(1e-11);
    const Eigen::Index deficiency = block.rows() - cod.rank();
    if (deficiency > 2) {
      throw AssemblyError("singular preconditioner block (rcond " + std::to_string(rc) + ", rank deficiency " +
                          std::to_string(deficiency) + "): degenerate geometry or time step");
    }
    pinv = cod.pseudoInverse();
  }
  blocks_.push_back(std::move(block));
  lu_.push_back(std::move(lu));
  pinv_.push_back(std::move(pinv));
  offsets_.push_back(offset);
}

Eigen::VectorXd BlockPreconditioner::apply(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(v.size());
  for (std::size_t b = 0; b < lu_.size(); ++b) {
    const Eigen::Index sz = blocks_[b].rows();
    if (pinv_[b].size() > 0) {
      out.segment(offsets_[b], sz).noalias() = pinv_[b] * v.segment(offsets_[b], sz);
    } else {
      out.segment(offsets_[b], sz) = lu_[b].solve(v.segment(offsets_[b], sz));
    }
  }
  return out;
}

BlockPreconditioner build_preconditioner(const ImexOperator& op) {
  const SuspensionOperators& ops = op.operators();
  const double dt = op.dt();
  BlockPreconditioner pc;
  for (int j = 0; j < ops.size(); ++j) {
    const int n = ops.layout().nodes(j);
    const MembraneMatrices& mm = ops.membrane(j);
    const Eigen::MatrixXd& s = ops.slp(j, j);
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(3 * n, 3 * n);
    auto pos = block.topLeftCorner(2 * n, 2 * n);
    pos.noalias() = s * mm.bending;
    pos -= ops.dlp(j, j) / dt;
    pos.diagonal().array() += ops.alpha(j) / dt;
    block.topRightCorner(2 * n, n).noalias() = -s * mm.tension;
    block.bottomLeftCorner(n, 2 * n) = (op.constraint_scale(j) / dt).asDiagonal() * mm.divergence;
    pc.add_block(std::move(block), ops.layout().operand_offset(j));
  }
  return pc;
}

BlockPreconditioner build_velocity_preconditioner(const SuspensionOperators& ops) {
  BlockPreconditioner pc;
  for (int j = 0; j < ops.size(); ++j) {
    Eigen::MatrixXd block = -ops.dlp(j, j);
    block.diagonal().array() += ops.alpha(j);
    pc.add_block(std::move(block), ops.layout().field_offset(j));
  }
  return pc;
}

Eigen::VectorXd provisional_matvec(const SuspensionOperators& ops, const Eigen::VectorXd& operand,
                                   double dt) {
  return ImexOperator(ops, dt, SystemKind::provisional).apply(operand);
}

Eigen::VectorXd correction_matvec(const SuspensionOperators& ops,
                                  const std::vector<Eigen::VectorXd>& reference_jacobian,
                                  const Eigen::VectorXd& operand, double dt) {
  return ImexOperator(ops, dt, SystemKind::correction, reference_jacobian).apply(operand);
}

Eigen::VectorXd velocity_matvec(const SuspensionOperators& ops, const Eigen::VectorXd& velocity) {
  Eigen::VectorXd out = -ops.apply_dlp(velocity);
  for (int j = 0; j < ops.size(); ++j) {
    const int n = ops.layout().nodes(j);
    out.segment(ops.layout().field_offset(j), 2 * n) +=
        ops.alpha(j) * velocity.segment(ops.layout().field_offset(j), 2 * n);
  }
  return out;
}

GmresResult solve_imex(const ImexOperator& op, const Eigen::VectorXd& rhs, const GmresConfig& config,
                       const Eigen::VectorXd* initial_guess) {
  const BlockPreconditioner pc = build_preconditioner(op);
  const LinearOperator matvec = [&](const Eigen::VectorXd& v) { return op.apply(v); };
  const LinearOperator precond = [&](const Eigen::VectorXd& v) { return pc.apply(v); };
  if (!initial_guess) return gmres_solve(matvec, precond, rhs, config);
  if (initial_guess->size() != rhs.size()) throw InvalidInput("solve_imex: initial guess has wrong size");

  // Solve for the increment so the residual is not formed by cancelling two
  // O(1/Δt) terms; the tolerance stays relative to the full right-hand side.
  const double pb_norm = pc.apply(rhs).norm();
  const Eigen::VectorXd r0 = rhs - op.apply(*initial_guess);
  const double pr_norm = pc.apply(r0).norm();
  GmresResult r;
  if (pr_norm <= config.tolerance * pb_norm) {
    r.solution = *initial_guess;
    r.relative_residual = pb_norm > 0 ? pr_norm / pb_norm : 0.0;
  } else {
    GmresConfig scaled = config;
    scaled.tolerance = std::max(1e-14, config.tolerance * pb_norm / pr_norm);
    try {
      r = gmres_solve(matvec, precond, r0, scaled);
    } catch (SolverError& e) {
      GmresResult best = e.best();
      best.solution += *initial_guess;
      best.relative_residual *= pr_norm / pb_norm;
      ++best.matvecs;
      throw SolverError(e.what(), std::move(best));
    }
    r.solution += *initial_guess;
    r.relative_residual *= pr_norm / pb_norm;
  }
  ++r.matvecs;
  return r;
}

GmresResult solve_velocity(const SuspensionOperators& ops, const Eigen::VectorXd& rhs,
                           const GmresConfig& config) {
  const BlockPreconditioner pc = build_velocity_preconditioner(ops);
  return gmres_solve([&](const Eigen::VectorXd& v) { return velocity_matvec(ops, v); },
                     [&](const Eigen::VectorXd& v) { return pc.apply(v); }, rhs, config);
}

GmresResult solve_tension(const SuspensionOperators& ops, const Eigen::VectorXd& background,
                          const GmresConfig& config) {
  const SystemLayout& lay = ops.layout();
  if (background.size() != lay.field_size()) throw InvalidInput("solve_tension: background size mismatch");

  BlockPreconditioner pc;
  Eigen::VectorXd rhs(lay.operand_size());
  const Eigen::VectorXd bending_velocity = [&] {
    Eigen::VectorXd f(lay.field_size());
    for (int j = 0; j < ops.size(); ++j) {
      const VesicleState& v = ops.vesicle(j);
      f.segment(lay.field_offset(j), 2 * lay.nodes(j)) = bending_apply(v.curve, v.kappa_b, v.curve.coords());
    }
    return ops.apply_slp(f);
  }();
  for (int j = 0; j < ops.size(); ++j) {
    const int n = lay.nodes(j);
    const MembraneMatrices& mm = ops.membrane(j);
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(3 * n, 3 * n);
    block.topLeftCorner(2 * n, 2 * n) = -ops.dlp(j, j);
    block.topLeftCorner(2 * n, 2 * n).diagonal().array() += ops.alpha(j);
    block.topRightCorner(2 * n, n).noalias() = -ops.slp(j, j) * mm.tension;
    block.bottomLeftCorner(n, 2 * n) = mm.divergence;
    pc.add_block(std::move(block), lay.operand_offset(j));
    rhs.segment(lay.operand_offset(j), 2 * n) =
        background.segment(lay.field_offset(j), 2 * n) - bending_velocity.segment(lay.field_offset(j), 2 * n);
    rhs.segment(lay.operand_offset(j) + 2 * n, n).setZero();
  }

  auto matvec = [&](const Eigen::VectorXd& operand) {
    Eigen::VectorXd velocity(lay.field_size());
    Eigen::VectorXd force(lay.field_size());
    for (int j = 0; j < ops.size(); ++j) {
      const int n = lay.nodes(j);
      velocity.segment(lay.field_offset(j), 2 * n) = operand.segment(lay.operand_offset(j), 2 * n);
      force.segment(lay.field_offset(j), 2 * n) =
          tension_apply(ops.vesicle(j).curve, operand.segment(lay.operand_offset(j) + 2 * n, n));
    }
    const Eigen::VectorXd lhs = velocity_matvec(ops, velocity) - ops.apply_slp(force);
    Eigen::VectorXd out(lay.operand_size());
    for (int j = 0; j < ops.size(); ++j) {
      const int n = lay.nodes(j);
      out.segment(lay.operand_offset(j), 2 * n) = lhs.segment(lay.field_offset(j), 2 * n);
      out.segment(lay.operand_offset(j) + 2 * n, n) =
          surface_divergence(ops.vesicle(j).curve, velocity.segment(lay.field_offset(j), 2 * n));
    }
    return out;
  };
  return gmres_solve(matvec, [&](const Eigen::VectorXd& v) { return pc.apply(v); }, rhs, config);
}

}  // namespace vesicle
