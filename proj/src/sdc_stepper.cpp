#include "vesicle/sdc_stepper.hpp"

#include <cmath>
#include <numbers>

#include "vesicle/error.hpp"

namespace vesicle {
namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1);
  return {p1, dp};
}

// Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double r = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, r);
      const double step = p / dp;
      r -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const auto [p, dp] = legendre(n, r);
    x[i] = r;
    w[i] = 2 / ((1 - r * r) * dp * dp);
  }
}

double lagrange(const std::vector<double>& nodes, int i, double s) {
  double v = 1;
  for (std::size_t k = 0; k < nodes.size(); ++k)
    if (static_cast<int>(k) != i) v *= (s - nodes[k]) / (nodes[i] - nodes[k]);
  return v;
}

Configuration with_updates(const Configuration& base, const Eigen::VectorXd& operand,
                           const SystemLayout& lay, bool increment) {
  Configuration out;
  out.reserve(base.size());
  for (int j = 0; j < lay.vesicles(); ++j) {
    const int n = lay.nodes(j);
    const VesicleState& v = base[j];
    Eigen::VectorXd x = operand.segment(lay.operand_offset(j), 2 * n);
    Eigen::VectorXd s = operand.segment(lay.operand_offset(j) + 2 * n, n);
    if (increment) {
      x += v.curve.coords();
      s += v.tension;
    }
    out.emplace_back(ClosedCurve(std::move(x), Orientation::require_counterclockwise), std::move(s),
                     v.nu, v.kappa_b);
  }
  return out;
}

std::shared_ptr<const SuspensionOperators> build_operators(const Configuration& c,
                                                           const StepperConfig& config) {
  return std::make_shared<const SuspensionOperators>(c, config.kernels);
}

}  // namespace

LobattoGrid lobatto_grid(int p) {
  if (p < 3) throw InvalidInput("lobatto_grid: need p >= 3, got " + std::to_string(p));
  const int n = p - 1;
  std::vector<double> x(p);
  x[0] = -1;
  x[n] = 1;
  for (int k = 1; k < n; ++k) {
    // roots of P_n' via Newton, using (1 − x²) P_n'' = 2x P_n' − n(n+1) P_n
    double r = -std::cos(std::numbers::pi * k / n);
    for (int it = 0; it < 100; ++it) {
      const auto [pn, dp] = legendre(n, r);
      const double d2 = (2 * r * dp - n * (n + 1) * pn) / (1 - r * r);
      const double step = dp / d2;
      r -= step;
      if (std::abs(step) < 1e-16) break;
    }
    x[k] = r;
  }

  LobattoGrid g;
  g.nodes.resize(p);
  for (int k = 0; k < p; ++k) g.nodes[k] = 0.5 * (1 + x[k]);
  for (int k = 0; k < p / 2; ++k) {
    const double mid = 0.5 * (g.nodes[k] + 1 - g.nodes[p - 1 - k]);
    g.nodes[k] = mid;
    g.nodes[p - 1 - k] = 1 - mid;
  }
  if (p % 2 == 1) g.nodes[p / 2] = 0.5;

  std::vector<double> gx, gw;
  gauss_legendre(p, gx, gw);
  g.integration = Eigen::MatrixXd::Zero(p, p);
  for (int j = 1; j < p; ++j) {
    const double tj = g.nodes[j];
    for (int i = 0; i < p; ++i) {
      double sum = 0;
      for (int q = 0; q < p; ++q) sum += gw[q] * lagrange(g.nodes, i, 0.5 * tj * (1 + gx[q]));
      g.integration(j, i) = 0.5 * tj * sum;
    }
  }
  return g;
}

Eigen::VectorXd positions(const Configuration& config) {
  Eigen::Index total = 0;
  for (const auto& v : config) total += 2 * v.curve.size();
  Eigen::VectorXd out(total);
  Eigen::Index off = 0;
  for (const auto& v : config) {
    out.segment(off, 2 * v.curve.size()) = v.curve.coords();
    off += 2 * v.curve.size();
  }
  return out;
}

Eigen::VectorXd provisional_velocity(const SuspensionOperators& ops, const FarFieldFlow& flow,
                                     const GmresConfig& config, SolverCounters* counters) {
  Eigen::VectorXd rhs = ops.membrane_velocity();
  for (int j = 0; j < ops.size(); ++j) {
    rhs.segment(ops.layout().field_offset(j), 2 * ops.layout().nodes(j)) +=
        flow.evaluate(ops.vesicle(j).curve.coords());
  }
  GmresResult r = solve_velocity(ops, rhs, config);
  if (counters) counters->add(r);
  return std::move(r.solution);
}

Eigen::VectorXd consistent_velocity(const SuspensionOperators& ops, const FarFieldFlow& flow,
                                    const GmresConfig& config, SolverCounters* counters) {
  const SystemLayout& lay = ops.layout();
  Eigen::VectorXd background(lay.field_size());
  for (int j = 0; j < ops.size(); ++j)
    background.segment(lay.field_offset(j), 2 * lay.nodes(j)) = flow.evaluate(ops.vesicle(j).curve.coords());
  const GmresResult r = solve_tension(ops, background, config);
  if (counters) counters->add(r);
  Eigen::VectorXd v(lay.field_size());
  for (int j = 0; j < ops.size(); ++j)
    v.segment(lay.field_offset(j), 2 * lay.nodes(j)) = r.solution.segment(lay.operand_offset(j), 2 * lay.nodes(j));
  return v;
}

LobattoStage provisional_sweep(const Configuration& start, const FarFieldFlow& flow, double t, double dt,
                               const LobattoGrid& grid, const StepperConfig& config,
                               SolverCounters& counters,
                               std::shared_ptr<const SuspensionOperators> start_ops) {
  if (start.empty()) throw InvalidInput("provisional_sweep: no vesicles");
  if (!(dt >= 0) || !std::isfinite(dt)) throw InvalidInput("provisional_sweep: dt must be non-negative");
  const int p = grid.size();
  LobattoStage stage;
  stage.t = t;
  stage.dt = dt;
  stage.states.reserve(p);
  stage.operators.reserve(p);
  stage.states.push_back(start);
  stage.operators.push_back(start_ops ? std::move(start_ops) : build_operators(start, config));

  for (int m = 0; m + 1 < p; ++m) {
    const double h = dt * (grid.nodes[m + 1] - grid.nodes[m]);
    if (h == 0) {
      stage.states.push_back(stage.states.back());
      stage.operators.push_back(stage.operators.back());
      continue;
    }
    const SuspensionOperators& ops = *stage.operators[m];
    const SystemLayout& lay = ops.layout();
    const Eigen::VectorXd x = positions(stage.states[m]);
    const Eigen::VectorXd dx = ops.apply_dlp(x);

    Eigen::VectorXd rhs(lay.operand_size());
    Eigen::VectorXd guess(lay.operand_size());
    for (int j = 0; j < ops.size(); ++j) {
      const int n = lay.nodes(j);
      const auto fo = lay.field_offset(j);
      const auto oo = lay.operand_offset(j);
      const VesicleState& v = ops.vesicle(j);
      rhs.segment(oo, 2 * n) = (ops.alpha(j) / h) * x.segment(fo, 2 * n) - dx.segment(fo, 2 * n) / h +
                               flow.evaluate(v.curve.coords());
      rhs.segment(oo + 2 * n, n).setConstant(1 / h);
      guess.segment(oo, 2 * n) = v.curve.coords();
      guess.segment(oo + 2 * n, n) = v.tension;
    }
    const ImexOperator op(ops, h, SystemKind::provisional);
    GmresResult r = solve_imex(op, rhs, config.gmres, &guess);
    counters.add(r);
    stage.states.push_back(with_updates(stage.states[m], r.solution, lay, false));
    stage.operators.push_back(build_operators(stage.states.back(), config));
  }
  return stage;
}

std::vector<Eigen::VectorXd> picard_residual(const std::vector<Eigen::VectorXd>& positions,
                                             const std::vector<Eigen::VectorXd>& velocities,
                                             double dt, const LobattoGrid& grid) {
  const int p = grid.size();
  if (static_cast<int>(positions.size()) != p || static_cast<int>(velocities.size()) != p)
    throw InvalidInput("picard_residual: need one position and velocity per node");
  std::vector<Eigen::VectorXd> r(p);
  r[0] = Eigen::VectorXd::Zero(positions[0].size());
  for (int j = 1; j < p; ++j) {
    r[j] = positions[0] - positions[j];
    for (int i = 0; i < p; ++i) r[j] += (dt * grid.integration(j, i)) * velocities[i];
  }
  return r;
}

void compute_residual(LobattoStage& stage, const LobattoGrid& grid, const FarFieldFlow& flow,
                      const StepperConfig& config, SolverCounters& counters) {
  const int p = grid.size();
  if (static_cast<int>(stage.states.size()) != p)
    throw InvalidInput("compute_residual: stage does not match the grid");
  if (static_cast<int>(stage.velocities.size()) != p) {
    stage.velocities.clear();
    for (int m = 0; m < p; ++m) {
      const SuspensionOperators& ops = *stage.operators[m];
      stage.velocities.push_back(config.consistent_velocity
                                     ? consistent_velocity(ops, flow, config.gmres, &counters)
                                     : provisional_velocity(ops, flow, config.gmres, &counters));
    }
  }
  std::vector<Eigen::VectorXd> x;
  x.reserve(p);
  for (const auto& s : stage.states) x.push_back(positions(s));
  stage.residuals = picard_residual(x, stage.velocities, stage.dt, grid);
}

void correction_sweep(LobattoStage& stage, const LobattoGrid& grid, const FarFieldFlow& flow,
                      const StepperConfig& config, SolverCounters& counters) {
  const int p = grid.size();
  if (static_cast<int>(stage.residuals.size()) != p)
    throw InvalidInput("correction_sweep: residuals are not current");
  const SystemLayout& lay = stage.operators[0]->layout();
  std::vector<Eigen::VectorXd> j0;
  for (int j = 0; j < lay.vesicles(); ++j) j0.push_back(stage.operators[0]->jacobian(j));

  std::vector<Eigen::VectorXd> err(p, Eigen::VectorXd::Zero(lay.operand_size()));
  for (int m = 0; m + 1 < p; ++m) {
    const double h = stage.dt * (grid.nodes[m + 1] - grid.nodes[m]);
    if (h == 0) continue;
    const SuspensionOperators& ops = *stage.operators[m + 1];
    Eigen::VectorXd q(lay.field_size());
    for (int j = 0; j < lay.vesicles(); ++j) {
      q.segment(lay.field_offset(j), 2 * lay.nodes(j)) =
          err[m].segment(lay.operand_offset(j), 2 * lay.nodes(j));
    }
    q += stage.residuals[m + 1] - stage.residuals[m];
    const Eigen::VectorXd position_rhs = velocity_matvec(ops, q) / h;

    Eigen::VectorXd rhs(lay.operand_size());
    for (int j = 0; j < lay.vesicles(); ++j) {
      const int n = lay.nodes(j);
      const auto oo = lay.operand_offset(j);
      rhs.segment(oo, 2 * n) = position_rhs.segment(lay.field_offset(j), 2 * n);
      const Eigen::ArrayXd ratio = ops.jacobian(j).array() / j0[j].array();
      rhs.segment(oo + 2 * n, n) = (0.5 / h) * (1 - ratio.square());
    }
    const ImexOperator op(ops, h, SystemKind::correction, j0);
    GmresResult r = solve_imex(op, rhs, config.gmres);
    counters.add(r);
    err[m + 1] = std::move(r.solution);
  }

  for (int m = 1; m < p; ++m) {
    stage.states[m] = with_updates(stage.states[m], err[m], lay, true);
    stage.operators[m] = build_operators(stage.states[m], config);
  }
  stage.velocities.clear();
  compute_residual(stage, grid, flow, config, counters);
}

double max_residual(const LobattoStage& stage) {
  double r = 0;
  for (const auto& v : stage.residuals) r = std::max(r, v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0);
  return r;
}

double max_stretch(const LobattoStage& stage) {
  double worst = 0;
  const auto& ops0 = *stage.operators[0];
  for (const auto& ops : stage.operators) {
    for (int j = 0; j < ops->size(); ++j) {
      const Eigen::ArrayXd ratio = ops->jacobian(j).array() / ops0.jacobian(j).array();
      worst = std::max(worst, (ratio.square() - 1).abs().maxCoeff());
    }
  }
  return worst;
}

MacroStepResult macro_step(const Configuration& start, const FarFieldFlow& flow, double t, double dt,
                           int n_sdc, const LobattoGrid& grid, const StepperConfig& config,
                           std::shared_ptr<const SuspensionOperators> start_ops) {
  if (n_sdc < 0) throw InvalidInput("macro_step: n_sdc must be non-negative");
  MacroStepResult out;
  if (dt == 0) {
    out.state = start;
    out.operators = start_ops ? std::move(start_ops) : build_operators(start, config);
    return out;
  }
  LobattoStage stage = provisional_sweep(start, flow, t, dt, grid, config, out.counters, std::move(start_ops));
  if (n_sdc > 0) {
    compute_residual(stage, grid, flow, config, out.counters);
    out.residual_norms.push_back(max_residual(stage));
  }
  for (int k = 0; k < n_sdc; ++k) {
    correction_sweep(stage, grid, flow, config, out.counters);
    out.residual_norms.push_back(max_residual(stage));
  }
  out.state = std::move(stage.states.back());
  out.operators = std::move(stage.operators.back());
  return out;
}

}  // namespace vesicle
