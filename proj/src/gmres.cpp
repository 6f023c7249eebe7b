#include "vesicle/gmres.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vesicle/error.hpp"

namespace vesicle {
namespace {

std::string format_residual(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", r);
  return buf;
}

}  // namespace

void GmresConfig::validate() const {
  if (!(tolerance >= 1e-14)) throw InvalidInput("GmresConfig: tolerance must be >= 1e-14");
  if (max_iterations < 1) throw InvalidInput("GmresConfig: max_iterations must be positive");
  if (restart < 0) throw InvalidInput("GmresConfig: restart must be non-negative");
}

GmresResult gmres_solve(const LinearOperator& matvec, const LinearOperator& preconditioner,
                        const Eigen::VectorXd& rhs, const GmresConfig& config,
                        const Eigen::VectorXd* initial_guess) {
  config.validate();
  if (!rhs.allFinite()) throw InvalidInput("gmres_solve: non-finite right-hand side");
  const Eigen::Index n = rhs.size();

  GmresResult result;
  result.solution = initial_guess ? *initial_guess : Eigen::VectorXd::Zero(n);
  if (result.solution.size() != n) throw InvalidInput("gmres_solve: initial guess has wrong size");

  const Eigen::VectorXd pb = preconditioner(rhs);
  const double pb_norm = pb.norm();
  if (pb_norm == 0.0) {
    result.solution.setZero();
    return result;
  }

  auto precond_residual = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (x.isZero(0.0)) return pb;
    ++result.matvecs;
    return preconditioner(rhs - matvec(x));
  };

  const int restart = config.restart > 0 ? config.restart : config.max_iterations;
  Eigen::VectorXd r = precond_residual(result.solution);
  double beta = r.norm();
  result.relative_residual = beta / pb_norm;

  while (result.relative_residual > config.tolerance && result.iterations < config.max_iterations) {
    const int m = std::min(restart, config.max_iterations - result.iterations);
    std::vector<Eigen::VectorXd> v;
    v.reserve(m + 1);
    v.push_back(r / beta);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd cs = Eigen::VectorXd::Zero(m), sn = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
    g[0] = beta;

    int k = 0;
    for (; k < m; ++k) {
      ++result.iterations;
      ++result.matvecs;
      Eigen::VectorXd w = preconditioner(matvec(v[k]));
      if (!w.allFinite()) {
        throw SolverError("gmres_solve: operator produced non-finite values", result);
      }
      for (int i = 0; i <= k; ++i) {
        h(i, k) = w.dot(v[i]);
        w -= h(i, k) * v[i];
      }
      h(k + 1, k) = w.norm();
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
        h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
        h(i, k) = t;
      }
      const double denom = std::hypot(h(k, k), h(k + 1, k));
      cs[k] = denom == 0 ? 1.0 : h(k, k) / denom;
      sn[k] = denom == 0 ? 0.0 : h(k + 1, k) / denom;
      const double hk1 = h(k + 1, k);
      h(k, k) = cs[k] * h(k, k) + sn[k] * hk1;
      h(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];

      const double est = std::abs(g[k + 1]) / pb_norm;
      if (est <= config.tolerance || hk1 <= 1e-300) {
        ++k;
        break;
      }
      v.push_back(w / hk1);
    }

    // Back substitution on the k×k triangular system.
    Eigen::VectorXd y = h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    for (int i = 0; i < k; ++i) result.solution += y[i] * v[i];

    r = precond_residual(result.solution);
    beta = r.norm();
    result.relative_residual = beta / pb_norm;
    if (!std::isfinite(result.relative_residual)) {
      throw SolverError("gmres_solve: residual is not finite", result);
    }
    if (beta == 0.0) break;
  }

  if (result.relative_residual > config.tolerance) {
    throw SolverError("gmres_solve: no convergence after " + std::to_string(result.iterations) +
                          " iterations (relative residual " +
                          format_residual(result.relative_residual) + ")",
                      result);
  }
  return result;
}

}  // namespace vesicle
