#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace vesicle {

struct GmresConfig {
  double tolerance = 1e-10;  // on the preconditioned residual, relative to the preconditioned rhs
  int max_iterations = 300;
  int restart = 0;  // 0: no restart

  void validate() const;
};

struct GmresResult {
  Eigen::VectorXd solution;
  int iterations = 0;  // Krylov steps taken
  int matvecs = 0;     // operator applications, including the initial-guess residual
  double relative_residual = 0.0;
};

/// Raised when GMRES does not reach the tolerance or the operator produces
/// non-finite values. Carries the best iterate.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, GmresResult best)
      : std::runtime_error(what), best_(std::move(best)) {}
  [[nodiscard]] const GmresResult& best() const { return best_; }

 private:
  GmresResult best_;
};

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Left-preconditioned GMRES (modified Gram-Schmidt, Givens rotations).
GmresResult gmres_solve(const LinearOperator& matvec, const LinearOperator& preconditioner,
                        const Eigen::VectorXd& rhs, const GmresConfig& config,
                        const Eigen::VectorXd* initial_guess = nullptr);

}  // namespace vesicle
