#include "vesicle/membrane_ops.hpp"

#include "vesicle/error.hpp"

namespace vesicle {
namespace {

void require_planar_field(const ClosedCurve& curve, const Eigen::Ref<const Eigen::VectorXd>& f,
                          const char* what) {
  if (f.size() != 2 * curve.size())
    throw InvalidInput(std::string(what) + ": expected a planar field of length 2N");
}

}  // namespace

VesicleState::VesicleState(ClosedCurve c, Eigen::VectorXd sigma, double nu_, double kappa)
    : curve(std::move(c)), tension(std::move(sigma)), nu(nu_), kappa_b(kappa) {
  if (tension.size() != curve.size()) throw InvalidInput("VesicleState: tension length must equal N");
  if (!(nu > 0)) throw InvalidInput("VesicleState: viscosity contrast must be positive");
  if (!(kappa_b > 0)) throw InvalidInput("VesicleState: bending modulus must be positive");
}

VesicleState::VesicleState(ClosedCurve c, double nu_, double kappa)
    : VesicleState(c, Eigen::VectorXd::Zero(c.size()), nu_, kappa) {}

Eigen::VectorXd bending_apply(const ClosedCurve& curve, double kappa_b,
                              const Eigen::Ref<const Eigen::VectorXd>& field) {
  require_planar_field(curve, field, "bending_apply");
  return kappa_b * arclength_derivative(curve, field, 4);
}

Eigen::VectorXd tension_apply(const ClosedCurve& curve, const Eigen::Ref<const Eigen::VectorXd>& sigma) {
  const int n = curve.size();
  if (sigma.size() != n) throw InvalidInput("tension_apply: tension length must equal N");
  const CurveGeometry g = geometry(curve);
  Eigen::VectorXd flux(2 * n);
  flux.head(n) = sigma.cwiseProduct(g.tangent.head(n));
  flux.tail(n) = sigma.cwiseProduct(g.tangent.tail(n));
  return arclength_derivative(curve, flux, 1);
}

Eigen::VectorXd surface_divergence(const ClosedCurve& curve,
                                   const Eigen::Ref<const Eigen::VectorXd>& field) {
  require_planar_field(curve, field, "surface_divergence");
  const int n = curve.size();
  const CurveGeometry g = geometry(curve);
  const Eigen::VectorXd fs = arclength_derivative(curve, field, 1);
  return g.tangent.head(n).cwiseProduct(fs.head(n)) + g.tangent.tail(n).cwiseProduct(fs.tail(n));
}

Eigen::VectorXd traction(const VesicleState& state) {
  return -bending_apply(state.curve, state.kappa_b, state.curve.coords()) +
         tension_apply(state.curve, state.tension);
}

MembraneMatrices membrane_matrices(const ClosedCurve& curve, double kappa_b) {
  const int n = curve.size();
  const CurveGeometry g = geometry(curve);
  MembraneMatrices m;
  m.ds = arclength_derivative_matrix(curve);
  const Eigen::MatrixXd ds2 = m.ds * m.ds;
  const Eigen::MatrixXd ds4 = kappa_b * (ds2 * ds2);
  m.bending = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  m.bending.topLeftCorner(n, n) = ds4;
  m.bending.bottomRightCorner(n, n) = ds4;
  m.tension.resize(2 * n, n);
  m.tension.topRows(n) = m.ds * g.tangent.head(n).asDiagonal();
  m.tension.bottomRows(n) = m.ds * g.tangent.tail(n).asDiagonal();
  m.divergence.resize(n, 2 * n);
  m.divergence.leftCols(n) = g.tangent.head(n).asDiagonal() * m.ds;
  m.divergence.rightCols(n) = g.tangent.tail(n).asDiagonal() * m.ds;
  return m;
}

}  // namespace vesicle
