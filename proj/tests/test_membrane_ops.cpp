#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vesicle/error.hpp"
#include "vesicle/membrane_ops.hpp"

using namespace vesicle;
using std::numbers::pi;

namespace {

Eigen::VectorXd thetas(int n) { return Eigen::VectorXd::LinSpaced(n, 0, 2 * pi * (n - 1) / n); }

// d/ds built from the cotangent differentiation matrix and the analytic jacobian.
Eigen::MatrixXd oracle_ds(const oracle::AnalyticCurve& c, int n) {
  Eigen::VectorXd inv_j(n);
  for (int i = 0; i < n; ++i) inv_j[i] = 1.0 / c.dx(2 * pi * i / n).norm();
  return inv_j.asDiagonal() * oracle::cot_derivative_matrix(n);
}

Eigen::VectorXd blockwise(const Eigen::MatrixXd& m, const Eigen::VectorXd& field) {
  const Eigen::Index n = m.rows();
  Eigen::VectorXd out(2 * n);
  out.head(n) = m * field.head(n);
  out.tail(n) = m * field.tail(n);
  return out;
}

Eigen::VectorXd net(const ClosedCurve& c, const Eigen::VectorXd& field) {
  const Eigen::VectorXd w = geometry(c).weights;
  const int n = c.size();
  return Eigen::Vector2d(w.dot(field.head(n)), w.dot(field.tail(n)));
}

}  // namespace

TEST(Bending, UnitCircleReturnsPosition) {
  const ClosedCurve c = ClosedCurve::ellipse(32, 1, 1);
  EXPECT_LE((bending_apply(c, 1, c.coords()) - c.coords()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Bending, ConstantFieldGivesZero) {
  const ClosedCurve c = ClosedCurve::ellipse(32, 1, 3);
  Eigen::VectorXd f(64);
  f << Eigen::VectorXd::Constant(32, 2), Eigen::VectorXd::Constant(32, -1);
  EXPECT_LE(bending_apply(c, 1, f).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Bending, LinearInModulus) {
  const ClosedCurve c = ClosedCurve::ellipse(32, 1, 3);
  EXPECT_EQ(bending_apply(c, 2, c.coords()), 2 * bending_apply(c, 1, c.coords()));
}

TEST(Bending, MatchesCotangentOracleOnEllipse) {
  const int n = 32;
  const ClosedCurve c = ClosedCurve::ellipse(n, 1, 3);
  const Eigen::MatrixXd ds = oracle_ds(oracle::ellipse(1, 3), n);
  const Eigen::MatrixXd ds4 = ds * ds * ds * ds;
  const Eigen::VectorXd ref = 0.7 * blockwise(ds4, c.coords());
  const Eigen::VectorXd got = bending_apply(c, 0.7, c.coords());
  EXPECT_LE((got - ref).cwiseAbs().maxCoeff(), 1e-9 * ref.cwiseAbs().maxCoeff());
  const MembraneMatrices m = membrane_matrices(c, 0.7);
  EXPECT_LE((m.bending * c.coords() - ref).cwiseAbs().maxCoeff(), 1e-9 * ref.cwiseAbs().maxCoeff());
}

TEST(Tension, ConstantOnUnitCircle) {
  const ClosedCurve c = ClosedCurve::ellipse(32, 1, 1);
  const Eigen::VectorXd t = tension_apply(c, Eigen::VectorXd::Constant(32, 1.5));
  EXPECT_LE((t + 1.5 * c.coords()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(tension_apply(c, Eigen::VectorXd::Zero(32)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Tension, MatchesHandComposedOracleOnEllipse) {
  const int n = 32;
  const auto curve = oracle::ellipse(1, 3);
  const ClosedCurve c = ClosedCurve::ellipse(n, 1, 3);
  const Eigen::MatrixXd ds = oracle_ds(curve, n);
  const Eigen::VectorXd sigma = thetas(n).array().sin();
  Eigen::VectorXd flux(2 * n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d t = curve.dx(2 * pi * i / n).normalized();
    flux[i] = sigma[i] * t.x();
    flux[n + i] = sigma[i] * t.y();
  }
  const Eigen::VectorXd ref = blockwise(ds, flux);
  EXPECT_LE((tension_apply(c, sigma) - ref).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((membrane_matrices(c, 1).tension * sigma - ref).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Divergence, Examples) {
  const int n = 32;
  const ClosedCurve circle = ClosedCurve::ellipse(n, 1, 1);
  const ClosedCurve ell = ClosedCurve::ellipse(n, 1, 3);
  EXPECT_LE((surface_divergence(ell, ell.coords()).array() - 1).abs().maxCoeff(), 1e-10);
  EXPECT_LE((surface_divergence(circle, circle.coords()).array() - 1).abs().maxCoeff(), 1e-10);
  Eigen::VectorXd rotation(2 * n);
  rotation << -circle.y(), circle.x();
  EXPECT_LE(surface_divergence(circle, rotation).cwiseAbs().maxCoeff(), 1e-10);
  Eigen::VectorXd constant(2 * n);
  constant << Eigen::VectorXd::Constant(n, 3), Eigen::VectorXd::Constant(n, 4);
  EXPECT_LE(surface_divergence(ell, constant).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Divergence, MatrixMatchesOperator) {
  const int n = 32;
  const ClosedCurve c = ClosedCurve::ellipse(n, 1, 3, {1, 2}, 0.5);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  const Eigen::VectorXd f = Eigen::VectorXd::NullaryExpr(2 * n, [&] { return g(rng); });
  EXPECT_LE((membrane_matrices(c, 1).divergence * f - surface_divergence(c, f)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Traction, UnitCircleExamples) {
  const ClosedCurve c = ClosedCurve::ellipse(32, 1, 1);
  EXPECT_LE((traction(VesicleState(c, 1, 1)) + c.coords()).cwiseAbs().maxCoeff(), 1e-10);
  const VesicleState unit_tension(c, Eigen::VectorXd::Ones(32), 1, 1);
  EXPECT_LE((traction(unit_tension) + 2 * c.coords()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Traction, LinearInTension) {
  const ClosedCurve c = ClosedCurve::ellipse(32, 1, 3);
  const Eigen::VectorXd s1 = thetas(32).array().cos();
  const Eigen::VectorXd s2 = (2 * thetas(32)).array().sin();
  const Eigen::VectorXd bend = traction(VesicleState(c, 4, 0.1));
  const Eigen::VectorXd lhs = traction(VesicleState(c, 2 * s1 + 3 * s2, 4, 0.1)) - bend;
  const Eigen::VectorXd rhs = 2 * (traction(VesicleState(c, s1, 4, 0.1)) - bend) +
                              3 * (traction(VesicleState(c, s2, 4, 0.1)) - bend);
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12 * bend.cwiseAbs().maxCoeff());
}

TEST(Traction, ZeroNetForceAndTensionTorque) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 64;
    const ClosedCurve c =
        ClosedCurve::ellipse(n, 1 + 0.5 * u(rng), 2 + u(rng), {u(rng), u(rng)}, pi * u(rng));
    Eigen::VectorXd sigma(n);
    for (int i = 0; i < n; ++i) sigma[i] = 1 + 0.5 * std::sin(2 * pi * i / n + u(rng));
    const VesicleState s(c, sigma, 4, 1);
    EXPECT_LE(net(c, traction(s)).cwiseAbs().maxCoeff(), 1e-8);
    const Eigen::VectorXd t = tension_apply(c, sigma);
    double torque = 0;
    const Eigen::VectorXd w = geometry(c).weights;
    for (int i = 0; i < n; ++i) torque += w[i] * (c.x()[i] * t[n + i] - c.y()[i] * t[i]);
    EXPECT_LE(std::abs(torque), 1e-8);
  }
}

TEST(MembraneOps, LinearityInField) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  const int n = 32;
  const ClosedCurve c = ClosedCurve::ellipse(n, 1, 3);
  const Eigen::VectorXd f = Eigen::VectorXd::NullaryExpr(2 * n, [&] { return std::sin(g(rng)); });
  const Eigen::VectorXd h = Eigen::VectorXd::NullaryExpr(2 * n, [&] { return std::sin(g(rng)); });
  const Eigen::VectorXd b = bending_apply(c, 1, 2 * f - h) - (2 * bending_apply(c, 1, f) - bending_apply(c, 1, h));
  EXPECT_LE(b.cwiseAbs().maxCoeff(), 1e-12 * bending_apply(c, 1, f).cwiseAbs().maxCoeff());
  const Eigen::VectorXd d =
      surface_divergence(c, 2 * f - h) - (2 * surface_divergence(c, f) - surface_divergence(c, h));
  EXPECT_LE(d.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(VesicleState, Validation) {
  const ClosedCurve c = ClosedCurve::ellipse(16, 1, 3);
  EXPECT_THROW(VesicleState(c, 0, 1), InvalidInput);
  EXPECT_THROW(VesicleState(c, 1, -1), InvalidInput);
  EXPECT_THROW(VesicleState(c, Eigen::VectorXd::Zero(8), 1, 1), InvalidInput);
  EXPECT_THROW(bending_apply(c, 1, Eigen::VectorXd::Zero(16)), InvalidInput);
}
