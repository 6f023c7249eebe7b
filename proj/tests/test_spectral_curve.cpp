#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vesicle/error.hpp"
#include "vesicle/spectral_curve.hpp"

using namespace vesicle;
using std::numbers::pi;

namespace {

Eigen::VectorXd grid(int n) { return Eigen::VectorXd::LinSpaced(n, 0, 2 * pi * (n - 1) / n); }

Eigen::VectorXd sample(int n, double (*f)(double)) { return grid(n).unaryExpr(f); }

ClosedCurve unit_circle(int n) { return ClosedCurve::ellipse(n, 1, 1); }

}  // namespace

TEST(FourierDerivative, SinToCos) {
  const Eigen::VectorXd d = fourier_derivative(sample(32, [](double t) { return std::sin(t); }), 1);
  EXPECT_LE((d - sample(32, [](double t) { return std::cos(t); })).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FourierDerivative, ConstantHasZeroDerivatives) {
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(16, 2.5);
  for (int k = 1; k <= 4; ++k) EXPECT_LE(fourier_derivative(c, k).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FourierDerivative, FourthDerivativeOfSin3) {
  const Eigen::VectorXd f = sample(32, [](double t) { return std::sin(3 * t); });
  EXPECT_LE((fourier_derivative(f, 4) - 81 * f).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FourierDerivative, TwiceFirstEqualsSecondOnBandLimited) {
  const Eigen::VectorXd f = sample(32, [](double t) { return std::cos(2 * t) + 0.3 * std::sin(7 * t); });
  EXPECT_LE((fourier_derivative(fourier_derivative(f, 1), 1) - fourier_derivative(f, 2)).cwiseAbs().maxCoeff(),
            1e-10);
}

TEST(FourierDerivative, MatchesCotangentMatrices) {
  const int n = 16;
  const Eigen::VectorXd f = sample(n, [](double t) { return std::exp(std::sin(t)); });
  EXPECT_LE((fourier_derivative(f, 1) - oracle::cot_derivative_matrix(n) * f).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((fourier_derivative(f, 2) - oracle::cot_second_derivative_matrix(n) * f).cwiseAbs().maxCoeff(),
            1e-11);
  EXPECT_LE((fourier_derivative_matrix(n, 1) - oracle::cot_derivative_matrix(n)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FourierDerivative, NegativeOrderThrows) {
  EXPECT_THROW(fourier_derivative(Eigen::VectorXd::Zero(16), -1), InvalidInput);
}

TEST(TrigInterpolant, ReproducesBandLimitedFunction) {
  const TrigInterpolant f(sample(16, [](double t) { return std::cos(3 * t) - std::sin(t); }));
  for (double t : {0.1, 1.7, 4.2}) {
    EXPECT_NEAR(f(t), std::cos(3 * t) - std::sin(t), 1e-13);
    EXPECT_NEAR(f(t, 1), -3 * std::sin(3 * t) - std::cos(t), 1e-12);
  }
}

TEST(FourierUpsampling, ExactForBandLimited) {
  const Eigen::VectorXd f = sample(16, [](double t) { return std::sin(2 * t) + std::cos(5 * t); });
  const Eigen::VectorXd fine = fourier_upsampling_matrix(16, 64) * f;
  const Eigen::VectorXd ref = sample(64, [](double t) { return std::sin(2 * t) + std::cos(5 * t); });
  EXPECT_LE((fine - ref).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(ClosedCurve, RejectsSmallOrOddSizes) {
  EXPECT_THROW(ClosedCurve::ellipse(6, 1, 1), InvalidInput);
  EXPECT_THROW(ClosedCurve(Eigen::VectorXd::Zero(18)), InvalidInput);
}

TEST(ClosedCurve, RejectsNonFiniteCoordinates) {
  Eigen::VectorXd c = unit_circle(16).coords();
  c[3] = std::nan("");
  EXPECT_THROW(ClosedCurve{c}, InvalidInput);
}

TEST(ClosedCurve, ClockwiseInputIsReversedKeepingNodeZero) {
  const ClosedCurve ccw = unit_circle(16);
  Eigen::VectorXd cw = ccw.coords();
  cw.tail(16) *= -1;
  const ClosedCurve fixed(cw);
  EXPECT_GT(area(fixed), 0);
  EXPECT_DOUBLE_EQ(fixed.point(0).x(), 1.0);
  EXPECT_NEAR(fixed.point(1).y(), std::sin(2 * pi / 16), 1e-15);
  EXPECT_THROW(ClosedCurve(cw, Orientation::require_counterclockwise), GeometryError);
}

TEST(ArclengthDerivative, UnitCircle) {
  const int n = 32;
  const ClosedCurve c = unit_circle(n);
  Eigen::VectorXd tangent(2 * n);
  tangent << -c.y(), c.x();
  EXPECT_LE((arclength_derivative(c, c.coords(), 1) - tangent).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((arclength_derivative(c, c.coords(), 4) - c.coords()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ArclengthDerivative, EllipseTangentHasUnitLength) {
  const int n = 64;
  const ClosedCurve c = ClosedCurve::ellipse(n, 1, 3);
  const Eigen::VectorXd t = arclength_derivative(c, c.coords(), 1);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(std::hypot(t[i], t[n + i]), 1.0, 1e-12);
}

TEST(ArclengthDerivative, MatrixMatchesOperator) {
  const ClosedCurve c = ClosedCurve::ellipse(16, 1, 3);
  const Eigen::VectorXd f = sample(16, [](double t) { return std::sin(t) + std::cos(2 * t); });
  EXPECT_LE((arclength_derivative_matrix(c) * f - arclength_derivative(c, f, 1)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Geometry, UnitCircle) {
  const int n = 32;
  const ClosedCurve c = unit_circle(n);
  const CurveGeometry g = geometry(c);
  EXPECT_LE((g.curvature.array() - 1).abs().maxCoeff(), 1e-12);
  EXPECT_LE((g.normal - c.coords()).cwiseAbs().maxCoeff(), 1e-12);
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(g.tangent[i] * g.normal[i] + g.tangent[n + i] * g.normal[n + i], 0, 1e-12);
    EXPECT_NEAR(std::hypot(g.tangent[i], g.tangent[n + i]), 1, 1e-12);
  }
}

TEST(Geometry, CircleOfRadiusTwo) {
  const CurveGeometry g = geometry(ClosedCurve::ellipse(32, 2, 2));
  EXPECT_LE((g.curvature.array() - 0.5).abs().maxCoeff(), 1e-12);
}

TEST(Geometry, EllipseCurvatureAtVertices) {
  const CurveGeometry g = geometry(ClosedCurve::ellipse(64, 1, 3));
  // κ(θ) = ab / (a² sin²θ + b² cos²θ)^{3/2}: a/b² at (a, 0), b/a² at (0, b).
  EXPECT_NEAR(g.curvature[0], 1.0 / 9, 1e-10);
  EXPECT_NEAR(g.curvature[16], 3.0, 1e-10);
  for (int i = 0; i < 64; ++i) {
    const double t = 2 * pi * i / 64;
    EXPECT_NEAR(g.curvature[i], 3 / std::pow(std::sin(t) * std::sin(t) + 9 * std::cos(t) * std::cos(t), 1.5), 1e-9);
  }
}

TEST(Geometry, NormalsPointOutward) {
  const int n = 32;
  const ClosedCurve c = ClosedCurve::ellipse(n, 1, 3, {2, -1}, 0.4);
  const CurveGeometry g = geometry(c);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d r = c.point(i) - Eigen::Vector2d(2, -1);
    EXPECT_GT(r.x() * g.normal[i] + r.y() * g.normal[n + i], 0);
  }
}

TEST(Measures, UnitCircle) {
  const ClosedCurve c = unit_circle(64);
  EXPECT_NEAR(area(c), pi, 1e-12);
  EXPECT_NEAR(length(c), 2 * pi, 1e-12);
  EXPECT_NEAR(reduced_area(c), 1.0, 1e-12);
}

TEST(Measures, Ellipse) {
  const ClosedCurve c = ClosedCurve::ellipse(64, 1, 3);
  EXPECT_NEAR(area(c), 3 * pi, 1e-12);
  EXPECT_NEAR(reduced_area(c), 0.66, 0.01);
}

TEST(Measures, TranslationAndRotationInvariance) {
  const ClosedCurve c = ClosedCurve::ellipse(64, 1, 3);
  for (const ClosedCurve& moved : {c.translated({5, 7}), c.rotated(0.7), c.rotated(2.1).translated({-3, 1})}) {
    EXPECT_NEAR(area(moved), area(c), 1e-12);
    EXPECT_NEAR(length(moved), length(c), 1e-12);
  }
  const CurveGeometry g0 = geometry(c);
  const CurveGeometry g1 = geometry(c.translated({5, 7}));
  EXPECT_LE((g0.curvature - g1.curvature).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Measures, SpectralConvergenceOfLength) {
  double previous = 0;
  std::vector<double> diffs;
  for (int n : {16, 32, 64, 128}) {
    const double l = length(ClosedCurve::ellipse(n, 1, 3));
    if (previous != 0) diffs.push_back(std::abs(l - previous));
    previous = l;
  }
  // Algebraic decay would give a constant ratio per doubling; here it grows.
  const double r1 = diffs[0] / diffs[1];
  const double r2 = diffs[1] / diffs[2];
  EXPECT_GT(r1, 100);
  EXPECT_GT(r2, 10 * r1);
}

TEST(Geometry, DegenerateJacobianThrows) {
  Eigen::VectorXd j = Eigen::VectorXd::Ones(16);
  j[4] = 0;
  EXPECT_THROW(check_nondegenerate(j), GeometryError);
}
