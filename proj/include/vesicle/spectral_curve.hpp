#pragma once

// Fourier-spectral representation of closed planar curves.
//
// Periodic sequences live on the equispaced grid θ_i = 2πi/N. Planar vector
// fields on a curve with N nodes are stored as one vector of length 2N: the
// x components first, then the y components.

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace vesicle {

/// Spectral derivative of the trigonometric interpolant of `values`.
/// The Nyquist mode is dropped for odd orders.
Eigen::VectorXd fourier_derivative(const Eigen::Ref<const Eigen::VectorXd>& values, int order);

/// Dense N×N matrix of `fourier_derivative` (circulant).
Eigen::MatrixXd fourier_derivative_matrix(int n, int order);

/// Row of weights w such that w·values is the trigonometric interpolant at θ.
/// The Nyquist mode enters as cos(Nθ/2), so the interpolant is real.
Eigen::RowVectorXd fourier_interpolation_weights(int n, double theta);

/// Band-limited resampling matrix from n to m ≥ n equispaced points.
Eigen::MatrixXd fourier_upsampling_matrix(int n, int m);

/// Trigonometric interpolant of one periodic sequence, evaluable at any θ.
class TrigInterpolant {
 public:
  explicit TrigInterpolant(const Eigen::Ref<const Eigen::VectorXd>& values);

  /// d^order/dθ^order of the interpolant at θ (order 0 is the value).
  [[nodiscard]] double operator()(double theta, int order = 0) const;

 private:
  int n_;
  std::vector<std::complex<double>> coeffs_;  // modes 0..n/2, scaled by 1/n
};

enum class Orientation {
  normalize,                 // reverse clockwise input (node 0 is kept)
  require_counterclockwise,  // clockwise input is a GeometryError
};

class ClosedCurve {
 public:
  /// `coords` holds the x coordinates followed by the y coordinates.
  explicit ClosedCurve(Eigen::VectorXd coords, Orientation orientation = Orientation::normalize);

  /// (a cos θ, b sin θ), rotated by `rotation` then shifted to `center`.
  static ClosedCurve ellipse(int n, double a, double b, Eigen::Vector2d center = {0, 0},
                             double rotation = 0);

  [[nodiscard]] int size() const { return n_; }
  [[nodiscard]] const Eigen::VectorXd& coords() const { return coords_; }
  [[nodiscard]] Eigen::VectorXd::ConstSegmentReturnType x() const { return coords_.head(n_); }
  [[nodiscard]] Eigen::VectorXd::ConstSegmentReturnType y() const { return coords_.tail(n_); }
  [[nodiscard]] Eigen::Vector2d point(int i) const { return {coords_[i], coords_[n_ + i]}; }

  [[nodiscard]] ClosedCurve translated(Eigen::Vector2d shift) const;
  [[nodiscard]] ClosedCurve rotated(double angle) const;

  bool operator==(const ClosedCurve&) const = default;

 private:
  int n_;
  Eigen::VectorXd coords_;
};

struct CurveGeometry {
  Eigen::VectorXd tangent;    // 2N, unit
  Eigen::VectorXd normal;     // 2N, unit, outward
  Eigen::VectorXd curvature;  // N, positive on convex counterclockwise arcs
  Eigen::VectorXd jacobian;   // N, |dx/dθ|
  Eigen::VectorXd weights;    // N, trapezoid arclength weights |dx/dθ|·2π/N
};

CurveGeometry geometry(const ClosedCurve& curve);

/// (d/ds)^order applied to a scalar field (length N) or a planar field (length 2N).
Eigen::VectorXd arclength_derivative(const ClosedCurve& curve,
                                     const Eigen::Ref<const Eigen::VectorXd>& values, int order);

/// d/ds as a dense N×N matrix: diag(1/|x_θ|)·D_θ.
Eigen::MatrixXd arclength_derivative_matrix(const ClosedCurve& curve);

double area(const ClosedCurve& curve);
double length(const ClosedCurve& curve);
/// 4πA/L²; 1 for a circle.
double reduced_area(const ClosedCurve& curve);

/// Throws GeometryError when min |x_θ| is not positive relative to the curve size.
void check_nondegenerate(const Eigen::Ref<const Eigen::VectorXd>& jacobian);

}  // namespace vesicle
