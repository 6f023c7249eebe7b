#include "vesicle/spectral_curve.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "vesicle/error.hpp"

namespace vesicle {
namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

// FFTW planning is not thread-safe; execution on new arrays is. Plans are
// created once per size and kept for the lifetime of the process.
struct PlanPair {
  fftw_plan forward;
  fftw_plan backward;
};

const PlanPair& plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, PlanPair> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> real(n);
  std::vector<fftw_complex> spec(n / 2 + 1);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p{fftw_plan_dft_r2c_1d(n, real.data(), spec.data(), flags),
             fftw_plan_dft_c2r_1d(n, spec.data(), real.data(), flags)};
  return cache.emplace(n, p).first->second;
}

void require_even(int n, const char* what) {
  if (n < 2 || n % 2 != 0) {
    throw InvalidInput(std::string(what) + ": periodic sequence length must be even, got " +
                       std::to_string(n));
  }
}

// (i k)^order
std::complex<double> derivative_symbol(int k, int order) {
  std::complex<double> s = 1.0;
  const std::complex<double> ik(0.0, static_cast<double>(k));
  for (int j = 0; j < order; ++j) s *= ik;
  return s;
}

}  // namespace

Eigen::VectorXd fourier_derivative(const Eigen::Ref<const Eigen::VectorXd>& values, int order) {
  const int n = static_cast<int>(values.size());
  require_even(n, "fourier_derivative");
  if (order < 0) throw InvalidInput("fourier_derivative: negative order");
  if (order == 0) return values;

  const PlanPair& p = plans_for(n);
  Eigen::VectorXd in = values;
  std::vector<std::complex<double>> spec(n / 2 + 1);
  auto* spec_ptr = reinterpret_cast<fftw_complex*>(spec.data());
  fftw_execute_dft_r2c(p.forward, in.data(), spec_ptr);

  const double scale = 1.0 / n;
  for (int k = 0; k < n / 2; ++k) spec[k] *= derivative_symbol(k, order) * scale;
  if (order % 2 == 1) {
    spec[n / 2] = 0.0;
  } else {
    spec[n / 2] *= derivative_symbol(n / 2, order).real() * scale;
  }

  Eigen::VectorXd out(n);
  fftw_execute_dft_c2r(p.backward, spec_ptr, out.data());
  return out;
}

Eigen::MatrixXd fourier_derivative_matrix(int n, int order) {
  require_even(n, "fourier_derivative_matrix");
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(n);
  e0[0] = 1.0;
  const Eigen::VectorXd col = fourier_derivative(e0, order);
  Eigen::MatrixXd d(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) d(i, j) = col[((i - j) % n + n) % n];
  return d;
}

Eigen::RowVectorXd fourier_interpolation_weights(int n, double theta) {
  require_even(n, "fourier_interpolation_weights");
  Eigen::RowVectorXd w(n);
  for (int j = 0; j < n; ++j) {
    const double phi = theta - kTwoPi * j / n;
    const double s = std::sin(0.5 * phi);
    if (std::abs(s) < 1e-14) {
      w[j] = 1.0;
    } else {
      w[j] = std::sin(0.5 * n * phi) * std::cos(0.5 * phi) / (s * n);
    }
  }
  return w;
}

Eigen::MatrixXd fourier_upsampling_matrix(int n, int m) {
  require_even(n, "fourier_upsampling_matrix");
  if (m < n) throw InvalidInput("fourier_upsampling_matrix: target size below source size");
  Eigen::MatrixXd u(m, n);
  for (int i = 0; i < m; ++i) u.row(i) = fourier_interpolation_weights(n, kTwoPi * i / m);
  return u;
}

TrigInterpolant::TrigInterpolant(const Eigen::Ref<const Eigen::VectorXd>& values)
    : n_(static_cast<int>(values.size())), coeffs_(values.size() / 2 + 1) {
  require_even(n_, "TrigInterpolant");
  Eigen::VectorXd in = values;
  fftw_execute_dft_r2c(plans_for(n_).forward, in.data(),
                       reinterpret_cast<fftw_complex*>(coeffs_.data()));
  for (auto& c : coeffs_) c /= n_;
}

double TrigInterpolant::operator()(double theta, int order) const {
  double sum = order == 0 ? coeffs_[0].real() : 0.0;
  for (int k = 1; k < n_ / 2; ++k) {
    sum += 2.0 * (coeffs_[k] * derivative_symbol(k, order) *
                  std::polar(1.0, k * theta)).real();
  }
  const double half = 0.5 * n_;
  sum += coeffs_[n_ / 2].real() * std::pow(half, order) *
         std::cos(half * theta + 0.5 * order * std::numbers::pi);
  return sum;
}

ClosedCurve::ClosedCurve(Eigen::VectorXd coords, Orientation orientation) : n_(static_cast<int>(coords.size() / 2)) {
  if (coords.size() % 2 != 0 || n_ < 8 || n_ % 2 != 0) {
    throw InvalidInput("ClosedCurve: need an even number of nodes N >= 8, got coordinate length " +
                       std::to_string(coords.size()));
  }
  if (!coords.allFinite()) throw InvalidInput("ClosedCurve: non-finite coordinates");
  coords_ = std::move(coords);

  const Eigen::VectorXd xt = fourier_derivative(x(), 1);
  const Eigen::VectorXd yt = fourier_derivative(y(), 1);
  check_nondegenerate((xt.array().square() + yt.array().square()).sqrt().matrix());
  const double signed_area = 0.5 * (x().array() * yt.array() - y().array() * xt.array()).sum();
  if (signed_area < 0) {
    if (orientation == Orientation::require_counterclockwise)
      throw GeometryError("curve orientation flipped (signed area " + std::to_string(signed_area) + ")");
    Eigen::VectorXd flipped(2 * n_);
    for (int i = 0; i < n_; ++i) {
      const int j = (n_ - i) % n_;
      flipped[i] = coords_[j];
      flipped[n_ + i] = coords_[n_ + j];
    }
    coords_ = std::move(flipped);
  }
}

ClosedCurve ClosedCurve::ellipse(int n, double a, double b, Eigen::Vector2d center,
                                 double rotation) {
  if (n < 0) throw InvalidInput("ClosedCurve::ellipse: negative node count");
  Eigen::VectorXd c(2 * n);
  const double cr = std::cos(rotation), sr = std::sin(rotation);
  for (int i = 0; i < n; ++i) {
    const double th = kTwoPi * i / n;
    const double px = a * std::cos(th), py = b * std::sin(th);
    c[i] = center.x() + cr * px - sr * py;
    c[n + i] = center.y() + sr * px + cr * py;
  }
  return ClosedCurve(std::move(c));
}

ClosedCurve ClosedCurve::translated(Eigen::Vector2d shift) const {
  Eigen::VectorXd c = coords_;
  c.head(n_).array() += shift.x();
  c.tail(n_).array() += shift.y();
  return ClosedCurve(std::move(c));
}

ClosedCurve ClosedCurve::rotated(double angle) const {
  const double ca = std::cos(angle), sa = std::sin(angle);
  Eigen::VectorXd c(2 * n_);
  c.head(n_) = ca * x() - sa * y();
  c.tail(n_) = sa * x() + ca * y();
  return ClosedCurve(std::move(c));
}

void check_nondegenerate(const Eigen::Ref<const Eigen::VectorXd>& jacobian) {
  if (!jacobian.allFinite()) throw GeometryError("curve jacobian is not finite");
  const double mean = jacobian.mean();
  if (!(jacobian.minCoeff() > 1e-10 * mean) || !(mean > 0)) {
    throw GeometryError("degenerate curve parameterization: min |dx/dθ| = " +
                        std::to_string(jacobian.minCoeff()));
  }
}

CurveGeometry geometry(const ClosedCurve& curve) {
  const int n = curve.size();
  const Eigen::ArrayXd xt = fourier_derivative(curve.x(), 1).array();
  const Eigen::ArrayXd yt = fourier_derivative(curve.y(), 1).array();
  const Eigen::ArrayXd xtt = fourier_derivative(curve.x(), 2).array();
  const Eigen::ArrayXd ytt = fourier_derivative(curve.y(), 2).array();

  CurveGeometry g;
  g.jacobian = (xt.square() + yt.square()).sqrt().matrix();
  check_nondegenerate(g.jacobian);
  const Eigen::ArrayXd jac = g.jacobian.array();
  g.tangent.resize(2 * n);
  g.tangent.head(n) = (xt / jac).matrix();
  g.tangent.tail(n) = (yt / jac).matrix();
  g.normal.resize(2 * n);
  g.normal.head(n) = g.tangent.tail(n);
  g.normal.tail(n) = -g.tangent.head(n);
  g.curvature = ((xt * ytt - yt * xtt) / jac.cube()).matrix();
  g.weights = g.jacobian * (kTwoPi / n);
  return g;
}

Eigen::VectorXd arclength_derivative(const ClosedCurve& curve,
                                     const Eigen::Ref<const Eigen::VectorXd>& values, int order) {
  const int n = curve.size();
  if (values.size() != n && values.size() != 2 * n) {
    throw InvalidInput("arclength_derivative: field length " + std::to_string(values.size()) +
                       " does not match curve with N = " + std::to_string(n));
  }
  const Eigen::VectorXd xt = fourier_derivative(curve.x(), 1);
  const Eigen::VectorXd yt = fourier_derivative(curve.y(), 1);
  const Eigen::ArrayXd jac = (xt.array().square() + yt.array().square()).sqrt();
  check_nondegenerate(jac.matrix());

  Eigen::VectorXd out = values;
  for (Eigen::Index c = 0; c < values.size() / n; ++c) {
    auto seg = out.segment(c * n, n);
    for (int k = 0; k < order; ++k) seg = (fourier_derivative(seg, 1).array() / jac).matrix();
  }
  return out;
}

Eigen::MatrixXd arclength_derivative_matrix(const ClosedCurve& curve) {
  const CurveGeometry g = geometry(curve);
  return g.jacobian.cwiseInverse().asDiagonal() * fourier_derivative_matrix(curve.size(), 1);
}

double area(const ClosedCurve& curve) {
  const Eigen::VectorXd xt = fourier_derivative(curve.x(), 1);
  const Eigen::VectorXd yt = fourier_derivative(curve.y(), 1);
  return 0.5 * (kTwoPi / curve.size()) *
         (curve.x().array() * yt.array() - curve.y().array() * xt.array()).sum();
}

double length(const ClosedCurve& curve) {
  const Eigen::VectorXd xt = fourier_derivative(curve.x(), 1);
  const Eigen::VectorXd yt = fourier_derivative(curve.y(), 1);
  return (kTwoPi / curve.size()) * (xt.array().square() + yt.array().square()).sqrt().sum();
}

double reduced_area(const ClosedCurve& curve) {
  const double l = length(curve);
  return 4 * std::numbers::pi * area(curve) / (l * l);
}

}  // namespace vesicle
