#include "vesicle/stokes_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "vesicle/error.hpp"

namespace vesicle {
namespace {

constexpr double kPi = std::numbers::pi;

void require_finite(const Eigen::Ref<const Eigen::VectorXd>& v, const char* what) {
  if (!v.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

void require_planar(const Eigen::Ref<const Eigen::VectorXd>& v, const char* what) {
  if (v.size() % 2 != 0) throw InvalidInput(std::string(what) + ": planar field needs even length");
}

// Lagrange basis on `nodes`, evaluated at x.
Eigen::VectorXd lagrange_weights(const std::vector<double>& nodes, double x) {
  const auto m = nodes.size();
  Eigen::VectorXd w(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    double l = 1.0;
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) l *= (x - nodes[j]) / (nodes[i] - nodes[j]);
    w[static_cast<Eigen::Index>(i)] = l;
  }
  return w;
}

}  // namespace

void LayerPotentialConfig::validate() const {
  if (upsampling_factor < 2) throw InvalidInput("LayerPotentialConfig: upsampling_factor must be >= 2");
  if (!(near_threshold_factor > 0))
    throw InvalidInput("LayerPotentialConfig: near_threshold_factor must be positive");
  if (!(outer_viscosity > 0)) throw InvalidInput("LayerPotentialConfig: outer_viscosity must be positive");
}

Eigen::VectorXd log_kernel_weights(int n) {
  if (n < 2 || n % 2 != 0) throw InvalidInput("log_kernel_weights: N must be even");
  const int half = n / 2;
  Eigen::VectorXd r(n);
  for (int k = 0; k < n; ++k) {
    const double d = 2 * kPi * k / n;
    double s = 0.0;
    for (int m = 1; m < half; ++m) s += std::cos(m * d) / m;
    const double nyquist = (k % 2 == 0) ? 1.0 : -1.0;
    r[k] = -(2 * kPi / half) * s - (kPi / (half * half)) * nyquist;
  }
  return r;
}

LayerSource::LayerSource(const ClosedCurve& curve, double nu, const LayerPotentialConfig& config)
    : curve_(curve),
      geom_(vesicle::geometry(curve)),
      nu_(nu),
      config_(config),
      x_interp_(curve.x()),
      y_interp_(curve.y()) {
  config_.validate();
  if (!(nu > 0)) throw InvalidInput("LayerSource: viscosity contrast must be positive");
  const int n = curve_.size();
  const double h = 2 * kPi / n;
  const Eigen::VectorXd& jac = geom_.jacobian;

  // Single layer.
  const Eigen::VectorXd rlog = log_kernel_weights(n);
  const double slp_scale = 1.0 / (4 * kPi * config_.outer_viscosity);
  slp_self_.resize(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    const Eigen::Vector2d y = curve_.point(j);
    for (int i = 0; i < n; ++i) {
      const int k = ((i - j) % n + n) % n;
      double smooth_log;
      double rxx, rxy, ryy;
      if (i == j) {
        smooth_log = 2 * std::log(jac[i]);
        rxx = geom_.tangent[i] * geom_.tangent[i];
        rxy = geom_.tangent[i] * geom_.tangent[n + i];
        ryy = geom_.tangent[n + i] * geom_.tangent[n + i];
      } else {
        const Eigen::Vector2d r = curve_.point(i) - y;
        const double rho2 = r.squaredNorm();
        const double s = std::sin(0.5 * h * k);
        smooth_log = std::log(rho2 / (4 * s * s));
        rxx = r.x() * r.x() / rho2;
        rxy = r.x() * r.y() / rho2;
        ryy = r.y() * r.y() / rho2;
      }
      const double log_part = -(0.5 * rlog[k] + 0.5 * h * smooth_log) * jac[j];
      const double w = h * jac[j];
      slp_self_(i, j) = slp_scale * (log_part + rxx * w);
      slp_self_(i, n + j) = slp_scale * rxy * w;
      slp_self_(n + i, j) = slp_scale * rxy * w;
      slp_self_(n + i, n + j) = slp_scale * (log_part + ryy * w);
    }
  }

  // Double layer (principal value).
  dlp_self_ = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  if (nu_ != 1.0) {
    const double dlp_scale = (1 - nu_) / kPi;
    for (int j = 0; j < n; ++j) {
      const Eigen::Vector2d y = curve_.point(j);
      const Eigen::Vector2d nrm(geom_.normal[j], geom_.normal[n + j]);
      const double w = dlp_scale * h * jac[j];
      for (int i = 0; i < n; ++i) {
        double rxx, rxy, ryy, rn;
        if (i == j) {
          rn = -0.5 * geom_.curvature[i];
          rxx = geom_.tangent[i] * geom_.tangent[i];
          rxy = geom_.tangent[i] * geom_.tangent[n + i];
          ryy = geom_.tangent[n + i] * geom_.tangent[n + i];
        } else {
          const Eigen::Vector2d r = curve_.point(i) - y;
          const double rho2 = r.squaredNorm();
          rn = r.dot(nrm) / rho2;
          rxx = r.x() * r.x() / rho2;
          rxy = r.x() * r.y() / rho2;
          ryy = r.y() * r.y() / rho2;
        }
        dlp_self_(i, j) = w * rn * rxx;
        dlp_self_(i, n + j) = w * rn * rxy;
        dlp_self_(n + i, j) = w * rn * rxy;
        dlp_self_(n + i, n + j) = w * rn * ryy;
      }
    }
  }

  // Fourier-upsampled copy for off-curve targets.
  const int m = n * config_.upsampling_factor;
  upsample_ = fourier_upsampling_matrix(n, m);
  fine_coords_.resize(2 * m);
  fine_coords_.head(m) = upsample_ * curve_.x();
  fine_coords_.tail(m) = upsample_ * curve_.y();
  const CurveGeometry fine = vesicle::geometry(ClosedCurve(fine_coords_));
  fine_normal_ = fine.normal;
  fine_weights_ = fine.weights;
  fine_jacobian_ = fine.jacobian;
}

int LayerSource::nearest_fine_node(const Eigen::Vector2d& z) const {
  const Eigen::Index m = fine_weights_.size();
  const Eigen::ArrayXd dx = fine_coords_.head(m).array() - z.x();
  const Eigen::ArrayXd dy = fine_coords_.tail(m).array() - z.y();
  Eigen::Index best = 0;
  (dx.square() + dy.square()).minCoeff(&best);
  return static_cast<int>(best);
}

bool LayerSource::is_near(const Eigen::Vector2d& z) const {
  const Eigen::Index m = fine_weights_.size();
  const int q = nearest_fine_node(z);
  const Eigen::Vector2d p(fine_coords_[q], fine_coords_[m + q]);
  const double spacing = fine_jacobian_[q] * 2 * kPi / curve_.size();
  return (p - z).norm() < config_.near_threshold_factor * spacing;
}

LayerSource::Projection LayerSource::project(const Eigen::Vector2d& z) const {
  const Eigen::Index m = fine_weights_.size();
  double t = 2 * kPi * nearest_fine_node(z) / static_cast<double>(m);
  for (int iter = 0; iter < 30; ++iter) {
    const Eigen::Vector2d p(x_interp_(t), y_interp_(t));
    const Eigen::Vector2d d1(x_interp_(t, 1), y_interp_(t, 1));
    const Eigen::Vector2d d2(x_interp_(t, 2), y_interp_(t, 2));
    const Eigen::Vector2d diff = p - z;
    const double g = diff.dot(d1);
    double hess = d1.squaredNorm() + diff.dot(d2);
    if (hess <= 0) hess = d1.squaredNorm();
    double step = g / hess;
    // Stay within one fine cell of the start; the closest node brackets the minimum.
    const double cap = 2 * kPi / static_cast<double>(m);
    step = std::clamp(step, -cap, cap);
    t -= step;
    if (std::abs(step) < 1e-15) break;
  }
  Projection pr;
  pr.theta = t;
  pr.point = {x_interp_(t), y_interp_(t)};
  const Eigen::Vector2d d1(x_interp_(t, 1), y_interp_(t, 1));
  const double jac = d1.norm();
  pr.normal = Eigen::Vector2d(d1.y(), -d1.x()) / jac;
  pr.distance = (z - pr.point).norm();
  pr.spacing = jac * 2 * kPi / curve_.size();
  return pr;
}

void LayerSource::fine_kernel_rows(KernelKind kind, const Eigen::Vector2d& z,
                                   Eigen::Ref<Eigen::MatrixXd> out) const {
  const Eigen::Index m = fine_weights_.size();
  if (kind == KernelKind::single_layer) {
    const double scale = 1.0 / (4 * kPi * config_.outer_viscosity);
    for (Eigen::Index q = 0; q < m; ++q) {
      const double rx = z.x() - fine_coords_[q], ry = z.y() - fine_coords_[m + q];
      const double rho2 = rx * rx + ry * ry;
      if (!(rho2 > 0)) throw InvalidInput("layer potential target coincides with a quadrature node");
      const double w = scale * fine_weights_[q];
      const double lg = -0.5 * std::log(rho2);
      out(0, q) = w * (lg + rx * rx / rho2);
      out(0, m + q) = w * rx * ry / rho2;
      out(1, q) = out(0, m + q);
      out(1, m + q) = w * (lg + ry * ry / rho2);
    }
  } else {
    const double scale = (1 - nu_) / kPi;
    for (Eigen::Index q = 0; q < m; ++q) {
      const double rx = z.x() - fine_coords_[q], ry = z.y() - fine_coords_[m + q];
      const double rho2 = rx * rx + ry * ry;
      if (!(rho2 > 0)) throw InvalidInput("layer potential target coincides with a quadrature node");
      const double rn = (rx * fine_normal_[q] + ry * fine_normal_[m + q]) / rho2;
      const double w = scale * fine_weights_[q] * rn / rho2;
      out(0, q) = w * rx * rx;
      out(0, m + q) = w * rx * ry;
      out(1, q) = out(0, m + q);
      out(1, m + q) = w * ry * ry;
    }
  }
}

Eigen::MatrixXd LayerSource::upsampled_matrix(KernelKind kind,
                                              const Eigen::Ref<const Eigen::VectorXd>& targets) const {
  require_planar(targets, "upsampled_matrix");
  const Eigen::Index p = targets.size() / 2;
  const int n = curve_.size();
  const Eigen::Index m = fine_weights_.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * p, 2 * n);
  if (kind == KernelKind::double_layer && nu_ == 1.0) return out;

  Eigen::MatrixXd fine(2 * p, 2 * m);
  Eigen::MatrixXd rows(2, 2 * m);
  for (Eigen::Index i = 0; i < p; ++i) {
    fine_kernel_rows(kind, {targets[i], targets[p + i]}, rows);
    fine.row(i) = rows.row(0);
    fine.row(p + i) = rows.row(1);
  }
  out.leftCols(n).noalias() = fine.leftCols(m) * upsample_;
  out.rightCols(n).noalias() = fine.rightCols(m) * upsample_;
  return out;
}

Eigen::MatrixXd LayerSource::near_singular_matrix(
    KernelKind kind, const Eigen::Ref<const Eigen::VectorXd>& targets) const {
  require_planar(targets, "near_singular_matrix");
  const Eigen::Index p = targets.size() / 2;
  const int n = curve_.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * p, 2 * n);
  const Eigen::MatrixXd& self = kind == KernelKind::single_layer ? slp_self_ : dlp_self_;

  // From `safe` spacings outward the upsampled rule is accurate on its own.
  // Closer targets interpolate along the normal ray between the on-curve limit
  // and kRayPoints points at safe·(1 + 0.2k) spacings.
  constexpr int kRayPoints = 8;
  const double safe = 4.0 / config_.upsampling_factor;
  const int ray_points = kRayPoints;

  for (Eigen::Index i = 0; i < p; ++i) {
    const Eigen::Vector2d z(targets[i], targets[p + i]);
    if (!is_near(z)) {
      throw InvalidInput("near_singular_eval: target (" + std::to_string(z.x()) + ", " +
                         std::to_string(z.y()) + ") is outside the near zone");
    }
    if (kind == KernelKind::double_layer && nu_ == 1.0) continue;

    const Projection pr = project(z);
    if (pr.distance >= safe * pr.spacing) {
      const Eigen::MatrixXd direct = upsampled_matrix(kind, Eigen::Vector2d(z.x(), z.y()));
      out.row(i) = direct.row(0);
      out.row(p + i) = direct.row(1);
      continue;
    }
    const Eigen::RowVectorXd w = fourier_interpolation_weights(n, pr.theta);
    Eigen::MatrixXd on_curve(2, 2 * n);
    on_curve.row(0) = w * self.topRows(n);
    on_curve.row(1) = w * self.bottomRows(n);

    if (pr.distance <= 1e-12 * pr.spacing) {
      out.row(i) = on_curve.row(0);
      out.row(p + i) = on_curve.row(1);
      continue;
    }

    const double side = (z - pr.point).dot(pr.normal) >= 0 ? 1.0 : -1.0;
    if (kind == KernelKind::double_layer) {
      // One-sided limit: principal value ± (1-ν)/2 · u.
      const double jump = side * 0.5 * (1 - nu_);
      on_curve.row(0).head(n) += jump * w;
      on_curve.row(1).tail(n) += jump * w;
    }

    std::vector<double> nodes(ray_points + 1);
    nodes[0] = 0.0;
    Eigen::VectorXd ray_targets(2 * ray_points);
    for (int k = 1; k <= ray_points; ++k) {
      nodes[k] = safe * (1 + 0.2 * (k - 1)) * pr.spacing;
      const Eigen::Vector2d q = pr.point + side * nodes[k] * pr.normal;
      ray_targets[k - 1] = q.x();
      ray_targets[ray_points + k - 1] = q.y();
    }
    const Eigen::MatrixXd ray = upsampled_matrix(kind, ray_targets);
    const Eigen::VectorXd lw = lagrange_weights(nodes, pr.distance);

    out.row(i) = lw[0] * on_curve.row(0);
    out.row(p + i) = lw[0] * on_curve.row(1);
    for (int k = 1; k <= ray_points; ++k) {
      out.row(i) += lw[k] * ray.row(k - 1);
      out.row(p + i) += lw[k] * ray.row(ray_points + k - 1);
    }
  }
  return out;
}

Eigen::MatrixXd LayerSource::target_matrix(KernelKind kind,
                                           const Eigen::Ref<const Eigen::VectorXd>& targets) const {
  require_planar(targets, "target_matrix");
  require_finite(targets, "target_matrix");
  const Eigen::Index p = targets.size() / 2;
  std::vector<Eigen::Index> near;
  for (Eigen::Index i = 0; i < p; ++i)
    if (is_near({targets[i], targets[p + i]})) near.push_back(i);

  if (near.empty()) return upsampled_matrix(kind, targets);

  // Far targets through the upsampled rule, near ones through interpolation.
  std::vector<bool> is_near_target(static_cast<std::size_t>(p), false);
  for (auto i : near) is_near_target[static_cast<std::size_t>(i)] = true;
  std::vector<Eigen::Index> far;
  for (Eigen::Index i = 0; i < p; ++i)
    if (!is_near_target[static_cast<std::size_t>(i)]) far.push_back(i);

  const int n = curve_.size();
  Eigen::MatrixXd out(2 * p, 2 * n);
  auto gather = [&](const std::vector<Eigen::Index>& idx) {
    const auto c = static_cast<Eigen::Index>(idx.size());
    Eigen::VectorXd t(2 * c);
    for (Eigen::Index a = 0; a < c; ++a) {
      t[a] = targets[idx[a]];
      t[c + a] = targets[p + idx[a]];
    }
    return t;
  };
  auto scatter = [&](const std::vector<Eigen::Index>& idx, const Eigen::MatrixXd& rows) {
    const auto c = static_cast<Eigen::Index>(idx.size());
    for (Eigen::Index a = 0; a < c; ++a) {
      out.row(idx[a]) = rows.row(a);
      out.row(p + idx[a]) = rows.row(c + a);
    }
  };
  scatter(near, near_singular_matrix(kind, gather(near)));
  if (!far.empty()) scatter(far, upsampled_matrix(kind, gather(far)));
  return out;
}

namespace {

Eigen::VectorXd apply_layer(const LayerSource& src, KernelKind kind,
                            const Eigen::Ref<const Eigen::VectorXd>& density,
                            const Eigen::Ref<const Eigen::VectorXd>& targets, bool self_eval) {
  const int n = src.curve().size();
  if (density.size() != 2 * n)
    throw InvalidInput("layer potential: density length does not match source N");
  require_finite(density, "layer potential density");
  if (self_eval) {
    if (targets.size() != 2 * n)
      throw InvalidInput("layer potential: self evaluation requires targets at the source nodes");
    return (kind == KernelKind::single_layer ? src.slp_self() : src.dlp_self()) * density;
  }
  return src.target_matrix(kind, targets) * density;
}

}  // namespace

Eigen::VectorXd slp_apply(const ClosedCurve& source, const Eigen::Ref<const Eigen::VectorXd>& density,
                          const Eigen::Ref<const Eigen::VectorXd>& targets, bool self_eval,
                          const LayerPotentialConfig& config) {
  const LayerSource src(source, 1.0, config);
  return apply_layer(src, KernelKind::single_layer, density, targets, self_eval);
}

Eigen::VectorXd dlp_apply(const ClosedCurve& source, double nu,
                          const Eigen::Ref<const Eigen::VectorXd>& velocity_density,
                          const Eigen::Ref<const Eigen::VectorXd>& targets, bool self_eval,
                          const LayerPotentialConfig& config) {
  const LayerSource src(source, nu, config);
  return apply_layer(src, KernelKind::double_layer, velocity_density, targets, self_eval);
}

Eigen::VectorXd near_singular_eval(const ClosedCurve& source, double nu, KernelKind kind,
                                   const Eigen::Ref<const Eigen::VectorXd>& density,
                                   const Eigen::Ref<const Eigen::VectorXd>& targets,
                                   const LayerPotentialConfig& config) {
  const LayerSource src(source, nu, config);
  if (density.size() != 2 * source.size())
    throw InvalidInput("near_singular_eval: density length does not match source N");
  require_finite(density, "near_singular_eval density");
  return src.near_singular_matrix(kind, targets) * density;
}

}  // namespace vesicle
