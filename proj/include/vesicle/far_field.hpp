#pragma once

#include <string>

#include <Eigen/Core>

namespace vesicle {

/// Imposed background flow.
struct FarFieldFlow {
  enum class Kind { quiescent, shear, extensional };
  Kind kind = Kind::quiescent;
  double rate = 1.0;

  static FarFieldFlow shear(double rate) { return {Kind::shear, rate}; }
  static FarFieldFlow extensional(double rate) { return {Kind::extensional, rate}; }
  static FarFieldFlow quiescent() { return {Kind::quiescent, 0.0}; }

  /// Velocity at points given in planar-field layout [x..., y...].
  [[nodiscard]] Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& points) const {
    const Eigen::Index n = points.size() / 2;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(points.size());
    switch (kind) {
      case Kind::quiescent:
        break;
      case Kind::shear:  // (γ y, 0)
        v.head(n) = rate * points.tail(n);
        break;
      case Kind::extensional:  // (-γ x, γ y)
        v.head(n) = -rate * points.head(n);
        v.tail(n) = rate * points.tail(n);
        break;
    }
    return v;
  }

  bool operator==(const FarFieldFlow&) const = default;
};

}  // namespace vesicle
