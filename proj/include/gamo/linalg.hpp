#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace gamo {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

}  // namespace gamo

namespace gamo {

// Axis-aligned bounding box.
struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  double diagonal() const { return extent().norm(); }
  bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
  }
  // Affine map of the box onto [0,1]^3 (canonical coordinates), clamped.
  Vec3 to_unit(const Vec3& p) const {
    return ((p - min).cwiseQuotient(extent())).cwiseMax(0.0).cwiseMin(1.0);
  }
  Vec3 from_unit(const Vec3& u) const { return min + u.cwiseProduct(extent()); }
};

}  // namespace gamo
