#pragma once

// Closed-form ray / axis-aligned box distance by testing each of the six face
// planes separately (no slab intervals).

#include <limits>
#include <optional>

#include "gamo/linalg.hpp"

namespace oracle {

inline std::optional<double> ray_box(const gamo::Vec3& o, const gamo::Vec3& d, const gamo::Vec3& lo,
                                     const gamo::Vec3& hi) {
  double best = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] == 0.0) continue;
    for (double plane : {lo[axis], hi[axis]}) {
      const double t = (plane - o[axis]) / d[axis];
      if (t <= 0.0 || t >= best) continue;
      const gamo::Vec3 p = o + t * d;
      bool inside = true;
      for (int k = 0; k < 3; ++k) {
        if (k != axis && (p[k] < lo[k] - 1e-12 || p[k] > hi[k] + 1e-12)) inside = false;
      }
      if (inside) best = t;
    }
  }
  if (best == std::numeric_limits<double>::infinity()) return std::nullopt;
  return best;
}

}  // namespace oracle
