#pragma once

// First-hit ray casting over a scene's primitives with the face-plane box
// test and a direct rectangle test; no code shared with the scene module.

#include <limits>
#include <optional>

#include "gamo/scenegen.hpp"
#include "oracles/ray_box.hpp"

namespace oracle {

inline std::optional<double> ray_scene(const gamo::Scene& scene, const gamo::Vec3& o, const gamo::Vec3& d) {
  double best = std::numeric_limits<double>::infinity();
  for (const gamo::Primitive& p : scene.primitives) {
    if (p.kind == gamo::Primitive::Kind::kBox) {
      const auto t = ray_box(o, d, p.center - 0.5 * p.size, p.center + 0.5 * p.size);
      if (t && *t < best) best = *t;
      continue;
    }
    if (d[p.axis] == 0.0) continue;
    const double t = (p.offset - o[p.axis]) / d[p.axis];
    if (t <= 0.0 || t >= best) continue;
    const int a = p.axis == 0 ? 1 : 0;
    const int b = p.axis == 2 ? 1 : 2;
    const gamo::Vec3 x = o + t * d;
    if (x[a] >= p.u0 - 1e-12 && x[a] <= p.u1 + 1e-12 && x[b] >= p.v0 - 1e-12 && x[b] <= p.v1 + 1e-12) best = t;
  }
  if (best == std::numeric_limits<double>::infinity()) return std::nullopt;
  return best;
}

}  // namespace oracle
