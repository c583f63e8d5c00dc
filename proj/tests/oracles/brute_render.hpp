#pragma once

// Direct per-pixel evaluation of the splatting image formation: every
// Gaussian is projected and tested at every pixel, with no bounding boxes and
// no shared code with the rasterizer.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gamo/camera.hpp"
#include "gamo/image.hpp"
#include "gamo/splat.hpp"

namespace oracle {

struct BruteRender {
  gamo::Image color;
  gamo::Image opacity;
};

inline Eigen::Matrix3d quat_matrix(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n, x /= n, y /= n, z /= n;
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

inline BruteRender brute_render(const gamo::GaussianCloud& cloud, const gamo::Camera& cam) {
  const int w = cam.width(), h = cam.height();
  const auto& k = cam.intrinsics;
  struct Proj {
    double depth, mx, my, ia, ib, ic, alpha;
    Eigen::Vector3d rgb;
  };
  std::vector<Proj> projs;
  for (const auto& g : cloud) {
    const Eigen::Vector3d p = cam.pose.rotation.transpose() * (g.mu - cam.pose.translation);
    if (p.z() < 0.01) continue;
    const Eigen::Matrix3d r = quat_matrix(g.rot.w(), g.rot.x(), g.rot.y(), g.rot.z());
    Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
    for (int i = 0; i < 3; ++i) s(i, i) = g.scale[i] * g.scale[i];
    const Eigen::Matrix3d sigma_c = cam.pose.rotation.transpose() * (r * s * r.transpose()) * cam.pose.rotation;
    Eigen::Matrix<double, 2, 3> j;
    j << k.fx / p.z(), 0, -k.fx * p.x() / (p.z() * p.z()), 0, k.fy / p.z(), -k.fy * p.y() / (p.z() * p.z());
    Eigen::Matrix2d cov = j * sigma_c * j.transpose();
    cov(0, 0) += 0.3;
    cov(1, 1) += 0.3;
    const Eigen::Matrix2d inv = cov.inverse();
    projs.push_back({p.z(), k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy, inv(0, 0),
                     0.5 * (inv(0, 1) + inv(1, 0)), inv(1, 1), g.alpha, g.rgb});
  }
  std::stable_sort(projs.begin(), projs.end(), [](const Proj& a, const Proj& b) { return a.depth < b.depth; });
  BruteRender out{gamo::Image(w, h, 3), gamo::Image(w, h, 1)};
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double t = 1.0;
      Eigen::Vector3d c = Eigen::Vector3d::Zero();
      for (const Proj& p : projs) {
        if (t < 1e-4) break;
        const double dx = u + 0.5 - p.mx, dy = v + 0.5 - p.my;
        const double g = std::exp(-0.5 * (p.ia * dx * dx + 2 * p.ib * dx * dy + p.ic * dy * dy));
        if (g < 1.0 / 255.0) continue;
        c += p.alpha * g * t * p.rgb;
        t *= 1.0 - p.alpha * g;
      }
      for (int ch = 0; ch < 3; ++ch) out.color.at(u, v, ch) = c[ch];
      out.opacity.at(u, v) = 1.0 - t;
    }
  }
  return out;
}

}  // namespace oracle
