#pragma once

#include <random>

#include "gamo/camera.hpp"
#include "gamo/image.hpp"
#include "gamo/scenegen.hpp"
#include "gamo/splat.hpp"

namespace testing {

inline gamo::Image random_image(int w, int h, int c, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  gamo::Image img(w, h, c);
  for (double& v : img.values()) v = u(rng);
  return img;
}

inline gamo::Camera simple_camera(int w, int h, double f = -1.0) {
  gamo::Camera cam;
  const double focal = f > 0 ? f : 0.9 * w;
  cam.intrinsics = {focal, focal, 0.5 * w, 0.5 * h, w, h};
  return cam;
}

inline gamo::Camera look(int w, int h, const gamo::Vec3& eye, const gamo::Vec3& target, double f = -1.0) {
  return gamo::look_at(simple_camera(w, h, f).intrinsics, eye, target);
}

// A few Gaussians in front of an identity camera, at distinct depths.
inline gamo::GaussianCloud small_cloud(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  gamo::GaussianCloud cloud;
  for (int i = 0; i < n; ++i) {
    gamo::Gaussian g;
    g.mu = gamo::Vec3(0.35 * u(rng), 0.25 * u(rng), 3.0 + 0.37 * i + 0.05 * u(rng));
    g.scale = gamo::Vec3(0.12 + 0.05 * u(rng), 0.1 + 0.04 * u(rng), 0.15 + 0.05 * u(rng));
    g.rot = gamo::Quat(1.0 + 0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng)).normalized();
    g.alpha = 0.55 + 0.3 * u(rng);
    g.rgb = gamo::Vec3(0.5 + 0.4 * u(rng), 0.5 + 0.4 * u(rng), 0.5 + 0.4 * u(rng));
    cloud.push_back(g);
  }
  return cloud;
}

}  // namespace testing
