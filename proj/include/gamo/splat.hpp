#pragma once

// 3D Gaussian scene representation and a CPU rasterizer.
//
// Each Gaussian is projected to a 2D Gaussian with the local affine (EWA)
// Jacobian plus a 0.3 px^2 screen-space variance floor. Pixels composite
// Gaussians front to back, ordered by camera depth of the center, against a
// black background:
//   C(u) = sum_i c_i s_i T_i,  O(u) = sum_i s_i T_i,  T_i = prod_{j<i} (1 - s_j)
// with s_i = alpha_i * G_i(u). Contributions with G_i(u) < 1/255 are skipped and
// a pixel stops once its transmittance drops below 1e-4.

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "gamo/camera.hpp"
#include "gamo/image.hpp"
#include "gamo/linalg.hpp"

namespace gamo {

struct Gaussian {
  Vec3 mu = Vec3::Zero();
  Vec3 scale = Vec3::Ones();
  Quat rot = Quat::Identity();
  double alpha = 1.0;
  Vec3 rgb = Vec3::Zero();

  bool operator==(const Gaussian& o) const {
    return mu == o.mu && scale == o.scale && rot.coeffs() == o.rot.coeffs() &&
           alpha == o.alpha && rgb == o.rgb;
  }
};

using GaussianCloud = std::vector<Gaussian>;

namespace raster {
inline constexpr double kMinGaussian = 1.0 / 255.0;
inline constexpr double kMinTransmittance = 1e-4;
inline constexpr double kScreenVarianceFloor = 0.3;
inline constexpr double kNearPlane = 0.01;
}  // namespace raster

struct Covariance {
  Mat3 sigma;
  bool renormalized = false;  // the quaternion was not unit length
};

Covariance build_covariance(const Vec3& scale, const Quat& rot);

struct RenderOutput {
  Image color;    // W x H x 3, premultiplied against black
  Image opacity;  // W x H x 1
  Image depth;    // W x H x 1, opacity-normalized expected depth; 0 where opacity is 0
};

RenderOutput render(const GaussianCloud& cloud, const Camera& cam);

struct GaussianGrad {
  Vec3 mu = Vec3::Zero();
  Vec3 scale = Vec3::Zero();
  double alpha = 0.0;
  Vec3 rgb = Vec3::Zero();
};

using CloudGrad = std::vector<GaussianGrad>;

// One forward pass that keeps its per-pixel contribution lists, so the
// gradient can be taken without compositing again. Holds a pointer to `cloud`,
// which must outlive the pass and stay unmodified.
class RenderPass {
 public:
  RenderPass(const GaussianCloud& cloud, const Camera& cam, bool keep_trace = true);
  ~RenderPass();
  RenderPass(RenderPass&&) noexcept;
  RenderPass(const RenderPass&) = delete;
  RenderPass& operator=(const RenderPass&) = delete;

  const RenderOutput& output() const { return out_; }
  CloudGrad backward(const Image& d_color, const Image& d_opacity) const;

 private:
  struct Trace;
  const GaussianCloud* cloud_;
  Camera cam_;
  std::unique_ptr<Trace> trace_;
  bool traced_ = true;
  RenderOutput out_;
};

// Partials of sum(d_color * color) + sum(d_opacity * opacity) with respect to
// each Gaussian's mu, scale, alpha and rgb. Rotation is held fixed.
CloudGrad render_backward(const GaussianCloud& cloud, const Camera& cam, const Image& d_color,
                          const Image& d_opacity);

// Cloud text format, one Gaussian per line:
//   mu_x mu_y mu_z  s_x s_y s_z  q_w q_x q_y q_z  alpha  r g b
GaussianCloud read_cloud(std::istream& in);
GaussianCloud load_cloud(const std::string& path);
void write_cloud(std::ostream& out, const GaussianCloud& cloud);
void save_cloud(const std::string& path, const GaussianCloud& cloud);

}  // namespace gamo
