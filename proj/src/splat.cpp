#include "gamo/splat.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>
#include <sstream>

#include "gamo/error.hpp"

namespace gamo {
namespace {

using Mat23 = Eigen::Matrix<double, 2, 3>;

// Screen-space footprint of one Gaussian, shared by the forward and backward passes.
struct Footprint {
  int index = 0;       // position in the cloud
  double depth = 0.0;  // camera z of the center
  Vec3 p;              // center in camera frame
  Vec2 mean;           // projected center, continuous image coordinates
  Mat23 jac;           // d(image point)/d(camera point) at p
  Mat3 rot;            // rotation matrix of the (normalized) quaternion
  Mat3 sigma_cam;      // 3D covariance in camera frame
  double a = 0, b = 0, c = 0;  // 2D covariance [[a b][b c]] including the floor
  double det = 0;
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // inclusive pixel bounds
};

std::vector<Footprint> project_cloud(const GaussianCloud& cloud, const Camera& cam) {
  const Intrinsics& k = cam.intrinsics;
  const Mat3 w2c = cam.pose.rotation.transpose();
  // q > this never reaches the 1/255 cutoff
  const double q_max = -2.0 * std::log(raster::kMinGaussian);
  std::vector<Footprint> out;
  out.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Gaussian& g = cloud[i];
    Footprint f;
    f.index = static_cast<int>(i);
    f.p = cam.world_to_camera(g.mu);
    f.depth = f.p.z();
    if (f.depth < raster::kNearPlane) continue;
    const double x = f.p.x(), y = f.p.y(), z = f.p.z();
    f.mean = {k.fx * x / z + k.cx, k.fy * y / z + k.cy};
    f.jac << k.fx / z, 0.0, -k.fx * x / (z * z), 0.0, k.fy / z, -k.fy * y / (z * z);
    f.rot = g.rot.normalized().toRotationMatrix();
    const Mat3 sigma = build_covariance(g.scale, g.rot).sigma;
    f.sigma_cam = w2c * sigma * w2c.transpose();
    const Eigen::Matrix2d cov2 = f.jac * f.sigma_cam * f.jac.transpose();
    f.a = cov2(0, 0) + raster::kScreenVarianceFloor;
    f.b = 0.5 * (cov2(0, 1) + cov2(1, 0));
    f.c = cov2(1, 1) + raster::kScreenVarianceFloor;
    f.det = f.a * f.c - f.b * f.b;
    if (!(f.det > 0.0)) continue;
    const double mid = 0.5 * (f.a + f.c);
    const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - f.det));
    const double radius = std::sqrt(q_max * lambda_max) + 1.0;
    const double fx0 = std::floor(f.mean.x() - radius), fx1 = std::ceil(f.mean.x() + radius);
    const double fy0 = std::floor(f.mean.y() - radius), fy1 = std::ceil(f.mean.y() + radius);
    if (fx1 < 0 || fy1 < 0 || fx0 >= k.width || fy0 >= k.height) continue;
    f.x0 = static_cast<int>(std::max(0.0, fx0));
    f.x1 = static_cast<int>(std::min<double>(k.width - 1, fx1));
    f.y0 = static_cast<int>(std::max(0.0, fy0));
    f.y1 = static_cast<int>(std::min<double>(k.height - 1, fy1));
    out.push_back(f);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Footprint& l, const Footprint& r) { return l.depth < r.depth; });
  return out;
}

// Front-to-back traversal. `visit(footprint_slot, pixel, G, T_before)` is called
// for every contribution that passes the cutoffs, in compositing order per pixel.
template <class Visit>
void composite(const GaussianCloud& cloud, const std::vector<Footprint>& fps, int width,
               int height, Visit&& visit) {
  const double q_cut = -2.0 * std::log(raster::kMinGaussian);
  std::vector<double> trans(static_cast<std::size_t>(width) * height, 1.0);
  std::vector<char> done(trans.size(), 0);
  for (std::size_t s = 0; s < fps.size(); ++s) {
    const Footprint& f = fps[s];
    const double alpha = cloud[f.index].alpha;
    for (int v = f.y0; v <= f.y1; ++v) {
      const double dy = v + 0.5 - f.mean.y();
      for (int u = f.x0; u <= f.x1; ++u) {
        const std::size_t px = static_cast<std::size_t>(v) * width + u;
        if (done[px]) continue;
        const double dx = u + 0.5 - f.mean.x();
        const double q = (f.c * dx * dx - 2.0 * f.b * dx * dy + f.a * dy * dy) / f.det;
        if (q > q_cut) continue;  // exp(-q/2) < 1/255 for sure
        const double g = std::exp(-0.5 * q);
        if (g < raster::kMinGaussian) continue;
        const double t = trans[px];
        visit(s, px, g, t);
        trans[px] = t * (1.0 - alpha * g);
        if (trans[px] < raster::kMinTransmittance) done[px] = 1;
      }
    }
  }
}

}  // namespace

Covariance build_covariance(const Vec3& scale, const Quat& rot) {
  Covariance out;
  const double norm = rot.norm();
  out.renormalized = std::abs(norm - 1.0) > 1e-9;
  const Mat3 r = rot.normalized().toRotationMatrix();
  const Mat3 s2 = scale.cwiseProduct(scale).asDiagonal();
  out.sigma = r * s2 * r.transpose();
  return out;
}

// Per-pixel contributions of one forward pass, chained newest-first so the
// backward sweep walks each pixel back to front.
struct RenderPass::Trace {
  struct Entry {
    std::uint32_t slot;
    std::int32_t prev;  // previous entry on the same pixel, -1 at the front
    double g;
    double t;
  };
  std::vector<Footprint> fps;
  std::vector<Entry> entries;
  std::vector<std::int32_t> last;  // newest entry per pixel
};

RenderPass::RenderPass(const GaussianCloud& cloud, const Camera& cam, bool keep_trace)
    : cloud_(&cloud), cam_(cam), trace_(std::make_unique<Trace>()), traced_(keep_trace) {
  const int w = cam.width(), h = cam.height();
  out_ = RenderOutput{Image(w, h, 3), Image(w, h, 1), Image(w, h, 1)};
  Trace& tr = *trace_;
  tr.fps = project_cloud(cloud, cam);
  tr.last.assign(static_cast<std::size_t>(w) * h, -1);
  std::span<double> color = out_.color.values();
  std::span<double> opacity = out_.opacity.values();
  std::span<double> depth = out_.depth.values();
  composite(cloud, tr.fps, w, h, [&](std::size_t s, std::size_t px, double g, double t) {
    const Footprint& f = tr.fps[s];
    const Gaussian& gs = cloud[f.index];
    const double weight = gs.alpha * g * t;
    for (int c = 0; c < 3; ++c) color[px * 3 + c] += weight * gs.rgb[c];
    opacity[px] += weight;
    depth[px] += weight * f.depth;
    if (!keep_trace) return;
    tr.entries.push_back({static_cast<std::uint32_t>(s), tr.last[px], g, t});
    tr.last[px] = static_cast<std::int32_t>(tr.entries.size() - 1);
  });
  for (std::size_t px = 0; px < opacity.size(); ++px) {
    depth[px] = opacity[px] > 0.0 ? depth[px] / opacity[px] : 0.0;
  }
}

RenderPass::~RenderPass() = default;
RenderPass::RenderPass(RenderPass&&) noexcept = default;

CloudGrad RenderPass::backward(const Image& d_color, const Image& d_opacity) const {
  const GaussianCloud& cloud = *cloud_;
  const Camera& cam = cam_;
  const int w = cam.width(), h = cam.height();
  if (d_color.width() != w || d_color.height() != h || d_color.channels() != 3 ||
      d_opacity.width() != w || d_opacity.height() != h || d_opacity.channels() != 1) {
    throw ShapeError("render_backward: upstream gradients must match the render size");
  }
  if (!traced_) throw InvalidArgument("RenderPass: backward needs a traced pass");
  const Trace& tr = *trace_;
  const std::vector<Footprint>& fps = tr.fps;

  // Accumulators per footprint slot: mean (2) and covariance entries a, b, c.
  struct Accum {
    Vec2 mean = Vec2::Zero();
    double a = 0, b = 0, c = 0;
  };
  std::vector<Accum> acc(fps.size());
  CloudGrad grad(cloud.size());
  std::span<const double> dcol = d_color.values();
  std::span<const double> dop = d_opacity.values();

  for (std::size_t px = 0; px < tr.last.size(); ++px) {
    if (tr.last[px] < 0) continue;
    const Vec3 dc(dcol[px * 3], dcol[px * 3 + 1], dcol[px * 3 + 2]);
    const double dO = dop[px];
    if (dc.isZero(0.0) && dO == 0.0) continue;
    const int u = static_cast<int>(px % w);
    const int v = static_cast<int>(px / w);
    Vec3 behind_color = Vec3::Zero();
    double behind_opacity = 0.0;
    for (std::int32_t i = tr.last[px]; i >= 0; i = tr.entries[static_cast<std::size_t>(i)].prev) {
      const Trace::Entry& en = tr.entries[static_cast<std::size_t>(i)];
      const Footprint& f = fps[en.slot];
      const Gaussian& gs = cloud[f.index];
      const double sigma = gs.alpha * en.g;
      GaussianGrad& gg = grad[f.index];
      gg.rgb += dc * (sigma * en.t);
      const double d_sigma =
          en.t * (dc.dot(gs.rgb - behind_color) + dO * (1.0 - behind_opacity));
      behind_color = gs.rgb * sigma + (1.0 - sigma) * behind_color;
      behind_opacity = sigma + (1.0 - sigma) * behind_opacity;

      gg.alpha += d_sigma * en.g;
      const double d_g = d_sigma * gs.alpha;
      const double dx = u + 0.5 - f.mean.x();
      const double dy = v + 0.5 - f.mean.y();
      const double q = (f.c * dx * dx - 2.0 * f.b * dx * dy + f.a * dy * dy) / f.det;
      const double d_q = d_g * (-0.5 * en.g);
      Accum& a = acc[en.slot];
      // q = (c dx^2 - 2 b dx dy + a dy^2) / det, dx = u + 0.5 - mean_x
      a.mean.x() += d_q * (-(2.0 * f.c * dx - 2.0 * f.b * dy) / f.det);
      a.mean.y() += d_q * (-(2.0 * f.a * dy - 2.0 * f.b * dx) / f.det);
      a.a += d_q * (dy * dy - q * f.c) / f.det;
      a.c += d_q * (dx * dx - q * f.a) / f.det;
      a.b += d_q * (-2.0 * dx * dy + 2.0 * f.b * q) / f.det;
    }
  }
  const Intrinsics& k = cam.intrinsics;
  for (std::size_t s = 0; s < fps.size(); ++s) {
    const Footprint& f = fps[s];
    const Accum& a = acc[s];
    GaussianGrad& gg = grad[f.index];
    const Eigen::RowVector3d j0 = f.jac.row(0);
    const Eigen::RowVector3d j1 = f.jac.row(1);

    // 2D covariance = J Sigma_cam J^T (+ floor)
    const Mat3 d_sigma_cam = a.a * j0.transpose() * j0 + a.b * j0.transpose() * j1 +
                             a.c * j1.transpose() * j1;
    const Mat3 d_sigma_world = cam.pose.rotation * d_sigma_cam * cam.pose.rotation.transpose();
    const Vec3& sc = cloud[f.index].scale;
    for (int m = 0; m < 3; ++m) {
      const Vec3 r = f.rot.col(m);
      gg.scale[m] += 2.0 * sc[m] * r.dot(d_sigma_world * r);
    }

    // Jacobian dependence on the camera-frame center.
    const Vec3 g_j0 = 2.0 * a.a * (f.sigma_cam * j0.transpose()) + a.b * (f.sigma_cam * j1.transpose());
    const Vec3 g_j1 = a.b * (f.sigma_cam * j0.transpose()) + 2.0 * a.c * (f.sigma_cam * j1.transpose());
    const double x = f.p.x(), y = f.p.y(), z = f.p.z();
    const double z2 = z * z, z3 = z2 * z;
    Vec3 d_p = f.jac.transpose() * a.mean;
    d_p.x() += g_j0[2] * (-k.fx / z2);
    d_p.y() += g_j1[2] * (-k.fy / z2);
    d_p.z() += g_j0[0] * (-k.fx / z2) + g_j0[2] * (2.0 * k.fx * x / z3) +
               g_j1[1] * (-k.fy / z2) + g_j1[2] * (2.0 * k.fy * y / z3);
    gg.mu += cam.pose.rotation * d_p;
  }
  return grad;
}

RenderOutput render(const GaussianCloud& cloud, const Camera& cam) {
  return RenderPass(cloud, cam, false).output();
}

CloudGrad render_backward(const GaussianCloud& cloud, const Camera& cam, const Image& d_color,
                          const Image& d_opacity) {
  return RenderPass(cloud, cam).backward(d_color, d_opacity);
}

GaussianCloud read_cloud(std::istream& in) {
  GaussianCloud cloud;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<double> v;
    double x;
    while (ls >> x) v.push_back(x);
    if (!ls.eof()) throw ParseError("cloud file: bad number on line " + std::to_string(line_no));
    if (v.empty()) continue;
    if (v.size() != 14) {
      throw ParseError("cloud file: expected 14 values on line " + std::to_string(line_no));
    }
    Gaussian g;
    g.mu = {v[0], v[1], v[2]};
    g.scale = {v[3], v[4], v[5]};
    g.rot = Quat(v[6], v[7], v[8], v[9]);
    g.alpha = v[10];
    g.rgb = {v[11], v[12], v[13]};
    cloud.push_back(g);
  }
  return cloud;
}

GaussianCloud load_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open cloud file " + path);
  return read_cloud(in);
}

void write_cloud(std::ostream& out, const GaussianCloud& cloud) {
  out << std::setprecision(17);
  for (const Gaussian& g : cloud) {
    out << g.mu.x() << ' ' << g.mu.y() << ' ' << g.mu.z() << ' ' << g.scale.x() << ' '
        << g.scale.y() << ' ' << g.scale.z() << ' ' << g.rot.w() << ' ' << g.rot.x() << ' '
        << g.rot.y() << ' ' << g.rot.z() << ' ' << g.alpha << ' ' << g.rgb.x() << ' ' << g.rgb.y()
        << ' ' << g.rgb.z() << '\n';
  }
}

void save_cloud(const std::string& path, const GaussianCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write cloud file " + path);
  write_cloud(out, cloud);
}

}  // namespace gamo
