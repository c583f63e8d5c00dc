#include "gamo/camera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "gamo/error.hpp"

namespace gamo {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("Intrinsics: focal lengths must be > 0");
  if (width < 1 || height < 1) throw InvalidArgument("Intrinsics: image size must be >= 1");
}

void Pose::validate() const {
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-9) throw InvalidArgument("Pose: rotation is not orthonormal");
  if (std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw InvalidArgument("Pose: rotation determinant is not +1");
  }
}

void Camera::validate() const {
  intrinsics.validate();
  pose.validate();
}

Vec3 Camera::world_to_camera(const Vec3& world) const {
  return pose.rotation.transpose() * (world - pose.translation);
}

Vec3 Camera::camera_to_world(const Vec3& cam) const {
  return pose.rotation * cam + pose.translation;
}

Vec3 Camera::ray_direction(const Vec2& p) const {
  const Vec3 local((p.x() - intrinsics.cx) / intrinsics.fx, (p.y() - intrinsics.cy) / intrinsics.fy,
                   1.0);
  return pose.rotation * local;
}

Intrinsics scale_intrinsics(const Intrinsics& k, double ratio) {
  if (!(ratio > 0.0) || ratio > 1.0) {
    throw InvalidArgument("scale_intrinsics: ratio must lie in (0, 1], got " +
                          std::to_string(ratio));
  }
  Intrinsics out = k;
  out.fx = k.fx * ratio;
  out.fy = k.fy * ratio;
  return out;
}

Camera widen_fov(const Camera& cam, double ratio) {
  return Camera{scale_intrinsics(cam.intrinsics, ratio), cam.pose};
}

Vec3 RayGrid::direction(int u, int v) const {
  return {grid_.at(u, v, 0), grid_.at(u, v, 1), grid_.at(u, v, 2)};
}

Vec3 RayGrid::moment(int u, int v) const {
  return {grid_.at(u, v, 3), grid_.at(u, v, 4), grid_.at(u, v, 5)};
}

void RayGrid::set(int u, int v, const Vec3& d, const Vec3& m) {
  for (int c = 0; c < 3; ++c) {
    grid_.at(u, v, c) = d[c];
    grid_.at(u, v, 3 + c) = m[c];
  }
}

RayGrid plucker_rays(const Camera& cam) {
  RayGrid rays(cam.width(), cam.height());
  const Vec3& o = cam.center();
  for (int v = 0; v < cam.height(); ++v) {
    for (int u = 0; u < cam.width(); ++u) {
      const Vec3 d = cam.ray_direction(pixel_center(u, v)).normalized();
      rays.set(u, v, d, o.cross(d));
    }
  }
  return rays;
}

Vec3 unproject(const Camera& cam, const Vec2& image_point, double depth) {
  if (!(depth > 0.0)) throw InvalidArgument("unproject: depth must be > 0");
  return cam.pose.translation + depth * cam.ray_direction(image_point);
}

Projection project(const Camera& cam, const Vec3& world) {
  const Vec3 p = cam.world_to_camera(world);
  Projection out;
  out.depth = p.z();
  if (p.z() <= 0.0) {
    out.behind = true;
    return out;
  }
  const Intrinsics& k = cam.intrinsics;
  out.image_point = {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
  return out;
}

GeoGrid::GeoGrid(Image payload) : payload_(std::move(payload)) {
  if (payload_.channels() != 3) throw ShapeError("GeoGrid: payload must have 3 channels");
  valid_.assign(payload_.pixel_count(), 1);
}

Vec3 GeoGrid::value(int u, int v) const {
  return {payload_.at(u, v, 0), payload_.at(u, v, 1), payload_.at(u, v, 2)};
}

void GeoGrid::set(int u, int v, const Vec3& value) {
  for (int c = 0; c < 3; ++c) payload_.at(u, v, c) = value[c];
  valid_[index(u, v)] = 1;
}

void GeoGrid::invalidate(int u, int v) {
  for (int c = 0; c < 3; ++c) payload_.at(u, v, c) = 0.0;
  valid_[index(u, v)] = 0;
}

std::size_t GeoGrid::valid_count() const {
  return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), 1));
}

WarpResult warp_view_detailed(const GeoGrid& payload, const Camera& src, const Image& src_depth,
                              const Camera& tgt) {
  if (payload.width() != src.width() || payload.height() != src.height() ||
      src_depth.width() != src.width() || src_depth.height() != src.height() ||
      src_depth.channels() != 1) {
    throw ShapeError("warp_view: payload/depth must match the source camera size");
  }
  const int tw = tgt.width();
  const int th = tgt.height();
  WarpResult out{GeoGrid(tw, th), Image(tw, th, 1), Image(tw, th, 2)};
  std::vector<double> zbuf(static_cast<std::size_t>(tw) * th,
                           std::numeric_limits<double>::infinity());
  for (int v = 0; v < src.height(); ++v) {
    for (int u = 0; u < src.width(); ++u) {
      const double d = src_depth.at(u, v);
      if (!payload.valid(u, v) || !(d > 0.0)) continue;
      const Projection pr = project(tgt, unproject(src, pixel_center(u, v), d));
      if (pr.behind) continue;
      const double fu = std::floor(pr.image_point.x());
      const double fv = std::floor(pr.image_point.y());
      if (fu < 0.0 || fv < 0.0 || fu >= tw || fv >= th) continue;
      const int tu = static_cast<int>(fu);
      const int tv = static_cast<int>(fv);
      double& z = zbuf[static_cast<std::size_t>(tv) * tw + tu];
      if (pr.depth >= z) continue;
      z = pr.depth;
      out.grid.set(tu, tv, payload.value(u, v));
      out.depth.at(tu, tv) = pr.depth;
      out.landing.at(tu, tv, 0) = pr.image_point.x();
      out.landing.at(tu, tv, 1) = pr.image_point.y();
    }
  }
  return out;
}

GeoGrid warp_view(const GeoGrid& payload, const Camera& src, const Image& src_depth,
                  const Camera& tgt) {
  return warp_view_detailed(payload, src, src_depth, tgt).grid;
}

CenterRegion center_region(int width, int height, double ratio) {
  if (!(ratio > 0.0) || ratio > 1.0) throw InvalidArgument("center_region: ratio must be in (0, 1]");
  auto even_floor = [](long n) { return static_cast<int>(n - (n % 2)); };
  CenterRegion r;
  r.width = even_floor(std::lround(ratio * width));
  r.height = even_floor(std::lround(ratio * height));
  // Odd full sizes with an even region would sit half a pixel off center.
  if (ratio == 1.0) {
    r.width = width;
    r.height = height;
  }
  if (r.width < 1 || r.height < 1 || r.width > width || r.height > height ||
      (width - r.width) % 2 != 0 || (height - r.height) % 2 != 0) {
    throw ShapeError("augment_condition: central region does not fit the target grid");
  }
  r.x0 = (width - r.width) / 2;
  r.y0 = (height - r.height) / 2;
  return r;
}

GeoGrid area_resample(const GeoGrid& src, int width, int height) {
  if (width < 1 || height < 1) throw ShapeError("area_resample: empty target");
  GeoGrid out(width, height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  for (int ty = 0; ty < height; ++ty) {
    const double y0 = ty * sy;
    const double y1 = (ty + 1) * sy;
    for (int tx = 0; tx < width; ++tx) {
      const double x0 = tx * sx;
      const double x1 = (tx + 1) * sx;
      Vec3 acc = Vec3::Zero();
      double wsum = 0.0;
      for (int v = static_cast<int>(std::floor(y0)); v < std::min<int>(src.height(), std::ceil(y1)); ++v) {
        const double wy = std::min(y1, v + 1.0) - std::max(y0, static_cast<double>(v));
        if (wy <= 0.0) continue;
        for (int u = static_cast<int>(std::floor(x0)); u < std::min<int>(src.width(), std::ceil(x1)); ++u) {
          const double wx = std::min(x1, u + 1.0) - std::max(x0, static_cast<double>(u));
          if (wx <= 0.0 || !src.valid(u, v)) continue;
          acc += wx * wy * src.value(u, v);
          wsum += wx * wy;
        }
      }
      if (wsum > 0.0) out.set(tx, ty, acc / wsum);
    }
  }
  return out;
}

GeoGrid augment_condition(const GeoGrid& warped, const GeoGrid& original, double ratio) {
  if (!warped.same_shape(original)) {
    throw ShapeError("augment_condition: warped and original grids differ in size");
  }
  const CenterRegion r = center_region(warped.width(), warped.height(), ratio);
  const GeoGrid small = area_resample(original, r.width, r.height);
  GeoGrid out = warped;
  for (int v = 0; v < r.height; ++v) {
    for (int u = 0; u < r.width; ++u) {
      if (small.valid(u, v)) {
        out.set(r.x0 + u, r.y0 + v, small.value(u, v));
      } else {
        out.invalidate(r.x0 + u, r.y0 + v);
      }
    }
  }
  return out;
}

namespace {

std::vector<double> read_numbers(std::istream& in, const std::string& what) {
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError(what + ": bad number '" + tok + "' on line " + std::to_string(line_no));
      }
    }
  }
  return values;
}

}  // namespace

std::vector<Camera> read_cameras(std::istream& in) {
  const std::vector<double> v = read_numbers(in, "camera file");
  constexpr std::size_t kPerCamera = 18;
  if (v.size() % kPerCamera != 0) {
    throw ParseError("camera file: expected 18 numbers per camera, got " + std::to_string(v.size()));
  }
  std::vector<Camera> cams;
  for (std::size_t i = 0; i < v.size(); i += kPerCamera) {
    Camera c;
    c.intrinsics = {v[i], v[i + 1], v[i + 2], v[i + 3], static_cast<int>(v[i + 4]),
                    static_cast<int>(v[i + 5])};
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) c.pose.rotation(r, k) = v[i + 6 + r * 4 + k];
      c.pose.translation[r] = v[i + 6 + r * 4 + 3];
    }
    try {
      c.validate();
    } catch (const InvalidArgument& e) {
      throw ParseError(std::string("camera file: ") + e.what());
    }
    cams.push_back(c);
  }
  return cams;
}

std::vector<Camera> load_cameras(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open camera file " + path);
  return read_cameras(in);
}

void write_cameras(std::ostream& out, const std::vector<Camera>& cams) {
  out << "# fx fy cx cy width height, then rows of [R|t] (world <- camera)\n";
  out << std::setprecision(17);
  for (const Camera& c : cams) {
    const Intrinsics& k = c.intrinsics;
    out << k.fx << ' ' << k.fy << ' ' << k.cx << ' ' << k.cy << ' ' << k.width << ' ' << k.height
        << '\n';
    for (int r = 0; r < 3; ++r) {
      out << c.pose.rotation(r, 0) << ' ' << c.pose.rotation(r, 1) << ' ' << c.pose.rotation(r, 2)
          << ' ' << c.pose.translation[r] << '\n';
    }
  }
}

void save_cameras(const std::string& path, const std::vector<Camera>& cams) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write camera file " + path);
  write_cameras(out, cams);
}

}  // namespace gamo
