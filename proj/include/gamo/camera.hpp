#pragma once

// Pinhole cameras, Plücker ray grids and view warping.
//
// Conventions: camera frame x right, y down, z forward. A pixel (u, v) covers
// [u, u+1) x [v, v+1) in continuous image coordinates, so its center is at
// (u + 0.5, v + 0.5). Pose.rotation maps camera axes to world axes and
// Pose.translation is the camera center in world coordinates.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gamo/image.hpp"
#include "gamo/linalg.hpp"

namespace gamo {

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  void validate() const;
  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

struct Pose {
  Mat3 rotation = Mat3::Identity();  // world <- camera
  Vec3 translation = Vec3::Zero();   // camera center, world frame

  void validate() const;
  bool operator==(const Pose& o) const {
    return rotation == o.rotation && translation == o.translation;
  }
};

struct Camera {
  Intrinsics intrinsics;
  Pose pose;

  int width() const { return intrinsics.width; }
  int height() const { return intrinsics.height; }
  const Vec3& center() const { return pose.translation; }

  Vec3 world_to_camera(const Vec3& world) const;
  Vec3 camera_to_world(const Vec3& cam) const;
  // Unnormalized world-space direction through a continuous image point whose
  // camera-frame z component is 1, so ray parameter == camera depth.
  Vec3 ray_direction(const Vec2& image_point) const;

  void validate() const;
  bool operator==(const Camera& o) const { return intrinsics == o.intrinsics && pose == o.pose; }
};

inline Vec2 pixel_center(int u, int v) { return {u + 0.5, v + 0.5}; }

// Focal lengths multiplied by `ratio` in (0, 1]; principal point and size kept.
Intrinsics scale_intrinsics(const Intrinsics& k, double ratio);
Camera widen_fov(const Camera& cam, double ratio);

// Per-pixel 6-vectors: unit direction d followed by moment m = o x d.
class RayGrid {
 public:
  RayGrid(int width, int height) : grid_(width, height, 6) {}
  int width() const { return grid_.width(); }
  int height() const { return grid_.height(); }
  Vec3 direction(int u, int v) const;
  Vec3 moment(int u, int v) const;
  void set(int u, int v, const Vec3& d, const Vec3& m);
  const Image& grid() const { return grid_; }

 private:
  Image grid_;
};

RayGrid plucker_rays(const Camera& cam);

// World point on the ray through `image_point` at camera-frame depth `depth`.
// Throws InvalidArgument when depth <= 0.
Vec3 unproject(const Camera& cam, const Vec2& image_point, double depth);

struct Projection {
  Vec2 image_point = Vec2::Zero();
  double depth = 0.0;
  bool behind = false;  // z <= 0; image_point is meaningless then
};

Projection project(const Camera& cam, const Vec3& world);

// Per-pixel payload (RGB or CCM, 3 channels) with a validity flag. Invalid
// pixels always hold a zero payload.
class GeoGrid {
 public:
  GeoGrid() = default;
  GeoGrid(int width, int height) : payload_(width, height, 3), valid_(payload_.pixel_count(), 0) {}
  // Every pixel valid.
  explicit GeoGrid(Image payload);

  int width() const { return payload_.width(); }
  int height() const { return payload_.height(); }
  bool valid(int u, int v) const { return valid_[index(u, v)] != 0; }
  Vec3 value(int u, int v) const;
  void set(int u, int v, const Vec3& value);
  void invalidate(int u, int v);
  std::size_t valid_count() const;

  const Image& payload() const { return payload_; }
  bool same_shape(const GeoGrid& o) const { return payload_.same_shape(o.payload_); }
  friend bool operator==(const GeoGrid&, const GeoGrid&) = default;

 private:
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width() + u; }
  Image payload_;
  std::vector<std::uint8_t> valid_;
};

// Forward-splat warp result with per-pixel landing diagnostics.
struct WarpResult {
  GeoGrid grid;
  Image depth;         // target-camera depth of the winning sample, 0 where unhit
  Image landing;       // 2 channels: continuous target image point of the winning sample
};

// Forward-splats every valid source pixel with positive depth into `tgt`; a
// z-buffer keeps the nearest sample per target pixel.
GeoGrid warp_view(const GeoGrid& payload, const Camera& src, const Image& src_depth,
                  const Camera& tgt);
WarpResult warp_view_detailed(const GeoGrid& payload, const Camera& src, const Image& src_depth,
                              const Camera& tgt);

// Size of the central region that holds the downsampled original: each side
// round(ratio * size) rounded down to an even number.
struct CenterRegion {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
};
CenterRegion center_region(int width, int height, double ratio);

// Area-averaging resample of a GeoGrid; averages valid samples only.
GeoGrid area_resample(const GeoGrid& src, int width, int height);

// Writes `original` downsampled by `ratio` over the central region of `warped`.
GeoGrid augment_condition(const GeoGrid& warped, const GeoGrid& original, double ratio);

// Camera text format: a line `fx fy cx cy width height` followed by three
// lines `r00 r01 r02 t0` .. `r20 r21 r22 t2`. '#' starts a comment.
std::vector<Camera> read_cameras(std::istream& in);
std::vector<Camera> load_cameras(const std::string& path);
void write_cameras(std::ostream& out, const std::vector<Camera>& cams);
void save_cameras(const std::string& path, const std::vector<Camera>& cams);

}  // namespace gamo
