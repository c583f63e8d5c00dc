#pragma once

// Procedural ground-truth scenes: axis-aligned textured boxes and rectangles,
// a ray caster for reference color/depth/CCM, camera layouts, and a noisy
// point initializer.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gamo/camera.hpp"
#include "gamo/image.hpp"
#include "gamo/linalg.hpp"
#include "gamo/splat.hpp"

namespace gamo {

// Built-in texture table, addressed by id in scene files.
//   0-3   solid: warm red, olive, teal, light gray
//   4-7   checker (0.4 unit cells): red/cream, blue/white, green/dark, orange/brown
//   8-11  vertical gradient along the primitive: blue->white, brown->yellow,
//         purple->pink, dark->light gray
enum class TextureKind { kSolid, kChecker, kGradient };

struct Texture {
  TextureKind kind = TextureKind::kSolid;
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double cell = 0.4;
};

inline constexpr int kTextureCount = 12;
const Texture& builtin_texture(int id);

struct Primitive {
  enum class Kind { kBox, kPlane };
  Kind kind = Kind::kBox;
  // Box: center and full size. Plane: axis-aligned rectangle.
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Ones();
  int axis = 1;         // plane normal axis
  double offset = 0.0;  // plane position along `axis`
  double u0 = 0, u1 = 1, v0 = 0, v1 = 1;  // extents along the two other axes, in axis order
  int texture = 0;

  Aabb bounds() const;
};

struct Scene {
  std::vector<Primitive> primitives;
  Aabb bounds;
  Vec3 background = Vec3::Zero();

  void validate() const;
};

// Deterministic scene for `seed`. `complexity` is the primitive count and must
// be 3, 8 or 20: a floor and back wall (plus side walls from 8 up) with boxes.
Scene generate_scene(std::uint64_t seed, int complexity);

struct Hit {
  double t = 0.0;  // ray parameter
  int primitive = -1;
  Vec3 point = Vec3::Zero();
};

// Nearest intersection of origin + t * dir (t > 0).
std::optional<Hit> intersect(const Scene& scene, const Vec3& origin, const Vec3& dir);
Vec3 shade(const Scene& scene, const Hit& hit);

struct GtRender {
  Image color;  // 3 channels; background color on misses
  Image depth;  // camera depth, 0 on misses
  GeoGrid ccm;  // bounding-box normalized hit points; invalid on misses
};

GtRender gt_render(const Scene& scene, const Camera& cam);

enum class Layout { kArc, kRing, kGrid };

struct ViewSpec {
  Layout layout = Layout::kArc;
  int count = 3;
  Intrinsics intrinsics;
  Vec3 target = Vec3::Zero();
  double radius = 3.2;
  double height = 1.4;           // eye height (world y)
  double arc_center_deg = 90.0;  // azimuth of the arc midpoint (90 = +z side)
  double arc_span_deg = 70.0;
  double phase = 0.0;            // fraction of a spacing to shift arc positions by
  double jitter_deg = 0.0;       // seeded azimuth jitter
};

// Look-at camera at `eye` (world y is up; image y points down).
Camera look_at(const Intrinsics& k, const Vec3& eye, const Vec3& target);

std::vector<Camera> sample_views(const Scene& scene, const ViewSpec& spec, std::uint64_t seed);

struct PointInitParams {
  int stride = 4;
  double noise_std = 0.0;
  double alpha = 0.5;
};

// Ground-truth unprojections on a stride grid of each view, perturbed by
// isotropic N(0, noise_std^2), with GT color and scale 2x the sample spacing.
GaussianCloud init_points(const Scene& scene, const std::vector<Camera>& cams,
                          const PointInitParams& params, std::uint64_t seed);

// Scene file: `bounds x0 y0 z0 x1 y1 z1`, `background r g b`,
// `box cx cy cz sx sy sz texture` and `plane axis offset u0 u1 v0 v1 texture`.
Scene read_scene(std::istream& in);
Scene load_scene(const std::string& path);
void write_scene(std::ostream& out, const Scene& scene);
void save_scene(const std::string& path, const Scene& scene);

}  // namespace gamo
