#include "gamo/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "gamo/error.hpp"

namespace gamo {

const Texture& builtin_texture(int id) {
  static const Texture table[kTextureCount] = {
      {TextureKind::kSolid, {0.78, 0.26, 0.22}, {0.78, 0.26, 0.22}, 0.4},
      {TextureKind::kSolid, {0.55, 0.58, 0.22}, {0.55, 0.58, 0.22}, 0.4},
      {TextureKind::kSolid, {0.18, 0.55, 0.56}, {0.18, 0.55, 0.56}, 0.4},
      {TextureKind::kSolid, {0.80, 0.80, 0.78}, {0.80, 0.80, 0.78}, 0.4},
      {TextureKind::kChecker, {0.80, 0.20, 0.20}, {0.95, 0.90, 0.75}, 0.4},
      {TextureKind::kChecker, {0.15, 0.30, 0.75}, {0.92, 0.92, 0.95}, 0.4},
      {TextureKind::kChecker, {0.25, 0.65, 0.30}, {0.10, 0.20, 0.12}, 0.4},
      {TextureKind::kChecker, {0.95, 0.55, 0.15}, {0.40, 0.25, 0.12}, 0.4},
      {TextureKind::kGradient, {0.15, 0.25, 0.70}, {0.90, 0.92, 0.98}, 0.4},
      {TextureKind::kGradient, {0.40, 0.25, 0.12}, {0.95, 0.85, 0.30}, 0.4},
      {TextureKind::kGradient, {0.40, 0.15, 0.55}, {0.95, 0.60, 0.75}, 0.4},
      {TextureKind::kGradient, {0.15, 0.15, 0.15}, {0.85, 0.85, 0.85}, 0.4},
  };
  if (id < 0 || id >= kTextureCount) throw InvalidArgument("unknown texture id " + std::to_string(id));
  return table[id];
}

namespace {

// The two axes spanning a face with normal `axis`, in increasing order.
std::pair<int, int> face_axes(int axis) {
  switch (axis) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    default: return {0, 1};
  }
}

}  // namespace

Aabb Primitive::bounds() const {
  if (kind == Kind::kBox) return {center - 0.5 * size, center + 0.5 * size};
  const auto [a, b] = face_axes(axis);
  Aabb box;
  box.min[axis] = box.max[axis] = offset;
  box.min[a] = u0;
  box.max[a] = u1;
  box.min[b] = v0;
  box.max[b] = v1;
  return box;
}

void Scene::validate() const {
  if (primitives.empty()) throw InvalidArgument("Scene: no primitives");
  for (const Primitive& p : primitives) {
    builtin_texture(p.texture);
    const Aabb b = p.bounds();
    if (!bounds.contains(b.min, 1e-9) || !bounds.contains(b.max, 1e-9)) {
      throw InvalidArgument("Scene: primitive outside the declared bounds");
    }
  }
}

Scene generate_scene(std::uint64_t seed, int complexity) {
  if (complexity != 3 && complexity != 8 && complexity != 20) {
    throw InvalidArgument("generate_scene: complexity must be 3, 8 or 20");
  }
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto q = [](double v) { return std::round(v * 1000.0) / 1000.0; };

  constexpr double kHalf = 2.4;
  constexpr double kWallHeight = 4.5;
  Scene scene;
  scene.background = Vec3(0.0, 0.0, 0.0);

  Primitive floor;
  floor.kind = Primitive::Kind::kPlane;
  floor.axis = 1;
  floor.offset = 0.0;
  floor.u0 = -kHalf, floor.u1 = kHalf, floor.v0 = -kHalf, floor.v1 = kHalf;
  floor.texture = pick(4, 7);
  scene.primitives.push_back(floor);

  Primitive back;
  back.kind = Primitive::Kind::kPlane;
  back.axis = 2;
  back.offset = -kHalf;
  back.u0 = -kHalf, back.u1 = kHalf, back.v0 = 0.0, back.v1 = kWallHeight;
  back.texture = pick(8, 11);
  scene.primitives.push_back(back);

  if (complexity >= 8) {
    for (double side : {-kHalf, kHalf}) {
      Primitive wall;
      wall.kind = Primitive::Kind::kPlane;
      wall.axis = 0;
      wall.offset = side;
      wall.u0 = 0.0, wall.u1 = kWallHeight, wall.v0 = -kHalf, wall.v1 = kHalf;
      wall.texture = pick(0, 11);
      scene.primitives.push_back(wall);
    }
  }

  const int boxes = complexity - static_cast<int>(scene.primitives.size());
  const double spread = complexity == 20 ? 1.9 : 1.3;
  std::vector<Aabb> placed;
  for (int i = 0; i < boxes; ++i) {
    Primitive box;
    box.kind = Primitive::Kind::kBox;
    box.texture = pick(0, 11);
    for (int attempt = 0;; ++attempt) {
      const double shrink = attempt < 200 ? 1.0 : 0.5;
      box.size = Vec3(q(uni(0.3, 0.8) * shrink), q(uni(0.3, 1.0) * shrink), q(uni(0.3, 0.8) * shrink));
      box.center = Vec3(q(uni(-spread, spread)), 0.5 * box.size.y(), q(uni(-spread, spread)));
      const Aabb b = box.bounds();
      const bool overlaps = std::any_of(placed.begin(), placed.end(), [&](const Aabb& o) {
        return (b.min.array() < o.max.array() + 0.05).all() && (o.min.array() < b.max.array() + 0.05).all();
      });
      if (!overlaps || attempt > 400) {
        placed.push_back(b);
        break;
      }
    }
    scene.primitives.push_back(box);
  }

  Aabb bounds{Vec3::Constant(std::numeric_limits<double>::infinity()),
              Vec3::Constant(-std::numeric_limits<double>::infinity())};
  for (const Primitive& p : scene.primitives) {
    const Aabb b = p.bounds();
    bounds.min = bounds.min.cwiseMin(b.min);
    bounds.max = bounds.max.cwiseMax(b.max);
  }
  scene.bounds = bounds;
  return scene;
}

namespace {

constexpr double kMinHitT = 1e-9;

std::optional<double> intersect_box(const Primitive& p, const Vec3& o, const Vec3& d) {
  const Aabb b = p.bounds();
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < b.min[a] || o[a] > b.max[a]) return std::nullopt;
      continue;
    }
    double ta = (b.min[a] - o[a]) / d[a];
    double tb = (b.max[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1) return std::nullopt;
  if (t0 > kMinHitT) return t0;
  if (t1 > kMinHitT) return t1;  // origin inside the box
  return std::nullopt;
}

std::optional<double> intersect_plane(const Primitive& p, const Vec3& o, const Vec3& d) {
  if (d[p.axis] == 0.0) return std::nullopt;
  const double t = (p.offset - o[p.axis]) / d[p.axis];
  if (!(t > kMinHitT)) return std::nullopt;
  const Vec3 x = o + t * d;
  const auto [a, b] = face_axes(p.axis);
  if (x[a] < p.u0 || x[a] > p.u1 || x[b] < p.v0 || x[b] > p.v1) return std::nullopt;
  return t;
}

}  // namespace

std::optional<Hit> intersect(const Scene& scene, const Vec3& origin, const Vec3& dir) {
  std::optional<Hit> best;
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    const Primitive& p = scene.primitives[i];
    const std::optional<double> t =
        p.kind == Primitive::Kind::kBox ? intersect_box(p, origin, dir) : intersect_plane(p, origin, dir);
    if (t && (!best || *t < best->t)) best = Hit{*t, static_cast<int>(i), origin + *t * dir};
  }
  return best;
}

Vec3 shade(const Scene& scene, const Hit& hit) {
  const Primitive& p = scene.primitives[static_cast<std::size_t>(hit.primitive)];
  const Texture& tex = builtin_texture(p.texture);
  if (tex.kind == TextureKind::kSolid) return tex.a;
  const Aabb b = p.bounds();
  if (tex.kind == TextureKind::kGradient) {
    const int axis = b.extent().y() > 0.0 ? 1 : 0;
    const double s = std::clamp((hit.point[axis] - b.min[axis]) / b.extent()[axis], 0.0, 1.0);
    return (1.0 - s) * tex.a + s * tex.b;
  }
  int normal_axis = p.axis;
  if (p.kind == Primitive::Kind::kBox) {
    double best = -1.0;
    for (int a = 0; a < 3; ++a) {
      const double r = std::abs(hit.point[a] - p.center[a]) / (0.5 * p.size[a]);
      if (r > best) best = r, normal_axis = a;
    }
  }
  const auto [a, c] = face_axes(normal_axis);
  const long parity = static_cast<long>(std::floor((hit.point[a] - b.min[a]) / tex.cell)) +
                      static_cast<long>(std::floor((hit.point[c] - b.min[c]) / tex.cell));
  return (parity % 2 == 0) ? tex.a : tex.b;
}

GtRender gt_render(const Scene& scene, const Camera& cam) {
  const int w = cam.width(), h = cam.height();
  GtRender out{Image(w, h, 3), Image(w, h, 1), GeoGrid(w, h)};
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const Vec3 dir = cam.ray_direction(pixel_center(u, v));
      const std::optional<Hit> hit = intersect(scene, cam.center(), dir);
      const Vec3 color = hit ? shade(scene, *hit) : scene.background;
      for (int c = 0; c < 3; ++c) out.color.at(u, v, c) = color[c];
      if (hit) {
        out.depth.at(u, v) = hit->t;  // dir has unit camera-z component
        out.ccm.set(u, v, scene.bounds.to_unit(hit->point));
      }
    }
  }
  return out;
}

Camera look_at(const Intrinsics& k, const Vec3& eye, const Vec3& target) {
  const Vec3 forward = (target - eye).normalized();
  const Vec3 right = forward.cross(Vec3::UnitY()).normalized();
  const Vec3 down = forward.cross(right);
  Camera cam;
  cam.intrinsics = k;
  cam.pose.rotation.col(0) = right;
  cam.pose.rotation.col(1) = down;
  cam.pose.rotation.col(2) = forward;
  cam.pose.translation = eye;
  return cam;
}

std::vector<Camera> sample_views(const Scene& /*scene*/, const ViewSpec& spec, std::uint64_t seed) {
  if (spec.count < 1) throw InvalidArgument("sample_views: count must be >= 1");
  spec.intrinsics.validate();
  std::mt19937_64 rng(seed);
  auto jitter = [&] {
    return spec.jitter_deg > 0.0
               ? std::uniform_real_distribution<double>(-spec.jitter_deg, spec.jitter_deg)(rng)
               : 0.0;
  };
  auto eye_at = [&](double azimuth_deg, double height) {
    const double a = azimuth_deg * std::numbers::pi / 180.0;
    return Vec3(spec.target.x() + spec.radius * std::cos(a), height,
                spec.target.z() + spec.radius * std::sin(a));
  };
  std::vector<Camera> cams;
  switch (spec.layout) {
    case Layout::kArc:
      for (int i = 0; i < spec.count; ++i) {
        const double az = spec.arc_center_deg - 0.5 * spec.arc_span_deg +
                          spec.arc_span_deg * (i + 0.5 + spec.phase) / spec.count + jitter();
        cams.push_back(look_at(spec.intrinsics, eye_at(az, spec.height), spec.target));
      }
      break;
    case Layout::kRing:
      for (int i = 0; i < spec.count; ++i) {
        const double az = spec.arc_center_deg + 360.0 * (i + spec.phase) / spec.count + jitter();
        cams.push_back(look_at(spec.intrinsics, eye_at(az, spec.height), spec.target));
      }
      break;
    case Layout::kGrid: {
      const int cols = (spec.count + 1) / 2;
      for (int i = 0; i < spec.count; ++i) {
        const int row = i / cols, col = i % cols;
        const double az = spec.arc_center_deg - 0.5 * spec.arc_span_deg +
                          spec.arc_span_deg * (col + 0.5 + spec.phase) / cols + jitter();
        const double height = spec.height + (row == 0 ? 0.4 : -0.4);
        cams.push_back(look_at(spec.intrinsics, eye_at(az, height), spec.target));
      }
      break;
    }
  }
  return cams;
}

GaussianCloud init_points(const Scene& scene, const std::vector<Camera>& cams,
                          const PointInitParams& params, std::uint64_t seed) {
  if (params.noise_std < 0.0) throw InvalidArgument("init_points: noise_std must be >= 0");
  if (params.stride < 1) throw InvalidArgument("init_points: stride must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  GaussianCloud cloud;
  const int off = params.stride / 2;
  for (const Camera& cam : cams) {
    for (int v = off; v < cam.height(); v += params.stride) {
      for (int u = off; u < cam.width(); u += params.stride) {
        const Vec3 dir = cam.ray_direction(pixel_center(u, v));
        const std::optional<Hit> hit = intersect(scene, cam.center(), dir);
        if (!hit) continue;
        Gaussian g;
        g.mu = hit->point;
        if (params.noise_std > 0.0) {
          Vec3 n;
          for (int k = 0; k < 3; ++k) n[k] = normal(rng);
          g.mu += params.noise_std * n;
        }
        g.rgb = shade(scene, *hit);
        g.alpha = params.alpha;
        g.scale = Vec3::Constant(2.0 * params.stride * hit->t / cam.intrinsics.fx);
        cloud.push_back(g);
      }
    }
  }
  return cloud;
}

Scene read_scene(std::istream& in) {
  Scene scene;
  bool have_bounds = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    auto fail = [&] { return ParseError("scene file: malformed '" + kind + "' on line " + std::to_string(line_no)); };
    if (kind == "bounds") {
      if (!(ls >> scene.bounds.min.x() >> scene.bounds.min.y() >> scene.bounds.min.z() >>
            scene.bounds.max.x() >> scene.bounds.max.y() >> scene.bounds.max.z())) throw fail();
      have_bounds = true;
    } else if (kind == "background") {
      if (!(ls >> scene.background.x() >> scene.background.y() >> scene.background.z())) throw fail();
    } else if (kind == "box") {
      Primitive p;
      p.kind = Primitive::Kind::kBox;
      if (!(ls >> p.center.x() >> p.center.y() >> p.center.z() >> p.size.x() >> p.size.y() >>
            p.size.z() >> p.texture)) throw fail();
      scene.primitives.push_back(p);
    } else if (kind == "plane") {
      Primitive p;
      p.kind = Primitive::Kind::kPlane;
      if (!(ls >> p.axis >> p.offset >> p.u0 >> p.u1 >> p.v0 >> p.v1 >> p.texture) || p.axis < 0 ||
          p.axis > 2) throw fail();
      scene.primitives.push_back(p);
    } else {
      throw ParseError("scene file: unknown record '" + kind + "' on line " + std::to_string(line_no));
    }
  }
  if (!have_bounds) throw ParseError("scene file: missing bounds");
  try {
    scene.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("scene file: ") + e.what());
  }
  return scene;
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene file " + path);
  return read_scene(in);
}

void write_scene(std::ostream& out, const Scene& scene) {
  out << std::setprecision(17);
  out << "# gamo scene: box cx cy cz sx sy sz tex | plane axis offset u0 u1 v0 v1 tex\n";
  out << "bounds " << scene.bounds.min.x() << ' ' << scene.bounds.min.y() << ' '
      << scene.bounds.min.z() << ' ' << scene.bounds.max.x() << ' ' << scene.bounds.max.y() << ' '
      << scene.bounds.max.z() << '\n';
  out << "background " << scene.background.x() << ' ' << scene.background.y() << ' '
      << scene.background.z() << '\n';
  for (const Primitive& p : scene.primitives) {
    if (p.kind == Primitive::Kind::kBox) {
      out << "box " << p.center.x() << ' ' << p.center.y() << ' ' << p.center.z() << ' '
          << p.size.x() << ' ' << p.size.y() << ' ' << p.size.z() << ' ' << p.texture << '\n';
    } else {
      out << "plane " << p.axis << ' ' << p.offset << ' ' << p.u0 << ' ' << p.u1 << ' ' << p.v0
          << ' ' << p.v1 << ' ' << p.texture << '\n';
    }
  }
}

void save_scene(const std::string& path, const Scene& scene) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write scene file " + path);
  write_scene(out, scene);
}

}  // namespace gamo
