#include <algorithm>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "gamo/error.hpp"
#include "gamo/splat.hpp"
#include "helpers.hpp"
#include "oracles/brute_render.hpp"
#include "oracles/finite_diff.hpp"

using namespace gamo;

namespace {

double max_abs_diff(const Image& a, const Image& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

}  // namespace

TEST_SUITE("splat") {

TEST_CASE("covariance eigen-decomposition recovers scales and rotation axes") {
  const Vec3 scale(0.3, 0.1, 0.7);
  const Quat q = Quat(0.8, 0.2, -0.4, 0.3).normalized();
  const Covariance c = build_covariance(scale, q);
  CHECK_FALSE(c.renormalized);
  CHECK((c.sigma - c.sigma.transpose()).norm() < 1e-15);
  Eigen::SelfAdjointEigenSolver<Mat3> es(c.sigma);
  std::vector<double> got(es.eigenvalues().data(), es.eigenvalues().data() + 3);
  std::vector<double> want{0.01, 0.09, 0.49};
  for (int i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  const Mat3 r = q.toRotationMatrix();
  for (int i = 0; i < 3; ++i) {
    const Vec3 axis = r.col(i);
    CHECK((c.sigma * axis - scale[i] * scale[i] * axis).norm() < 1e-12);
  }
  const Covariance un = build_covariance(scale, Quat(1.6, 0.4, -0.8, 0.6));
  CHECK(un.renormalized);
  CHECK((un.sigma - c.sigma).norm() < 1e-12);
}

TEST_CASE("rasterizer matches per-pixel brute force") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const GaussianCloud cloud = testing::small_cloud(seed, 12);
    Camera cam = testing::simple_camera(40, 30, 36.0);
    cam.pose.rotation = Eigen::AngleAxisd(0.05, Vec3(0.3, 1, 0).normalized()).toRotationMatrix();
    const RenderOutput r = render(cloud, cam);
    const oracle::BruteRender b = oracle::brute_render(cloud, cam);
    CHECK(max_abs_diff(r.color, b.color) < 1e-9);
    CHECK(max_abs_diff(r.opacity, b.opacity) < 1e-9);
  }
}

TEST_CASE("Gaussians behind the near plane are ignored") {
  GaussianCloud cloud = testing::small_cloud(4, 3);
  Gaussian behind = cloud[0];
  behind.mu.z() = -1.0;
  const Camera cam = testing::simple_camera(20, 16, 18.0);
  GaussianCloud with = cloud;
  with.push_back(behind);
  CHECK(render(with, cam).color == render(cloud, cam).color);
  CHECK(render(GaussianCloud{}, cam).opacity == Image(20, 16, 1));
}

TEST_CASE("rendering is invariant to the order of the cloud") {
  const GaussianCloud cloud = testing::small_cloud(5, 10);
  GaussianCloud shuffled = cloud;
  std::mt19937_64 rng(1);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const Camera cam = testing::simple_camera(32, 24, 30.0);
  const RenderOutput a = render(cloud, cam), b = render(shuffled, cam);
  CHECK(a.color == b.color);
  CHECK(a.opacity == b.opacity);
}

TEST_CASE("opacity is monotone in alpha and bounded by one") {
  GaussianCloud cloud = testing::small_cloud(6, 8);
  const Camera cam = testing::simple_camera(32, 24, 30.0);
  const RenderOutput before = render(cloud, cam);
  cloud[3].alpha = std::min(0.99, cloud[3].alpha + 0.1);
  const RenderOutput after = render(cloud, cam);
  for (std::size_t i = 0; i < before.opacity.size(); ++i) {
    CHECK(after.opacity.values()[i] >= before.opacity.values()[i] - 1e-15);
    CHECK(after.opacity.values()[i] <= 1.0);
  }
  // adding a Gaussian never lowers opacity
  GaussianCloud more = cloud;
  more.push_back(testing::small_cloud(7, 1)[0]);
  const RenderOutput extra = render(more, cam);
  for (std::size_t i = 0; i < after.opacity.size(); ++i)
    CHECK(extra.opacity.values()[i] >= after.opacity.values()[i] - 1e-15);
}

TEST_CASE("expected depth lies between the nearest and farthest covering Gaussian") {
  const GaussianCloud cloud = testing::small_cloud(8, 6);
  const Camera cam = testing::simple_camera(32, 24, 30.0);
  const RenderOutput r = render(cloud, cam);
  double zmin = 1e9, zmax = 0;
  for (const Gaussian& g : cloud) zmin = std::min(zmin, g.mu.z()), zmax = std::max(zmax, g.mu.z());
  for (int v = 0; v < 24; ++v)
    for (int u = 0; u < 32; ++u) {
      if (r.opacity.at(u, v) == 0.0) {
        CHECK(r.depth.at(u, v) == 0.0);
      } else {
        CHECK(r.depth.at(u, v) >= zmin - 1e-9);
        CHECK(r.depth.at(u, v) <= zmax + 1e-9);
      }
    }
}

TEST_CASE("analytic gradients match central differences") {
  GaussianCloud cloud = testing::small_cloud(9, 5);
  Camera cam = testing::simple_camera(24, 18, 22.0);
  cam.pose.rotation = Eigen::AngleAxisd(0.04, Vec3(1, 0.5, 0).normalized()).toRotationMatrix();
  const Image wc = testing::random_image(24, 18, 3, 21, -1, 1);
  const Image wo = testing::random_image(24, 18, 1, 22, -1, 1);
  auto objective = [&] {
    const RenderOutput r = render(cloud, cam);
    double s = 0;
    for (std::size_t i = 0; i < wc.size(); ++i) s += wc.values()[i] * r.color.values()[i];
    for (std::size_t i = 0; i < wo.size(); ++i) s += wo.values()[i] * r.opacity.values()[i];
    return s;
  };
  const CloudGrad grad = render_backward(cloud, cam, wc, wo);
  REQUIRE(grad.size() == cloud.size());
  const RenderPass pass(cloud, cam);
  const CloudGrad again = pass.backward(wc, wo);
  const double h = 1e-6, floor = 1e-3;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    Gaussian& g = cloud[i];
    for (int k = 0; k < 3; ++k) {
      CHECK(oracle::rel_err(grad[i].mu[k], oracle::central_diff(&g.mu[k], h, objective), floor) < 1e-4);
      CHECK(oracle::rel_err(grad[i].scale[k], oracle::central_diff(&g.scale[k], h, objective), floor) < 1e-4);
      CHECK(oracle::rel_err(grad[i].rgb[k], oracle::central_diff(&g.rgb[k], h, objective), floor) < 1e-4);
      CHECK(again[i].mu[k] == grad[i].mu[k]);
    }
    CHECK(oracle::rel_err(grad[i].alpha, oracle::central_diff(&g.alpha, h, objective), floor) < 1e-4);
  }
}

TEST_CASE("untraced passes refuse backward and gradients check shapes") {
  const GaussianCloud cloud = testing::small_cloud(10, 2);
  const Camera cam = testing::simple_camera(16, 12, 14.0);
  const RenderPass pass(cloud, cam, false);
  CHECK_THROWS_AS(pass.backward(Image(16, 12, 3), Image(16, 12, 1)), InvalidArgument);
  CHECK_THROWS_AS(render_backward(cloud, cam, Image(8, 12, 3), Image(16, 12, 1)), ShapeError);
}

TEST_CASE("cloud files round-trip exactly") {
  const GaussianCloud cloud = testing::small_cloud(11, 7);
  std::stringstream s;
  write_cloud(s, cloud);
  const GaussianCloud back = read_cloud(s);
  REQUIRE(back.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) CHECK(back[i] == cloud[i]);
  std::stringstream short_line("1 2 3 4\n");
  CHECK_THROWS_AS(read_cloud(short_line), ParseError);
  std::stringstream junk("1 2 3 4 5 6 7 8 9 10 11 12 13 abc\n");
  CHECK_THROWS_AS(read_cloud(junk), ParseError);
}

}
