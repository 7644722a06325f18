#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"

using namespace gf;
using namespace gf::testutil;

namespace {

GaussianDisk on_axis_disk(double z, const Vec3& color, double scale = 0.5) {
  GaussianDisk d;
  d.position = Vec3(0, 0, z);
  d.tangent_u = Vec3::UnitX();
  d.tangent_v = Vec3::UnitY();
  d.log_scale_u = std::log(scale);
  d.log_scale_v = std::log(scale);
  d.opacity = 1.0;
  d.sh = {color};
  return d;
}

}  // namespace

TEST_CASE("project_splat on-axis center and depth") {
  Camera cam = make_camera(64, 64, 60.0);
  const auto fp = project_splat(on_axis_disk(5.0, Vec3(1, 0, 0)), cam);
  REQUIRE(fp.has_value());
  CHECK(fp->center_px.x() == doctest::Approx(32.0).epsilon(1e-12));
  CHECK(fp->center_px.y() == doctest::Approx(32.0).epsilon(1e-12));
  CHECK(fp->mean_depth == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("project_splat culls behind the camera") {
  Camera cam = make_camera(64, 64, 60.0);
  CHECK_FALSE(project_splat(on_axis_disk(-1.0, Vec3(1, 0, 0)), cam).has_value());
}

TEST_CASE("project_splat pinhole x offset") {
  // fx=100, cx=32: x = 32 + 100 * (1/5) = 52
  Camera cam = make_camera(64, 64, 100.0);
  GaussianDisk d = on_axis_disk(5.0, Vec3(1, 0, 0));
  d.position = Vec3(1, 0, 5);
  const auto fp = project_splat(d, cam);
  REQUIRE(fp.has_value());
  CHECK(fp->center_px.x() == doctest::Approx(52.0).epsilon(1e-12));
}

TEST_CASE("project_splat bbox contains every above-cutoff pixel") {
  std::mt19937_64 rng(7);
  Camera cam = make_camera(48, 48, 40.0);
  RenderOptions opts;
  for (int trial = 0; trial < 40; ++trial) {
    const GaussianDisk d = random_disk(rng);
    const auto fp = project_splat(d, cam, opts);
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x) {
        if (raw_weight(d, cam, x, y) < opts.gaussian_cutoff) continue;
        REQUIRE(fp.has_value());
        CHECK(x >= fp->x0);
        CHECK(x <= fp->x1);
        CHECK(y >= fp->y0);
        CHECK(y <= fp->y1);
      }
  }
}

TEST_CASE("eval_splat_at_pixel center, one sigma, parallel") {
  Camera cam = make_camera(64, 64, 80.0);
  GaussianDisk d = on_axis_disk(5.0, Vec3(1, 1, 1), 0.3);

  const auto center = eval_splat_at_pixel(d, cam, 32.0, 32.0);
  REQUIRE(center.has_value());
  CHECK(center->weight == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(center->depth == doctest::Approx(5.0).epsilon(1e-12));

  // Hit at u = s_u: world point (0.3, 0, 5) -> pixel x = 32 + 80*0.3/5.
  const auto sigma = eval_splat_at_pixel(d, cam, 32.0 + 80.0 * 0.3 / 5.0, 32.0);
  REQUIRE(sigma.has_value());
  CHECK(sigma->weight == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

  // Disk plane parallel to the principal ray.
  GaussianDisk side = d;
  side.tangent_u = Vec3::UnitY();
  side.tangent_v = Vec3::UnitZ();  // normal = x axis, perpendicular to the center ray
  CHECK_FALSE(eval_splat_at_pixel(side, cam, 32.0, 32.0).has_value());
}

TEST_CASE("render empty cloud") {
  Camera cam = make_camera(32, 32, 30.0);
  SplatCloud cloud;
  const FrameRGBD f = render(cloud, cam, Vec3::Zero());
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      CHECK(f.rgb.at(x, y, 0) == 0.0);
      CHECK(f.transmittance.at(x, y) == 1.0);
      CHECK_FALSE(f.valid.at(x, y));
    }
}

TEST_CASE("render single opaque disk") {
  Camera cam = make_camera(64, 64, 60.0);
  SplatCloud cloud;
  cloud.add_disk(on_axis_disk(5.0, Vec3(1, 0, 0)));
  const FrameRGBD f = render(cloud, cam, Vec3::Zero());
  CHECK(f.rgb.at(32, 32, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.rgb.at(32, 32, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f.transmittance.at(32, 32) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f.depth.at(32, 32) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(f.valid.at(32, 32));
}

TEST_CASE("render two-disk hand compositing") {
  // front (alpha=0.5, c=(1,0,0), d=2), back (alpha=1, c=(0,1,0), d=4)
  // C = (0.5, 0.5, 0), T = 0, D = (2*0.5 + 4*0.5)/1 = 3
  Camera cam = make_camera(64, 64, 60.0);
  SplatCloud cloud;
  GaussianDisk front = on_axis_disk(2.0, Vec3(1, 0, 0), 1.0);
  front.opacity = 0.5;
  GaussianDisk back = on_axis_disk(4.0, Vec3(0, 1, 0), 2.0);
  cloud.add_disk(front);
  cloud.add_disk(back);
  const FrameRGBD f = render(cloud, cam, Vec3::Zero());
  CHECK(f.rgb.at(32, 32, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.rgb.at(32, 32, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.rgb.at(32, 32, 2) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f.transmittance.at(32, 32) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f.depth.at(32, 32) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("compositing is storage-order invariant") {
  std::mt19937_64 rng(11);
  Camera cam = make_camera(32, 32, 30.0);
  SplatCloud a = random_cloud(rng, 8);
  SplatCloud b;
  for (int i = static_cast<int>(a.size()) - 1; i >= 0; --i) b.add_disk(a.disks[i]);
  const FrameRGBD fa = render(a, cam, Vec3(0.2, 0.1, 0.3));
  const FrameRGBD fb = render(b, cam, Vec3(0.2, 0.1, 0.3));
  for (size_t i = 0; i < fa.rgb.data.size(); ++i)
    CHECK(fa.rgb.data[i] == doctest::Approx(fb.rgb.data[i]).epsilon(1e-6));
  for (size_t i = 0; i < fa.transmittance.data.size(); ++i)
    CHECK(fa.transmittance.data[i] == doctest::Approx(fb.transmittance.data[i]).epsilon(1e-6));
}

TEST_CASE("transmittance bounds and monotonicity under appending") {
  std::mt19937_64 rng(12);
  Camera cam = make_camera(32, 32, 30.0);
  SplatCloud cloud = random_cloud(rng, 6);
  const FrameRGBD before = render(cloud, cam, Vec3::Zero());
  cloud.add_disk(random_disk(rng));
  const FrameRGBD after = render(cloud, cam, Vec3::Zero());
  for (size_t i = 0; i < before.transmittance.data.size(); ++i) {
    CHECK(before.transmittance.data[i] >= 0.0);
    CHECK(before.transmittance.data[i] <= 1.0);
    CHECK(after.transmittance.data[i] <= before.transmittance.data[i] + 1e-12);
  }
}

TEST_CASE("energy bound") {
  std::mt19937_64 rng(13);
  Camera cam = make_camera(32, 32, 30.0);
  const SplatCloud cloud = random_cloud(rng, 10);
  const Vec3 bg(0.25, 0.5, 0.75);
  double max_color = 0.0;
  for (const auto& d : cloud.disks)
    max_color = std::max(max_color, d.sh[0].maxCoeff());
  const FrameRGBD f = render(cloud, cam, bg);
  const double bound = std::max(max_color, bg.maxCoeff()) + 1e-12;
  for (double v : f.rgb.data) {
    CHECK(v >= -1e-12);
    CHECK(v <= bound);
  }
}

TEST_CASE("single opaque disk renders exact intersection depth") {
  std::mt19937_64 rng(14);
  Camera cam = make_camera(32, 32, 30.0);
  for (int trial = 0; trial < 10; ++trial) {
    GaussianDisk d = random_disk(rng);
    d.opacity = 1.0;
    SplatCloud cloud;
    cloud.add_disk(d);
    const FrameRGBD f = render(cloud, cam, Vec3::Zero());
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        double s = 0.0;
        if (raw_weight(d, cam, x, y, &s) < 2.0 * RenderOptions{}.gaussian_cutoff) continue;
        if (!f.valid.at(x, y)) continue;
        CHECK(f.depth.at(x, y) == doctest::Approx(s).epsilon(1e-12));
      }
  }
}

TEST_CASE("render_backward zero upstream gives zero gradients") {
  std::mt19937_64 rng(15);
  Camera cam = make_camera(32, 32, 30.0);
  const SplatCloud cloud = random_cloud(rng, 5);
  RenderCache cache;
  render(cloud, cam, Vec3::Zero(), {}, &cache);
  PixelGrads zero;
  const BackwardResult bw = render_backward(cloud, cam, cache, zero);
  for (size_t i = 0; i < cloud.size(); ++i) {
    CHECK(bw.d_position[i].norm() == 0.0);
    CHECK(bw.d_opacity[i] == 0.0);
    CHECK(bw.d_rotation[i].norm() == 0.0);
  }
}

TEST_CASE("render_backward dL/dalpha = g * c_r for a single disk") {
  Camera cam = make_camera(64, 64, 60.0);
  SplatCloud cloud;
  GaussianDisk d = on_axis_disk(5.0, Vec3(0.7, 0.2, 0.1));
  d.opacity = 0.4;
  cloud.add_disk(d);
  RenderCache cache;
  render(cloud, cam, Vec3::Zero(), {}, &cache);
  PixelGrads up;
  up.d_rgb = Image(64, 64, 3, 0.0);
  up.d_rgb.at(32, 32, 0) = 1.0;  // loss = rendered red at the center pixel
  const BackwardResult bw = render_backward(cloud, cam, cache, up);
  // g = 1 at the exact center ray.
  CHECK(bw.d_opacity[0] == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(bw.contributed[0] == 1);
}

TEST_CASE("render_backward rejects a stale cache") {
  std::mt19937_64 rng(16);
  Camera cam = make_camera(32, 32, 30.0);
  SplatCloud cloud = random_cloud(rng, 3);
  RenderCache cache;
  render(cloud, cam, Vec3::Zero(), {}, &cache);
  cloud.disks[0].opacity *= 0.5;
  cloud.touch();
  PixelGrads zero;
  CHECK_THROWS_AS(render_backward(cloud, cam, cache, zero), Error);
}

TEST_CASE("analytic gradients match finite differences") {
  Camera cam = make_camera(32, 32, 30.0);
  RenderOptions opts;
  opts.parallel = false;
  for (uint64_t seed : {21u, 22u, 23u}) {
    std::mt19937_64 rng(seed);
    const SplatCloud cloud = random_cloud(rng, 10);
    const PixelGrads w = robust_weights(cloud, cam, opts, rng);
    const FdReport report = fd_check(cloud, cam, w, opts);
    INFO("seed ", seed, " worst ", report.worst_what, " rel ", report.worst_rel);
    CHECK(report.checked > 50);
    CHECK(report.failed == 0);
  }
}

TEST_CASE("gradients match finite differences with degree-2 SH") {
  Camera cam = make_camera(32, 32, 30.0);
  RenderOptions opts;
  opts.parallel = false;
  std::mt19937_64 rng(31);
  const SplatCloud cloud = random_cloud(rng, 6, 2);
  const PixelGrads w = robust_weights(cloud, cam, opts, rng);
  const FdReport report = fd_check(cloud, cam, w, opts);
  INFO("worst ", report.worst_what, " rel ", report.worst_rel);
  CHECK(report.checked > 50);
  CHECK(report.failed == 0);
}

TEST_CASE("parallel and serial paths agree") {
  std::mt19937_64 rng(41);
  Camera cam = make_camera(64, 48, 50.0);
  const SplatCloud cloud = random_cloud(rng, 20);
  RenderOptions serial;
  serial.parallel = false;
  RenderOptions parallel;
  parallel.parallel = true;

  RenderCache cs, cp;
  const FrameRGBD fs = render(cloud, cam, Vec3(0.1, 0.2, 0.3), serial, &cs);
  const FrameRGBD fp = render(cloud, cam, Vec3(0.1, 0.2, 0.3), parallel, &cp);
  for (size_t i = 0; i < fs.rgb.data.size(); ++i) CHECK(fs.rgb.data[i] == fp.rgb.data[i]);
  for (size_t i = 0; i < fs.depth.data.size(); ++i) CHECK(fs.depth.data[i] == fp.depth.data[i]);
  REQUIRE(cs.hit_disk.size() == cp.hit_disk.size());

  PixelGrads w = robust_weights(cloud, cam, serial, rng);
  const BackwardResult bs = render_backward(cloud, cam, cs, w, serial);
  const BackwardResult bp = render_backward(cloud, cam, cp, w, parallel);
  for (size_t i = 0; i < cloud.size(); ++i) {
    CHECK(bs.d_position[i].isApprox(bp.d_position[i], 1e-12));
    CHECK(bs.d_opacity[i] == doctest::Approx(bp.d_opacity[i]).epsilon(1e-12));
    CHECK(bs.d_rotation[i].isApprox(bp.d_rotation[i], 1e-12));
  }
}

TEST_CASE("rotate_tangent_frame keeps the frame orthonormal") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> uni(-0.5, 0.5);
  GaussianDisk d = random_disk(rng);
  for (int i = 0; i < 100; ++i) {
    rotate_tangent_frame(d, Vec3(uni(rng), uni(rng), uni(rng)));
    CHECK(std::abs(d.tangent_u.norm() - 1.0) < 1e-12);
    CHECK(std::abs(d.tangent_v.norm() - 1.0) < 1e-12);
    CHECK(std::abs(d.tangent_u.dot(d.tangent_v)) < 1e-12);
  }
}
