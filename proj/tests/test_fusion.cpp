#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gf/fusion.hpp"
#include "gf/synth.hpp"
#include "test_util.hpp"

using namespace gf;
using namespace gf::testutil;

namespace {

SyntheticSceneSpec small_scene() {
  SyntheticSceneSpec spec;
  spec.width = 32;
  spec.height = 32;
  spec.fov_deg = 60.0;
  spec.rig.frames = 8;
  spec.rig.radius = 4.0;
  spec.rig.height = 1.0;
  Primitive s;
  s.kind = Primitive::Kind::Sphere;
  s.center = Vec3(0, 0, 0);
  s.radius = 1.0;
  s.albedo = Vec3(0.8, 0.3, 0.2);
  spec.primitives.push_back(s);
  Primitive b;
  b.kind = Primitive::Kind::Box;
  b.box_min = Vec3(-2.2, -1.2, -0.6);
  b.box_max = Vec3(-1.2, 0.0, 0.4);
  b.albedo = Vec3(0.2, 0.5, 0.9);
  spec.primitives.push_back(b);
  // Enclosing textured dome: every ray lands on geometry, like a real indoor
  // capture, so GT depth is valid everywhere.
  Primitive dome;
  dome.kind = Primitive::Kind::Sphere;
  dome.center = Vec3(0, 0, 0);
  dome.radius = 8.0;
  dome.albedo = Vec3(0.55, 0.55, 0.35);
  dome.albedo2 = Vec3(0.25, 0.3, 0.45);
  dome.checker_scale = 0.6;
  spec.primitives.push_back(dome);
  return spec;
}

struct TestRig {
  std::shared_ptr<SynthScene> scene;
  SupervisionSet supervision;
  std::vector<Camera> eval_cams;
  std::vector<FrameRGBD> eval_frames;
  SplatCloud cloud;
  double extent = 1.0;
};

TestRig make_rig(int n_points = 400) {
  TestRig rig;
  rig.scene = std::make_shared<SynthScene>(small_scene());
  const auto cams = rig.scene->rig_cameras();
  for (size_t i = 0; i < cams.size(); ++i) {
    SupervisionView v;
    v.camera = cams[i];
    v.frame = rig.scene->render_gt(cams[i]);
    if (i % 2 == 0)
      rig.supervision.inputs.push_back(std::move(v));
    else {
      rig.eval_cams.push_back(cams[i]);
      rig.eval_frames.push_back(v.frame);
    }
  }
  const auto points = rig.scene->sample_points(n_points, 3);
  rig.cloud = init_from_points(points, rig.supervision.inputs);
  rig.extent = Trainer::compute_scene_extent(cams);
  return rig;
}

FusionConfig quick_config() {
  FusionConfig cfg;
  cfg.total_iters = 70;
  cfg.warmup_iters = 10;
  cfg.cycle_interval = 10;
  cfg.schedule = {10, 70};
  cfg.fragment_length = 4;
  cfg.densify.interval = 25;
  cfg.seed = 5;
  cfg.parallel = true;
  return cfg;
}

class FailingOracle : public RestorationOracle {
 public:
  OracleResponse restore(const OracleRequest&) override {
    fail(ErrCode::OracleUnavailable, "synthetic outage");
  }
  std::string name() const override { return "failing"; }
};

bool clouds_identical(const SplatCloud& a, const SplatCloud& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a.disks[i].position != b.disks[i].position) return false;
    if (a.disks[i].opacity != b.disks[i].opacity) return false;
    if (a.disks[i].tangent_u != b.disks[i].tangent_u) return false;
    if (a.disks[i].tangent_v != b.disks[i].tangent_v) return false;
    if (a.disks[i].log_scale_u != b.disks[i].log_scale_u) return false;
    if (a.disks[i].log_scale_v != b.disks[i].log_scale_v) return false;
    if (a.disks[i].sh != b.disks[i].sh) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("init_from_points keeps visible points and drops hidden ones") {
  Camera cam = look_at(Vec3(0, 0, -4), Vec3(0, 0, 0), Vec3::UnitY(), make_camera(32, 32, 30.0));
  SupervisionView v;
  v.camera = cam;
  v.frame = FrameRGBD(32, 32);
  std::vector<SupervisionView> views;
  views.push_back(std::move(v));

  const std::vector<ColoredPoint> pts = {{Vec3(0, 0, 0), Vec3(1, 0, 0)}};
  const SplatCloud cloud = init_from_points(pts, views);
  REQUIRE(cloud.size() == 1);
  CHECK((cloud.disks[0].position - Vec3(0, 0, 0)).norm() == 0.0);
  CHECK(cloud.disks[0].opacity == 0.1);

  const std::vector<ColoredPoint> behind = {{Vec3(0, 0, -9), Vec3(1, 0, 0)}};
  CHECK_THROWS_AS(init_from_points(behind, views), Error);
  CHECK_THROWS_AS(init_from_points({}, views), Error);
}

TEST_CASE("init_from_points respects keep-masks") {
  Camera cam = look_at(Vec3(0, 0, -4), Vec3(0, 0, 0), Vec3::UnitY(), make_camera(32, 32, 30.0));
  SupervisionView v;
  v.camera = cam;
  v.frame = FrameRGBD(32, 32);
  v.keep = Mask(32, 32, false);  // keep nothing
  std::vector<SupervisionView> views;
  views.push_back(std::move(v));
  const std::vector<ColoredPoint> pts = {{Vec3(0, 0, 0), Vec3(1, 0, 0)}};
  CHECK_THROWS_AS(init_from_points(pts, views), Error);
}

TEST_CASE("init_from_points kNN scale on a colinear triple") {
  Camera cam = look_at(Vec3(0, 0, -6), Vec3(0, 0, 0), Vec3::UnitY(), make_camera(64, 64, 50.0));
  SupervisionView v;
  v.camera = cam;
  v.frame = FrameRGBD(64, 64);
  std::vector<SupervisionView> views;
  views.push_back(std::move(v));
  const double d = 0.4;
  const std::vector<ColoredPoint> pts = {{Vec3(-d, 0, 0), Vec3(1, 1, 1)},
                                         {Vec3(0, 0, 0), Vec3(1, 1, 1)},
                                         {Vec3(d, 0, 0), Vec3(1, 1, 1)}};
  const SplatCloud cloud = init_from_points(pts, views);
  REQUIRE(cloud.size() == 3);
  // Two neighbors each: ends average (d + 2d)/2, the middle point d.
  CHECK(cloud.disks[0].scale_u() == doctest::Approx(1.5 * d).epsilon(1e-9));
  CHECK(cloud.disks[1].scale_u() == doctest::Approx(d).epsilon(1e-9));
  CHECK(cloud.disks[2].scale_u() == doctest::Approx(1.5 * d).epsilon(1e-9));
  // Tangents are perpendicular to the direction toward the camera.
  const Vec3 to_cam = (cam.center() - pts[1].position).normalized();
  CHECK(std::abs(cloud.disks[1].tangent_u.dot(to_cam)) < 1e-9);
  CHECK(std::abs(cloud.disks[1].tangent_v.dot(to_cam)) < 1e-9);
}

TEST_CASE("training loss drops on a 3-disk fit-to-one-view problem") {
  std::mt19937_64 rng(9);
  Camera cam = make_camera(32, 32, 30.0);
  const SplatCloud target = random_cloud(rng, 3);
  const FrameRGBD target_frame = render(target, cam, Vec3::Zero());

  SplatCloud start = target;
  std::uniform_real_distribution<double> jitter(-0.12, 0.12);
  for (auto& d : start.disks) {
    d.position += Vec3(jitter(rng), jitter(rng), jitter(rng));
    d.sh[0] = Vec3(0.5, 0.5, 0.5);
    d.opacity = std::clamp(d.opacity + jitter(rng), 0.1, 0.9);
  }

  FusionConfig cfg;
  cfg.total_iters = 200;
  cfg.warmup_iters = 0;
  cfg.schedule = {0, 200};
  cfg.densify.interval = 1000000;  // pure optimization
  cfg.seed = 1;
  Trainer trainer(start, cfg, 1.0);

  SupervisionView item;
  item.camera = cam;
  item.frame = target_frame;

  const FrameRGBD initial = render(trainer.cloud(), cam, Vec3::Zero());
  Supervision sup{&target_frame, nullptr};
  const double initial_loss = total_loss(initial, &sup, nullptr, cfg.weights, 0.0).value;
  double last = initial_loss;
  for (int k = 0; k < cfg.total_iters; ++k) last = trainer.train_step(item, k);
  CHECK(last < 0.3 * initial_loss);
}

TEST_CASE("generated item with zero schedule weight is a complete no-op") {
  TestRig rig = make_rig();
  FusionConfig cfg = quick_config();
  Trainer trainer(rig.cloud, cfg, rig.extent);
  SupervisionView gen;
  gen.camera = rig.supervision.inputs[0].camera;
  gen.frame = rig.supervision.inputs[0].frame;
  gen.cycle = 0;
  const SplatCloud before = trainer.cloud();
  const double value = trainer.train_step(gen, 5);  // k < K_start: lambda = 0
  CHECK(value == 0.0);
  CHECK(clouds_identical(before, trainer.cloud()));
}

TEST_CASE("fusion cadence: cycles fire exactly on schedule, never in warm-up") {
  TestRig rig = make_rig();
  FusionConfig cfg = quick_config();
  auto counting = std::make_shared<CountingOracle>(std::make_shared<IdentityOracle>());
  Trainer trainer(rig.cloud, cfg, rig.extent);
  const TrainingLog log =
      trainer.run_training(rig.supervision, rig.eval_cams, rig.eval_frames, counting.get());
  // total 70, warmup 10, K 10: cycles at 10,20,30,40,50,60.
  CHECK(counting->calls() == 6);
  REQUIRE(log.cycles.size() == 6);
  for (size_t i = 0; i < log.cycles.size(); ++i) {
    CHECK(log.cycles[i].iteration == 10 * static_cast<int>(i + 1));
    CHECK(log.cycles[i].iteration >= cfg.warmup_iters);
    CHECK(log.cycles[i].oracle_ok);
  }
  // Supervision growth: inputs intact, one fragment appended per cycle.
  CHECK(rig.supervision.inputs.size() == 4);
  CHECK(rig.supervision.generated.size() == 6 * cfg.fragment_length);
  for (const auto& g : rig.supervision.generated) CHECK(g.cycle >= 0);
}

TEST_CASE("cycle_interval beyond total_iters degenerates to the baseline") {
  TestRig rig = make_rig();
  FusionConfig cfg = quick_config();
  cfg.cycle_interval = 1000;  // > total_iters
  auto counting = std::make_shared<CountingOracle>(std::make_shared<IdentityOracle>());
  Trainer trainer(rig.cloud, cfg, rig.extent);
  trainer.run_training(rig.supervision, {}, {}, counting.get());
  CHECK(counting->calls() == 0);
  CHECK(rig.supervision.generated.empty());
}

TEST_CASE("identity oracle on the current reconstruction is a fixed point") {
  TestRig rig = make_rig();
  FusionConfig cfg = quick_config();
  Trainer trainer(rig.cloud, cfg, rig.extent);
  IdentityOracle oracle;
  std::vector<Camera> input_cams;
  for (const auto& v : rig.supervision.inputs) input_cams.push_back(v.camera);
  const SplatCloud pre_cycle = trainer.cloud();
  REQUIRE(trainer.fusion_cycle(rig.supervision, input_cams, oracle, 10));
  REQUIRE(rig.supervision.generated.size() == static_cast<size_t>(cfg.fragment_length));
  // Appended frames equal the renderings at those poses (identity restore;
  // depth alignment of a frame onto itself is the identity map).
  const RenderOptions opts = trainer.render_options();
  for (const auto& g : rig.supervision.generated) {
    const FrameRGBD again = render(pre_cycle, g.camera, cfg.background, opts);
    for (size_t p = 0; p < again.rgb.data.size(); ++p)
      CHECK(std::abs(g.frame.rgb.data[p] - again.rgb.data[p]) < 1e-9);
    for (size_t p = 0; p < again.depth.data.size(); ++p)
      if (again.valid.data[p])
        CHECK(std::abs(g.frame.depth.data[p] - again.depth.data[p]) < 1e-6);
  }
}

TEST_CASE("ground-truth oracle expands content into an empty region") {
  // Train views see only the masked left half of the scene; the gt oracle
  // restores the full frames, so expansion must add disks.
  TestRig rig = make_rig();
  FusionConfig cfg = quick_config();
  for (auto& v : rig.supervision.inputs) {
    Mask keep(v.frame.width(), v.frame.height(), false);
    for (int y = 0; y < v.frame.height(); ++y)
      for (int x = 0; x < v.frame.width() / 2; ++x) keep.set(x, y, true);
    v.keep = keep;
  }
  const auto points = rig.scene->sample_points(400, 3);
  SplatCloud cloud = init_from_points(points, rig.supervision.inputs);
  // Stand in for a warmed-up reconstruction: observed disks near opaque.
  for (auto& d : cloud.disks) d.opacity = 0.95;
  Trainer trainer(std::move(cloud), cfg, rig.extent);
  GroundTruthOracle oracle(rig.scene);
  std::vector<Camera> input_cams;
  for (const auto& v : rig.supervision.inputs) input_cams.push_back(v.camera);
  const size_t before = trainer.cloud().size();
  REQUIRE(trainer.fusion_cycle(rig.supervision, input_cams, oracle, 10));
  CHECK(trainer.cloud().size() > before);
}

TEST_CASE("oracle outage skips the cycle but training continues") {
  TestRig rig = make_rig();
  FusionConfig cfg = quick_config();
  FailingOracle oracle;
  Trainer trainer(rig.cloud, cfg, rig.extent);
  const TrainingLog log =
      trainer.run_training(rig.supervision, rig.eval_cams, rig.eval_frames, &oracle);
  CHECK(rig.supervision.generated.empty());
  REQUIRE(log.cycles.size() == 6);
  for (const auto& c : log.cycles) CHECK_FALSE(c.oracle_ok);
  CHECK(log.final_psnr > 0.0);  // training ran to completion
}

TEST_CASE("run_training is deterministic for a fixed seed") {
  FusionConfig cfg = quick_config();
  TrainingLog log1, log2;
  SplatCloud final1, final2;
  for (int run = 0; run < 2; ++run) {
    TestRig rig = make_rig();
    GroundTruthOracle oracle(rig.scene);
    Trainer trainer(rig.cloud, cfg, rig.extent);
    const TrainingLog log =
        trainer.run_training(rig.supervision, rig.eval_cams, rig.eval_frames, &oracle);
    if (run == 0) {
      log1 = log;
      final1 = trainer.cloud();
    } else {
      log2 = log;
      final2 = trainer.cloud();
    }
  }
  CHECK(log1.final_psnr == log2.final_psnr);
  CHECK(log1.final_ssim == log2.final_ssim);
  CHECK(clouds_identical(final1, final2));
}

TEST_CASE("fusion disabled equals identity oracle with zero generation weight") {
  FusionConfig cfg = quick_config();
  SplatCloud baseline, clamped;
  {
    TestRig rig = make_rig();
    Trainer trainer(rig.cloud, cfg, rig.extent);
    trainer.run_training(rig.supervision, {}, {}, nullptr);
    baseline = trainer.cloud();
  }
  {
    TestRig rig = make_rig();
    FusionConfig c2 = cfg;
    c2.gen_weight_scale = 0.0;
    IdentityOracle oracle;
    Trainer trainer(rig.cloud, c2, rig.extent);
    trainer.run_training(rig.supervision, {}, {}, &oracle);
    clamped = trainer.cloud();
  }
  CHECK(clouds_identical(baseline, clamped));
}
