#pragma once

#include <memory>
#include <nlohmann/json.hpp>

#include "gf/oracle.hpp"
#include "gf/splat_io.hpp"

namespace gf {

struct Primitive {
  enum class Kind { Sphere, Box, Rect };
  Kind kind = Kind::Sphere;
  // Sphere: center + radius. Box: axis-aligned bounds. Rect: center plus two
  // edge half-vectors spanning the rectangle.
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  Vec3 box_min = Vec3::Zero(), box_max = Vec3::Ones();
  Vec3 edge_u = Vec3::UnitX(), edge_v = Vec3::UnitY();
  Vec3 albedo = Vec3(0.8, 0.8, 0.8);
  Vec3 albedo2 = Vec3(0.2, 0.2, 0.2);
  double checker_scale = 0.0;  // 0 = flat albedo
};

struct RigSpec {
  enum class Kind { Orbit, Dolly };
  Kind kind = Kind::Orbit;
  Vec3 target = Vec3::Zero();
  double radius = 4.0;
  double height = 1.0;
  double arc_start_deg = 0.0;
  double arc_end_deg = 360.0;
  Vec3 dolly_from = Vec3(0, 0, -4), dolly_to = Vec3(0, 0, -2);
  int frames = 16;
};

struct SyntheticSceneSpec {
  uint64_t seed = 1;
  int width = 64, height = 64;
  double fov_deg = 60.0;
  Vec3 background = Vec3::Zero();
  int n_init_points = 2000;
  std::vector<Primitive> primitives;
  RigSpec rig;

  void validate() const {
    require(!primitives.empty(), ErrCode::SchemaViolation, "scene needs >= 1 primitive");
    require(width > 0 && height > 0 && width <= 256 && height <= 256, ErrCode::SchemaViolation,
            "resolution must be positive and <= 256x256");
    require(rig.frames > 0, ErrCode::SchemaViolation, "rig needs >= 1 frame");
  }
};

nlohmann::json scene_spec_to_json(const SyntheticSceneSpec& spec);
SyntheticSceneSpec scene_spec_from_json(const nlohmann::json& j);
SyntheticSceneSpec load_scene_spec(const std::string& path);
void save_scene_spec(const std::string& path, const SyntheticSceneSpec& spec);

/// Analytic scene: exact ray-traced rgb and depth per camera, plus surface
/// point sampling for initialization.
class SynthScene : public GtRenderer {
 public:
  explicit SynthScene(SyntheticSceneSpec spec);
  FrameRGBD render_gt(const Camera& camera) const override;
  std::vector<ColoredPoint> sample_points(int n, uint64_t seed) const;
  std::vector<Camera> rig_cameras() const;
  const SyntheticSceneSpec& spec() const { return spec_; }

 private:
  SyntheticSceneSpec spec_;
};

}  // namespace gf
