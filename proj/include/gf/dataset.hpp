#pragma once

#include <nlohmann/json.hpp>
#include <optional>

#include "gf/camera.hpp"
#include "gf/image.hpp"
#include "gf/protocol.hpp"
#include "gf/splat_io.hpp"
#include "gf/synth.hpp"

namespace gf {

/// On-disk layout:
///   cameras.json            camera list, order = frame order
///   frames/rgb_%04d.png     sRGB color
///   frames/depth_%04d.pfm   metric depth (optional; 0 = invalid)
///   points.ply              colored init points
///   split.json              split manifest (optional)
///   scene.json              synthetic scene spec (optional, enables gt oracle)
struct SceneDataset {
  std::vector<Camera> cameras;
  std::vector<FrameRGBD> frames;
  std::vector<ColoredPoint> points;
  std::optional<SplitManifest> split;
  std::optional<SyntheticSceneSpec> scene_spec;

  void validate() const {
    require(cameras.size() == frames.size(), ErrCode::SchemaViolation,
            "camera and frame counts disagree");
    for (size_t i = 1; i < frames.size(); ++i)
      require(frames[i].width() == frames[0].width() && frames[i].height() == frames[0].height(),
              ErrCode::SchemaViolation, "frames must share one resolution");
  }
};

nlohmann::json manifest_to_json(const SplitManifest& man);
SplitManifest manifest_from_json(const nlohmann::json& j);
void save_manifest(const std::string& path, const SplitManifest& man);
SplitManifest load_manifest(const std::string& path);

void save_dataset(const std::string& dir, const SceneDataset& dataset);
SceneDataset load_dataset(const std::string& dir);

}  // namespace gf
