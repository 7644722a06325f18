#include "gf/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gf/camera_io.hpp"
#include "gf/image_io.hpp"

namespace gf {

namespace fs = std::filesystem;
using Json = nlohmann::json;

Json manifest_to_json(const SplitManifest& man) {
  Json j;
  j["seed"] = man.seed;
  j["ratio"] = man.ratio;
  j["mode"] = man.mode;
  Json entries = Json::array();
  for (const auto& e : man.entries) {
    Json ej;
    ej["frame"] = e.frame;
    ej["role"] = e.role == FrameRole::Train ? "train" : "test";
    if (e.role == FrameRole::Train)
      ej["window"] = Json::array({e.window.x0, e.window.y0, e.window.w, e.window.h});
    entries.push_back(ej);
  }
  j["entries"] = entries;
  return j;
}

SplitManifest manifest_from_json(const Json& j) {
  SplitManifest man;
  man.seed = j.value("seed", uint64_t{0});
  man.ratio = j.value("ratio", 1.0);
  man.mode = j.value("mode", "");
  require(j.contains("entries") && j["entries"].is_array(), ErrCode::SchemaViolation,
          "manifest missing 'entries'");
  for (const auto& ej : j["entries"]) {
    SplitEntry e;
    e.frame = ej.value("frame", 0);
    const std::string role = ej.value("role", "train");
    e.role = role == "train" ? FrameRole::Train : FrameRole::Test;
    if (ej.contains("window")) {
      e.window.x0 = ej["window"][0].get<int>();
      e.window.y0 = ej["window"][1].get<int>();
      e.window.w = ej["window"][2].get<int>();
      e.window.h = ej["window"][3].get<int>();
    }
    man.entries.push_back(e);
  }
  return man;
}

void save_manifest(const std::string& path, const SplitManifest& man) {
  std::ofstream f(path);
  require(f.good(), ErrCode::MalformedFile, "cannot open for write: " + path);
  f << manifest_to_json(man).dump(2) << "\n";
}

SplitManifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrCode::MalformedFile, "cannot open: " + path);
  Json j = Json::parse(f, nullptr, false);
  require(!j.is_discarded(), ErrCode::MalformedFile, "invalid JSON: " + path);
  return manifest_from_json(j);
}

namespace {

std::string frame_name(const char* prefix, int i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04d.%s", prefix, i, ext);
  return buf;
}

}  // namespace

void save_dataset(const std::string& dir, const SceneDataset& dataset) {
  dataset.validate();
  fs::create_directories(fs::path(dir) / "frames");
  write_camera_list((fs::path(dir) / "cameras.json").string(), dataset.cameras);
  for (size_t i = 0; i < dataset.frames.size(); ++i) {
    const auto& f = dataset.frames[i];
    write_png((fs::path(dir) / "frames" / frame_name("rgb", static_cast<int>(i), "png")).string(),
              f.rgb, true);
    Image depth = f.depth;
    for (int y = 0; y < f.height(); ++y)
      for (int x = 0; x < f.width(); ++x)
        if (!f.valid.at(x, y)) depth.at(x, y) = 0.0;
    write_pfm((fs::path(dir) / "frames" / frame_name("depth", static_cast<int>(i), "pfm")).string(),
              depth);
  }
  write_points_ply((fs::path(dir) / "points.ply").string(), dataset.points);
  if (dataset.split) save_manifest((fs::path(dir) / "split.json").string(), *dataset.split);
  if (dataset.scene_spec) save_scene_spec((fs::path(dir) / "scene.json").string(), *dataset.scene_spec);
}

SceneDataset load_dataset(const std::string& dir) {
  SceneDataset ds;
  ds.cameras = read_camera_list((fs::path(dir) / "cameras.json").string());
  for (size_t i = 0; i < ds.cameras.size(); ++i) {
    const auto rgb_path = fs::path(dir) / "frames" / frame_name("rgb", static_cast<int>(i), "png");
    require(fs::exists(rgb_path), ErrCode::MalformedFile, "missing frame: " + rgb_path.string());
    FrameRGBD f;
    f.rgb = read_png(rgb_path.string(), true);
    const auto depth_path = fs::path(dir) / "frames" / frame_name("depth", static_cast<int>(i), "pfm");
    if (fs::exists(depth_path)) {
      f.depth = read_pfm(depth_path.string());
      require(f.depth.width == f.rgb.width && f.depth.height == f.rgb.height,
              ErrCode::ShapeMismatch, "depth/rgb size mismatch at frame " + std::to_string(i));
      f.valid = Mask(f.rgb.width, f.rgb.height, false);
      for (int y = 0; y < f.rgb.height; ++y)
        for (int x = 0; x < f.rgb.width; ++x) f.valid.set(x, y, f.depth.at(x, y) > 0.0);
    } else {
      f.depth = Image(f.rgb.width, f.rgb.height, 1, 0.0);
      f.valid = Mask(f.rgb.width, f.rgb.height, false);
    }
    f.transmittance = Image(f.rgb.width, f.rgb.height, 1, 0.0);
    ds.frames.push_back(std::move(f));
  }
  const auto points_path = fs::path(dir) / "points.ply";
  if (fs::exists(points_path)) ds.points = read_points_ply(points_path.string());
  const auto split_path = fs::path(dir) / "split.json";
  if (fs::exists(split_path)) ds.split = load_manifest(split_path.string());
  const auto scene_path = fs::path(dir) / "scene.json";
  if (fs::exists(scene_path)) ds.scene_spec = load_scene_spec(scene_path.string());
  ds.validate();
  return ds;
}

}  // namespace gf
