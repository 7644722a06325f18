#include "gf/synth.hpp"

#include <cmath>
#include <fstream>

namespace gf {
namespace {

using Json = nlohmann::json;

Json vec_to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const Json& j, const char* name) {
  if (!j.contains(name) || !j[name].is_array() || j[name].size() != 3)
    fail(ErrCode::SchemaViolation, std::string("field '") + name + "' must be [x,y,z]");
  return Vec3(j[name][0].get<double>(), j[name][1].get<double>(), j[name][2].get<double>());
}

struct Hit {
  double t = 0.0;  // camera depth along the (z=1 parameterized) ray
  Vec3 point = Vec3::Zero();
  int prim = -1;
};

// Ray origin o, direction d (not normalized; t is the camera depth because the
// camera-space z of d is 1).
bool intersect_sphere(const Vec3& o, const Vec3& d, const Primitive& p, double& t) {
  const Vec3 oc = o - p.center;
  const double a = d.dot(d);
  const double b = 2.0 * oc.dot(d);
  const double c = oc.dot(oc) - p.radius * p.radius;
  const double disc = b * b - 4 * a * c;
  if (disc < 0) return false;
  const double sq = std::sqrt(disc);
  const double t0 = (-b - sq) / (2 * a);
  const double t1 = (-b + sq) / (2 * a);
  t = t0 > 1e-9 ? t0 : t1;
  return t > 1e-9;
}

bool intersect_box(const Vec3& o, const Vec3& d, const Primitive& p, double& t) {
  double t0 = 1e-9, t1 = 1e300;
  for (int j = 0; j < 3; ++j) {
    if (std::abs(d[j]) < 1e-15) {
      if (o[j] < p.box_min[j] || o[j] > p.box_max[j]) return false;
      continue;
    }
    double a = (p.box_min[j] - o[j]) / d[j];
    double b = (p.box_max[j] - o[j]) / d[j];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return false;
  }
  t = t0;
  return true;
}

bool intersect_rect(const Vec3& o, const Vec3& d, const Primitive& p, double& t) {
  const Vec3 n = p.edge_u.cross(p.edge_v);
  const double denom = d.dot(n);
  if (std::abs(denom) < 1e-15) return false;
  t = (p.center - o).dot(n) / denom;
  if (t <= 1e-9) return false;
  const Vec3 local = o + t * d - p.center;
  const double lu = local.dot(p.edge_u) / p.edge_u.squaredNorm();
  const double lv = local.dot(p.edge_v) / p.edge_v.squaredNorm();
  return std::abs(lu) <= 1.0 && std::abs(lv) <= 1.0;
}

Vec3 shade(const Primitive& p, const Vec3& point) {
  if (p.checker_scale <= 0.0) return p.albedo;
  const long cell = static_cast<long>(std::floor(point.x() * p.checker_scale)) +
                    static_cast<long>(std::floor(point.y() * p.checker_scale)) +
                    static_cast<long>(std::floor(point.z() * p.checker_scale));
  return (cell & 1) ? p.albedo2 : p.albedo;
}

}  // namespace

Json scene_spec_to_json(const SyntheticSceneSpec& spec) {
  Json j;
  j["seed"] = spec.seed;
  j["resolution"] = Json::array({spec.width, spec.height});
  j["fov_deg"] = spec.fov_deg;
  j["background"] = vec_to_json(spec.background);
  j["n_init_points"] = spec.n_init_points;
  Json prims = Json::array();
  for (const auto& p : spec.primitives) {
    Json pj;
    pj["albedo"] = vec_to_json(p.albedo);
    pj["albedo2"] = vec_to_json(p.albedo2);
    pj["checker_scale"] = p.checker_scale;
    switch (p.kind) {
      case Primitive::Kind::Sphere:
        pj["type"] = "sphere";
        pj["center"] = vec_to_json(p.center);
        pj["radius"] = p.radius;
        break;
      case Primitive::Kind::Box:
        pj["type"] = "box";
        pj["min"] = vec_to_json(p.box_min);
        pj["max"] = vec_to_json(p.box_max);
        break;
      case Primitive::Kind::Rect:
        pj["type"] = "rect";
        pj["center"] = vec_to_json(p.center);
        pj["edge_u"] = vec_to_json(p.edge_u);
        pj["edge_v"] = vec_to_json(p.edge_v);
        break;
    }
    prims.push_back(pj);
  }
  j["primitives"] = prims;
  Json rig;
  rig["frames"] = spec.rig.frames;
  if (spec.rig.kind == RigSpec::Kind::Orbit) {
    rig["type"] = "orbit";
    rig["target"] = vec_to_json(spec.rig.target);
    rig["radius"] = spec.rig.radius;
    rig["height"] = spec.rig.height;
    rig["arc_deg"] = Json::array({spec.rig.arc_start_deg, spec.rig.arc_end_deg});
  } else {
    rig["type"] = "dolly";
    rig["target"] = vec_to_json(spec.rig.target);
    rig["from"] = vec_to_json(spec.rig.dolly_from);
    rig["to"] = vec_to_json(spec.rig.dolly_to);
  }
  j["rig"] = rig;
  return j;
}

SyntheticSceneSpec scene_spec_from_json(const Json& j) {
  SyntheticSceneSpec spec;
  spec.seed = j.value("seed", uint64_t{1});
  if (j.contains("resolution")) {
    spec.width = j["resolution"][0].get<int>();
    spec.height = j["resolution"][1].get<int>();
  }
  spec.fov_deg = j.value("fov_deg", 60.0);
  if (j.contains("background")) spec.background = vec_from_json(j, "background");
  spec.n_init_points = j.value("n_init_points", 2000);
  require(j.contains("primitives") && j["primitives"].is_array(), ErrCode::SchemaViolation,
          "missing field 'primitives'");
  for (const auto& pj : j["primitives"]) {
    Primitive p;
    const std::string type = pj.value("type", "");
    if (pj.contains("albedo")) p.albedo = vec_from_json(pj, "albedo");
    if (pj.contains("albedo2")) p.albedo2 = vec_from_json(pj, "albedo2");
    p.checker_scale = pj.value("checker_scale", 0.0);
    if (type == "sphere") {
      p.kind = Primitive::Kind::Sphere;
      p.center = vec_from_json(pj, "center");
      p.radius = pj.value("radius", 1.0);
    } else if (type == "box") {
      p.kind = Primitive::Kind::Box;
      p.box_min = vec_from_json(pj, "min");
      p.box_max = vec_from_json(pj, "max");
    } else if (type == "rect") {
      p.kind = Primitive::Kind::Rect;
      p.center = vec_from_json(pj, "center");
      p.edge_u = vec_from_json(pj, "edge_u");
      p.edge_v = vec_from_json(pj, "edge_v");
    } else {
      fail(ErrCode::SchemaViolation, "primitive type must be sphere/box/rect, got '" + type + "'");
    }
    spec.primitives.push_back(p);
  }
  require(j.contains("rig"), ErrCode::SchemaViolation, "missing field 'rig'");
  const Json& rj = j["rig"];
  spec.rig.frames = rj.value("frames", 16);
  const std::string rt = rj.value("type", "orbit");
  if (rt == "orbit") {
    spec.rig.kind = RigSpec::Kind::Orbit;
    if (rj.contains("target")) spec.rig.target = vec_from_json(rj, "target");
    spec.rig.radius = rj.value("radius", 4.0);
    spec.rig.height = rj.value("height", 1.0);
    if (rj.contains("arc_deg")) {
      spec.rig.arc_start_deg = rj["arc_deg"][0].get<double>();
      spec.rig.arc_end_deg = rj["arc_deg"][1].get<double>();
    }
  } else if (rt == "dolly") {
    spec.rig.kind = RigSpec::Kind::Dolly;
    if (rj.contains("target")) spec.rig.target = vec_from_json(rj, "target");
    spec.rig.dolly_from = vec_from_json(rj, "from");
    spec.rig.dolly_to = vec_from_json(rj, "to");
  } else {
    fail(ErrCode::SchemaViolation, "rig type must be orbit or dolly");
  }
  spec.validate();
  return spec;
}

SyntheticSceneSpec load_scene_spec(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrCode::MalformedFile, "cannot open: " + path);
  Json j = Json::parse(f, nullptr, false);
  require(!j.is_discarded(), ErrCode::MalformedFile, "invalid JSON: " + path);
  return scene_spec_from_json(j);
}

void save_scene_spec(const std::string& path, const SyntheticSceneSpec& spec) {
  std::ofstream f(path);
  require(f.good(), ErrCode::MalformedFile, "cannot open for write: " + path);
  f << scene_spec_to_json(spec).dump(2) << "\n";
}

SynthScene::SynthScene(SyntheticSceneSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

FrameRGBD SynthScene::render_gt(const Camera& camera) const {
  FrameRGBD frame(camera.width, camera.height);
  const Vec3 o = camera.center();
  for (int y = 0; y < camera.height; ++y)
    for (int x = 0; x < camera.width; ++x) {
      const Vec3 d = camera.ray_dir(x, y);
      Hit best;
      best.t = 1e300;
      for (size_t i = 0; i < spec_.primitives.size(); ++i) {
        const auto& p = spec_.primitives[i];
        double t;
        bool hit = false;
        switch (p.kind) {
          case Primitive::Kind::Sphere: hit = intersect_sphere(o, d, p, t); break;
          case Primitive::Kind::Box: hit = intersect_box(o, d, p, t); break;
          case Primitive::Kind::Rect: hit = intersect_rect(o, d, p, t); break;
        }
        if (hit && t < best.t) {
          best.t = t;
          best.prim = static_cast<int>(i);
          best.point = o + t * d;
        }
      }
      if (best.prim >= 0) {
        const Vec3 c = shade(spec_.primitives[best.prim], best.point);
        for (int ch = 0; ch < 3; ++ch) frame.rgb.at(x, y, ch) = c[ch];
        frame.depth.at(x, y) = best.t;
        frame.transmittance.at(x, y) = 0.0;
        frame.valid.set(x, y, true);
      } else {
        for (int ch = 0; ch < 3; ++ch) frame.rgb.at(x, y, ch) = spec_.background[ch];
        frame.depth.at(x, y) = 0.0;
        frame.transmittance.at(x, y) = 1.0;
        frame.valid.set(x, y, false);
      }
    }
  return frame;
}

std::vector<ColoredPoint> SynthScene::sample_points(int n, uint64_t seed) const {
  auto rng = seeded_rng(seed, 0x706f696e);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> areas;
  double total_area = 0.0;
  for (const auto& p : spec_.primitives) {
    double a = 1.0;
    switch (p.kind) {
      case Primitive::Kind::Sphere: a = 4.0 * M_PI * p.radius * p.radius; break;
      case Primitive::Kind::Box: {
        const Vec3 e = p.box_max - p.box_min;
        a = 2.0 * (e.x() * e.y() + e.y() * e.z() + e.z() * e.x());
        break;
      }
      case Primitive::Kind::Rect: a = 4.0 * p.edge_u.cross(p.edge_v).norm(); break;
    }
    total_area += a;
    areas.push_back(total_area);
  }

  std::vector<ColoredPoint> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double pick = uni(rng) * total_area;
    size_t pi = 0;
    while (pi + 1 < areas.size() && areas[pi] < pick) ++pi;
    const auto& p = spec_.primitives[pi];
    Vec3 point;
    switch (p.kind) {
      case Primitive::Kind::Sphere: {
        Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
        if (dir.norm() < 1e-12) dir = Vec3::UnitZ();
        point = p.center + p.radius * dir.normalized();
        break;
      }
      case Primitive::Kind::Box: {
        // Pick a face weighted by area, then a uniform point on it.
        const Vec3 e = p.box_max - p.box_min;
        const double fa[3] = {e.y() * e.z(), e.z() * e.x(), e.x() * e.y()};
        const double fsum = 2.0 * (fa[0] + fa[1] + fa[2]);
        double fp = uni(rng) * fsum;
        int axis = 0;
        bool positive = false;
        for (int a2 = 0; a2 < 3; ++a2) {
          if (fp < fa[a2]) { axis = a2; positive = false; break; }
          fp -= fa[a2];
          if (fp < fa[a2]) { axis = a2; positive = true; break; }
          fp -= fa[a2];
        }
        point = p.box_min + Vec3(uni(rng) * e.x(), uni(rng) * e.y(), uni(rng) * e.z());
        point[axis] = positive ? p.box_max[axis] : p.box_min[axis];
        break;
      }
      case Primitive::Kind::Rect: {
        point = p.center + (2.0 * uni(rng) - 1.0) * p.edge_u + (2.0 * uni(rng) - 1.0) * p.edge_v;
        break;
      }
    }
    out.push_back({point, shade(p, point)});
  }
  return out;
}

std::vector<Camera> SynthScene::rig_cameras() const {
  Camera intr;
  intr.width = spec_.width;
  intr.height = spec_.height;
  intr.fx = 0.5 * spec_.width / std::tan(0.5 * spec_.fov_deg * M_PI / 180.0);
  intr.fy = intr.fx;
  intr.cx = spec_.width / 2.0;
  intr.cy = spec_.height / 2.0;

  std::vector<Camera> cams;
  const auto& rig = spec_.rig;
  for (int i = 0; i < rig.frames; ++i) {
    Vec3 eye;
    if (rig.kind == RigSpec::Kind::Orbit) {
      // Endpoint-exclusive so a full 360-degree arc has no duplicate pose.
      const double t = static_cast<double>(i) / rig.frames;
      const double ang = (rig.arc_start_deg + t * (rig.arc_end_deg - rig.arc_start_deg)) * M_PI / 180.0;
      eye = rig.target + Vec3(rig.radius * std::cos(ang), rig.height, rig.radius * std::sin(ang));
    } else {
      const double t = rig.frames > 1 ? static_cast<double>(i) / (rig.frames - 1) : 0.0;
      eye = rig.dolly_from + t * (rig.dolly_to - rig.dolly_from);
    }
    cams.push_back(look_at(eye, rig.target, Vec3::UnitY(), intr));
  }
  return cams;
}

}  // namespace gf
