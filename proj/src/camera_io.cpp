#include "gf/camera_io.hpp"

#include <fstream>

namespace gf {

Json camera_to_json(const Camera& cam) {
  Json j;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["width"] = cam.width;
  j["height"] = cam.height;
  Json R = Json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) R.push_back(cam.rotation(r, c));
  j["R"] = R;
  j["t"] = Json::array({cam.translation.x(), cam.translation.y(), cam.translation.z()});
  return j;
}

namespace {

double field_number(const Json& j, const char* name) {
  if (!j.contains(name)) fail(ErrCode::SchemaViolation, std::string("missing field '") + name + "'");
  if (!j[name].is_number()) fail(ErrCode::SchemaViolation, std::string("field '") + name + "' must be a number");
  return j[name].get<double>();
}

}  // namespace

Camera camera_from_json(const Json& j) {
  Camera cam;
  cam.fx = field_number(j, "fx");
  cam.fy = field_number(j, "fy");
  cam.cx = field_number(j, "cx");
  cam.cy = field_number(j, "cy");
  cam.width = static_cast<int>(field_number(j, "width"));
  cam.height = static_cast<int>(field_number(j, "height"));
  if (!j.contains("R") || !j["R"].is_array() || j["R"].size() != 9)
    fail(ErrCode::SchemaViolation, "field 'R' must be an array of 9 numbers");
  if (!j.contains("t") || !j["t"].is_array() || j["t"].size() != 3)
    fail(ErrCode::SchemaViolation, "field 't' must be an array of 3 numbers");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) cam.rotation(r, c) = j["R"][static_cast<size_t>(3 * r + c)].get<double>();
  for (int i = 0; i < 3; ++i) cam.translation[i] = j["t"][static_cast<size_t>(i)].get<double>();
  require(cam.width > 0 && cam.height > 0, ErrCode::SchemaViolation, "image size must be positive");
  require(cam.rotation_error() <= 1e-6, ErrCode::BadRotation,
          "R is not orthonormal with det +1 (tolerance 1e-6)");
  return cam;
}

void write_camera_list(const std::string& path, const std::vector<Camera>& cams) {
  Json arr = Json::array();
  for (const auto& c : cams) arr.push_back(camera_to_json(c));
  std::ofstream f(path);
  require(f.good(), ErrCode::MalformedFile, "cannot open for write: " + path);
  f << arr.dump(2) << "\n";
}

std::vector<Camera> read_camera_list(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrCode::MalformedFile, "cannot open: " + path);
  Json arr = Json::parse(f, nullptr, false);
  require(!arr.is_discarded() && arr.is_array(), ErrCode::MalformedFile,
          "camera list must be a JSON array: " + path);
  std::vector<Camera> cams;
  for (const auto& j : arr) cams.push_back(camera_from_json(j));
  return cams;
}

}  // namespace gf
