#pragma once

#include <nlohmann/json.hpp>

#include "gf/camera.hpp"

namespace gf {

using Json = nlohmann::json;

/// Schema: {fx, fy, cx, cy, width, height, R: [9 row-major], t: [3]}.
/// Round trips exactly (doubles serialize with shortest-roundtrip precision).
Json camera_to_json(const Camera& cam);

/// Throws SCHEMA_VIOLATION on missing/ill-typed fields and BAD_ROTATION when
/// R is not orthonormal with det +1 within 1e-6.
Camera camera_from_json(const Json& j);

void write_camera_list(const std::string& path, const std::vector<Camera>& cams);
std::vector<Camera> read_camera_list(const std::string& path);

}  // namespace gf
