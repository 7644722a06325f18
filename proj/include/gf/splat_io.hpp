#pragma once

#include <string>

#include "gf/splat.hpp"

namespace gf {

/// PLY vertex list with properties x,y,z,opacity,tu_x..tu_z,tv_x..tv_z,
/// log_su,log_sv,sh_0_r,sh_0_g,sh_0_b (plus sh_<i>_{r,g,b} for higher bands).
/// Binary files are little-endian float32.
void write_splat_ply(const std::string& path, const SplatCloud& cloud, bool binary = true);
SplatCloud read_splat_ply(const std::string& path);

/// Plain colored point clouds (x,y,z + red,green,blue uchar), used for
/// calibration/init points.
struct ColoredPoint {
  Vec3 position;
  Vec3 color;  // [0,1]
};
void write_points_ply(const std::string& path, const std::vector<ColoredPoint>& points);
std::vector<ColoredPoint> read_points_ply(const std::string& path);

}  // namespace gf
