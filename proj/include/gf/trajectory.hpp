#pragma once

#include <vector>

#include "gf/camera.hpp"

namespace gf {

struct Trajectory {
  std::vector<Camera> cameras;
  int fragment_length = 16;
};

/// Pose interpolation: slerp on rotation, lerp on the camera center,
/// intrinsics copied. Throws INCOMPATIBLE_INTRINSICS when they differ.
Camera interpolate_pose(const Camera& a, const Camera& b, double t);

/// Orbit around the mean camera center in the mean camera plane, radius
/// radius_scale times the input-center spread, all poses looking at the mean
/// look-at point. vertical_scale adds one sine period of out-of-plane motion.
Trajectory spiral_path(const std::vector<Camera>& cameras, int n, double radius_scale,
                       double vertical_scale = 0.0);

/// One fragment per cycle, alternating interpolation between a seeded random
/// adjacent input pair (even cycles) and a spiral over all inputs (odd
/// cycles).
std::vector<Trajectory> sample_fusion_trajectories(const std::vector<Camera>& inputs,
                                                   int cycle_index, uint64_t seed,
                                                   int fragment_length = 16, int n_fragments = 1);

}  // namespace gf
