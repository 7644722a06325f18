#include "gf/trajectory.hpp"

#include <Eigen/Geometry>
#include <cmath>

namespace gf {

Camera interpolate_pose(const Camera& a, const Camera& b, double t) {
  require(a.same_intrinsics(b), ErrCode::IncompatibleIntrinsics,
          "interpolated cameras must share intrinsics");
  Camera out = a;
  Eigen::Quaterniond qa(a.rotation), qb(b.rotation);
  const Eigen::Quaterniond q = qa.slerp(t, qb);
  out.rotation = q.toRotationMatrix();
  const Vec3 center = (1.0 - t) * a.center() + t * b.center();
  out.translation = -out.rotation * center;
  return out;
}

namespace {

struct Rig {
  Vec3 mean_center = Vec3::Zero();
  Vec3 fwd = Vec3::UnitZ();
  Vec3 up = Vec3::UnitY();
  Vec3 right = Vec3::UnitX();
  double spread = 0.0;
  Vec3 look_at_point = Vec3::Zero();
};

Rig analyze(const std::vector<Camera>& cams) {
  Rig rig;
  for (const auto& c : cams) rig.mean_center += c.center();
  rig.mean_center /= static_cast<double>(cams.size());
  Vec3 fwd = Vec3::Zero(), up = Vec3::Zero();
  double spread = 0.0;
  for (const auto& c : cams) {
    fwd += c.forward();
    up += c.up();
    spread += (c.center() - rig.mean_center).norm();
  }
  rig.spread = spread / static_cast<double>(cams.size());
  rig.fwd = fwd.norm() > 1e-12 ? Vec3(fwd.normalized()) : cams.front().forward();
  Vec3 u = up - up.dot(rig.fwd) * rig.fwd;
  rig.up = u.norm() > 1e-12 ? Vec3(u.normalized()) : cams.front().up();
  rig.right = rig.fwd.cross(rig.up).normalized();
  // Focus distance proxy: the rig has no scene depth available, so use the
  // camera spread (floored so a single camera still gets a finite target).
  const double focus = std::max(2.0 * rig.spread, 1.0);
  rig.look_at_point = rig.mean_center + rig.fwd * focus;
  return rig;
}

}  // namespace

Trajectory spiral_path(const std::vector<Camera>& cameras, int n, double radius_scale,
                       double vertical_scale) {
  require(!cameras.empty(), ErrCode::EmptyPoints, "spiral_path needs >= 1 camera");
  const Rig rig = analyze(cameras);
  const double radius = radius_scale * rig.spread;
  Trajectory traj;
  traj.fragment_length = n;
  for (int i = 0; i < n; ++i) {
    const double phi = 2.0 * M_PI * static_cast<double>(i) / std::max(n, 1);
    Vec3 eye = rig.mean_center + radius * (std::cos(phi) * rig.right + std::sin(phi) * rig.up);
    eye += vertical_scale * rig.spread * std::sin(phi) * rig.up;
    if (radius == 0.0 && vertical_scale == 0.0) {
      // Degenerate spiral: reproduce the mean pose exactly.
      traj.cameras.push_back(look_at(rig.mean_center, rig.look_at_point, rig.up, cameras.front()));
    } else {
      traj.cameras.push_back(look_at(eye, rig.look_at_point, rig.up, cameras.front()));
    }
  }
  return traj;
}

std::vector<Trajectory> sample_fusion_trajectories(const std::vector<Camera>& inputs,
                                                   int cycle_index, uint64_t seed,
                                                   int fragment_length, int n_fragments) {
  require(inputs.size() >= 2, ErrCode::EmptyPoints,
          "fusion trajectory sampling needs >= 2 input cameras");
  std::vector<Trajectory> out;
  auto rng = seeded_rng(seed, 0x74726a00ull + static_cast<uint64_t>(cycle_index));
  for (int f = 0; f < n_fragments; ++f) {
    const int kind = (cycle_index + f) % 2;
    if (kind == 0) {
      std::uniform_int_distribution<size_t> pick(0, inputs.size() - 2);
      const size_t i = pick(rng);
      Trajectory traj;
      traj.fragment_length = fragment_length;
      for (int j = 0; j < fragment_length; ++j) {
        const double t = fragment_length > 1
                             ? static_cast<double>(j) / static_cast<double>(fragment_length - 1)
                             : 0.0;
        traj.cameras.push_back(interpolate_pose(inputs[i], inputs[i + 1], t));
      }
      out.push_back(std::move(traj));
    } else {
      std::uniform_real_distribution<double> rad(0.8, 1.4);
      out.push_back(spiral_path(inputs, fragment_length, rad(rng), 0.3));
    }
  }
  return out;
}

}  // namespace gf
