#pragma once

#include <Eigen/Dense>

#include "gf/common.hpp"

namespace gf {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole camera. Convention: x_cam = R * x_world + t, camera looks along +z,
/// x right, y down. Pixel centers sit on integer coordinates.
struct Camera {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
  Mat3 rotation = Mat3::Identity();   // world-to-camera
  Vec3 translation = Vec3::Zero();

  Vec3 center() const { return -rotation.transpose() * translation; }
  Vec3 forward() const { return rotation.row(2).transpose(); }  // +z axis in world
  Vec3 right() const { return rotation.row(0).transpose(); }
  Vec3 up() const { return -rotation.row(1).transpose(); }      // image y points down

  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
  Vec3 to_world(const Vec3& cam) const { return rotation.transpose() * (cam - translation); }

  /// World-space ray direction through pixel (px, py); z component in camera
  /// space is 1, so the ray parameter equals camera depth.
  Vec3 ray_dir(double px, double py) const {
    Vec3 d_cam((px - cx) / fx, (py - cy) / fy, 1.0);
    return rotation.transpose() * d_cam;
  }

  /// Projects a world point; returns (pixel x, pixel y, camera z).
  Vec3 project(const Vec3& world) const {
    Vec3 c = to_camera(world);
    return Vec3(fx * c.x() / c.z() + cx, fy * c.y() / c.z() + cy, c.z());
  }

  bool same_intrinsics(const Camera& o, double tol = 1e-12) const {
    return std::abs(fx - o.fx) <= tol && std::abs(fy - o.fy) <= tol &&
           std::abs(cx - o.cx) <= tol && std::abs(cy - o.cy) <= tol && width == o.width &&
           height == o.height;
  }

  double rotation_error() const {
    double ortho = (rotation * rotation.transpose() - Mat3::Identity()).norm();
    double det = std::abs(rotation.determinant() - 1.0);
    return std::max(ortho, det);
  }

  void validate(double tol = 1e-9) const {
    require(width > 0 && height > 0, ErrCode::SchemaViolation, "camera image size must be positive");
    require(rotation_error() <= tol, ErrCode::BadRotation, "rotation not orthonormal with det +1");
  }
};

/// Builds a world-to-camera pose at `eye` looking at `target`, with `up_hint`
/// fixing the roll. Exact inverse of decomposing a camera into
/// (center, forward, up).
inline Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up_hint,
                      const Camera& intrinsics) {
  Camera cam = intrinsics;
  Vec3 fwd = (target - eye).normalized();
  Vec3 right = fwd.cross(up_hint).normalized();
  Vec3 down = fwd.cross(right);  // camera y points down
  Mat3 R;
  R.row(0) = right.transpose();
  R.row(1) = down.transpose();
  R.row(2) = fwd.transpose();
  cam.rotation = R;
  cam.translation = -R * eye;
  return cam;
}

}  // namespace gf
