#pragma once

#include <cmath>
#include <vector>

#include "gf/camera.hpp"

namespace gf {

constexpr int kMaxShDegree = 2;

inline int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// A 2D oriented planar Gaussian disk. The disk spans the plane through
/// `position` with orthonormal tangents; the weight of a point at tangent
/// offsets (u, v) is exp(-0.5 (u^2/su^2 + v^2/sv^2)).
/// sh[0] is the base linear-light RGB; higher bands add view dependence.
struct GaussianDisk {
  Vec3 position = Vec3::Zero();
  double opacity = 0.1;  // kept in [0,1] by the optimizer
  Vec3 tangent_u = Vec3::UnitX();
  Vec3 tangent_v = Vec3::UnitY();
  double log_scale_u = 0.0;
  double log_scale_v = 0.0;
  std::vector<Vec3> sh = {Vec3::Zero()};

  double scale_u() const { return std::exp(log_scale_u); }
  double scale_v() const { return std::exp(log_scale_v); }
  Vec3 normal() const { return tangent_u.cross(tangent_v); }
  int sh_degree() const {
    int n = static_cast<int>(sh.size());
    if (n >= 9) return 2;
    if (n >= 4) return 1;
    return 0;
  }

  /// Restores |tu| = |tv| = 1 and tu . tv = 0 (Gram-Schmidt, tu wins).
  void orthonormalize_tangents() {
    tangent_u.normalize();
    tangent_v -= tangent_v.dot(tangent_u) * tangent_u;
    tangent_v.normalize();
  }
};

/// The optimizable scene: disks plus per-disk training statistics used by
/// sparsity-aware densification. The accumulators are reset only through
/// reset_stats() or by topology edits on the affected disks, never on a
/// fixed cadence.
struct SplatCloud {
  std::vector<GaussianDisk> disks;
  std::vector<double> grad_accum;        // running sum of view-space grad magnitude
  std::vector<Vec3> grad_dir_accum;      // running sum of world-space position grads
  std::vector<int> visibility_count;     // steps in which the disk hit >= 1 pixel
  uint64_t revision = 0;

  size_t size() const { return disks.size(); }
  bool empty() const { return disks.empty(); }

  void add_disk(const GaussianDisk& d) {
    disks.push_back(d);
    grad_accum.push_back(0.0);
    grad_dir_accum.push_back(Vec3::Zero());
    visibility_count.push_back(0);
    ++revision;
  }

  void reset_stats() {
    std::fill(grad_accum.begin(), grad_accum.end(), 0.0);
    std::fill(grad_dir_accum.begin(), grad_dir_accum.end(), Vec3::Zero().eval());
    std::fill(visibility_count.begin(), visibility_count.end(), 0);
  }

  void reset_stats_at(size_t i) {
    grad_accum[i] = 0.0;
    grad_dir_accum[i] = Vec3::Zero();
    visibility_count[i] = 0;
  }

  bool stats_consistent() const {
    return grad_accum.size() == disks.size() && grad_dir_accum.size() == disks.size() &&
           visibility_count.size() == disks.size();
  }

  void touch() { ++revision; }
};

}  // namespace gf
