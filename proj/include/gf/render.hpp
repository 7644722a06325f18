#pragma once

#include <optional>

#include "gf/image.hpp"
#include "gf/splat.hpp"

namespace gf {

struct RenderOptions {
  double near_plane = 0.01;
  double gaussian_cutoff = 0.011108996538242306;  // exp(-4.5), the 3-sigma cutoff
  double min_transmittance = 1e-4;                // early compositing termination
  double min_coverage = 1e-6;                     // 1-T below this -> depth invalid
  bool parallel = true;                           // false selects the serial reference path
};

/// Conservative screen footprint of a projected disk.
struct ScreenFootprint {
  Vec2 center_px = Vec2::Zero();
  double mean_depth = 0.0;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive pixel bounds, clamped to image
};

/// nullopt means CULLED (behind the near plane or off screen).
std::optional<ScreenFootprint> project_splat(const GaussianDisk& disk, const Camera& camera,
                                             const RenderOptions& opts = {});

struct SplatHit {
  double weight = 0.0;  // Gaussian weight g in [0,1]
  double depth = 0.0;   // camera-space z of the ray-plane intersection
};

/// nullopt means NO_HIT (parallel ray, intersection behind the camera, or
/// weight below the cutoff).
std::optional<SplatHit> eval_splat_at_pixel(const GaussianDisk& disk, const Camera& camera,
                                            double px, double py,
                                            const RenderOptions& opts = {});

/// Forward rasterization cache consumed by render_backward. Stores, per pixel,
/// the depth-sorted indices of the disks actually composited (truncated at the
/// early-termination point).
struct RenderCache {
  int width = 0, height = 0;
  uint64_t cloud_revision = 0;
  size_t disk_count = 0;
  Vec3 background = Vec3::Zero();
  std::vector<uint32_t> offsets;    // (H*W + 1) prefix offsets into hit_disk
  std::vector<uint32_t> hit_disk;   // composited disk ids, front-to-back
  Image depth_numerator;            // HxW, sum_i w_i d_i before normalization
  bool valid_for(const SplatCloud& cloud, const Camera& camera) const {
    return cloud_revision == cloud.revision && disk_count == cloud.size() &&
           width == camera.width && height == camera.height;
  }
};

FrameRGBD render(const SplatCloud& cloud, const Camera& camera, const Vec3& background,
                 const RenderOptions& opts = {}, RenderCache* cache = nullptr);

/// Upstream per-pixel loss gradients. Any image may be empty (treated as zero).
struct PixelGrads {
  Image d_rgb;            // HxWx3
  Image d_depth;          // HxW
  Image d_transmittance;  // HxW
};

/// Per-disk parameter gradients. d_rotation holds the loss gradient with
/// respect to a small rotation of the tangent frame about (normal, tangent_u,
/// tangent_v), evaluated at zero rotation.
struct BackwardResult {
  std::vector<Vec3> d_position;
  std::vector<double> d_opacity;
  std::vector<double> d_log_scale_u;
  std::vector<double> d_log_scale_v;
  std::vector<Vec3> d_rotation;
  std::vector<std::vector<Vec3>> d_sh;
  std::vector<double> view_grad_mag;  // |screen-space gradient of the projected center|
  std::vector<uint8_t> contributed;   // disk touched >= 1 pixel this pass

  void init(const SplatCloud& cloud);
  void axpy(double a, const BackwardResult& other);  // this += a * other
};

/// Analytic gradients for the same (cloud, camera, background) the cache was
/// produced with. Throws STALE_FORWARD if the cache does not match.
BackwardResult render_backward(const SplatCloud& cloud, const Camera& camera,
                               const RenderCache& cache, const PixelGrads& upstream,
                               const RenderOptions& opts = {});

/// Applies a small rotation (angles about normal, tangent_u, tangent_v) to the
/// disk's tangent frame and re-orthonormalizes. The generators match
/// BackwardResult::d_rotation.
void rotate_tangent_frame(GaussianDisk& disk, const Vec3& angles);

/// View-dependent disk color: sh[0] plus higher real-SH bands evaluated at the
/// unit direction from the camera center to the disk, clamped at zero.
Vec3 eval_sh_color(const GaussianDisk& disk, const Vec3& cam_center);

}  // namespace gf
