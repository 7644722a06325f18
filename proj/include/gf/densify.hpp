#pragma once

#include <random>

#include "gf/render.hpp"

namespace gf {

struct DensifyConfig {
  double grad_threshold = 2e-4;       // on mean view-space gradient magnitude
  int min_visibility = 3;
  int interval = 100;
  double prune_opacity = 0.005;
  double split_scale_threshold = 0.0; // world units; <= 0 resolved by the trainer
  double split_factor = 1.6;
};

struct ExpansionConfig {
  double tau_T = 0.5;   // on cumulative opacity (1 - transmittance)
  double tau_D = 0.0;   // world units; <= 0 resolved by the trainer
};

/// Topology edit descriptor: surviving disk i was old disk kept[i]; `appended`
/// fresh disks follow at the end. The trainer mirrors optimizer state with it.
struct CloudEdit {
  std::vector<uint32_t> kept;
  size_t appended = 0;
};

/// Adds the step's view-space gradient magnitudes, world gradient directions
/// and visibility flags into the cloud's running accumulators. Accumulators
/// are never reset here.
void accumulate_stats(SplatCloud& cloud, const BackwardResult& bw);

/// Indices with mean accumulated gradient above the threshold AND visibility
/// count at or above the minimum.
std::vector<uint32_t> select_candidates(const SplatCloud& cloud, const DensifyConfig& cfg);

/// Clones small candidates (copy offset along the accumulated gradient
/// direction by half the max scale) and splits large ones into two children
/// with scales reduced by split_factor. Affected accumulators reset to zero.
CloudEdit densify_apply(SplatCloud& cloud, const std::vector<uint32_t>& candidates,
                        const DensifyConfig& cfg, std::mt19937_64& rng);

/// Removes disks with opacity below the threshold, preserving order.
CloudEdit prune(SplatCloud& cloud, const DensifyConfig& cfg);

/// Pixels whose cumulative opacity (1 - transmittance) is below tau_T, or
/// whose rendered depth disagrees with the aligned generated depth by more
/// than tau_D. Pixels without valid rendered depth are unreliable through the
/// coverage predicate.
Mask detect_unreliable(const FrameRGBD& frame_rendered, const Image& depth_generated_aligned,
                       const ExpansionConfig& cfg);
Mask detect_low_coverage(const FrameRGBD& frame_rendered, const ExpansionConfig& cfg);
Mask detect_depth_mismatch(const FrameRGBD& frame_rendered, const Image& depth_generated_aligned,
                           const ExpansionConfig& cfg);

struct BackprojectConfig {
  int stride = 4;          // insert every stride-th masked pixel in x and y
  double opacity = 0.1;
};

/// Unprojects masked pixels of the restored frame into new disks facing the
/// camera, colored from the restored rgb. Throws INVALID_DEPTH when a masked
/// pixel lacks valid positive depth.
CloudEdit backproject_insert(SplatCloud& cloud, const FrameRGBD& frame_restored,
                             const Camera& camera, const Mask& mask,
                             const BackprojectConfig& cfg = {});

}  // namespace gf
