#pragma once

#include <functional>
#include <optional>

#include "gf/dataset.hpp"
#include "gf/densify.hpp"
#include "gf/losses.hpp"
#include "gf/oracle.hpp"
#include "gf/trajectory.hpp"

namespace gf {

struct FusionConfig {
  int warmup_iters = 1000;
  int cycle_interval = 1000;
  int total_iters = 7000;
  ScheduleConfig schedule{-1, -1};  // negative = resolved to warmup/total
  LossWeights weights;
  DensifyConfig densify;
  ExpansionConfig expansion;
  BackprojectConfig backproject;
  TotalLossOptions loss_opts;
  double lr_position = 1.6e-4;  // multiplied by scene extent at setup
  double lr_opacity = 5e-2;
  double lr_scale = 5e-3;
  double lr_rotation = 1e-3;
  double lr_sh = 2.5e-3;
  double gen_weight_scale = 1.0;  // 0 disables the generation pathway
  double max_unreliable_fraction = 0.6;
  int fragment_length = 16;
  uint64_t seed = 0;
  Vec3 background = Vec3::Zero();
  double near_plane = 0.01;
  int checkpoint_interval = 1000;
  bool parallel = true;

  void validate() const;
  ScheduleConfig resolved_schedule() const {
    ScheduleConfig s = schedule;
    if (s.k_start < 0) s.k_start = warmup_iters;
    if (s.k_end < 0) s.k_end = total_iters;
    return s;
  }
};

struct SupervisionView {
  Camera camera;
  FrameRGBD frame;
  std::optional<Mask> keep;
  int cycle = -1;  // producing fusion cycle; -1 for input views
};

/// Input views are never removed; generated views are appended per cycle.
struct SupervisionSet {
  std::vector<SupervisionView> inputs;
  std::vector<SupervisionView> generated;
};

/// Filters points to those projecting into at least one training view (inside
/// its keep-mask when present, in front of the near plane) and makes one disk
/// per survivor: opacity 0.1, isotropic scale from the mean distance to the 3
/// nearest neighbors, tangents perpendicular to the direction toward the
/// nearest training camera.
SplatCloud init_from_points(const std::vector<ColoredPoint>& points,
                            const std::vector<SupervisionView>& views, double near_plane = 0.01);

struct CycleLogEntry {
  int iteration = 0;
  size_t cloud_before = 0;
  size_t cloud_after = 0;
  size_t views_added = 0;
  size_t disks_inserted = 0;
  bool oracle_ok = false;
  double eval_psnr = 0.0;
  double eval_ssim = 0.0;
};

struct TrainingLog {
  std::vector<CycleLogEntry> cycles;
  double final_psnr = 0.0;
  double final_ssim = 0.0;
  double final_loss = 0.0;
  size_t final_cloud_size = 0;
  int oracle_calls = 0;
  bool expansion_fired = false;
};

class Trainer {
 public:
  Trainer(SplatCloud cloud, const FusionConfig& config, double scene_extent);
  ~Trainer();

  /// One optimizer step against one supervision item. Generated items with a
  /// zero effective weight are complete no-ops.
  double train_step(const SupervisionView& item, int k);

  /// Renders one fragment along a fresh trajectory, restores it through the
  /// oracle, aligns depths, appends the restored views to the supervision set
  /// and expands content where the renderings were unreliable. Oracle failures
  /// skip the cycle and return false.
  bool fusion_cycle(SupervisionSet& supervision, const std::vector<Camera>& input_cameras,
                    RestorationOracle& oracle, int k);

  /// Full loop: warm-up on input views, then 2:1 input:generated round-robin
  /// with fusion cycles every cycle_interval iterations.
  TrainingLog run_training(SupervisionSet& supervision,
                           const std::vector<Camera>& eval_cameras,
                           const std::vector<FrameRGBD>& eval_frames,
                           RestorationOracle* oracle, const std::string& checkpoint_dir = "");

  const SplatCloud& cloud() const { return cloud_; }
  SplatCloud& cloud() { return cloud_; }
  const FusionConfig& config() const { return config_; }
  double scene_extent() const { return extent_; }
  RenderOptions render_options() const;
  void save_checkpoint(const std::string& dir, int iteration,
                       const SupervisionSet& supervision) const;

  /// Computed from camera centers (bounding-sphere diameter, floored at 1).
  static double compute_scene_extent(const std::vector<Camera>& cameras);

 private:
  struct Adam;
  void adam_step(const BackwardResult& grads);
  void remap_state(const CloudEdit& edit);
  void maybe_densify(int k);

  SplatCloud cloud_;
  FusionConfig config_;
  double extent_ = 1.0;
  std::unique_ptr<Adam> adam_;
  std::mt19937_64 densify_rng_;
  int adam_steps_ = 0;
  int cycle_counter_ = 0;
};

nlohmann::json fusion_config_to_json(const FusionConfig& cfg);
FusionConfig fusion_config_from_json(const nlohmann::json& j, FusionConfig base = {});
FusionConfig load_fusion_config(const std::string& path, FusionConfig base = {});

}  // namespace gf
