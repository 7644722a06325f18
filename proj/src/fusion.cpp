#include "gf/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gf/camera_io.hpp"
#include "gf/splat_io.hpp"

namespace gf {

namespace fs = std::filesystem;
using Json = nlohmann::json;

void FusionConfig::validate() const {
  const ScheduleConfig s = resolved_schedule();
  require(cycle_interval >= 1, ErrCode::SchemaViolation, "cycle_interval must be >= 1");
  require(warmup_iters >= 0 && warmup_iters <= s.k_start && s.k_start < s.k_end &&
              s.k_end <= total_iters,
          ErrCode::SchemaViolation, "need warmup <= K_start < K_end <= total_iters");
}

SplatCloud init_from_points(const std::vector<ColoredPoint>& points,
                            const std::vector<SupervisionView>& views, double near_plane) {
  require(!points.empty(), ErrCode::EmptyPoints, "init_from_points needs a nonempty point set");
  require(!views.empty(), ErrCode::EmptyPoints, "init_from_points needs >= 1 training view");

  std::vector<const ColoredPoint*> kept;
  for (const auto& pt : points) {
    bool visible = false;
    for (const auto& v : views) {
      const Vec3 proj = v.camera.project(pt.position);
      if (proj.z() <= near_plane) continue;
      const int px = static_cast<int>(std::lround(proj.x()));
      const int py = static_cast<int>(std::lround(proj.y()));
      if (px < 0 || px >= v.camera.width || py < 0 || py >= v.camera.height) continue;
      if (v.keep && !v.keep->at(px, py)) continue;
      visible = true;
      break;
    }
    if (visible) kept.push_back(&pt);
  }
  require(!kept.empty(), ErrCode::EmptyPoints, "no init point is visible from the training views");

  // Mean distance to the (up to) 3 nearest neighbors, brute force.
  const size_t n = kept.size();
  std::vector<double> knn_scale(n, 0.1);
  if (n >= 2) {
    std::vector<double> dists;
    for (size_t i = 0; i < n; ++i) {
      dists.clear();
      for (size_t j = 0; j < n; ++j)
        if (j != i) dists.push_back((kept[i]->position - kept[j]->position).norm());
      const size_t k = std::min<size_t>(3, dists.size());
      std::partial_sort(dists.begin(), dists.begin() + k, dists.end());
      double mean = 0.0;
      for (size_t j = 0; j < k; ++j) mean += dists[j];
      knn_scale[i] = std::max(mean / static_cast<double>(k), 1e-9);
    }
  }

  SplatCloud cloud;
  for (size_t i = 0; i < n; ++i) {
    GaussianDisk d;
    d.position = kept[i]->position;
    d.opacity = 0.1;
    d.sh = {kept[i]->color};
    d.log_scale_u = std::log(knn_scale[i]);
    d.log_scale_v = d.log_scale_u;
    double best = 1e300;
    Vec3 to_cam = Vec3::UnitZ();
    for (const auto& v : views) {
      const double dist = (v.camera.center() - d.position).norm();
      if (dist < best) {
        best = dist;
        to_cam = v.camera.center() - d.position;
      }
    }
    const Vec3 nrm = to_cam.norm() > 1e-12 ? Vec3(to_cam.normalized()) : Vec3::UnitZ();
    Vec3 ref = std::abs(nrm.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    d.tangent_u = (ref - ref.dot(nrm) * nrm).normalized();
    d.tangent_v = nrm.cross(d.tangent_u);
    cloud.add_disk(d);
  }
  return cloud;
}

// ---------------------------------------------------------------------------

struct Trainer::Adam {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  std::vector<Vec3> pos_m, pos_v;
  std::vector<double> op_m, op_v, lsu_m, lsu_v, lsv_m, lsv_v;
  std::vector<Vec3> rot_m, rot_v;
  std::vector<std::vector<Vec3>> sh_m, sh_v;

  void init(const SplatCloud& cloud) {
    const size_t n = cloud.size();
    pos_m.assign(n, Vec3::Zero());
    pos_v.assign(n, Vec3::Zero());
    op_m.assign(n, 0.0);
    op_v.assign(n, 0.0);
    lsu_m.assign(n, 0.0);
    lsu_v.assign(n, 0.0);
    lsv_m.assign(n, 0.0);
    lsv_v.assign(n, 0.0);
    rot_m.assign(n, Vec3::Zero());
    rot_v.assign(n, Vec3::Zero());
    sh_m.resize(n);
    sh_v.resize(n);
    for (size_t i = 0; i < n; ++i) {
      sh_m[i].assign(cloud.disks[i].sh.size(), Vec3::Zero());
      sh_v[i].assign(cloud.disks[i].sh.size(), Vec3::Zero());
    }
  }

  template <typename T>
  static void remap_vec(std::vector<T>& v, const CloudEdit& edit, const T& zero) {
    std::vector<T> out;
    out.reserve(edit.kept.size() + edit.appended);
    for (uint32_t old : edit.kept) out.push_back(v[old]);
    for (size_t i = 0; i < edit.appended; ++i) out.push_back(zero);
    v = std::move(out);
  }

  void remap(const CloudEdit& edit, const SplatCloud& cloud) {
    remap_vec(pos_m, edit, Vec3::Zero().eval());
    remap_vec(pos_v, edit, Vec3::Zero().eval());
    remap_vec(op_m, edit, 0.0);
    remap_vec(op_v, edit, 0.0);
    remap_vec(lsu_m, edit, 0.0);
    remap_vec(lsu_v, edit, 0.0);
    remap_vec(lsv_m, edit, 0.0);
    remap_vec(lsv_v, edit, 0.0);
    remap_vec(rot_m, edit, Vec3::Zero().eval());
    remap_vec(rot_v, edit, Vec3::Zero().eval());
    remap_vec(sh_m, edit, std::vector<Vec3>{});
    remap_vec(sh_v, edit, std::vector<Vec3>{});
    for (size_t i = 0; i < cloud.size(); ++i) {
      sh_m[i].resize(cloud.disks[i].sh.size(), Vec3::Zero());
      sh_v[i].resize(cloud.disks[i].sh.size(), Vec3::Zero());
    }
  }
};

double Trainer::compute_scene_extent(const std::vector<Camera>& cameras) {
  if (cameras.empty()) return 1.0;
  Vec3 mean = Vec3::Zero();
  for (const auto& c : cameras) mean += c.center();
  mean /= static_cast<double>(cameras.size());
  double radius = 0.0;
  for (const auto& c : cameras) radius = std::max(radius, (c.center() - mean).norm());
  return std::max(2.0 * radius, 1.0);
}

Trainer::~Trainer() = default;

Trainer::Trainer(SplatCloud cloud, const FusionConfig& config, double scene_extent)
    : cloud_(std::move(cloud)), config_(config), extent_(scene_extent) {
  config_.validate();
  if (config_.densify.split_scale_threshold <= 0.0)
    config_.densify.split_scale_threshold = 0.01 * extent_;
  if (config_.expansion.tau_D <= 0.0) config_.expansion.tau_D = 0.1 * extent_;
  adam_ = std::make_unique<Adam>();
  adam_->init(cloud_);
  densify_rng_ = seeded_rng(config_.seed, 0x64656e73);
}

RenderOptions Trainer::render_options() const {
  RenderOptions opts;
  opts.near_plane = config_.near_plane;
  opts.parallel = config_.parallel;
  return opts;
}

void Trainer::adam_step(const BackwardResult& g) {
  ++adam_steps_;
  Adam& a = *adam_;
  const double bc1 = 1.0 - std::pow(Adam::kBeta1, adam_steps_);
  const double bc2 = 1.0 - std::pow(Adam::kBeta2, adam_steps_);
  const double lr_pos = config_.lr_position * extent_;

  auto upd = [&](double& m, double& v, double grad, double lr, double& param) {
    m = Adam::kBeta1 * m + (1.0 - Adam::kBeta1) * grad;
    v = Adam::kBeta2 * v + (1.0 - Adam::kBeta2) * grad * grad;
    param -= lr * (m / bc1) / (std::sqrt(v / bc2) + Adam::kEps);
  };
  auto upd3 = [&](Vec3& m, Vec3& v, const Vec3& grad, double lr, Vec3& param) {
    m = Adam::kBeta1 * m + (1.0 - Adam::kBeta1) * grad;
    v = Adam::kBeta2 * v + (1.0 - Adam::kBeta2) * grad.cwiseProduct(grad);
    for (int c = 0; c < 3; ++c) param[c] -= lr * (m[c] / bc1) / (std::sqrt(v[c] / bc2) + Adam::kEps);
  };

  for (size_t i = 0; i < cloud_.size(); ++i) {
    GaussianDisk& d = cloud_.disks[i];
    upd3(a.pos_m[i], a.pos_v[i], g.d_position[i], lr_pos, d.position);
    upd(a.op_m[i], a.op_v[i], g.d_opacity[i], config_.lr_opacity, d.opacity);
    upd(a.lsu_m[i], a.lsu_v[i], g.d_log_scale_u[i], config_.lr_scale, d.log_scale_u);
    upd(a.lsv_m[i], a.lsv_v[i], g.d_log_scale_v[i], config_.lr_scale, d.log_scale_v);
    d.opacity = std::clamp(d.opacity, 0.0, 1.0);

    Vec3 rot_delta = Vec3::Zero();
    a.rot_m[i] = Adam::kBeta1 * a.rot_m[i] + (1.0 - Adam::kBeta1) * g.d_rotation[i];
    a.rot_v[i] =
        Adam::kBeta2 * a.rot_v[i] + (1.0 - Adam::kBeta2) * g.d_rotation[i].cwiseProduct(g.d_rotation[i]);
    for (int c = 0; c < 3; ++c)
      rot_delta[c] = -config_.lr_rotation * (a.rot_m[i][c] / bc1) /
                     (std::sqrt(a.rot_v[i][c] / bc2) + Adam::kEps);
    rotate_tangent_frame(d, rot_delta);

    for (size_t j = 0; j < d.sh.size(); ++j)
      upd3(a.sh_m[i][j], a.sh_v[i][j], g.d_sh[i][j], config_.lr_sh, d.sh[j]);
  }
  cloud_.touch();
}

void Trainer::remap_state(const CloudEdit& edit) { adam_->remap(edit, cloud_); }

void Trainer::maybe_densify(int k) {
  if ((k + 1) % config_.densify.interval != 0) return;
  const auto candidates = select_candidates(cloud_, config_.densify);
  const CloudEdit grow = densify_apply(cloud_, candidates, config_.densify, densify_rng_);
  remap_state(grow);
  const CloudEdit shrink = prune(cloud_, config_.densify);
  remap_state(shrink);
}

double Trainer::train_step(const SupervisionView& item, int k) {
  require(k < config_.total_iters, ErrCode::SchemaViolation, "train_step past total_iters");
  const bool generated = item.cycle >= 0;
  double lambda = 0.0;
  if (generated) {
    lambda = config_.gen_weight_scale * lambda_schedule(k, config_.resolved_schedule());
    if (lambda <= 0.0) return 0.0;  // schedule gate: a complete no-op step
  }

  const RenderOptions opts = render_options();
  RenderCache cache;
  const FrameRGBD rendered = render(cloud_, item.camera, config_.background, opts, &cache);

  Supervision sup;
  sup.frame = &item.frame;
  sup.keep = item.keep ? &*item.keep : nullptr;
  const TotalLoss loss = generated
                             ? total_loss(rendered, nullptr, &sup, config_.weights, lambda,
                                          config_.loss_opts)
                             : total_loss(rendered, &sup, nullptr, config_.weights, 0.0,
                                          config_.loss_opts);

  const BackwardResult grads = render_backward(cloud_, item.camera, cache, loss.grads, opts);
  accumulate_stats(cloud_, grads);
  adam_step(grads);
  maybe_densify(k);
  return loss.value;
}

bool Trainer::fusion_cycle(SupervisionSet& supervision, const std::vector<Camera>& input_cameras,
                           RestorationOracle& oracle, int k) {
  require(k >= config_.warmup_iters && k % config_.cycle_interval == 0, ErrCode::SchemaViolation,
          "fusion_cycle called off cadence");
  const int cycle = cycle_counter_++;
  const auto trajectories = sample_fusion_trajectories(input_cameras, cycle, config_.seed,
                                                       config_.fragment_length, 1);
  const RenderOptions opts = render_options();

  for (const auto& traj : trajectories) {
    OracleRequest request;
    request.cameras = traj.cameras;
    for (const auto& cam : traj.cameras)
      request.frames.push_back(render(cloud_, cam, config_.background, opts));

    // Reference: the input view closest to the fragment midpoint, low index
    // winning ties.
    const Vec3 mid = traj.cameras[traj.cameras.size() / 2].center();
    size_t best = 0;
    double best_dist = 1e300;
    for (size_t i = 0; i < supervision.inputs.size(); ++i) {
      const double dist = (supervision.inputs[i].camera.center() - mid).norm();
      if (dist < best_dist - 1e-15) {
        best_dist = dist;
        best = i;
      }
    }
    request.reference = supervision.inputs[best].frame;
    request.reference_camera = supervision.inputs[best].camera;

    OracleResponse response;
    try {
      response = oracle.restore(request);
    } catch (const Error& e) {
      std::cerr << "fusion cycle at k=" << k << " skipped: " << e.what() << "\n";
      return false;
    }
    if (response.frames.size() != request.frames.size()) {
      std::cerr << "fusion cycle at k=" << k << " skipped: frame count mismatch\n";
      return false;
    }

    for (size_t i = 0; i < response.frames.size(); ++i) {
      const FrameRGBD& rendered = request.frames[i];
      FrameRGBD restored = response.frames[i];

      // Align generated depth onto the rendering where both are valid.
      Mask both(restored.width(), restored.height(), false);
      size_t n_both = 0;
      for (int y = 0; y < restored.height(); ++y)
        for (int x = 0; x < restored.width(); ++x) {
          const bool ok = rendered.valid.at(x, y) && restored.valid.at(x, y);
          both.set(x, y, ok);
          n_both += ok;
        }
      if (n_both >= 2) restored.depth = align_depth(restored.depth, rendered.depth, both);
      for (int y = 0; y < restored.height(); ++y)
        for (int x = 0; x < restored.width(); ++x)
          if (restored.depth.at(x, y) <= 0.0) restored.valid.set(x, y, false);

      SupervisionView view;
      view.camera = traj.cameras[i];
      view.frame = restored;
      view.cycle = cycle;
      supervision.generated.push_back(std::move(view));

      const Mask unreliable = detect_unreliable(rendered, supervision.generated.back().frame.depth,
                                                config_.expansion);
      const FrameRGBD& gen = supervision.generated.back().frame;
      Mask insert_mask(gen.width(), gen.height(), false);
      size_t n_unreliable = 0, n_insert = 0;
      for (int y = 0; y < gen.height(); ++y)
        for (int x = 0; x < gen.width(); ++x) {
          if (!unreliable.at(x, y)) continue;
          ++n_unreliable;
          if (gen.valid.at(x, y) && gen.depth.at(x, y) > 0.0) {
            insert_mask.set(x, y, true);
            ++n_insert;
          }
        }
      const double frac =
          static_cast<double>(n_unreliable) / (static_cast<double>(gen.width()) * gen.height());
      if (n_insert > 0 && frac <= config_.max_unreliable_fraction) {
        const CloudEdit edit =
            backproject_insert(cloud_, gen, traj.cameras[i], insert_mask, config_.backproject);
        remap_state(edit);
      }
    }
  }
  return true;
}

TrainingLog Trainer::run_training(SupervisionSet& supervision,
                                  const std::vector<Camera>& eval_cameras,
                                  const std::vector<FrameRGBD>& eval_frames,
                                  RestorationOracle* oracle, const std::string& checkpoint_dir) {
  require(!supervision.inputs.empty(), ErrCode::NoSupervision, "training needs >= 1 input view");
  TrainingLog log;
  std::vector<Camera> input_cameras;
  for (const auto& v : supervision.inputs) input_cameras.push_back(v.camera);

  auto eval_now = [&](double& out_psnr, double& out_ssim) {
    if (eval_cameras.empty()) return;
    const RenderOptions opts = render_options();
    double psnr_sum = 0, ssim_sum = 0;
    for (size_t i = 0; i < eval_cameras.size(); ++i) {
      FrameRGBD r = render(cloud_, eval_cameras[i], config_.background, opts);
      for (auto& v : r.rgb.data) v = std::clamp(v, 0.0, 1.0);
      psnr_sum += psnr(r.rgb, eval_frames[i].rgb);
      ssim_sum += ssim(r.rgb, eval_frames[i].rgb);
    }
    out_psnr = psnr_sum / static_cast<double>(eval_cameras.size());
    out_ssim = ssim_sum / static_cast<double>(eval_cameras.size());
  };

  size_t input_cursor = 0, gen_cursor = 0;
  double last_loss = 0.0;
  const bool fusion_enabled = oracle != nullptr && config_.gen_weight_scale > 0.0;

  for (int k = 0; k < config_.total_iters; ++k) {
    if (fusion_enabled && k >= config_.warmup_iters && k % config_.cycle_interval == 0) {
      CycleLogEntry entry;
      entry.iteration = k;
      entry.cloud_before = cloud_.size();
      const size_t views_before = supervision.generated.size();
      entry.oracle_ok = fusion_cycle(supervision, input_cameras, *oracle, k);
      entry.cloud_after = cloud_.size();
      entry.views_added = supervision.generated.size() - views_before;
      entry.disks_inserted = entry.cloud_after - entry.cloud_before;
      if (entry.cloud_after > entry.cloud_before) log.expansion_fired = true;
      ++log.oracle_calls;
      eval_now(entry.eval_psnr, entry.eval_ssim);
      log.cycles.push_back(entry);
    }

    const bool want_generated = (k % 3 == 2) && !supervision.generated.empty() &&
                                config_.gen_weight_scale *
                                        lambda_schedule(k, config_.resolved_schedule()) >
                                    0.0 &&
                                k >= config_.warmup_iters;
    const SupervisionView& item =
        want_generated ? supervision.generated[gen_cursor++ % supervision.generated.size()]
                       : supervision.inputs[input_cursor++ % supervision.inputs.size()];
    last_loss = train_step(item, k);

    if (!checkpoint_dir.empty() && config_.checkpoint_interval > 0 &&
        (k + 1) % config_.checkpoint_interval == 0)
      save_checkpoint(checkpoint_dir, k + 1, supervision);
  }

  log.final_loss = last_loss;
  log.final_cloud_size = cloud_.size();
  eval_now(log.final_psnr, log.final_ssim);
  return log;
}

void Trainer::save_checkpoint(const std::string& dir, int iteration,
                              const SupervisionSet& supervision) const {
  fs::create_directories(dir);
  char name[64];
  std::snprintf(name, sizeof(name), "ckpt_%06d", iteration);
  const std::string stem = (fs::path(dir) / name).string();
  write_splat_ply(stem + ".ply", cloud_);

  Json j;
  j["iteration"] = iteration;
  j["cloud_size"] = cloud_.size();
  Json sup;
  sup["n_inputs"] = supervision.inputs.size();
  Json gen = Json::array();
  for (const auto& v : supervision.generated) {
    Json vj;
    vj["cycle"] = v.cycle;
    vj["camera"] = camera_to_json(v.camera);
    gen.push_back(vj);
  }
  sup["generated"] = gen;
  j["supervision"] = sup;

  const Adam& a = *adam_;
  auto dump_vec3 = [](const std::vector<Vec3>& v) {
    Json arr = Json::array();
    for (const auto& x : v) arr.push_back(Json::array({x.x(), x.y(), x.z()}));
    return arr;
  };
  Json mom;
  mom["step"] = adam_steps_;
  mom["pos_m"] = dump_vec3(a.pos_m);
  mom["pos_v"] = dump_vec3(a.pos_v);
  mom["op_m"] = a.op_m;
  mom["op_v"] = a.op_v;
  mom["lsu_m"] = a.lsu_m;
  mom["lsu_v"] = a.lsu_v;
  mom["lsv_m"] = a.lsv_m;
  mom["lsv_v"] = a.lsv_v;
  mom["rot_m"] = dump_vec3(a.rot_m);
  mom["rot_v"] = dump_vec3(a.rot_v);
  j["optimizer"] = mom;

  std::ofstream f(stem + ".json");
  require(f.good(), ErrCode::MalformedFile, "cannot write checkpoint sidecar");
  f << j.dump() << "\n";
}

// ---------------------------------------------------------------------------

Json fusion_config_to_json(const FusionConfig& c) {
  Json j;
  j["warmup_iters"] = c.warmup_iters;
  j["cycle_interval"] = c.cycle_interval;
  j["total_iters"] = c.total_iters;
  j["schedule"] = Json{{"k_start", c.schedule.k_start}, {"k_end", c.schedule.k_end}};
  j["weights"] = Json{{"lambda_l1", c.weights.lambda_l1},
                      {"lambda_ssim", c.weights.lambda_ssim},
                      {"lambda_mono", c.weights.lambda_mono}};
  j["densify"] = Json{{"grad_threshold", c.densify.grad_threshold},
                      {"min_visibility", c.densify.min_visibility},
                      {"interval", c.densify.interval},
                      {"prune_opacity", c.densify.prune_opacity},
                      {"split_scale_threshold", c.densify.split_scale_threshold},
                      {"split_factor", c.densify.split_factor}};
  j["expansion"] = Json{{"tau_T", c.expansion.tau_T}, {"tau_D", c.expansion.tau_D}};
  j["backproject"] = Json{{"stride", c.backproject.stride}, {"opacity", c.backproject.opacity}};
  j["mono_on_input"] = c.loss_opts.mono_on_input;
  j["mono_on_generated"] = c.loss_opts.mono_on_generated;
  j["lr"] = Json{{"position", c.lr_position},
                 {"opacity", c.lr_opacity},
                 {"scale", c.lr_scale},
                 {"rotation", c.lr_rotation},
                 {"sh", c.lr_sh}};
  j["gen_weight_scale"] = c.gen_weight_scale;
  j["max_unreliable_fraction"] = c.max_unreliable_fraction;
  j["fragment_length"] = c.fragment_length;
  j["seed"] = c.seed;
  j["background"] = Json::array({c.background.x(), c.background.y(), c.background.z()});
  j["near_plane"] = c.near_plane;
  j["checkpoint_interval"] = c.checkpoint_interval;
  return j;
}

FusionConfig fusion_config_from_json(const Json& j, FusionConfig c) {
  c.warmup_iters = j.value("warmup_iters", c.warmup_iters);
  c.cycle_interval = j.value("cycle_interval", c.cycle_interval);
  c.total_iters = j.value("total_iters", c.total_iters);
  if (j.contains("schedule")) {
    c.schedule.k_start = j["schedule"].value("k_start", c.schedule.k_start);
    c.schedule.k_end = j["schedule"].value("k_end", c.schedule.k_end);
  }
  if (j.contains("weights")) {
    c.weights.lambda_l1 = j["weights"].value("lambda_l1", c.weights.lambda_l1);
    c.weights.lambda_ssim = j["weights"].value("lambda_ssim", c.weights.lambda_ssim);
    c.weights.lambda_mono = j["weights"].value("lambda_mono", c.weights.lambda_mono);
  }
  if (j.contains("densify")) {
    const Json& d = j["densify"];
    c.densify.grad_threshold = d.value("grad_threshold", c.densify.grad_threshold);
    c.densify.min_visibility = d.value("min_visibility", c.densify.min_visibility);
    c.densify.interval = d.value("interval", c.densify.interval);
    c.densify.prune_opacity = d.value("prune_opacity", c.densify.prune_opacity);
    c.densify.split_scale_threshold = d.value("split_scale_threshold", c.densify.split_scale_threshold);
    c.densify.split_factor = d.value("split_factor", c.densify.split_factor);
  }
  if (j.contains("expansion")) {
    c.expansion.tau_T = j["expansion"].value("tau_T", c.expansion.tau_T);
    c.expansion.tau_D = j["expansion"].value("tau_D", c.expansion.tau_D);
  }
  if (j.contains("backproject")) {
    c.backproject.stride = j["backproject"].value("stride", c.backproject.stride);
    c.backproject.opacity = j["backproject"].value("opacity", c.backproject.opacity);
  }
  c.loss_opts.mono_on_input = j.value("mono_on_input", c.loss_opts.mono_on_input);
  c.loss_opts.mono_on_generated = j.value("mono_on_generated", c.loss_opts.mono_on_generated);
  if (j.contains("lr")) {
    const Json& lr = j["lr"];
    c.lr_position = lr.value("position", c.lr_position);
    c.lr_opacity = lr.value("opacity", c.lr_opacity);
    c.lr_scale = lr.value("scale", c.lr_scale);
    c.lr_rotation = lr.value("rotation", c.lr_rotation);
    c.lr_sh = lr.value("sh", c.lr_sh);
  }
  c.gen_weight_scale = j.value("gen_weight_scale", c.gen_weight_scale);
  c.max_unreliable_fraction = j.value("max_unreliable_fraction", c.max_unreliable_fraction);
  c.fragment_length = j.value("fragment_length", c.fragment_length);
  c.seed = j.value("seed", c.seed);
  if (j.contains("background"))
    c.background = Vec3(j["background"][0].get<double>(), j["background"][1].get<double>(),
                        j["background"][2].get<double>());
  c.near_plane = j.value("near_plane", c.near_plane);
  c.checkpoint_interval = j.value("checkpoint_interval", c.checkpoint_interval);
  return c;
}

FusionConfig load_fusion_config(const std::string& path, FusionConfig base) {
  std::ifstream f(path);
  require(f.good(), ErrCode::MalformedFile, "cannot open: " + path);
  Json j = Json::parse(f, nullptr, false);
  require(!j.is_discarded(), ErrCode::MalformedFile, "invalid JSON: " + path);
  return fusion_config_from_json(j, base);
}

}  // namespace gf
