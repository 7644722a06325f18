#include "gf/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "gf/camera_io.hpp"
#include "gf/eval.hpp"
#include "gf/fusion.hpp"
#include "gf/image_io.hpp"
#include "gf/oracle_wire.hpp"
#include "gf/synth.hpp"

namespace gf {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

std::string frame_name(const char* prefix, int i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04d.%s", prefix, i, ext);
  return buf;
}

struct TrainFlags {
  std::string dataset;
  std::string out;
  std::string oracle = "off";
  std::string config_path;
  double eval_split_ratio = 0.0;  // 0 = use the dataset's manifest as-is
  int64_t split_seed = -1;
  int64_t seed = -1;
  int iters = -1;
  int warmup = -1;
  int cycle_interval = -1;
  double gen_weight_scale = -1.0;
};

std::shared_ptr<RestorationOracle> make_oracle(const std::string& kind, const SceneDataset& ds) {
  if (kind == "off") return nullptr;
  if (kind == "identity") return std::make_shared<IdentityOracle>();
  if (kind == "gt") {
    require(ds.scene_spec.has_value(), ErrCode::SchemaViolation,
            "--oracle gt needs a dataset with scene.json");
    return std::make_shared<GroundTruthOracle>(std::make_shared<SynthScene>(*ds.scene_spec));
  }
  if (kind.rfind("remote:", 0) == 0) return std::make_shared<RemoteOracle>(kind.substr(7));
  fail(ErrCode::SchemaViolation, "oracle must be identity, gt, remote:<url> or off");
}

SupervisionSet build_supervision(const SceneDataset& ds, const SplitManifest& man) {
  SupervisionSet sup;
  for (const auto& e : man.entries) {
    if (e.role != FrameRole::Train) continue;
    require(e.frame >= 0 && e.frame < static_cast<int>(ds.frames.size()), ErrCode::SchemaViolation,
            "train frame index out of range");
    SupervisionView v;
    v.camera = ds.cameras[e.frame];
    v.frame = ds.frames[e.frame];
    if (e.window.w > 0 && e.window.h > 0 &&
        !(e.window.x0 == 0 && e.window.y0 == 0 && e.window.w == v.frame.width() &&
          e.window.h == v.frame.height()))
      v.keep = rect_mask(v.frame.width(), v.frame.height(), e.window);
    sup.inputs.push_back(std::move(v));
  }
  return sup;
}

SplitManifest all_train_manifest(const SceneDataset& ds) {
  SplitManifest man;
  man.mode = "all";
  man.ratio = 1.0;
  for (size_t i = 0; i < ds.frames.size(); ++i) {
    SplitEntry e;
    e.frame = static_cast<int>(i);
    e.role = FrameRole::Train;
    e.window = MaskRect{0, 0, ds.frames[i].width(), ds.frames[i].height()};
    man.entries.push_back(e);
  }
  return man;
}

Json training_log_to_json(const TrainingLog& log) {
  Json j;
  j["final_psnr"] = log.final_psnr;
  j["final_ssim"] = log.final_ssim;
  j["final_loss"] = log.final_loss;
  j["final_cloud_size"] = log.final_cloud_size;
  j["oracle_cycles"] = log.oracle_calls;
  j["expansion_fired"] = log.expansion_fired;
  Json cycles = Json::array();
  for (const auto& c : log.cycles)
    cycles.push_back({{"iteration", c.iteration},
                      {"cloud_before", c.cloud_before},
                      {"cloud_after", c.cloud_after},
                      {"views_added", c.views_added},
                      {"oracle_ok", c.oracle_ok},
                      {"eval_psnr", c.eval_psnr},
                      {"eval_ssim", c.eval_ssim}});
  j["cycles"] = cycles;
  return j;
}

int cmd_synth_scene(const std::string& spec_path, const std::string& out, int64_t seed) {
  SyntheticSceneSpec spec = load_scene_spec(spec_path);
  if (seed >= 0) spec.seed = static_cast<uint64_t>(seed);
  SynthScene scene(spec);
  SceneDataset ds;
  ds.cameras = scene.rig_cameras();
  for (const auto& cam : ds.cameras) ds.frames.push_back(scene.render_gt(cam));
  ds.points = scene.sample_points(spec.n_init_points, spec.seed);
  ds.scene_spec = scene.spec();
  save_dataset(out, ds);
  std::cout << "wrote " << ds.frames.size() << " frames, " << ds.points.size() << " points to "
            << out << "\n";
  return 0;
}

int cmd_train(const TrainFlags& flags) {
  SceneDataset ds = load_dataset(flags.dataset);

  FusionConfig cfg;
  if (!flags.config_path.empty()) cfg = load_fusion_config(flags.config_path, cfg);
  if (flags.seed >= 0) cfg.seed = static_cast<uint64_t>(flags.seed);
  if (flags.iters > 0) cfg.total_iters = flags.iters;
  if (flags.warmup >= 0) cfg.warmup_iters = flags.warmup;
  if (flags.cycle_interval > 0) cfg.cycle_interval = flags.cycle_interval;
  if (flags.gen_weight_scale >= 0.0) cfg.gen_weight_scale = flags.gen_weight_scale;

  SplitManifest man;
  if (flags.eval_split_ratio > 0.0) {
    const uint64_t sseed = flags.split_seed >= 0 ? static_cast<uint64_t>(flags.split_seed) : cfg.seed;
    man = eval_split(static_cast<int>(ds.frames.size()), ds.frames[0].width(),
                     ds.frames[0].height(), flags.eval_split_ratio, sseed);
  } else if (ds.split) {
    man = *ds.split;
  } else {
    man = all_train_manifest(ds);
  }

  SupervisionSet sup = build_supervision(ds, man);
  require(!sup.inputs.empty(), ErrCode::NoSupervision, "split manifest has no training frames");
  std::vector<Camera> eval_cams;
  std::vector<FrameRGBD> eval_frames;
  for (int idx : man.test_indices()) {
    eval_cams.push_back(ds.cameras[idx]);
    eval_frames.push_back(ds.frames[idx]);
  }

  auto oracle = make_oracle(flags.oracle, ds);
  SplatCloud cloud = init_from_points(ds.points, sup.inputs, cfg.near_plane);
  const double extent = Trainer::compute_scene_extent(ds.cameras);
  Trainer trainer(std::move(cloud), cfg, extent);

  fs::create_directories(flags.out);
  save_manifest((fs::path(flags.out) / "split.json").string(), man);
  {
    std::ofstream f((fs::path(flags.out) / "config.json").string());
    f << fusion_config_to_json(trainer.config()).dump(2) << "\n";
  }

  TrainingLog log = trainer.run_training(sup, eval_cams, eval_frames, oracle.get(),
                                         (fs::path(flags.out) / "checkpoints").string());

  write_splat_ply((fs::path(flags.out) / "splat.ply").string(), trainer.cloud());
  {
    std::ofstream f((fs::path(flags.out) / "metrics.json").string());
    f << training_log_to_json(log).dump(2) << "\n";
  }
  std::cout << "final cloud " << log.final_cloud_size << " disks";
  if (!eval_cams.empty())
    std::cout << ", held-out psnr " << log.final_psnr << " dB, ssim " << log.final_ssim;
  std::cout << "\n";
  return 0;
}

int cmd_gen_pairs(const std::string& dataset_dir, const std::string& out, double ratio,
                  int64_t seed, int iters, const std::string& config_path) {
  SceneDataset ds = load_dataset(dataset_dir);
  const uint64_t s = seed >= 0 ? static_cast<uint64_t>(seed) : 1;
  SplitManifest man = datagen_split(static_cast<int>(ds.frames.size()), ds.frames[0].width(),
                                    ds.frames[0].height(), ratio, s);

  FusionConfig cfg;
  if (!config_path.empty()) cfg = load_fusion_config(config_path, cfg);
  cfg.seed = s;
  cfg.total_iters = iters;
  cfg.warmup_iters = 0;
  cfg.schedule = {0, iters};
  cfg.gen_weight_scale = 0.0;  // plain masked reconstruction, no oracle

  SupervisionSet sup = build_supervision(ds, man);
  SplatCloud cloud = init_from_points(ds.points, sup.inputs, cfg.near_plane);
  Trainer trainer(std::move(cloud), cfg, Trainer::compute_scene_extent(ds.cameras));
  trainer.run_training(sup, {}, {}, nullptr);

  // Re-render the full original trajectory from the masked reconstruction:
  // artifact frames paired with the original captures.
  fs::create_directories(fs::path(out) / "artifact");
  fs::create_directories(fs::path(out) / "gt");
  const RenderOptions opts = trainer.render_options();
  for (size_t i = 0; i < ds.cameras.size(); ++i) {
    FrameRGBD art = render(trainer.cloud(), ds.cameras[i], cfg.background, opts);
    for (auto& v : art.rgb.data) v = std::clamp(v, 0.0, 1.0);
    write_png((fs::path(out) / "artifact" / frame_name("rgb", static_cast<int>(i), "png")).string(),
              art.rgb, true);
    Image depth = art.depth;
    write_pfm((fs::path(out) / "artifact" / frame_name("depth", static_cast<int>(i), "pfm")).string(),
              depth);
    write_png((fs::path(out) / "gt" / frame_name("rgb", static_cast<int>(i), "png")).string(),
              ds.frames[i].rgb, true);
    Image gt_depth = ds.frames[i].depth;
    write_pfm((fs::path(out) / "gt" / frame_name("depth", static_cast<int>(i), "pfm")).string(),
              gt_depth);
  }
  save_manifest((fs::path(out) / "manifest.json").string(), man);
  write_splat_ply((fs::path(out) / "splat.ply").string(), trainer.cloud());
  std::cout << "wrote " << ds.cameras.size() << " artifact/gt pairs to " << out << "\n";
  return 0;
}

int cmd_render(const std::string& cloud_path, const std::string& traj_path,
               const std::string& out) {
  const SplatCloud cloud = read_splat_ply(cloud_path);
  const std::vector<Camera> cams = read_camera_list(traj_path);
  fs::create_directories(out);
  RenderOptions opts;
  for (size_t i = 0; i < cams.size(); ++i) {
    FrameRGBD f = render(cloud, cams[i], Vec3::Zero(), opts);
    for (auto& v : f.rgb.data) v = std::clamp(v, 0.0, 1.0);
    write_png((fs::path(out) / frame_name("rgb", static_cast<int>(i), "png")).string(), f.rgb, true);
    Image depth = f.depth;
    write_pfm((fs::path(out) / frame_name("depth", static_cast<int>(i), "pfm")).string(), depth);
  }
  std::cout << "rendered " << cams.size() << " frames to " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& dataset_dir, const std::string& cloud_path,
             const std::string& manifest_path, const std::string& out) {
  const SceneDataset ds = load_dataset(dataset_dir);
  const SplatCloud cloud = read_splat_ply(cloud_path);
  const SplitManifest man = load_manifest(manifest_path);
  const EvalReport report = run_eval(ds, cloud, man);
  fs::create_directories(out);
  write_eval_csv((fs::path(out) / "metrics.csv").string(), report);
  write_eval_json((fs::path(out) / "metrics.json").string(), report);
  std::cout << "mean psnr " << report.mean_psnr << " dB, mean ssim " << report.mean_ssim << " over "
            << report.rows.size() << " test frames\n";
  return 0;
}

int cmd_oracle_mock(const std::string& backend, const std::string& bind) {
  std::shared_ptr<RestorationOracle> oracle;
  if (backend == "identity") {
    oracle = std::make_shared<IdentityOracle>();
  } else if (backend.rfind("gt:", 0) == 0) {
    oracle = std::make_shared<GroundTruthOracle>(
        std::make_shared<SynthScene>(load_scene_spec(backend.substr(3))));
  } else {
    fail(ErrCode::SchemaViolation, "--backend must be identity or gt:<scene.json>");
  }
  std::string host = "127.0.0.1";
  int port = 0;
  const size_t colon = bind.find(':');
  if (colon != std::string::npos) {
    host = bind.substr(0, colon);
    port = std::stoi(bind.substr(colon + 1));
  } else if (!bind.empty()) {
    host = bind;
  }
  MockOracleServer server(oracle);
  server.start(host, port);
  std::cout << "oracle-mock (" << oracle->name() << ") listening on " << server.url() << "\n";
  std::cout << "POST /v1/restore, GET /v1/health; Ctrl-C to stop\n";
  // Serve until the process is killed.
  while (true) std::this_thread::sleep_for(std::chrono::seconds(3600));
  return 0;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv) {
  CLI::App app{"2D Gaussian disk splatting with cyclic restoration-oracle fusion"};
  app.require_subcommand(1);

  // synth-scene
  std::string ss_spec, ss_out;
  int64_t ss_seed = -1;
  auto* synth_cmd = app.add_subcommand("synth-scene", "ray-trace a synthetic dataset from a scene spec");
  synth_cmd->add_option("spec", ss_spec, "scene spec JSON")->required();
  synth_cmd->add_option("out", ss_out, "output dataset directory")->required();
  synth_cmd->add_option("--seed", ss_seed, "override the spec seed");

  // gen-pairs
  std::string gp_dataset, gp_out, gp_config;
  double gp_ratio = 0.25;
  int64_t gp_seed = -1;
  int gp_iters = 7000;
  auto* pairs_cmd = app.add_subcommand("gen-pairs", "masked reconstruction artifact/GT pair generation");
  pairs_cmd->add_option("dataset", gp_dataset, "dataset directory")->required();
  pairs_cmd->add_option("out", gp_out, "output directory")->required();
  pairs_cmd->add_option("--ratio", gp_ratio, "temporal downsample ratio (1, 0.5, 0.25)");
  pairs_cmd->add_option("--seed", gp_seed, "corner/path seed");
  pairs_cmd->add_option("--iters", gp_iters, "masked training iterations");
  pairs_cmd->add_option("--config", gp_config, "fusion config JSON");

  // train
  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "optimize a splat cloud, optionally with oracle fusion");
  train_cmd->add_option("dataset", tf.dataset, "dataset directory")->required();
  train_cmd->add_option("--out", tf.out, "output directory")->required();
  train_cmd->add_option("--oracle", tf.oracle, "identity | gt | remote:<url> | off");
  train_cmd->add_option("--config", tf.config_path, "fusion config JSON");
  train_cmd->add_option("--eval-split", tf.eval_split_ratio,
                        "generate a moving-mask eval split with this ratio (0.5 or 0.25)");
  train_cmd->add_option("--split-seed", tf.split_seed, "seed for the generated split");
  train_cmd->add_option("--seed", tf.seed, "training seed");
  train_cmd->add_option("--iters", tf.iters, "total iterations");
  train_cmd->add_option("--warmup", tf.warmup, "warm-up iterations");
  train_cmd->add_option("--cycle-interval", tf.cycle_interval, "iterations between fusion cycles");
  train_cmd->add_option("--gen-weight-scale", tf.gen_weight_scale,
                        "scales the generation loss weight (0 disables fusion)");

  // render
  std::string r_cloud, r_traj, r_out;
  auto* render_cmd = app.add_subcommand("render", "render a splat file along a camera trajectory");
  render_cmd->add_option("cloud", r_cloud, "splat PLY")->required();
  render_cmd->add_option("trajectory", r_traj, "camera list JSON")->required();
  render_cmd->add_option("out", r_out, "output directory")->required();

  // eval
  std::string e_dataset, e_cloud, e_manifest, e_out;
  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM on the manifest's test frames");
  eval_cmd->add_option("dataset", e_dataset, "dataset directory")->required();
  eval_cmd->add_option("cloud", e_cloud, "splat PLY")->required();
  eval_cmd->add_option("manifest", e_manifest, "split manifest JSON")->required();
  eval_cmd->add_option("out", e_out, "output directory")->required();

  // oracle-mock
  std::string m_backend = "identity", m_bind = "127.0.0.1:0";
  auto* mock_cmd = app.add_subcommand("oracle-mock", "serve a local oracle over the wire protocol");
  mock_cmd->add_option("--backend", m_backend, "identity | gt:<scene.json>");
  mock_cmd->add_option("--bind", m_bind, "host:port (port 0 = any)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth_scene(ss_spec, ss_out, ss_seed);
    if (pairs_cmd->parsed()) return cmd_gen_pairs(gp_dataset, gp_out, gp_ratio, gp_seed, gp_iters, gp_config);
    if (train_cmd->parsed()) return cmd_train(tf);
    if (render_cmd->parsed()) return cmd_render(r_cloud, r_traj, r_out);
    if (eval_cmd->parsed()) return cmd_eval(e_dataset, e_cloud, e_manifest, e_out);
    if (mock_cmd->parsed()) return cmd_oracle_mock(m_backend, m_bind);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace gf
