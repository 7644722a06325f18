#pragma once

#include "gf/dataset.hpp"
#include "gf/render.hpp"

namespace gf {

struct EvalRow {
  int frame = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

/// Renders every test camera of the manifest at full field of view and scores
/// against the dataset ground truth (rendered rgb clamped to [0,1]).
EvalReport run_eval(const SceneDataset& dataset, const SplatCloud& cloud,
                    const SplitManifest& manifest, const Vec3& background = Vec3::Zero(),
                    const RenderOptions& opts = {});

/// CSV: header frame,psnr,ssim; one row per test frame plus a final mean row.
void write_eval_csv(const std::string& path, const EvalReport& report);
void write_eval_json(const std::string& path, const EvalReport& report);

}  // namespace gf
