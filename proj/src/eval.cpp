#include "gf/eval.hpp"

#include <algorithm>
#include <fstream>

#include "gf/losses.hpp"

namespace gf {

EvalReport run_eval(const SceneDataset& dataset, const SplatCloud& cloud,
                    const SplitManifest& manifest, const Vec3& background,
                    const RenderOptions& opts) {
  EvalReport report;
  const auto tests = manifest.test_indices();
  require(!tests.empty(), ErrCode::SchemaViolation, "manifest has no test frames");
  for (int frame : tests) {
    require(frame >= 0 && frame < static_cast<int>(dataset.frames.size()), ErrCode::SchemaViolation,
            "test frame index out of range");
    FrameRGBD r = render(cloud, dataset.cameras[frame], background, opts);
    for (auto& v : r.rgb.data) v = std::clamp(v, 0.0, 1.0);
    EvalRow row;
    row.frame = frame;
    row.psnr = psnr(r.rgb, dataset.frames[frame].rgb);
    row.ssim = ssim(r.rgb, dataset.frames[frame].rgb);
    report.rows.push_back(row);
    report.mean_psnr += row.psnr;
    report.mean_ssim += row.ssim;
  }
  report.mean_psnr /= static_cast<double>(report.rows.size());
  report.mean_ssim /= static_cast<double>(report.rows.size());
  return report;
}

void write_eval_csv(const std::string& path, const EvalReport& report) {
  std::ofstream f(path);
  require(f.good(), ErrCode::MalformedFile, "cannot open for write: " + path);
  f << "frame,psnr,ssim\n";
  f.precision(12);
  for (const auto& row : report.rows) f << row.frame << "," << row.psnr << "," << row.ssim << "\n";
  f << "mean," << report.mean_psnr << "," << report.mean_ssim << "\n";
}

void write_eval_json(const std::string& path, const EvalReport& report) {
  nlohmann::json j;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows)
    rows.push_back({{"frame", row.frame}, {"psnr", row.psnr}, {"ssim", row.ssim}});
  j["frames"] = rows;
  j["mean_psnr"] = report.mean_psnr;
  j["mean_ssim"] = report.mean_ssim;
  std::ofstream f(path);
  require(f.good(), ErrCode::MalformedFile, "cannot open for write: " + path);
  f << j.dump(2) << "\n";
}

}  // namespace gf
