#include "gf/densify.hpp"

#include <algorithm>
#include <cmath>

namespace gf {

void accumulate_stats(SplatCloud& cloud, const BackwardResult& bw) {
  require(bw.view_grad_mag.size() == cloud.size() && cloud.stats_consistent(),
          ErrCode::LengthMismatch, "backward output does not match cloud size");
  for (size_t i = 0; i < cloud.size(); ++i) {
    cloud.grad_accum[i] += bw.view_grad_mag[i];
    cloud.grad_dir_accum[i] += bw.d_position[i];
    if (bw.contributed[i]) ++cloud.visibility_count[i];
  }
}

std::vector<uint32_t> select_candidates(const SplatCloud& cloud, const DensifyConfig& cfg) {
  std::vector<uint32_t> out;
  for (size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.visibility_count[i] < cfg.min_visibility) continue;
    const double mean_grad = cloud.grad_accum[i] / std::max(cloud.visibility_count[i], 1);
    if (mean_grad > cfg.grad_threshold) out.push_back(static_cast<uint32_t>(i));
  }
  return out;
}

CloudEdit densify_apply(SplatCloud& cloud, const std::vector<uint32_t>& candidates,
                        const DensifyConfig& cfg, std::mt19937_64& rng) {
  CloudEdit edit;
  if (candidates.empty()) {
    edit.kept.resize(cloud.size());
    for (size_t i = 0; i < cloud.size(); ++i) edit.kept[i] = static_cast<uint32_t>(i);
    return edit;
  }
  std::vector<uint8_t> is_split(cloud.size(), 0);
  std::vector<GaussianDisk> fresh;
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (uint32_t idx : candidates) {
    GaussianDisk& d = cloud.disks[idx];
    const double max_scale = std::max(d.scale_u(), d.scale_v());
    if (max_scale < cfg.split_scale_threshold) {
      GaussianDisk copy = d;
      const Vec3 dir = cloud.grad_dir_accum[idx];
      if (dir.norm() > 0) copy.position += 0.5 * max_scale * dir.normalized();
      fresh.push_back(copy);
      cloud.reset_stats_at(idx);
    } else {
      is_split[idx] = 1;
      const double ls = std::log(cfg.split_factor);
      for (int child = 0; child < 2; ++child) {
        GaussianDisk c = d;
        const double a = gauss(rng) * d.scale_u();
        const double b = gauss(rng) * d.scale_v();
        c.position = d.position + a * d.tangent_u + b * d.tangent_v;
        c.log_scale_u -= ls;
        c.log_scale_v -= ls;
        fresh.push_back(c);
      }
    }
  }

  // Compact out split parents, then append fresh disks with zeroed stats.
  std::vector<GaussianDisk> disks;
  std::vector<double> ga;
  std::vector<Vec3> gd;
  std::vector<int> vc;
  disks.reserve(cloud.size() + fresh.size());
  for (size_t i = 0; i < cloud.size(); ++i) {
    if (is_split[i]) continue;
    edit.kept.push_back(static_cast<uint32_t>(i));
    disks.push_back(cloud.disks[i]);
    ga.push_back(cloud.grad_accum[i]);
    gd.push_back(cloud.grad_dir_accum[i]);
    vc.push_back(cloud.visibility_count[i]);
  }
  for (auto& f : fresh) {
    disks.push_back(std::move(f));
    ga.push_back(0.0);
    gd.push_back(Vec3::Zero());
    vc.push_back(0);
  }
  edit.appended = fresh.size();
  cloud.disks = std::move(disks);
  cloud.grad_accum = std::move(ga);
  cloud.grad_dir_accum = std::move(gd);
  cloud.visibility_count = std::move(vc);
  cloud.touch();
  return edit;
}

CloudEdit prune(SplatCloud& cloud, const DensifyConfig& cfg) {
  CloudEdit edit;
  edit.kept.reserve(cloud.size());
  size_t w = 0;
  for (size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.disks[i].opacity < cfg.prune_opacity) continue;
    edit.kept.push_back(static_cast<uint32_t>(i));
    if (w != i) {
      cloud.disks[w] = std::move(cloud.disks[i]);
      cloud.grad_accum[w] = cloud.grad_accum[i];
      cloud.grad_dir_accum[w] = cloud.grad_dir_accum[i];
      cloud.visibility_count[w] = cloud.visibility_count[i];
    }
    ++w;
  }
  if (w != cloud.size()) {
    cloud.disks.resize(w);
    cloud.grad_accum.resize(w);
    cloud.grad_dir_accum.resize(w);
    cloud.visibility_count.resize(w);
    cloud.touch();
  }
  return edit;
}

Mask detect_low_coverage(const FrameRGBD& f, const ExpansionConfig& cfg) {
  Mask m(f.width(), f.height(), false);
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) {
      const double alpha_acc = 1.0 - f.transmittance.at(x, y);
      m.set(x, y, alpha_acc < cfg.tau_T);
    }
  return m;
}

Mask detect_depth_mismatch(const FrameRGBD& f, const Image& gen, const ExpansionConfig& cfg) {
  require(gen.width == f.width() && gen.height == f.height() && gen.channels == 1,
          ErrCode::ShapeMismatch, "generated depth size");
  Mask m(f.width(), f.height(), false);
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) {
      // Pixels without comparable rendered depth are unreliable by definition.
      if (!f.valid.at(x, y))
        m.set(x, y, true);
      else
        m.set(x, y, std::abs(f.depth.at(x, y) - gen.at(x, y)) > cfg.tau_D);
    }
  return m;
}

Mask detect_unreliable(const FrameRGBD& f, const Image& gen, const ExpansionConfig& cfg) {
  Mask mt = detect_low_coverage(f, cfg);
  const Mask md = detect_depth_mismatch(f, gen, cfg);
  for (size_t i = 0; i < mt.data.size(); ++i) mt.data[i] = mt.data[i] | md.data[i];
  return mt;
}

CloudEdit backproject_insert(SplatCloud& cloud, const FrameRGBD& frame, const Camera& camera,
                             const Mask& mask, const BackprojectConfig& cfg) {
  require(mask.width == frame.width() && mask.height == frame.height(), ErrCode::ShapeMismatch,
          "backproject mask size");
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y))
        require(frame.valid.at(x, y) && frame.depth.at(x, y) > 0.0, ErrCode::InvalidDepth,
                "masked pixel without positive restored depth");

  CloudEdit edit;
  edit.kept.resize(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) edit.kept[i] = static_cast<uint32_t>(i);

  const Vec3 origin = camera.center();
  for (int y = 0; y < mask.height; y += cfg.stride)
    for (int x = 0; x < mask.width; x += cfg.stride) {
      if (!mask.at(x, y)) continue;
      const double depth = frame.depth.at(x, y);
      const Vec3 cam_pt(depth * (x - camera.cx) / camera.fx, depth * (y - camera.cy) / camera.fy,
                        depth);
      GaussianDisk d;
      d.position = camera.to_world(cam_pt);
      d.opacity = cfg.opacity;
      d.sh = {Vec3(frame.rgb.at(x, y, 0), frame.rgb.at(x, y, 1), frame.rgb.at(x, y, 2))};
      // Disk faces the camera: tangents span the plane perpendicular to the ray.
      const Vec3 n = (d.position - origin).normalized();
      Vec3 ref = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
      d.tangent_u = (ref - ref.dot(n) * n).normalized();
      d.tangent_v = n.cross(d.tangent_u);
      const double scale = depth / camera.fx * cfg.stride;
      d.log_scale_u = std::log(std::max(scale, 1e-9));
      d.log_scale_v = d.log_scale_u;
      cloud.add_disk(d);
      ++edit.appended;
    }
  return edit;
}

}  // namespace gf
