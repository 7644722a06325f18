#pragma once

#include <functional>
#include <random>

#include "gf/losses.hpp"
#include "gf/render.hpp"

namespace gf::testutil {

inline Camera make_camera(int w, int h, double f) {
  Camera cam;
  cam.width = w;
  cam.height = h;
  cam.fx = cam.fy = f;
  cam.cx = w / 2.0;
  cam.cy = h / 2.0;
  return cam;
}

inline GaussianDisk random_disk(std::mt19937_64& rng, int sh_degree = 0) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  GaussianDisk d;
  d.position = Vec3(2.4 * uni(rng) - 1.2, 2.4 * uni(rng) - 1.2, 2.5 + 3.5 * uni(rng));
  d.opacity = 0.2 + 0.55 * uni(rng);
  Vec3 a(uni(rng) - 0.5, uni(rng) - 0.5, uni(rng) - 0.5);
  if (a.norm() < 1e-6) a = Vec3::UnitX();
  Vec3 b(uni(rng) - 0.5, uni(rng) - 0.5, uni(rng) - 0.5);
  d.tangent_u = a.normalized();
  b -= b.dot(d.tangent_u) * d.tangent_u;
  if (b.norm() < 1e-6) b = d.tangent_u.unitOrthogonal();
  d.tangent_v = b.normalized();
  d.log_scale_u = std::log(0.15 + 0.35 * uni(rng));
  d.log_scale_v = std::log(0.15 + 0.35 * uni(rng));
  const int n_sh = sh_coeff_count(sh_degree);
  d.sh.clear();
  if (sh_degree == 0) {
    d.sh.push_back(Vec3(0.15 + 0.7 * uni(rng), 0.15 + 0.7 * uni(rng), 0.15 + 0.7 * uni(rng)));
  } else {
    d.sh.push_back(Vec3(0.35 + 0.3 * uni(rng), 0.35 + 0.3 * uni(rng), 0.35 + 0.3 * uni(rng)));
    for (int j = 1; j < n_sh; ++j)
      d.sh.push_back(Vec3(0.06 * uni(rng) - 0.03, 0.06 * uni(rng) - 0.03, 0.06 * uni(rng) - 0.03));
  }
  return d;
}

inline SplatCloud random_cloud(std::mt19937_64& rng, int n, int sh_degree = 0) {
  SplatCloud cloud;
  for (int i = 0; i < n; ++i) cloud.add_disk(random_disk(rng, sh_degree));
  return cloud;
}

/// Raw Gaussian weight and hit depth of a disk along a pixel ray, without the
/// cutoff. Independent re-derivation used to keep finite differences away from
/// the renderer's discontinuities.
inline double raw_weight(const GaussianDisk& d, const Camera& cam, double x, double y,
                         double* depth = nullptr) {
  const Vec3 o = cam.center();
  const Vec3 dir = cam.ray_dir(x, y);
  const Vec3 n = d.tangent_u.cross(d.tangent_v);
  const double k = dir.dot(n);
  if (std::abs(k) < 1e-9 * dir.norm()) return 0.0;
  const double s = (d.position - o).dot(n) / k;
  if (s <= 0.01) return 0.0;
  if (depth) *depth = s;
  const Vec3 delta = o + s * dir - d.position;
  const double u = delta.dot(d.tangent_u) / d.scale_u();
  const double v = delta.dot(d.tangent_v) / d.scale_v();
  return std::exp(-0.5 * (u * u + v * v));
}

/// Random upstream loss weights, zeroed at pixels where a finite-difference
/// step could cross one of the renderer's discontinuities: a disk weight near
/// the 3-sigma cutoff, two hits at nearly equal depth (compositing order could
/// swap), or compositing near the termination/validity thresholds.
inline PixelGrads robust_weights(const SplatCloud& cloud, const Camera& cam,
                                 const RenderOptions& opts, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const FrameRGBD base = render(cloud, cam, Vec3::Zero(), opts);
  PixelGrads w;
  w.d_rgb = Image(cam.width, cam.height, 3);
  w.d_depth = Image(cam.width, cam.height, 1);
  w.d_transmittance = Image(cam.width, cam.height, 1);
  std::vector<double> depths;
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      bool fragile = false;
      depths.clear();
      for (const auto& d : cloud.disks) {
        double s = 0.0;
        const double g = raw_weight(d, cam, x, y, &s);
        if (g > 0.4 * opts.gaussian_cutoff && g < 2.5 * opts.gaussian_cutoff) fragile = true;
        if (g >= 0.4 * opts.gaussian_cutoff) depths.push_back(s);
      }
      for (size_t i = 0; i < depths.size() && !fragile; ++i)
        for (size_t j = i + 1; j < depths.size(); ++j)
          if (std::abs(depths[i] - depths[j]) < 3e-3) fragile = true;
      const double T = base.transmittance.at(x, y);
      if (T < 10.0 * opts.min_transmittance) fragile = true;
      const bool had_hit = T < 1.0;
      if (had_hit && 1.0 - T < 10.0 * opts.min_coverage) fragile = true;
      if (fragile) continue;
      for (int c = 0; c < 3; ++c) w.d_rgb.at(x, y, c) = uni(rng);
      w.d_transmittance.at(x, y) = 0.3 * uni(rng);
      if (base.valid.at(x, y)) w.d_depth.at(x, y) = 0.3 * uni(rng);
    }
  return w;
}

inline double weighted_loss(const SplatCloud& cloud, const Camera& cam, const PixelGrads& w,
                            const RenderOptions& opts) {
  const FrameRGBD f = render(cloud, cam, Vec3::Zero(), opts);
  double L = 0.0;
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      for (int c = 0; c < 3; ++c) L += w.d_rgb.at(x, y, c) * f.rgb.at(x, y, c);
      L += w.d_depth.at(x, y) * f.depth.at(x, y);
      L += w.d_transmittance.at(x, y) * f.transmittance.at(x, y);
    }
  return L;
}

struct FdReport {
  int checked = 0;
  int failed = 0;
  double worst_rel = 0.0;
  std::string worst_what;
};

/// Central finite differences on every scalar parameter of every disk against
/// the analytic backward pass.
inline FdReport fd_check(const SplatCloud& cloud, const Camera& cam, const PixelGrads& w,
                         const RenderOptions& opts, double h = 1e-4, double tol = 1e-3,
                         double grad_floor = 1e-6) {
  RenderCache cache;
  render(cloud, cam, Vec3::Zero(), opts, &cache);
  const BackwardResult bw = render_backward(cloud, cam, cache, w, opts);

  FdReport report;
  auto check = [&](double analytic, double fd, const std::string& what) {
    if (std::abs(analytic) <= grad_floor) return;
    ++report.checked;
    const double rel = std::abs(analytic - fd) / std::max(std::abs(analytic), std::abs(fd));
    if (rel > report.worst_rel) {
      report.worst_rel = rel;
      report.worst_what = what;
    }
    if (rel > tol) ++report.failed;
  };
  auto fd_of = [&](const std::function<void(SplatCloud&, double)>& perturb) {
    SplatCloud plus = cloud;
    perturb(plus, h);
    SplatCloud minus = cloud;
    perturb(minus, -h);
    return (weighted_loss(plus, cam, w, opts) - weighted_loss(minus, cam, w, opts)) / (2.0 * h);
  };

  for (size_t i = 0; i < cloud.size(); ++i) {
    const std::string tag = "disk" + std::to_string(i);
    for (int j = 0; j < 3; ++j)
      check(bw.d_position[i][j],
            fd_of([i, j](SplatCloud& c, double eps) { c.disks[i].position[j] += eps; }),
            tag + ".pos" + std::to_string(j));
    check(bw.d_opacity[i], fd_of([i](SplatCloud& c, double eps) { c.disks[i].opacity += eps; }),
          tag + ".opacity");
    check(bw.d_log_scale_u[i],
          fd_of([i](SplatCloud& c, double eps) { c.disks[i].log_scale_u += eps; }), tag + ".lsu");
    check(bw.d_log_scale_v[i],
          fd_of([i](SplatCloud& c, double eps) { c.disks[i].log_scale_v += eps; }), tag + ".lsv");
    for (int j = 0; j < 3; ++j)
      check(bw.d_rotation[i][j], fd_of([i, j](SplatCloud& c, double eps) {
              Vec3 angles = Vec3::Zero();
              angles[j] = eps;
              rotate_tangent_frame(c.disks[i], angles);
            }),
            tag + ".rot" + std::to_string(j));
    for (size_t sj = 0; sj < cloud.disks[i].sh.size(); ++sj)
      for (int c3 = 0; c3 < 3; ++c3)
        check(bw.d_sh[i][sj][c3], fd_of([i, sj, c3](SplatCloud& c, double eps) {
                c.disks[i].sh[sj][c3] += eps;
              }),
              tag + ".sh" + std::to_string(sj) + "." + std::to_string(c3));
  }
  return report;
}

inline Image random_image(std::mt19937_64& rng, int w, int h, int c, double lo = 0.0,
                          double hi = 1.0) {
  std::uniform_real_distribution<double> uni(lo, hi);
  Image img(w, h, c);
  for (auto& v : img.data) v = uni(rng);
  return img;
}

}  // namespace gf::testutil
