#include "gf/render.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gf {
namespace {

constexpr int kTileSize = 16;

constexpr double kSH1 = 0.4886025119029199;
constexpr double kSH2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                            -1.0925484305920792, 0.5462742152960396};

int sh_basis(const Vec3& d, double* out) {
  out[0] = 1.0;
  const double x = d.x(), y = d.y(), z = d.z();
  out[1] = -kSH1 * y;
  out[2] = kSH1 * z;
  out[3] = -kSH1 * x;
  out[4] = kSH2[0] * x * y;
  out[5] = kSH2[1] * y * z;
  out[6] = kSH2[2] * (2.0 * z * z - x * x - y * y);
  out[7] = kSH2[3] * x * z;
  out[8] = kSH2[4] * (x * x - y * y);
  return 9;
}

void sh_basis_grad(const Vec3& d, Vec3* out) {
  const double x = d.x(), y = d.y(), z = d.z();
  out[0] = Vec3::Zero();
  out[1] = Vec3(0, -kSH1, 0);
  out[2] = Vec3(0, 0, kSH1);
  out[3] = Vec3(-kSH1, 0, 0);
  out[4] = kSH2[0] * Vec3(y, x, 0);
  out[5] = kSH2[1] * Vec3(0, z, y);
  out[6] = kSH2[2] * Vec3(-2 * x, -2 * y, 4 * z);
  out[7] = kSH2[3] * Vec3(z, 0, x);
  out[8] = kSH2[4] * Vec3(2 * x, -2 * y, 0);
}

struct PreparedDisk {
  Vec3 p, tu, tv, n;       // n = tu x tv, not renormalized
  Vec3 po;                 // p - camera center
  double su, sv, alpha;
  Vec3 color;              // clamped at zero
  Vec3 raw_color;
  bool visible = false;
  ScreenFootprint fp;
};

struct HitGeom {
  double s = 0, u = 0, v = 0, g = 0, k = 0;
  Vec3 delta = Vec3::Zero();
};

/// Ray-plane intersection for the ray through (px, py). Returns false on
/// NO_HIT. `near` guards intersections at or behind the camera.
inline bool eval_hit(const PreparedDisk& d, const Camera& cam, const Vec3& origin, const Vec3& dir,
                     const RenderOptions& opts, HitGeom& out) {
  const double k = dir.dot(d.n);
  if (std::abs(k) < 1e-9 * dir.norm() * d.n.norm()) return false;
  const double h = d.po.dot(d.n);
  const double s = h / k;
  if (s <= opts.near_plane) return false;
  const Vec3 delta = origin + s * dir - d.p;
  const double u = delta.dot(d.tu);
  const double v = delta.dot(d.tv);
  const double g = std::exp(-0.5 * (u * u / (d.su * d.su) + v * v / (d.sv * d.sv)));
  if (g < opts.gaussian_cutoff) return false;
  out = HitGeom{s, u, v, g, k, delta};
  return true;
}

PreparedDisk prepare_disk(const GaussianDisk& disk, const Camera& cam, const Vec3& origin,
                          const RenderOptions& opts) {
  PreparedDisk d;
  d.p = disk.position;
  d.tu = disk.tangent_u;
  d.tv = disk.tangent_v;
  d.n = d.tu.cross(d.tv);
  d.po = d.p - origin;
  d.su = disk.scale_u();
  d.sv = disk.scale_v();
  d.alpha = disk.opacity;
  double basis[9];
  const int nb = sh_basis(d.po.norm() > 0 ? Vec3(d.po.normalized()) : Vec3::UnitZ(), basis);
  Vec3 raw = Vec3::Zero();
  const int nc = std::min<int>(static_cast<int>(disk.sh.size()), nb);
  for (int j = 0; j < nc; ++j) raw += basis[j] * disk.sh[j];
  d.raw_color = raw;
  d.color = raw.cwiseMax(0.0);
  auto fp = project_splat(disk, cam, opts);
  if (fp) {
    d.visible = true;
    d.fp = *fp;
  }
  return d;
}

struct TileBins {
  int tiles_x = 0, tiles_y = 0;
  std::vector<uint32_t> offsets;
  std::vector<uint32_t> ids;
};

TileBins build_bins(const std::vector<PreparedDisk>& disks, int width, int height) {
  TileBins bins;
  bins.tiles_x = (width + kTileSize - 1) / kTileSize;
  bins.tiles_y = (height + kTileSize - 1) / kTileSize;
  const size_t n_tiles = static_cast<size_t>(bins.tiles_x) * bins.tiles_y;
  std::vector<uint32_t> counts(n_tiles, 0);
  auto tile_range = [&](const ScreenFootprint& fp, int& tx0, int& ty0, int& tx1, int& ty1) {
    tx0 = fp.x0 / kTileSize;
    ty0 = fp.y0 / kTileSize;
    tx1 = fp.x1 / kTileSize;
    ty1 = fp.y1 / kTileSize;
  };
  for (const auto& d : disks) {
    if (!d.visible) continue;
    int tx0, ty0, tx1, ty1;
    tile_range(d.fp, tx0, ty0, tx1, ty1);
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx) ++counts[static_cast<size_t>(ty) * bins.tiles_x + tx];
  }
  bins.offsets.assign(n_tiles + 1, 0);
  for (size_t i = 0; i < n_tiles; ++i) bins.offsets[i + 1] = bins.offsets[i] + counts[i];
  bins.ids.resize(bins.offsets.back());
  std::vector<uint32_t> cursor(bins.offsets.begin(), bins.offsets.end() - 1);
  for (uint32_t id = 0; id < disks.size(); ++id) {
    const auto& d = disks[id];
    if (!d.visible) continue;
    int tx0, ty0, tx1, ty1;
    tile_range(d.fp, tx0, ty0, tx1, ty1);
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx)
        bins.ids[cursor[static_cast<size_t>(ty) * bins.tiles_x + tx]++] = id;
  }
  return bins;
}

struct PixelHit {
  double s, g;
  uint32_t id;
};

}  // namespace

std::optional<ScreenFootprint> project_splat(const GaussianDisk& disk, const Camera& camera,
                                             const RenderOptions& opts) {
  const Vec3 pc = camera.to_camera(disk.position);
  if (pc.z() <= opts.near_plane) return std::nullopt;

  ScreenFootprint fp;
  fp.center_px = Vec2(camera.fx * pc.x() / pc.z() + camera.cx,
                      camera.fy * pc.y() / pc.z() + camera.cy);
  fp.mean_depth = pc.z();

  // World-axis-aligned box around the 3-sigma ellipse, then the screen box of
  // its corners. Perspective maps the box hull into the hull of the projected
  // corners as long as every corner is in front of the near plane; otherwise
  // fall back to the full image.
  const double su = 3.0 * disk.scale_u(), sv = 3.0 * disk.scale_v();
  Vec3 ext;
  for (int j = 0; j < 3; ++j) {
    const double a = su * disk.tangent_u[j];
    const double b = sv * disk.tangent_v[j];
    ext[j] = std::sqrt(a * a + b * b);
  }
  double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
  bool crosses_near = false;
  for (int corner = 0; corner < 8; ++corner) {
    Vec3 w = disk.position;
    for (int j = 0; j < 3; ++j) w[j] += (corner & (1 << j)) ? ext[j] : -ext[j];
    const Vec3 c = camera.to_camera(w);
    if (c.z() <= opts.near_plane) {
      crosses_near = true;
      break;
    }
    minx = std::min(minx, camera.fx * c.x() / c.z() + camera.cx);
    maxx = std::max(maxx, camera.fx * c.x() / c.z() + camera.cx);
    miny = std::min(miny, camera.fy * c.y() / c.z() + camera.cy);
    maxy = std::max(maxy, camera.fy * c.y() / c.z() + camera.cy);
  }
  if (crosses_near) {
    fp.x0 = 0;
    fp.y0 = 0;
    fp.x1 = camera.width - 1;
    fp.y1 = camera.height - 1;
    return fp;
  }
  fp.x0 = std::max(0, static_cast<int>(std::floor(minx)) - 1);
  fp.y0 = std::max(0, static_cast<int>(std::floor(miny)) - 1);
  fp.x1 = std::min(camera.width - 1, static_cast<int>(std::ceil(maxx)) + 1);
  fp.y1 = std::min(camera.height - 1, static_cast<int>(std::ceil(maxy)) + 1);
  if (fp.x0 > fp.x1 || fp.y0 > fp.y1) return std::nullopt;
  return fp;
}

std::optional<SplatHit> eval_splat_at_pixel(const GaussianDisk& disk, const Camera& camera,
                                            double px, double py, const RenderOptions& opts) {
  const Vec3 origin = camera.center();
  PreparedDisk d;
  d.p = disk.position;
  d.tu = disk.tangent_u;
  d.tv = disk.tangent_v;
  d.n = d.tu.cross(d.tv);
  d.po = d.p - origin;
  d.su = disk.scale_u();
  d.sv = disk.scale_v();
  HitGeom hit;
  if (!eval_hit(d, camera, origin, camera.ray_dir(px, py), opts, hit)) return std::nullopt;
  return SplatHit{hit.g, hit.s};
}

Vec3 eval_sh_color(const GaussianDisk& disk, const Vec3& cam_center) {
  const Vec3 po = disk.position - cam_center;
  double basis[9];
  sh_basis(po.norm() > 0 ? Vec3(po.normalized()) : Vec3::UnitZ(), basis);
  Vec3 raw = Vec3::Zero();
  const int nc = std::min<int>(static_cast<int>(disk.sh.size()), 9);
  for (int j = 0; j < nc; ++j) raw += basis[j] * disk.sh[j];
  return raw.cwiseMax(0.0);
}

FrameRGBD render(const SplatCloud& cloud, const Camera& camera, const Vec3& background,
                 const RenderOptions& opts, RenderCache* cache) {
  const int W = camera.width, H = camera.height;
  FrameRGBD frame(W, H);
  const Vec3 origin = camera.center();

  std::vector<PreparedDisk> prepared(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i)
    prepared[i] = prepare_disk(cloud.disks[i], camera, origin, opts);
  const TileBins bins = build_bins(prepared, W, H);

  Image depth_num(W, H, 1, 0.0);
  std::vector<std::vector<uint32_t>> row_hits(H);
  std::vector<uint32_t> pixel_counts(static_cast<size_t>(W) * H, 0);

  auto shade_row = [&](int y) {
    std::vector<PixelHit> hits;
    hits.reserve(64);
    auto& row = row_hits[y];
    const int ty = y / kTileSize;
    for (int x = 0; x < W; ++x) {
      const int tx = x / kTileSize;
      const uint32_t* tb = bins.ids.data() + bins.offsets[static_cast<size_t>(ty) * bins.tiles_x + tx];
      const uint32_t* te = bins.ids.data() + bins.offsets[static_cast<size_t>(ty) * bins.tiles_x + tx + 1];
      hits.clear();
      const Vec3 dir = camera.ray_dir(x, y);
      for (const uint32_t* it = tb; it != te; ++it) {
        const PreparedDisk& d = prepared[*it];
        if (x < d.fp.x0 || x > d.fp.x1 || y < d.fp.y0 || y > d.fp.y1) continue;
        HitGeom hg;
        if (eval_hit(d, camera, origin, dir, opts, hg)) hits.push_back({hg.s, hg.g, *it});
      }
      std::sort(hits.begin(), hits.end(), [](const PixelHit& a, const PixelHit& b) {
        return a.s != b.s ? a.s < b.s : a.id < b.id;
      });

      double T = 1.0, S = 0.0;
      Vec3 C = Vec3::Zero();
      uint32_t n_composited = 0;
      for (const PixelHit& h : hits) {
        const double a = std::min(1.0, prepared[h.id].alpha * h.g);
        const double w = a * T;
        C += w * prepared[h.id].color;
        S += w * h.s;
        row.push_back(h.id);
        ++n_composited;
        T *= (1.0 - a);
        if (T < opts.min_transmittance) break;
      }
      pixel_counts[static_cast<size_t>(y) * W + x] = n_composited;
      C += background * T;
      for (int c = 0; c < 3; ++c) frame.rgb.at(x, y, c) = C[c];
      frame.transmittance.at(x, y) = T;
      depth_num.at(x, y) = S;
      const double cov = 1.0 - T;
      if (cov > opts.min_coverage) {
        frame.depth.at(x, y) = S / cov;
        frame.valid.set(x, y, true);
      } else {
        frame.depth.at(x, y) = 0.0;
        frame.valid.set(x, y, false);
      }
    }
  };

  if (opts.parallel) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < H; ++y) shade_row(y);
  } else {
    for (int y = 0; y < H; ++y) shade_row(y);
  }

  // Hits are re-packed serially in row order so the cache layout does not
  // depend on the thread count.
  if (cache) {
    cache->width = W;
    cache->height = H;
    cache->cloud_revision = cloud.revision;
    cache->disk_count = cloud.size();
    cache->background = background;
    cache->offsets.assign(static_cast<size_t>(W) * H + 1, 0);
    for (size_t i = 0; i < pixel_counts.size(); ++i)
      cache->offsets[i + 1] = cache->offsets[i] + pixel_counts[i];
    cache->hit_disk.resize(cache->offsets.back());
    for (int y = 0; y < H; ++y) {
      std::copy(row_hits[y].begin(), row_hits[y].end(),
                cache->hit_disk.begin() + cache->offsets[static_cast<size_t>(y) * W]);
    }
    cache->depth_numerator = std::move(depth_num);
  }
  return frame;
}

void BackwardResult::init(const SplatCloud& cloud) {
  const size_t n = cloud.size();
  d_position.assign(n, Vec3::Zero());
  d_opacity.assign(n, 0.0);
  d_log_scale_u.assign(n, 0.0);
  d_log_scale_v.assign(n, 0.0);
  d_rotation.assign(n, Vec3::Zero());
  d_sh.resize(n);
  for (size_t i = 0; i < n; ++i) d_sh[i].assign(cloud.disks[i].sh.size(), Vec3::Zero());
  view_grad_mag.assign(n, 0.0);
  contributed.assign(n, 0);
}

void BackwardResult::axpy(double a, const BackwardResult& o) {
  for (size_t i = 0; i < d_position.size(); ++i) {
    d_position[i] += a * o.d_position[i];
    d_opacity[i] += a * o.d_opacity[i];
    d_log_scale_u[i] += a * o.d_log_scale_u[i];
    d_log_scale_v[i] += a * o.d_log_scale_v[i];
    d_rotation[i] += a * o.d_rotation[i];
    for (size_t j = 0; j < d_sh[i].size(); ++j) d_sh[i][j] += a * o.d_sh[i][j];
    contributed[i] |= o.contributed[i];
  }
}

BackwardResult render_backward(const SplatCloud& cloud, const Camera& camera,
                               const RenderCache& cache, const PixelGrads& upstream,
                               const RenderOptions& opts) {
  require(cache.valid_for(cloud, camera), ErrCode::StaleForward,
          "render cache does not match the cloud/camera state");
  const int W = camera.width, H = camera.height;
  const Vec3 origin = camera.center();

  std::vector<PreparedDisk> prepared(cloud.size());
  std::vector<Vec3> gen_axes(cloud.size() * 3);
  for (size_t i = 0; i < cloud.size(); ++i) {
    prepared[i] = prepare_disk(cloud.disks[i], camera, origin, opts);
    const Vec3 n_unit = prepared[i].n.norm() > 0 ? Vec3(prepared[i].n.normalized()) : Vec3::UnitZ();
    gen_axes[3 * i + 0] = n_unit;
    gen_axes[3 * i + 1] = prepared[i].tu;
    gen_axes[3 * i + 2] = prepared[i].tv;
  }

  const bool has_rgb = upstream.d_rgb.size() > 0;
  const bool has_depth = upstream.d_depth.size() > 0;
  const bool has_T = upstream.d_transmittance.size() > 0;

  int n_threads = 1;
#ifdef _OPENMP
  n_threads = opts.parallel ? omp_get_max_threads() : 1;
#endif
  std::vector<BackwardResult> partials(n_threads);
  for (auto& p : partials) p.init(cloud);

  auto backward_row = [&](int y, BackwardResult& acc) {
    std::vector<double> a_arr, T_arr, w_arr, s_arr, g_arr;
    std::vector<HitGeom> geo;
    const Vec3 bg = cache.background;
    for (int x = 0; x < W; ++x) {
      const size_t pix = static_cast<size_t>(y) * W + x;
      const uint32_t h0 = cache.offsets[pix], h1 = cache.offsets[pix + 1];
      if (h0 == h1) continue;
      const Vec3 dir = camera.ray_dir(x, y);

      const int m = static_cast<int>(h1 - h0);
      a_arr.resize(m);
      T_arr.resize(m);
      w_arr.resize(m);
      s_arr.resize(m);
      g_arr.resize(m);
      geo.resize(m);
      double T = 1.0, S = 0.0;
      for (int i = 0; i < m; ++i) {
        const uint32_t id = cache.hit_disk[h0 + i];
        const PreparedDisk& d = prepared[id];
        HitGeom hg;
        const bool ok = eval_hit(d, camera, origin, dir, opts, hg);
        // The cache was produced by the same forward math, so every cached
        // hit must re-evaluate.
        if (!ok) fail(ErrCode::StaleForward, "cached hit no longer intersects");
        geo[i] = hg;
        const double a = std::min(1.0, d.alpha * hg.g);
        a_arr[i] = a;
        T_arr[i] = T;
        w_arr[i] = a * T;
        s_arr[i] = hg.s;
        g_arr[i] = hg.g;
        S += w_arr[i] * hg.s;
        T *= (1.0 - a);
      }
      const double T_final = T;
      const double cov = 1.0 - T_final;

      Vec3 gC = Vec3::Zero();
      if (has_rgb)
        gC = Vec3(upstream.d_rgb.at(x, y, 0), upstream.d_rgb.at(x, y, 1), upstream.d_rgb.at(x, y, 2));
      double gS = 0.0;
      double gT = has_T ? upstream.d_transmittance.at(x, y) : 0.0;
      if (has_depth && cov > opts.min_coverage) {
        const double gD = upstream.d_depth.at(x, y);
        gS += gD / cov;
        gT += gD * S / (cov * cov);
      }
      if (gC.isZero(0.0) && gS == 0.0 && gT == 0.0) continue;
      const double B = gC.dot(bg) + gT;

      // Back-to-front sweep; accum_A composites the "behind" value with the
      // leading transmittance factored out, which avoids dividing by (1-a).
      double accum_A = 0.0, T_behind = 1.0;
      for (int i = m - 1; i >= 0; --i) {
        const uint32_t id = cache.hit_disk[h0 + i];
        const PreparedDisk& d = prepared[id];
        const HitGeom& hg = geo[i];
        const double A_i = gC.dot(d.color) + gS * s_arr[i];
        const double da = T_arr[i] * (A_i - accum_A - B * T_behind);
        accum_A = a_arr[i] * A_i + (1.0 - a_arr[i]) * accum_A;
        T_behind *= (1.0 - a_arr[i]);

        const double dL_dg = d.alpha * da;
        acc.d_opacity[id] += g_arr[i] * da;

        // Color path (clamped channels pass no gradient).
        Vec3 c_bar = w_arr[i] * gC;
        for (int ch = 0; ch < 3; ++ch)
          if (d.raw_color[ch] <= 0.0) c_bar[ch] = 0.0;
        if (!c_bar.isZero(0.0)) {
          double basis[9];
          const Vec3 dirc = d.po.norm() > 0 ? Vec3(d.po.normalized()) : Vec3::UnitZ();
          sh_basis(dirc, basis);
          auto& dsh = acc.d_sh[id];
          const int nc = static_cast<int>(dsh.size());
          for (int j = 0; j < nc; ++j) dsh[j] += basis[j] * c_bar;
          if (nc > 1) {
            Vec3 bg_grad[9];
            sh_basis_grad(dirc, bg_grad);
            Vec3 draw_dot = Vec3::Zero();  // sum_ch c_bar[ch] * d(raw_ch)/d(dir)
            for (int j = 1; j < nc; ++j) draw_dot += bg_grad[j] * c_bar.dot(cloud.disks[id].sh[j]);
            const double r = d.po.norm();
            const Vec3 J_dd = (draw_dot - dirc * dirc.dot(draw_dot)) / r;
            acc.d_position[id] += J_dd;
          }
        }

        // Geometry path.
        const double su2 = d.su * d.su, sv2 = d.sv * d.sv;
        const double u_bar = dL_dg * hg.g * (-hg.u / su2);
        const double v_bar = dL_dg * hg.g * (-hg.v / sv2);
        acc.d_log_scale_u[id] += dL_dg * hg.g * (hg.u * hg.u / su2);
        acc.d_log_scale_v[id] += dL_dg * hg.g * (hg.v * hg.v / sv2);

        double s_bar = w_arr[i] * gS;  // depth compositing
        const Vec3 delta_bar = u_bar * d.tu + v_bar * d.tv;
        Vec3 tu_bar = u_bar * hg.delta;
        Vec3 tv_bar = v_bar * hg.delta;
        s_bar += delta_bar.dot(dir);
        Vec3 p_bar = -delta_bar;
        const double h_bar = s_bar / hg.k;
        const double k_bar = -s_bar * hg.s / hg.k;
        p_bar += h_bar * d.n;
        const Vec3 n_bar = h_bar * d.po + k_bar * dir;
        tu_bar += d.tv.cross(n_bar);
        tv_bar += n_bar.cross(d.tu);

        acc.d_position[id] += p_bar;
        const Vec3* axes = &gen_axes[3 * id];
        for (int kax = 0; kax < 3; ++kax)
          acc.d_rotation[id][kax] +=
              axes[kax].cross(d.tu).dot(tu_bar) + axes[kax].cross(d.tv).dot(tv_bar);
      }
    }
  };

  if (opts.parallel && n_threads > 1) {
#pragma omp parallel
    {
      const int tid = omp_get_thread_num();
#pragma omp for schedule(static)
      for (int y = 0; y < H; ++y) backward_row(y, partials[tid]);
    }
  } else {
    for (int y = 0; y < H; ++y) backward_row(y, partials[0]);
  }

  BackwardResult out;
  out.init(cloud);
  for (int t = 0; t < n_threads; ++t) out.axpy(1.0, partials[t]);

  // Contribution flags come from the cache (independent of upstream values).
  for (size_t pix = 0; pix + 1 < cache.offsets.size(); ++pix)
    for (uint32_t j = cache.offsets[pix]; j < cache.offsets[pix + 1]; ++j)
      out.contributed[cache.hit_disk[j]] = 1;

  // View-space gradient of the projected center: the world-position gradient
  // pushed through the pseudo-inverse of the projection Jacobian.
  for (size_t i = 0; i < cloud.size(); ++i) {
    if (!out.contributed[i]) continue;
    const Vec3 pc = camera.to_camera(cloud.disks[i].position);
    if (pc.z() <= opts.near_plane) continue;
    Eigen::Matrix<double, 2, 3> J;
    J << camera.fx / pc.z(), 0, -camera.fx * pc.x() / (pc.z() * pc.z()),
        0, camera.fy / pc.z(), -camera.fy * pc.y() / (pc.z() * pc.z());
    const Eigen::Matrix<double, 2, 3> M = J * camera.rotation;
    const Eigen::Matrix2d MMt = M * M.transpose();
    if (std::abs(MMt.determinant()) < 1e-30) continue;
    const Vec2 view_grad = MMt.inverse() * (M * out.d_position[i]);
    out.view_grad_mag[i] = view_grad.norm();
  }
  return out;
}

void rotate_tangent_frame(GaussianDisk& disk, const Vec3& angles) {
  Vec3 n = disk.normal();
  if (n.norm() > 0) n.normalize();
  const Vec3 axis_world =
      angles[0] * n + angles[1] * disk.tangent_u + angles[2] * disk.tangent_v;
  const double angle = axis_world.norm();
  if (angle > 0) {
    const Eigen::AngleAxisd rot(angle, axis_world / angle);
    disk.tangent_u = rot * disk.tangent_u;
    disk.tangent_v = rot * disk.tangent_v;
  }
  disk.orthonormalize_tangents();
}

}  // namespace gf
