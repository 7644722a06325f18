#include "gf/losses.hpp"

#include <cmath>

namespace gf {
namespace {

constexpr int kWin = 11;
constexpr int kRad = kWin / 2;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const double* ssim_kernel() {
  static double k[kWin];
  static bool done = false;
  if (!done) {
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
      const double d = i - kRad;
      k[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
      sum += k[i];
    }
    for (int i = 0; i < kWin; ++i) k[i] /= sum;
    done = true;
  }
  return k;
}

inline int reflect(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

// 1D Gaussian blur along x then y for a single-channel plane.
void blur(const std::vector<double>& src, int w, int h, std::vector<double>& dst,
          std::vector<double>& tmp) {
  const double* k = ssim_kernel();
  tmp.resize(src.size());
  dst.resize(src.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int j = 0; j < kWin; ++j) acc += k[j] * src[static_cast<size_t>(y) * w + reflect(x + j - kRad, w)];
      tmp[static_cast<size_t>(y) * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int j = 0; j < kWin; ++j) acc += k[j] * tmp[static_cast<size_t>(reflect(y + j - kRad, h)) * w + x];
      dst[static_cast<size_t>(y) * w + x] = acc;
    }
}

// Adjoint of blur(): scatter in the reverse pass order (y then x).
void blur_adjoint(const std::vector<double>& grad_out, int w, int h, std::vector<double>& grad_in,
                  std::vector<double>& tmp) {
  const double* k = ssim_kernel();
  tmp.assign(grad_out.size(), 0.0);
  grad_in.assign(grad_out.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double g = grad_out[static_cast<size_t>(y) * w + x];
      if (g == 0.0) continue;
      for (int j = 0; j < kWin; ++j) tmp[static_cast<size_t>(reflect(y + j - kRad, h)) * w + x] += k[j] * g;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double g = tmp[static_cast<size_t>(y) * w + x];
      if (g == 0.0) continue;
      for (int j = 0; j < kWin; ++j) grad_in[static_cast<size_t>(y) * w + reflect(x + j - kRad, w)] += k[j] * g;
    }
}

void extract_channel(const Image& img, int c, std::vector<double>& out) {
  out.resize(static_cast<size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out[static_cast<size_t>(y) * img.width + x] = img.at(x, y, c);
}

struct SsimMaps {
  std::vector<double> mx, my, ex2, ey2, exy;
};

double ssim_channel(const std::vector<double>& x, const std::vector<double>& y, int w, int h,
                    SsimMaps* maps) {
  std::vector<double> tmp, x2(x.size()), y2(x.size()), xy(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    x2[i] = x[i] * x[i];
    y2[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  SsimMaps local;
  SsimMaps& m = maps ? *maps : local;
  blur(x, w, h, m.mx, tmp);
  blur(y, w, h, m.my, tmp);
  blur(x2, w, h, m.ex2, tmp);
  blur(y2, w, h, m.ey2, tmp);
  blur(xy, w, h, m.exy, tmp);
  double total = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double a1 = 2.0 * m.mx[i] * m.my[i] + kC1;
    const double a2 = 2.0 * (m.exy[i] - m.mx[i] * m.my[i]) + kC2;
    const double b1 = m.mx[i] * m.mx[i] + m.my[i] * m.my[i] + kC1;
    const double b2 = (m.ex2[i] - m.mx[i] * m.mx[i]) + (m.ey2[i] - m.my[i] * m.my[i]) + kC2;
    total += (a1 * a2) / (b1 * b2);
  }
  return total / static_cast<double>(x.size());
}

}  // namespace

double l1_loss(const Image& a, const Image& b, const Mask& mask) {
  require(a.same_shape(b) && a.width == mask.width && a.height == mask.height,
          ErrCode::ShapeMismatch, "l1_loss operands");
  double sum = 0.0;
  size_t n = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      if (!mask.at(x, y)) continue;
      for (int c = 0; c < a.channels; ++c) sum += std::abs(a.at(x, y, c) - b.at(x, y, c));
      n += a.channels;
    }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

void l1_loss_grad(const Image& a, const Image& b, const Mask& mask, double weight, Image& d_a) {
  require(a.same_shape(b) && a.same_shape(d_a), ErrCode::ShapeMismatch, "l1_loss_grad operands");
  size_t n = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x)
      if (mask.at(x, y)) n += a.channels;
  if (n == 0) return;
  const double scale = weight / static_cast<double>(n);
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      if (!mask.at(x, y)) continue;
      for (int c = 0; c < a.channels; ++c) {
        const double d = a.at(x, y, c) - b.at(x, y, c);
        d_a.at(x, y, c) += scale * (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0));
      }
    }
}

double ssim(const Image& a, const Image& b) {
  require(a.same_shape(b), ErrCode::ShapeMismatch, "ssim operands");
  std::vector<double> xa, xb;
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    extract_channel(a, c, xa);
    extract_channel(b, c, xb);
    total += ssim_channel(xa, xb, a.width, a.height, nullptr);
  }
  return total / a.channels;
}

void ssim_grad(const Image& a, const Image& b, double weight, Image& d_a) {
  require(a.same_shape(b) && a.same_shape(d_a), ErrCode::ShapeMismatch, "ssim_grad operands");
  const int w = a.width, h = a.height;
  const size_t npix = static_cast<size_t>(w) * h;
  const double scale = weight / (static_cast<double>(npix) * a.channels);
  std::vector<double> xa, xb, gmx(npix), gex2(npix), gexy(npix), adj, tmp;
  for (int c = 0; c < a.channels; ++c) {
    extract_channel(a, c, xa);
    extract_channel(b, c, xb);
    SsimMaps m;
    ssim_channel(xa, xb, w, h, &m);
    for (size_t i = 0; i < npix; ++i) {
      const double a1 = 2.0 * m.mx[i] * m.my[i] + kC1;
      const double a2 = 2.0 * (m.exy[i] - m.mx[i] * m.my[i]) + kC2;
      const double b1 = m.mx[i] * m.mx[i] + m.my[i] * m.my[i] + kC1;
      const double b2 = (m.ex2[i] - m.mx[i] * m.mx[i]) + (m.ey2[i] - m.my[i] * m.my[i]) + kC2;
      const double inv_b1b2 = 1.0 / (b1 * b2);
      const double s = a1 * a2 * inv_b1b2;
      const double ds_da1 = a2 * inv_b1b2;
      const double ds_da2 = a1 * inv_b1b2;
      const double ds_db1 = -s / b1;
      const double ds_db2 = -s / b2;
      gmx[i] = ds_da1 * 2.0 * m.my[i] + ds_da2 * (-2.0 * m.my[i]) + ds_db1 * 2.0 * m.mx[i] +
               ds_db2 * (-2.0 * m.mx[i]);
      gex2[i] = ds_db2;
      gexy[i] = 2.0 * ds_da2;
    }
    blur_adjoint(gmx, w, h, adj, tmp);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) d_a.at(x, y, c) += scale * adj[static_cast<size_t>(y) * w + x];
    blur_adjoint(gex2, w, h, adj, tmp);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        d_a.at(x, y, c) += scale * 2.0 * xa[static_cast<size_t>(y) * w + x] * adj[static_cast<size_t>(y) * w + x];
    blur_adjoint(gexy, w, h, adj, tmp);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        d_a.at(x, y, c) += scale * xb[static_cast<size_t>(y) * w + x] * adj[static_cast<size_t>(y) * w + x];
  }
}

double psnr(const Image& a, const Image& b) {
  require(a.same_shape(b), ErrCode::ShapeMismatch, "psnr operands");
  double mse = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse < 1e-12) return 99.0;
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

struct SsiFit {
  double s = 1.0, t = 0.0;
  double m00, m01, m11;  // (possibly regularized) normal matrix
  size_t n = 0;
};

SsiFit ssi_fit(const Image& pred, const Image& target, const Mask& mask) {
  require(pred.same_shape(target) && pred.channels == 1 && pred.width == mask.width &&
              pred.height == mask.height,
          ErrCode::ShapeMismatch, "ssi_depth_loss operands");
  double spp = 0, sp = 0, spy = 0, sy = 0;
  size_t n = 0;
  for (int y = 0; y < pred.height; ++y)
    for (int x = 0; x < pred.width; ++x) {
      if (!mask.at(x, y)) continue;
      const double p = pred.at(x, y), t = target.at(x, y);
      spp += p * p;
      sp += p;
      spy += p * t;
      sy += t;
      ++n;
    }
  require(n >= 2, ErrCode::EmptyMask, "ssi_depth_loss needs >= 2 masked pixels");
  SsiFit fit;
  fit.n = n;
  fit.m00 = spp;
  fit.m01 = sp;
  fit.m11 = static_cast<double>(n);
  double det = fit.m00 * fit.m11 - fit.m01 * fit.m01;
  if (det <= 1e-12 * std::max(spp * static_cast<double>(n), 1e-300)) {
    fit.m00 += 1e-8;
    fit.m11 += 1e-8;
    det = fit.m00 * fit.m11 - fit.m01 * fit.m01;
  }
  fit.s = (fit.m11 * spy - fit.m01 * sy) / det;
  fit.t = (-fit.m01 * spy + fit.m00 * sy) / det;
  return fit;
}

}  // namespace

double ssi_depth_loss(const Image& pred, const Image& target, const Mask& mask) {
  const SsiFit fit = ssi_fit(pred, target, mask);
  double sum = 0.0;
  for (int y = 0; y < pred.height; ++y)
    for (int x = 0; x < pred.width; ++x) {
      if (!mask.at(x, y)) continue;
      sum += std::abs(fit.s * pred.at(x, y) + fit.t - target.at(x, y));
    }
  return sum / static_cast<double>(fit.n);
}

void ssi_depth_loss_grad(const Image& pred, const Image& target, const Mask& mask, double weight,
                         Image& d_pred) {
  const SsiFit fit = ssi_fit(pred, target, mask);
  // Direct |r| path plus the dependence of (s, t) on every masked pred pixel.
  double gs_sum = 0, gt_sum = 0;
  for (int y = 0; y < pred.height; ++y)
    for (int x = 0; x < pred.width; ++x) {
      if (!mask.at(x, y)) continue;
      const double r = fit.s * pred.at(x, y) + fit.t - target.at(x, y);
      const double sg = r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0);
      gs_sum += sg * pred.at(x, y);
      gt_sum += sg;
    }
  const double det = fit.m00 * fit.m11 - fit.m01 * fit.m01;
  const double A = (gs_sum * fit.m11 - gt_sum * fit.m01) / det;
  const double B = (-gs_sum * fit.m01 + gt_sum * fit.m00) / det;
  const double inv_n = 1.0 / static_cast<double>(fit.n);
  for (int y = 0; y < pred.height; ++y)
    for (int x = 0; x < pred.width; ++x) {
      if (!mask.at(x, y)) continue;
      const double p = pred.at(x, y), tv = target.at(x, y);
      const double r = fit.s * p + fit.t - tv;
      const double sg = r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0);
      d_pred.at(x, y) += weight * inv_n * (fit.s * sg + A * (tv - 2.0 * p * fit.s - fit.t) - B * fit.s);
    }
}

double lambda_schedule(int k, const ScheduleConfig& cfg) {
  if (k < cfg.k_start || k > cfg.k_end) return 0.0;
  const double phase = static_cast<double>(k - cfg.k_start) / static_cast<double>(cfg.k_end - cfg.k_start);
  return std::sin(phase * M_PI);
}

namespace {

// Tight bounding rectangle of the mask; SSIM is computed on the crop so that
// masked training matches training on a cropped camera.
bool mask_rect(const Mask& m, int& x0, int& y0, int& x1, int& y1) {
  x0 = m.width;
  y0 = m.height;
  x1 = -1;
  y1 = -1;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  return x1 >= 0;
}

Image crop(const Image& img, int x0, int y0, int x1, int y1) {
  Image out(x1 - x0 + 1, y1 - y0 + 1, img.channels);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(x - x0, y - y0, c) = img.at(x, y, c);
  return out;
}

double branch_loss(const FrameRGBD& rendered, const Supervision& sup, const LossWeights& w,
                   bool use_mono, double outer_weight, PixelGrads& grads) {
  const FrameRGBD& gt = *sup.frame;
  require(rendered.rgb.same_shape(gt.rgb), ErrCode::ShapeMismatch, "supervision frame size");
  Mask full(rendered.width(), rendered.height(), true);
  const Mask& keep = sup.keep ? *sup.keep : full;

  double value = 0.0;
  const double l1 = l1_loss(rendered.rgb, gt.rgb, keep);
  value += w.lambda_l1 * l1;
  if (outer_weight != 0.0) l1_loss_grad(rendered.rgb, gt.rgb, keep, outer_weight * w.lambda_l1, grads.d_rgb);

  int x0, y0, x1, y1;
  if (mask_rect(keep, x0, y0, x1, y1)) {
    if (x0 == 0 && y0 == 0 && x1 == rendered.width() - 1 && y1 == rendered.height() - 1) {
      value += w.lambda_ssim * (1.0 - ssim(rendered.rgb, gt.rgb));
      if (outer_weight != 0.0)
        ssim_grad(rendered.rgb, gt.rgb, -outer_weight * w.lambda_ssim, grads.d_rgb);
    } else {
      const Image ra = crop(rendered.rgb, x0, y0, x1, y1);
      const Image rb = crop(gt.rgb, x0, y0, x1, y1);
      value += w.lambda_ssim * (1.0 - ssim(ra, rb));
      if (outer_weight != 0.0) {
        Image dcrop(ra.width, ra.height, 3);
        ssim_grad(ra, rb, -outer_weight * w.lambda_ssim, dcrop);
        for (int y = y0; y <= y1; ++y)
          for (int x = x0; x <= x1; ++x)
            for (int c = 0; c < 3; ++c) grads.d_rgb.at(x, y, c) += dcrop.at(x - x0, y - y0, c);
      }
    }
  }

  if (use_mono && w.lambda_mono > 0.0) {
    Mask dmask(rendered.width(), rendered.height(), false);
    size_t n = 0;
    for (int y = 0; y < rendered.height(); ++y)
      for (int x = 0; x < rendered.width(); ++x) {
        const bool ok = keep.at(x, y) && rendered.valid.at(x, y) && gt.valid.at(x, y);
        dmask.set(x, y, ok);
        n += ok;
      }
    if (n >= 2) {
      value += w.lambda_mono * ssi_depth_loss(rendered.depth, gt.depth, dmask);
      if (outer_weight != 0.0)
        ssi_depth_loss_grad(rendered.depth, gt.depth, dmask, outer_weight * w.lambda_mono,
                            grads.d_depth);
    }
  }
  return value;
}

}  // namespace

TotalLoss total_loss(const FrameRGBD& rendered, const Supervision* input_gt,
                     const Supervision* generated, const LossWeights& weights, double lambda,
                     const TotalLossOptions& opts) {
  require((input_gt && input_gt->frame) || (generated && generated->frame), ErrCode::NoSupervision,
          "total_loss needs input_gt or generated");
  TotalLoss out;
  out.grads.d_rgb = Image(rendered.width(), rendered.height(), 3, 0.0);
  out.grads.d_depth = Image(rendered.width(), rendered.height(), 1, 0.0);
  if (input_gt && input_gt->frame)
    out.recon = branch_loss(rendered, *input_gt, weights, opts.mono_on_input, 1.0, out.grads);
  if (generated && generated->frame && lambda != 0.0)
    out.gen = branch_loss(rendered, *generated, weights, opts.mono_on_generated, lambda, out.grads);
  out.value = out.recon + lambda * out.gen;
  return out;
}

}  // namespace gf
