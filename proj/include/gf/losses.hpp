#pragma once

#include "gf/image.hpp"
#include "gf/render.hpp"

namespace gf {

struct LossWeights {
  double lambda_l1 = 0.8;
  double lambda_ssim = 0.2;
  double lambda_mono = 0.05;
};

struct ScheduleConfig {
  int k_start = 1000;
  int k_end = 7000;
};

/// Mean absolute difference over masked pixels (all channels); 0 on an empty mask.
double l1_loss(const Image& a, const Image& b, const Mask& mask);

/// Accumulates weight * d(l1_loss)/da into d_a.
void l1_loss_grad(const Image& a, const Image& b, const Mask& mask, double weight, Image& d_a);

/// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), C1=0.01^2, C2=0.03^2,
/// symmetric boundary, averaged over channels.
double ssim(const Image& a, const Image& b);

/// Accumulates weight * d(ssim)/da into d_a.
void ssim_grad(const Image& a, const Image& b, double weight, Image& d_a);

/// 10*log10(1/MSE) over [0,1] images; 99.0 sentinel when MSE < 1e-12.
double psnr(const Image& a, const Image& b);

/// Scale-and-shift-invariant depth error: fits s*pred+t to target by least
/// squares over the mask (diagonal-regularized by 1e-8 when pred is constant),
/// then returns the mean absolute residual over the mask.
double ssi_depth_loss(const Image& pred, const Image& target, const Mask& mask);

/// Accumulates weight * d(ssi_depth_loss)/d(pred), differentiated through the
/// least-squares fit.
void ssi_depth_loss_grad(const Image& pred, const Image& target, const Mask& mask, double weight,
                         Image& d_pred);

/// Sinusoidal warm-up/annealing weight; 0 outside [k_start, k_end].
double lambda_schedule(int k, const ScheduleConfig& cfg);

/// One supervision target: a frame plus an optional keep-mask (pixels outside
/// it are excluded from the loss; SSIM is evaluated on the mask's bounding
/// rectangle).
struct Supervision {
  const FrameRGBD* frame = nullptr;
  const Mask* keep = nullptr;
};

struct TotalLossOptions {
  bool mono_on_input = true;
  bool mono_on_generated = true;
};

struct TotalLoss {
  double value = 0.0;
  double recon = 0.0;
  double gen = 0.0;
  PixelGrads grads;
};

/// L = L_recon(rendered vs input_gt) + lambda * L_gen(rendered vs generated),
/// each branch lambda_l1*L1 + lambda_ssim*(1 - SSIM) + lambda_mono*SSI-depth.
/// Returns the value and gradients w.r.t. rendered rgb and depth.
TotalLoss total_loss(const FrameRGBD& rendered, const Supervision* input_gt,
                     const Supervision* generated, const LossWeights& weights, double lambda,
                     const TotalLossOptions& opts = {});

}  // namespace gf
