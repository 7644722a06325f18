#include "gf/protocol.hpp"

#include <algorithm>
#include <cmath>

namespace gf {

MaskRect quadrant_rect(int width, int height, MaskCorner corner) {
  const int w = (width + 1) / 2;
  const int h = (height + 1) / 2;
  MaskRect r{0, 0, w, h};
  if (corner == MaskCorner::TR || corner == MaskCorner::BR) r.x0 = width - w;
  if (corner == MaskCorner::BL || corner == MaskCorner::BR) r.y0 = height - h;
  return r;
}

Mask rect_mask(int width, int height, const MaskRect& r) {
  Mask m(width, height, false);
  for (int y = r.y0; y < r.y0 + r.h; ++y)
    for (int x = r.x0; x < r.x0 + r.w; ++x) m.set(x, y, true);
  return m;
}

Mask quadrant_mask(int width, int height, MaskCorner corner) {
  return rect_mask(width, height, quadrant_rect(width, height, corner));
}

std::vector<int> SplitManifest::train_indices() const {
  std::vector<int> out;
  for (const auto& e : entries)
    if (e.role == FrameRole::Train) out.push_back(e.frame);
  return out;
}

std::vector<int> SplitManifest::test_indices() const {
  std::vector<int> out;
  for (const auto& e : entries)
    if (e.role == FrameRole::Test) out.push_back(e.frame);
  return out;
}

namespace {

int stride_of(double ratio) {
  if (ratio == 1.0) return 1;
  if (ratio == 0.5) return 2;
  if (ratio == 0.25) return 4;
  return 0;
}

}  // namespace

SplitManifest datagen_split(int n_frames, int width, int height, double ratio, uint64_t path_seed) {
  const int stride = stride_of(ratio);
  require(stride != 0, ErrCode::RatioUnsupported, "ratio must be 1, 1/2 or 1/4");
  SplitManifest man;
  man.seed = path_seed;
  man.ratio = ratio;
  man.mode = "datagen";
  auto rng = seeded_rng(path_seed, 0x6d61736b);
  const MaskCorner corner = (rng() & 1) ? MaskCorner::BR : MaskCorner::TL;
  const MaskRect rect = quadrant_rect(width, height, corner);
  for (int i = 0; i < n_frames; ++i) {
    SplitEntry e;
    e.frame = i;
    if (i % stride == 0) {
      e.role = FrameRole::Train;
      e.window = rect;
    } else {
      e.role = FrameRole::Test;
    }
    man.entries.push_back(e);
  }
  return man;
}

SplitManifest eval_split(int n_frames, int width, int height, double ratio, uint64_t path_seed) {
  require(ratio == 0.5 || ratio == 0.25, ErrCode::RatioUnsupported, "eval ratio must be 1/2 or 1/4");
  const int stride = stride_of(ratio);
  SplitManifest man;
  man.seed = path_seed;
  man.ratio = ratio;
  man.mode = "eval";
  const int w = (width + 1) / 2;
  const int h = (height + 1) / 2;
  const int range_x = width - w;
  const int range_y = height - h;
  auto rng = seeded_rng(path_seed, 0x70617468);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  const double phase_x = phase(rng);
  const double phase_y = phase(rng);
  for (int i = 0; i < n_frames; ++i) {
    SplitEntry e;
    e.frame = i;
    if (i % stride == 0) {
      e.role = FrameRole::Train;
      const double t = 2.0 * M_PI * static_cast<double>(i) / std::max(n_frames, 1);
      int x0 = static_cast<int>(std::lround(0.5 * range_x * (1.0 + std::sin(t + phase_x))));
      int y0 = static_cast<int>(std::lround(0.5 * range_y * (1.0 + std::sin(t + phase_y))));
      x0 = std::clamp(x0, 0, range_x);
      y0 = std::clamp(y0, 0, range_y);
      e.window = MaskRect{x0, y0, w, h};
    } else {
      e.role = FrameRole::Test;
    }
    man.entries.push_back(e);
  }
  return man;
}

}  // namespace gf
