#pragma once

#include <cstdint>
#include <vector>

#include "gf/image.hpp"

namespace gf {

enum class MaskCorner { TL, TR, BL, BR };

struct MaskRect {
  int x0 = 0, y0 = 0, w = 0, h = 0;
};

/// Quarter-area keep window: ceil(H/2) x ceil(W/2) pixels at the given corner.
MaskRect quadrant_rect(int width, int height, MaskCorner corner);
Mask quadrant_mask(int width, int height, MaskCorner corner);
Mask rect_mask(int width, int height, const MaskRect& r);

enum class FrameRole { Train, Test };

struct SplitEntry {
  int frame = 0;
  FrameRole role = FrameRole::Train;
  MaskRect window;  // meaningful for train frames
};

struct SplitManifest {
  std::vector<SplitEntry> entries;
  uint64_t seed = 0;
  double ratio = 1.0;
  std::string mode;  // "datagen" or "eval"

  std::vector<int> train_indices() const;
  std::vector<int> test_indices() const;
};

/// Data-generation split: training frames are a uniform temporal stride of the
/// sequence, all masked by ONE corner window (TL or BR, drawn once per scene
/// from the seed); every original frame is a ground-truth target.
SplitManifest datagen_split(int n_frames, int width, int height, double ratio, uint64_t path_seed);

/// Far-field evaluation split: every (1/ratio)-th frame trains with a moving
/// quarter-area window (sinusoidal corner path, one period over the sequence,
/// phases from the seed); the remaining frames are full-view test targets.
/// ratio must be 1/2 or 1/4.
SplitManifest eval_split(int n_frames, int width, int height, double ratio, uint64_t path_seed);

}  // namespace gf
