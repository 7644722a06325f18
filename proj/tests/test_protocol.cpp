#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gf/protocol.hpp"
#include "test_util.hpp"

using namespace gf;
using namespace gf::testutil;

TEST_CASE("quadrant_mask corners and kept fraction") {
  const Mask tl = quadrant_mask(8, 8, MaskCorner::TL);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) CHECK(tl.at(x, y) == (x < 4 && y < 4));
  CHECK(tl.count() == 16);  // exactly 25%

  const Mask br = quadrant_mask(8, 8, MaskCorner::BR);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) CHECK(br.at(x, y) == (x >= 4 && y >= 4));

  // Odd dimensions: ceiling window, 4x4 out of 7x7.
  const Mask odd = quadrant_mask(7, 7, MaskCorner::TL);
  CHECK(odd.count() == 16);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 7; ++x) CHECK(odd.at(x, y) == (x < 4 && y < 4));
}

TEST_CASE("datagen_split: one corner per scene, stride train set, full GT") {
  const SplitManifest man = datagen_split(16, 32, 32, 0.25, 99);
  CHECK(man.entries.size() == 16);
  CHECK(man.train_indices() == std::vector<int>{0, 4, 8, 12});

  // Same corner window on every training frame, drawn once from the seed.
  MaskRect first;
  bool got = false;
  for (const auto& e : man.entries) {
    if (e.role != FrameRole::Train) continue;
    if (!got) {
      first = e.window;
      got = true;
    }
    CHECK(e.window.x0 == first.x0);
    CHECK(e.window.y0 == first.y0);
  }
  // Corner is TL or BR.
  const bool tl = first.x0 == 0 && first.y0 == 0;
  const bool br = first.x0 == 16 && first.y0 == 16;
  CHECK((tl || br));

  const SplitManifest again = datagen_split(16, 32, 32, 0.25, 99);
  CHECK(again.entries[0].window.x0 == man.entries[0].window.x0);

  const SplitManifest all = datagen_split(5, 32, 32, 1.0, 3);
  CHECK(all.train_indices().size() == 5);
}

TEST_CASE("eval_split: stride split, determinism, bounded moving window") {
  const SplitManifest man = eval_split(8, 64, 48, 0.5, 17);
  CHECK(man.train_indices() == std::vector<int>{0, 2, 4, 6});
  CHECK(man.test_indices() == std::vector<int>{1, 3, 5, 7});

  const SplitManifest again = eval_split(8, 64, 48, 0.5, 17);
  for (size_t i = 0; i < man.entries.size(); ++i) {
    CHECK(man.entries[i].window.x0 == again.entries[i].window.x0);
    CHECK(man.entries[i].window.y0 == again.entries[i].window.y0);
  }

  CHECK_THROWS_AS(eval_split(8, 64, 48, 0.3, 1), Error);

  // Window bounds and exact quarter-area size over many seeds.
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    const SplitManifest m = eval_split(12, 30, 22, 0.25, seed);
    for (const auto& e : m.entries) {
      if (e.role != FrameRole::Train) continue;
      CHECK(e.window.w == 15);
      CHECK(e.window.h == 11);
      CHECK(e.window.x0 >= 0);
      CHECK(e.window.y0 >= 0);
      CHECK(e.window.x0 + e.window.w <= 30);
      CHECK(e.window.y0 + e.window.h <= 22);
    }
  }
}

TEST_CASE("train/test sets are disjoint and exhaustive") {
  for (double ratio : {0.5, 0.25}) {
    const SplitManifest man = eval_split(13, 16, 16, ratio, 5);
    std::vector<bool> seen(13, false);
    for (const auto& e : man.entries) {
      CHECK_FALSE(seen[e.frame]);
      seen[e.frame] = true;
    }
    for (bool s : seen) CHECK(s);
    const auto train = man.train_indices();
    const auto test = man.test_indices();
    CHECK(train.size() + test.size() == 13);
  }
}

TEST_CASE("every produced mask is one contiguous ceil-half window") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const SplitManifest man = eval_split(9, 21, 17, 0.25, seed);
    for (const auto& e : man.entries) {
      if (e.role != FrameRole::Train) continue;
      const Mask m = rect_mask(21, 17, e.window);
      CHECK(m.count() == static_cast<size_t>(11) * 9);  // ceil(21/2) * ceil(17/2)
      // Contiguity: kept pixels fill the rectangle exactly.
      for (int y = 0; y < 17; ++y)
        for (int x = 0; x < 21; ++x)
          CHECK(m.at(x, y) == (x >= e.window.x0 && x < e.window.x0 + e.window.w &&
                               y >= e.window.y0 && y < e.window.y0 + e.window.h));
    }
  }
}

TEST_CASE("masking commutes with cropping to an adjusted principal point") {
  std::mt19937_64 rng(23);
  Camera cam = make_camera(32, 32, 28.0);
  const SplatCloud scene = random_cloud(rng, 2);
  const SplatCloud target_scene = random_cloud(rng, 2);

  const MaskRect win = eval_split(4, 32, 32, 0.5, 7).entries[0].window;
  const Mask keep = rect_mask(32, 32, win);

  const FrameRGBD rendered = render(scene, cam, Vec3::Zero());
  FrameRGBD gt = render(target_scene, cam, Vec3::Zero());
  Supervision masked{&gt, &keep};
  LossWeights w;
  const double masked_loss = total_loss(rendered, &masked, nullptr, w, 0.0).value;

  Camera cropped_cam = cam;
  cropped_cam.width = win.w;
  cropped_cam.height = win.h;
  cropped_cam.cx = cam.cx - win.x0;
  cropped_cam.cy = cam.cy - win.y0;
  const FrameRGBD rendered_crop = render(scene, cropped_cam, Vec3::Zero());
  FrameRGBD gt_crop = render(target_scene, cropped_cam, Vec3::Zero());
  Supervision cropped{&gt_crop, nullptr};
  const double cropped_loss = total_loss(rendered_crop, &cropped, nullptr, w, 0.0).value;

  CHECK(masked_loss == doctest::Approx(cropped_loss).epsilon(1e-6));
}
