/*
 * Copyright 2026 The TumorBench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tumorbench/augment.hpp"
#include "tumorbench/error.hpp"

namespace tumorbench {
namespace {

using testing::random_image;

// Half-sample symmetric reflection ("dcba|abcd|dcba"), written independently.
std::int64_t mirror(std::int64_t i, std::int64_t n) {
  while (i < 0 || i >= n) i = i < 0 ? -1 - i : 2 * n - 1 - i;
  return i;
}

// (y, x, c) element of an (H, W, C) image.
float& px(Tensor& t, std::int64_t y, std::int64_t x, std::int64_t c) {
  return t[(y * t.dim(1) + x) * t.dim(2) + c];
}
float px(const Tensor& t, std::int64_t y, std::int64_t x, std::int64_t c) {
  return t[(y * t.dim(1) + x) * t.dim(2) + c];
}

Tensor pattern(std::int64_t h, std::int64_t w, std::int64_t c) {
  Tensor t({h, w, c});
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>((i * 37) % 251);
  return t;
}

TEST(Flip, MirrorsColumnsAndIsAnInvolution) {
  const Tensor img = random_image(6, 9, 3, 1);
  const Tensor f = flip_horizontal(img);
  for (std::int64_t y = 0; y < 6; ++y)
    for (std::int64_t x = 0; x < 9; ++x)
      for (std::int64_t c = 0; c < 3; ++c) EXPECT_EQ(px(f, y, x, c), px(img, y, 8 - x, c));
  EXPECT_EQ(flip_horizontal(f).values(), img.values());
}

TEST(Flip, ForcedDrawsSelectFlipOrIdentity) {
  const Tensor img = random_image(8, 8, 3, 2);
  AugmentationConfig cfg;
  cfg.rescale = 1.0;
  AugmentationDraw identity;
  EXPECT_EQ(apply_draw(img, cfg, identity).values(), img.values());
  AugmentationDraw flip;
  flip.flip = true;
  EXPECT_EQ(apply_draw(img, cfg, flip).values(), flip_horizontal(img).values());
}

TEST(Rotate, ZeroAngleIsIdentity) {
  const Tensor img = random_image(10, 7, 3, 3);
  EXPECT_EQ(rotate(img, 0.0).values(), img.values());
}

TEST(Rotate, QuarterTurnIsAnIndexPermutation) {
  for (std::int64_t side : {4, 5, 16}) {
    const Tensor img = pattern(side, side, 3);
    const Tensor ccw = rotate(img, 90.0);
    const Tensor cw = rotate(img, -90.0);
    for (std::int64_t y = 0; y < side; ++y) {
      for (std::int64_t x = 0; x < side; ++x) {
        for (std::int64_t c = 0; c < 3; ++c) {
          EXPECT_EQ(px(ccw, y, x, c), px(img, x, side - 1 - y, c));
          EXPECT_EQ(px(cw, y, x, c), px(img, side - 1 - x, y, c));
        }
      }
    }
    const Tensor half = rotate(img, 180.0);
    for (std::int64_t y = 0; y < side; ++y)
      for (std::int64_t x = 0; x < side; ++x) EXPECT_EQ(px(half, y, x, 0), px(img, side - 1 - y, side - 1 - x, 0));
  }
}

TEST(Rotate, SymmetricDiskIsInvariant) {
  const std::int64_t side = 64;
  Tensor disk({side, side, 1});
  const double c = (side - 1) / 2.0;
  for (std::int64_t y = 0; y < side; ++y) {
    for (std::int64_t x = 0; x < side; ++x) {
      const double r = std::hypot(y - c, x - c);
      // Smooth radial profile so bilinear resampling error stays small.
      px(disk, y, x, 0) = static_cast<float>(255.0 * std::exp(-r * r / (2.0 * 9.0 * 9.0)));
    }
  }
  for (double deg : {7.0, -23.0, 30.0, 11.459}) {
    const Tensor out = rotate(disk, deg);
    for (std::int64_t y = 0; y < side; ++y)
      for (std::int64_t x = 0; x < side; ++x) {
        if (std::hypot(y - c, x - c) > c) continue;  // corners sample the reflected fill
        ASSERT_NEAR(px(out, y, x, 0), px(disk, y, x, 0), 2.0) << deg;
      }
  }
}

TEST(Zoom, IdentityAndConstantImages) {
  const Tensor img = random_image(9, 9, 3, 4);
  EXPECT_EQ(zoom(img, 1.0).values(), img.values());
  const Tensor flat({12, 12, 3}, 42.0f);
  for (double s : {0.8, 1.2, 0.5, 1.37}) {
    const Tensor out = zoom(flat, s);
    for (float v : out.span()) EXPECT_FLOAT_EQ(v, 42.0f);
  }
}

TEST(Zoom, HalfScaleOfACentredBlock) {
  // 8x8 image, 2x2 block of 255 at rows/cols 3..4. At s = 0.5 output p
  // samples 2p - 3.5, so rows/cols {0, 3, 4, 7} land half way into the
  // block (directly or through the mirror) and all other rows/cols miss it.
  Tensor img({8, 8, 1}, 0.0f);
  for (int y = 3; y <= 4; ++y)
    for (int x = 3; x <= 4; ++x) px(img, y, x, 0) = 255.0f;
  const Tensor out = zoom(img, 0.5);
  auto hit = [](int p) { return p == 0 || p == 3 || p == 4 || p == 7; };
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) EXPECT_NEAR(px(out, y, x, 0), hit(y) && hit(x) ? 63.75 : 0.0, 1e-4) << y << "," << x;
}

TEST(Contrast, Arithmetic) {
  Tensor img({2, 2, 1});
  img[0] = 64.0f;
  img[1] = 192.0f;
  img[2] = 64.0f;
  img[3] = 192.0f;
  const Tensor out = adjust_contrast(img, 0.8, 255.0);
  EXPECT_FLOAT_EQ(out[0], 76.8f);
  EXPECT_FLOAT_EQ(out[1], 179.2f);
  EXPECT_EQ(adjust_contrast(img, 1.0, 255.0).values(), img.values());
  const Tensor flat({5, 5, 3}, 17.0f);
  EXPECT_EQ(adjust_contrast(flat, 1.2, 255.0).values(), flat.values());
  const Tensor clipped = adjust_contrast(img, 3.0, 255.0);
  EXPECT_EQ(clipped[0], 0.0f);
  EXPECT_EQ(clipped[1], 255.0f);
}

TEST(Translate, IntegerShiftMatchesReflectionOracle) {
  const Tensor img = random_image(11, 13, 3, 5);
  for (auto [dy, dx] : {std::pair{3, -5}, std::pair{-4, 7}, std::pair{12, 0}, std::pair{0, -20}}) {
    const Tensor out = translate(img, dy, dx);
    for (std::int64_t y = 0; y < 11; ++y)
      for (std::int64_t x = 0; x < 13; ++x)
        for (std::int64_t c = 0; c < 3; ++c)
          ASSERT_EQ(px(out, y, x, c), px(img, mirror(y - dy, 11), mirror(x - dx, 13), c)) << dy << "," << dx;
  }
  EXPECT_EQ(translate(img, 0.0, 0.0).values(), img.values());
  const Tensor flat({9, 9, 3}, 0.5f);
  const Tensor shifted = translate(flat, 2.7, -3.3);
  for (float v : shifted.span()) EXPECT_FLOAT_EQ(v, 0.5f);
}

TEST(ApplyAugmentations, EvalPathIsExactRescale) {
  Tensor ramp({16, 16, 3});
  for (std::int64_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<float>(i % 256);
  const Tensor& img = ramp;
  const Tensor rnd = random_image(16, 16, 3, 6);
  const AugmentationConfig cfg;
  for (const Tensor* t : {&img, &rnd}) {
    Rng rng(1);
    const Tensor out = apply_augmentations(*t, cfg, rng, false);
    for (std::int64_t i = 0; i < t->size(); ++i)
      ASSERT_EQ(out[i], static_cast<float>(static_cast<double>((*t)[i]) / 255.0)) << (*t)[i];
  }
  AugmentationConfig disabled;
  disabled.enabled = false;
  Rng rng(2);
  const Tensor out = apply_augmentations(rnd, disabled, rng, true);
  for (std::int64_t i = 0; i < rnd.size(); ++i) ASSERT_EQ(out[i], static_cast<float>(static_cast<double>(rnd[i]) / 255.0));
}

TEST(ApplyAugmentations, SameSeedSameOutput) {
  const Tensor img = random_image(32, 32, 3, 7);
  const AugmentationConfig cfg;
  Rng a = augmentation_stream(99, 3, 17), b = augmentation_stream(99, 3, 17), c = augmentation_stream(99, 3, 18);
  const Tensor oa = apply_augmentations(img, cfg, a, true);
  EXPECT_EQ(oa.values(), apply_augmentations(img, cfg, b, true).values());
  EXPECT_NE(oa.values(), apply_augmentations(img, cfg, c, true).values());
}

TEST(ApplyAugmentations, IdentityParametersAreExact) {
  AugmentationConfig cfg;
  cfg.flip_horizontal = false;
  cfg.rotation1_max_deg = 0.0;
  cfg.zoom_frac = 0.0;
  cfg.contrast_frac = 0.0;
  cfg.rotation2_max_deg = 0.0;
  cfg.translation = {0.0, 0.0};
  const Tensor img = random_image(20, 20, 3, 8);
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng(s);
    const Tensor out = apply_augmentations(img, cfg, rng, true);
    for (std::int64_t i = 0; i < img.size(); ++i)
      ASSERT_EQ(out[i], static_cast<float>(static_cast<double>(img[i]) / 255.0));
  }
}

TEST(ApplyAugmentations, ThousandDrawSweepStaysInRange) {
  const Tensor img = random_image(256, 256, 3, 9);
  const AugmentationConfig cfg;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    Rng rng = augmentation_stream(2024, i / 100, i);
    Rng probe = rng;
    const AugmentationDraw d = draw_augmentation(cfg, 256, 256, probe);
    ASSERT_LE(std::abs(d.rotation1_deg), 0.2 * 180.0 / std::numbers::pi + 1e-12);
    ASSERT_LE(std::abs(d.rotation2_deg), 30.0);
    ASSERT_GE(d.zoom, 0.8);
    ASSERT_LE(d.zoom, 1.2);
    ASSERT_GE(d.contrast, 0.8);
    ASSERT_LE(d.contrast, 1.2);
    ASSERT_LE(std::abs(d.dy), 0.2 * 256);
    ASSERT_LE(std::abs(d.dx), 0.3 * 256);
    const Tensor out = apply_augmentations(img, cfg, rng, true);
    ASSERT_EQ(out.shape(), img.shape());
    for (float v : out.span()) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
}

TEST(AugmentationConfig, RotationUnitsAndValidation) {
  AugmentationConfig cfg;
  EXPECT_NEAR(cfg.rotation1_limit_deg(), 11.4591559, 1e-6);
  EXPECT_DOUBLE_EQ(cfg.rotation2_limit_deg(), 30.0);
  cfg.rotation_units = RotationUnits::kTurns;
  EXPECT_NEAR(cfg.rotation1_limit_deg(), 72.0, 1e-9);
  EXPECT_DOUBLE_EQ(cfg.rotation2_limit_deg(), 10800.0);
  EXPECT_EQ(AugmentationConfig::from_json(cfg.to_json()), cfg);
  for (const char* bad : {R"({"zoom_frac": 1.5})", R"({"rescale": 0})", R"({"rotation2_max_deg": -1})",
                          R"({"translation": {"fill": "constant"}})", R"({"rotation_units": "grads"})"}) {
    try {
      AugmentationConfig::from_json(nlohmann::json::parse(bad));
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    }
  }
}

}  // namespace
}  // namespace tumorbench
