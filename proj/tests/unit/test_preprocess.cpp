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

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_utils.hpp"
#include "tumorbench/error.hpp"
#include "tumorbench/preprocess.hpp"
#include "tumorbench/synthetic.hpp"

namespace tumorbench {
namespace {

using testing::random_raw;

double mean_of(const RawImage& img) {
  return std::accumulate(img.pixels.begin(), img.pixels.end(), 0.0) / static_cast<double>(img.pixels.size());
}

TEST(NormalizeRange, LinearMap) {
  RawImage img(8, 8, 0.0);
  img.pixels[1] = 1000.0;
  img.pixels[2] = 500.0;
  const RawImage out = normalize_range(img);
  EXPECT_DOUBLE_EQ(out.pixels[2], 127.5);
  EXPECT_DOUBLE_EQ(out.pixels[1], 255.0);
  EXPECT_DOUBLE_EQ(out.pixels[0], 0.0);
}

TEST(NormalizeRange, ConstantImageBecomesZeros) {
  const RawImage out = normalize_range(RawImage(9, 8, 700.0));
  for (double v : out.pixels) EXPECT_EQ(v, 0.0);
}

TEST(NormalizeRange, IdempotentOnFullRangeImages) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RawImage img = random_raw(12, 10, seed);
    img.pixels[0] = 0.0;
    img.pixels[1] = 255.0;
    const RawImage out = normalize_range(img);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) EXPECT_NEAR(out.pixels[i], img.pixels[i], 1e-9);
  }
}

TEST(Resize, OutputShapeAndConstantImages) {
  const RawImage big = resize_bilinear(RawImage(512, 512, 3.0), 256);
  EXPECT_EQ(big.height, 256);
  EXPECT_EQ(big.width, 256);
  for (double v : big.pixels) EXPECT_DOUBLE_EQ(v, 3.0);
  const RawImage up = resize_bilinear(RawImage(10, 14, 9.5), 32);
  for (double v : up.pixels) EXPECT_DOUBLE_EQ(v, 9.5);
  EXPECT_EQ(resize(RawImage(20, 20, 1.0), 8, Interpolation::kNearest).pixels.size(), 64u);
}

TEST(Resize, HalvingAveragesTwoByTwoBlocks) {
  RawImage checker(16, 16);
  for (std::int64_t y = 0; y < 16; ++y)
    for (std::int64_t x = 0; x < 16; ++x) checker.at(y, x) = (x + y) % 2 == 0 ? 255.0 : 0.0;
  for (const RawImage& img : {checker, random_raw(16, 16, 5)}) {
    const RawImage out = resize_bilinear(img, 8);
    for (std::int64_t y = 0; y < 8; ++y) {
      for (std::int64_t x = 0; x < 8; ++x) {
        const double block = (img.at(2 * y, 2 * x) + img.at(2 * y, 2 * x + 1) + img.at(2 * y + 1, 2 * x) +
                              img.at(2 * y + 1, 2 * x + 1)) / 4.0;
        EXPECT_NEAR(out.at(y, x), block, 1e-6);
      }
    }
  }
}

TEST(Resize, RejectsTinySides) {
  try {
    resize_bilinear(RawImage(16, 16), 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidSize);
  }
}

TEST(Sharpen, ConstantImageIsUnchanged) {
  for (double c : {0.0, 17.0, 255.0}) {
    const RawImage out = sharpen(RawImage(10, 12, c));
    for (double v : out.pixels) EXPECT_NEAR(v, c, 1e-12);
  }
}

TEST(Sharpen, ImpulseResponse) {
  RawImage img(9, 9, 0.0);
  img.at(4, 4) = 100.0;
  const RawImage raw = filter3x3(img, SharpenKernel{});
  EXPECT_DOUBLE_EQ(raw.at(4, 4), 500.0);
  EXPECT_DOUBLE_EQ(raw.at(3, 4), -100.0);
  const RawImage out = sharpen(img);
  EXPECT_DOUBLE_EQ(out.at(4, 4), 255.0);
  EXPECT_DOUBLE_EQ(out.at(3, 4), 0.0);
  EXPECT_DOUBLE_EQ(out.at(4, 5), 0.0);
  EXPECT_DOUBLE_EQ(out.at(3, 3), 0.0);
}

TEST(Sharpen, MatchesDirectConvolutionOracle) {
  const std::array<double, 9> asymmetric = {0.1, -0.3, 0.2, 0.05, 1.4, -0.25, 0.0, -0.1, -0.1};
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const RawImage img = random_raw(16, 16, seed);
    for (const auto& w : {SharpenKernel{}.weights, asymmetric}) {
      const RawImage got = filter3x3(img, SharpenKernel{w});
      const RawImage want = testing::filter3x3_oracle(img, w);
      for (std::size_t i = 0; i < got.pixels.size(); ++i) ASSERT_NEAR(got.pixels[i], want.pixels[i], 1e-6);
      const RawImage clipped = sharpen(img, SharpenKernel{w});
      for (std::size_t i = 0; i < got.pixels.size(); ++i)
        ASSERT_NEAR(clipped.pixels[i], std::clamp(want.pixels[i], 0.0, 255.0), 1e-6);
    }
  }
}

TEST(Complement, InvolutionAndMean) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RawImage img = random_raw(11, 13, seed);
    const RawImage twice_real = complement(complement(img));
    for (std::size_t i = 0; i < img.pixels.size(); ++i) EXPECT_NEAR(twice_real.pixels[i], img.pixels[i], 1e-12);
    // Exact on the integer grid that raw intensities live on.
    for (double& v : img.pixels) v = std::round(v);
    const RawImage once = complement(img);
    EXPECT_EQ(complement(once).pixels, img.pixels);
    EXPECT_NEAR(mean_of(once), 255.0 - mean_of(img), 1e-9);
  }
  EXPECT_EQ(complement(RawImage(8, 8, 0.0)).pixels[0], 255.0);
}

TEST(Pipeline, ShapeRangeAndChannels) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const TumorRecord rec = synthetic::make_record(class_from_index(static_cast<int>(seed % 3)), "1", 512, seed);
    const Tensor t = preprocess_pipeline(raw_image_from(rec));
    ASSERT_EQ(t.shape(), (Shape{256, 256, 3}));
    for (std::int64_t i = 0; i < t.size(); i += 3) {
      ASSERT_GE(t[i], 0.0f);
      ASSERT_LE(t[i], 255.0f);
      ASSERT_EQ(t[i], t[i + 1]);
      ASSERT_EQ(t[i], t[i + 2]);
    }
  }
}

TEST(Pipeline, RandomInputsStayInRange) {
  PreprocessConfig config;
  config.side = 32;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const RawImage raw = random_raw(40 + static_cast<std::int64_t>(seed), 37, seed, -32768.0, 32767.0);
    const Tensor t = preprocess_pipeline(raw, config);
    for (float v : t.span()) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 255.0f);
    }
  }
}

TEST(Pipeline, PureAndConstantInputGivesWhite) {
  const RawImage raw = random_raw(64, 64, 3, -500.0, 2000.0);
  PreprocessConfig config;
  config.side = 32;
  EXPECT_EQ(preprocess_pipeline(raw, config).values(), preprocess_pipeline(raw, config).values());
  const Tensor white = preprocess_pipeline(RawImage(64, 64, 1234.0), config);
  for (float v : white.span()) EXPECT_EQ(v, 255.0f);
  config.scale_at = ScaleAt::kPreprocess;
  const Tensor scaled = preprocess_pipeline(RawImage(64, 64, 1234.0), config);
  for (float v : scaled.span()) EXPECT_EQ(v, 1.0f);
}

TEST(Pipeline, MatchesTheComposedSteps) {
  const RawImage raw = random_raw(40, 50, 8, 0.0, 4000.0);
  PreprocessConfig config;
  config.side = 24;
  const RawImage chain = complement(sharpen(resize_bilinear(normalize_range(raw), 24)));
  const Tensor t = preprocess_pipeline(raw, config);
  for (std::int64_t i = 0; i < 24 * 24; ++i)
    EXPECT_EQ(t[3 * i], static_cast<float>(chain.pixels[static_cast<std::size_t>(i)]));
}

TEST(Pipeline, RejectsTinyImages) {
  try {
    preprocess_pipeline(RawImage(7, 20));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidSize);
  }
}

TEST(PreprocessConfig, HashTracksEveryField) {
  PreprocessConfig a;
  PreprocessConfig b;
  EXPECT_EQ(a.hash(), b.hash());
  b.kernel.weights[4] = 6.0;
  EXPECT_NE(a.hash(), b.hash());
  PreprocessConfig c;
  c.scale_at = ScaleAt::kPreprocess;
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(PreprocessConfig::from_json(c.to_json()).hash(), c.hash());
}

TEST(PreprocessedCache, StoresPipelineOutputs) {
  testing::TempDir dir("prep");
  synthetic::write_dataset(dir / "data", {.per_class = 1, .side = 40, .seed = 2});
  const DatasetManifest manifest = load_dataset(dir / "data");
  PreprocessConfig config;
  config.side = 16;
  PreprocessedCache::build(dir / "cache.h5", manifest, config);
  const auto cache = PreprocessedCache::open(dir / "cache.h5", config);
  ASSERT_EQ(cache.size(), 3);
  for (std::int64_t i = 0; i < 3; ++i) {
    const auto& ref = manifest.records[static_cast<std::size_t>(i)];
    EXPECT_EQ(cache.label(i), static_cast<int>(ref.label));
    EXPECT_EQ(cache.image(i).values(), preprocess_pipeline(raw_image_from(ref.load()), config).values());
  }
  PreprocessConfig other = config;
  other.side = 24;
  try {
    PreprocessedCache::open(dir / "cache.h5", other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
}

}  // namespace
}  // namespace tumorbench
