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
#include <functional>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "test_utils.hpp"
#include "tumorbench/data_ingest.hpp"
#include "tumorbench/error.hpp"
#include "tumorbench/hdf5_file.hpp"
#include "tumorbench/rng.hpp"
#include "tumorbench/synthetic.hpp"

namespace tumorbench {
namespace {

using testing::TempDir;

// Manifest with `n` records whose labels cycle through the classes.
DatasetManifest fake_manifest(std::int64_t n, std::int64_t patients = 0) {
  DatasetManifest m;
  for (std::int64_t i = 0; i < n; ++i) {
    RecordRef r;
    r.label = class_from_index(static_cast<int>(i % kNumClasses));
    r.pid = std::to_string(patients > 0 ? i % patients : i);
    ++m.class_counts[static_cast<std::size_t>(r.label)];
    m.records.push_back(r);
  }
  m.total = n;
  return m;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kIo;
}

// Even-odd scanline fill of the border polygon at pixel centres; the border
// holds 1-based (row, col) pairs.
std::vector<std::uint8_t> rasterize_border(const TumorRecord& rec) {
  std::vector<std::uint8_t> fill(static_cast<std::size_t>(rec.height * rec.width), 0);
  const std::size_t n = rec.tumor_border.size() / 2;
  for (std::int64_t y = 0; y < rec.height; ++y) {
    const double py = static_cast<double>(y) + 1.0;
    std::vector<double> xs;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = (i + 1) % n;
      const double y0 = rec.tumor_border[2 * i], x0 = rec.tumor_border[2 * i + 1];
      const double y1 = rec.tumor_border[2 * j], x1 = rec.tumor_border[2 * j + 1];
      if ((y0 <= py) != (y1 <= py)) xs.push_back(x0 + (py - y0) * (x1 - x0) / (y1 - y0));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      for (std::int64_t x = 0; x < rec.width; ++x) {
        const double px = static_cast<double>(x) + 1.0;
        if (px >= xs[k] && px <= xs[k + 1]) fill[static_cast<std::size_t>(y * rec.width + x)] = 1;
      }
    }
  }
  return fill;
}

TEST(TumorClass, CodesNamesAndIndicesAreABijection) {
  for (int i = 0; i < kNumClasses; ++i) {
    const TumorClass c = class_from_index(i);
    EXPECT_EQ(dataset_code(c), i + 1);
    EXPECT_EQ(class_from_code(i + 1), c);
    EXPECT_EQ(class_from_name(class_name(c)), c);
  }
  EXPECT_EQ(class_name(class_from_code(2)), "glioma");
  EXPECT_EQ(kind_of([] { class_from_code(0); }), ErrorKind::kInvalidLabel);
  EXPECT_EQ(kind_of([] { class_from_code(4); }), ErrorKind::kInvalidLabel);
}

TEST(ParseRecord, RoundTripsEveryField) {
  TempDir dir("ingest");
  const TumorRecord rec = synthetic::make_record(TumorClass::kGlioma, "MRN-77", 48, 3);
  write_record(dir / "a.mat", rec);
  EXPECT_TRUE(h5::looks_like_hdf5(dir / "a.mat"));
  const TumorRecord back = parse_record(dir / "a.mat");
  EXPECT_EQ(back.label, TumorClass::kGlioma);
  EXPECT_EQ(back.pid, "MRN-77");
  EXPECT_EQ(back.height, rec.height);
  EXPECT_EQ(back.width, rec.width);
  EXPECT_EQ(back.image, rec.image);
  EXPECT_EQ(back.tumor_mask, rec.tumor_mask);
  EXPECT_EQ(back.tumor_border, rec.tumor_border);
}

TEST(ParseRecord, NonSquareImagesKeepTheirOrientation) {
  TempDir dir("ingest");
  TumorRecord rec;
  rec.label = TumorClass::kPituitary;
  rec.pid = "1";
  rec.height = 3;
  rec.width = 5;
  for (int i = 0; i < 15; ++i) rec.image.push_back(static_cast<std::int16_t>(i * 10 - 40));
  rec.tumor_mask.assign(15, 0);
  rec.tumor_mask[7] = 1;
  rec.tumor_border = {2, 3};
  write_record(dir / "r.mat", rec);
  const TumorRecord back = parse_record(dir / "r.mat");
  EXPECT_EQ(back.height, 3);
  EXPECT_EQ(back.width, 5);
  EXPECT_EQ(back.image, rec.image);
  EXPECT_EQ(back.label, TumorClass::kPituitary);
}

TEST(ParseRecord, MissingFieldIsReported) {
  TempDir dir("ingest");
  {
    auto f = h5::File::create(dir / "m.mat");
    const std::vector<double> label = {1.0};
    f.write_doubles("cjdata/label", {1, 1}, label);
    const std::vector<std::uint16_t> pid = {'7'};
    f.write_u16("cjdata/PID", {1, 1}, pid);
    const std::vector<std::int16_t> image(16, 5);
    f.write_i16("cjdata/image", {4, 4}, image);
    const std::vector<double> border = {1, 1};
    f.write_doubles("cjdata/tumorBorder", {2, 1}, border);
  }
  try {
    parse_record(dir / "m.mat");
    FAIL() << "expected MissingField";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingField);
    EXPECT_NE(std::string(e.what()).find("tumorMask"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("m.mat"), std::string::npos);
  }
}

TEST(ParseRecord, InvalidLabelAndShapeMismatch) {
  TempDir dir("ingest");
  TumorRecord rec = synthetic::make_record(TumorClass::kMeningioma, "1", 16, 1);
  {
    auto f = h5::File::create(dir / "bad_label.mat");
    const std::vector<double> label = {5.0};
    f.write_doubles("cjdata/label", {1, 1}, label);
    const std::vector<std::uint16_t> pid = {'1'};
    f.write_u16("cjdata/PID", {1, 1}, pid);
    f.write_i16("cjdata/image", {16, 16}, rec.image);
    f.write_doubles("cjdata/tumorBorder", {rec.tumor_border.size(), 1}, rec.tumor_border);
    f.write_u8("cjdata/tumorMask", {16, 16}, rec.tumor_mask);
  }
  EXPECT_EQ(kind_of([&] { parse_record(dir / "bad_label.mat"); }), ErrorKind::kInvalidLabel);
  {
    auto f = h5::File::create(dir / "bad_shape.mat");
    const std::vector<double> label = {1.0};
    f.write_doubles("cjdata/label", {1, 1}, label);
    const std::vector<std::uint16_t> pid = {'1'};
    f.write_u16("cjdata/PID", {1, 1}, pid);
    f.write_i16("cjdata/image", {16, 16}, rec.image);
    f.write_doubles("cjdata/tumorBorder", {rec.tumor_border.size(), 1}, rec.tumor_border);
    const std::vector<std::uint8_t> mask(8 * 16, 1);
    f.write_u8("cjdata/tumorMask", {8, 16}, mask);
  }
  EXPECT_EQ(kind_of([&] { parse_record(dir / "bad_shape.mat"); }), ErrorKind::kShapeMismatch);
}

TEST(TumorRecordValidate, RejectsBrokenInvariants) {
  TumorRecord rec = synthetic::make_record(TumorClass::kGlioma, "1", 32, 2);
  EXPECT_NO_THROW(rec.validate());
  TumorRecord odd = rec;
  odd.tumor_border.push_back(3.0);
  EXPECT_EQ(kind_of([&] { odd.validate(); }), ErrorKind::kShapeMismatch);
  TumorRecord out_of_bounds = rec;
  out_of_bounds.tumor_border[0] = 1000.0;
  EXPECT_EQ(kind_of([&] { out_of_bounds.validate(); }), ErrorKind::kShapeMismatch);
  TumorRecord empty_mask = rec;
  std::fill(empty_mask.tumor_mask.begin(), empty_mask.tumor_mask.end(), 0);
  EXPECT_EQ(kind_of([&] { empty_mask.validate(); }), ErrorKind::kShapeMismatch);
}

TEST(BorderIntegrity, PolygonFillCoversTheMask) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto label = class_from_index(static_cast<int>(seed % 3));
    const TumorRecord rec = synthetic::make_record(label, "p", 96, seed);
    const auto fill = rasterize_border(rec);
    std::int64_t mask_pixels = 0, covered = 0;
    for (std::size_t i = 0; i < fill.size(); ++i) {
      mask_pixels += rec.tumor_mask[i];
      covered += rec.tumor_mask[i] & fill[i];
    }
    ASSERT_GT(mask_pixels, 0);
    const double overlap = static_cast<double>(covered) / static_cast<double>(mask_pixels);
    EXPECT_GE(overlap, 0.8) << "seed " << seed;
    EXPECT_NEAR(border_mask_overlap(rec), overlap, 0.05) << "seed " << seed;
  }
}

TEST(LoadDataset, SortedOrderAndCounts) {
  TempDir dir("ingest");
  const auto files = synthetic::write_dataset(dir.path(), {.per_class = 1, .side = 32, .seed = 9});
  ASSERT_EQ(files.size(), 3u);
  const DatasetManifest m = load_dataset(dir.path());
  EXPECT_EQ(m.total, 3);
  EXPECT_EQ(m.records.size(), 3u);
  EXPECT_EQ(m.class_counts[0] + m.class_counts[1] + m.class_counts[2], 3);
  for (std::size_t i = 0; i + 1 < m.records.size(); ++i)
    EXPECT_LT(m.records[i].source.filename().string(), m.records[i + 1].source.filename().string());
  const TumorRecord first = m.records[0].load();
  EXPECT_EQ(first.label, m.records[0].label);
}

TEST(LoadDataset, EmptyDirectoryAndBadFileNames) {
  TempDir dir("ingest");
  EXPECT_EQ(kind_of([&] { load_dataset(dir.path()); }), ErrorKind::kEmptyDataset);
  testing::write_file(dir / "broken.mat", "not a mat file");
  try {
    load_dataset(dir.path());
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("broken.mat"), std::string::npos);
  }
}

TEST(ManifestCache, RoundTripsRecordsBitExactly) {
  TempDir dir("ingest");
  synthetic::write_dataset(dir / "data", {.per_class = 2, .side = 24, .seed = 4});
  const DatasetManifest m = load_dataset(dir / "data");
  write_manifest_cache(dir / "manifest.h5", m);
  const DatasetManifest back = read_manifest_cache(dir / "manifest.h5");
  ASSERT_EQ(back.total, m.total);
  EXPECT_EQ(back.class_counts, m.class_counts);
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto a = m.records[i].load(), b = back.records[i].load();
    EXPECT_EQ(a.label, b.label);
    EXPECT_EQ(a.pid, b.pid);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.tumor_mask, b.tumor_mask);
    EXPECT_EQ(a.tumor_border, b.tumor_border);
  }
}

TEST(ShuffleBuffer, ProducesAPermutation) {
  for (std::int64_t buffer : {1, 3, 1000}) {
    auto order = shuffle_buffer_order(57, buffer, 11);
    ASSERT_EQ(order.size(), 57u);
    if (buffer == 1) {
      std::vector<std::int64_t> identity(57);
      std::iota(identity.begin(), identity.end(), 0);
      EXPECT_EQ(order, identity);
    }
    std::sort(order.begin(), order.end());
    for (std::int64_t i = 0; i < 57; ++i) EXPECT_EQ(order[static_cast<std::size_t>(i)], i);
  }
  EXPECT_NE(shuffle_buffer_order(57, 1000, 1), shuffle_buffer_order(57, 1000, 2));
}

TEST(SplitDataset, FloorRuleOnTheFullDatasetSize) {
  const auto m = fake_manifest(3064);
  SplitSpec spec;
  spec.seed = 42;
  const auto s = split_dataset(m, spec);
  EXPECT_EQ(s.train.size(), 2451u);
  EXPECT_EQ(s.val.size(), 306u);
  EXPECT_EQ(s.test.size(), 307u);
  spec.exact_counts = std::array<std::int64_t, 3>{2452, 300, 312};
  const auto e = split_dataset(m, spec);
  EXPECT_EQ(e.train.size(), 2452u);
  EXPECT_EQ(e.val.size(), 300u);
  EXPECT_EQ(e.test.size(), 312u);
}

TEST(SplitDataset, DisjointExhaustiveAndDeterministic) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::int64_t>(3 + rng.uniform_int(60));
    SplitSpec spec;
    spec.seed = rng.next_u64();
    spec.shuffle_buffer = static_cast<std::int64_t>(1 + rng.uniform_int(20));
    spec.stratified = trial % 3 == 1;
    spec.patient_grouped = trial % 3 == 2;
    const auto m = fake_manifest(n, spec.patient_grouped ? 5 : 0);
    const auto s = split_dataset(m, spec);
    std::vector<std::int64_t> all;
    for (const auto* part : {&s.train, &s.val, &s.test}) all.insert(all.end(), part->begin(), part->end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(static_cast<std::int64_t>(all.size()), n);
    for (std::int64_t i = 0; i < n; ++i) ASSERT_EQ(all[static_cast<std::size_t>(i)], i);
    const auto again = split_dataset(m, spec);
    EXPECT_EQ(again.train, s.train);
    EXPECT_EQ(again.val, s.val);
    EXPECT_EQ(again.test, s.test);
    if (spec.patient_grouped) {
      std::set<std::string> train_pids;
      for (auto i : s.train) train_pids.insert(m.records[static_cast<std::size_t>(i)].pid);
      for (const auto* part : {&s.val, &s.test})
        for (auto i : *part) EXPECT_EQ(train_pids.count(m.records[static_cast<std::size_t>(i)].pid), 0u);
    }
  }
}

TEST(SplitDataset, StratifiedKeepsClassProportions) {
  const auto m = fake_manifest(300);
  SplitSpec spec;
  spec.stratified = true;
  spec.seed = 3;
  const auto s = split_dataset(m, spec);
  std::array<int, 3> train_counts{};
  for (auto i : s.train) ++train_counts[static_cast<std::size_t>(m.records[static_cast<std::size_t>(i)].label)];
  for (int c : train_counts) EXPECT_EQ(c, 80);
}

TEST(SplitDataset, InvalidSpecs) {
  const auto m = fake_manifest(10);
  SplitSpec bad;
  bad.train_frac = 0.7;
  EXPECT_EQ(kind_of([&] { split_dataset(m, bad); }), ErrorKind::kInvalidSpec);
  SplitSpec negative;
  negative.train_frac = 1.2;
  negative.val_frac = -0.1;
  negative.test_frac = -0.1;
  EXPECT_EQ(kind_of([&] { split_dataset(m, negative); }), ErrorKind::kInvalidSpec);
  SplitSpec overflow;
  overflow.exact_counts = std::array<std::int64_t, 3>{8, 2, 2};
  EXPECT_EQ(kind_of([&] { split_dataset(m, overflow); }), ErrorKind::kCountOverflow);
  EXPECT_EQ(kind_of([&] { split_dataset(fake_manifest(2), SplitSpec{}); }), ErrorKind::kInvalidSpec);
}

TEST(SplitDataset, JsonRoundTrip) {
  const auto m = fake_manifest(40);
  SplitSpec spec;
  spec.seed = 8;
  spec.exact_counts = std::array<std::int64_t, 3>{30, 5, 5};
  const auto s = split_dataset(m, spec);
  const auto j = split_to_json(s, spec);
  const auto back = split_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.train, s.train);
  EXPECT_EQ(back.val, s.val);
  EXPECT_EQ(back.test, s.test);
  const auto spec_back = SplitSpec::from_json(j["spec"]);
  EXPECT_EQ(spec_back.seed, 8u);
  EXPECT_EQ(spec_back.exact_counts, spec.exact_counts);
}

}  // namespace
}  // namespace tumorbench
