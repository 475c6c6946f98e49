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

#ifndef TUMORBENCH_DATA_INGEST_HPP_
#define TUMORBENCH_DATA_INGEST_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace tumorbench {

// Zero-based class index; the dataset stores index + 1.
enum class TumorClass : int { kMeningioma = 0, kGlioma = 1, kPituitary = 2 };
inline constexpr int kNumClasses = 3;

std::string_view class_name(TumorClass c);
int dataset_code(TumorClass c);
TumorClass class_from_code(int code);    // throws kInvalidLabel
TumorClass class_from_index(int index);  // throws kInvalidLabel
TumorClass class_from_name(std::string_view name);

// One MRI slice. Images are row-major (row = y) at native int16 depth.
struct TumorRecord {
  TumorClass label = TumorClass::kMeningioma;
  std::string pid;
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<std::int16_t> image;
  std::vector<double> tumor_border;  // flat coordinate pairs, pixel units
  std::vector<std::uint8_t> tumor_mask;

  // Throws kShapeMismatch when mask/border invariants fail.
  void validate() const;
};

// Parses a MATLAB v7.3 record (HDF5 layout, group "cjdata"), transposing
// MATLAB's column-major storage. Errors carry the file name.
TumorRecord parse_record(const std::filesystem::path& path);

// Writes `record` in the same MATLAB v7.3 layout (with a MATLAB user block).
void write_record(const std::filesystem::path& path, const TumorRecord& record);

// Fraction of tumor_mask pixels inside the polygon traced by tumor_border.
// The border's pair order is not documented, so both (x, y) and (row, col)
// readings are rasterized and the better one is returned.
double border_mask_overlap(const TumorRecord& record);

// Lightweight handle: metadata up front, pixels loaded on demand.
struct RecordRef {
  std::filesystem::path source;
  std::string key;  // group inside a manifest cache; empty for a MAT file
  TumorClass label = TumorClass::kMeningioma;
  std::string pid;
  std::int64_t height = 0;
  std::int64_t width = 0;

  TumorRecord load() const;
};

struct DatasetManifest {
  std::vector<RecordRef> records;
  std::array<std::int64_t, kNumClasses> class_counts{};
  std::int64_t total = 0;
};

// Parses every *.mat file in `directory` (filename-sorted, parsed in
// parallel) and validates each record.
DatasetManifest load_dataset(const std::filesystem::path& directory);

// Single-file HDF5 copy of every record ("/records/<index>/{label,PID,...}").
void write_manifest_cache(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest_cache(const std::filesystem::path& path);

struct SplitSpec {
  double train_frac = 0.8;
  double val_frac = 0.1;
  double test_frac = 0.1;
  std::uint64_t seed = 0;
  std::int64_t shuffle_buffer = 1000;
  std::optional<std::array<std::int64_t, 3>> exact_counts;
  bool stratified = false;
  bool patient_grouped = false;

  void validate(std::int64_t total) const;  // kInvalidSpec / kCountOverflow
  nlohmann::json to_json() const;
  static SplitSpec from_json(const nlohmann::json& j);
};

struct DatasetSplit {
  std::vector<std::int64_t> train;
  std::vector<std::int64_t> val;
  std::vector<std::int64_t> test;
};

// Streaming shuffle-buffer permutation of 0..n-1 (one pass, seeded).
std::vector<std::int64_t> shuffle_buffer_order(std::int64_t n, std::int64_t buffer_size, std::uint64_t seed);

DatasetSplit split_dataset(const DatasetManifest& manifest, const SplitSpec& spec);

nlohmann::json split_to_json(const DatasetSplit& split, const SplitSpec& spec);
DatasetSplit split_from_json(const nlohmann::json& j);

}  // namespace tumorbench

#endif  // TUMORBENCH_DATA_INGEST_HPP_
