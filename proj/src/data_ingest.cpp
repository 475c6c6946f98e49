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

#include "tumorbench/data_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "tumorbench/error.hpp"
#include "tumorbench/hdf5_file.hpp"
#include "tumorbench/rng.hpp"

namespace tumorbench {

namespace {

constexpr std::array<std::string_view, kNumClasses> kClassNames = {"meningioma", "glioma", "pituitary"};

// Reads a MATLAB matrix stored column-major: HDF5 dims are (cols, rows).
struct MatMatrix {
  std::int64_t rows = 0, cols = 0;
  std::vector<double> values;  // row-major after transposition
};

MatMatrix read_matrix(const h5::File& file, const std::string& name) {
  const auto dims = file.dims(name);
  const auto raw = file.read_doubles(name);
  MatMatrix m;
  if (dims.size() == 2) {
    m.cols = static_cast<std::int64_t>(dims[0]);
    m.rows = static_cast<std::int64_t>(dims[1]);
  } else {
    m.rows = static_cast<std::int64_t>(raw.size());
    m.cols = 1;
  }
  m.values.resize(raw.size());
  for (std::int64_t c = 0; c < m.cols; ++c)
    for (std::int64_t r = 0; r < m.rows; ++r) m.values[r * m.cols + c] = raw[c * m.rows + r];
  return m;
}

// Column-major flattening of a row-major H x W buffer.
template <typename T>
std::vector<T> to_column_major(const std::vector<T>& v, std::int64_t h, std::int64_t w) {
  std::vector<T> out(v.size());
  for (std::int64_t r = 0; r < h; ++r)
    for (std::int64_t c = 0; c < w; ++c) out[c * h + r] = v[r * w + c];
  return out;
}

std::string decode_pid(const std::vector<double>& codes) {
  std::string pid;
  for (double c : codes)
    if (c > 0) pid.push_back(static_cast<char>(static_cast<int>(c)));
  return pid;
}

TumorRecord read_record_group(const h5::File& file, const std::string& group) {
  for (const char* field : {"label", "PID", "image", "tumorBorder", "tumorMask"}) {
    if (!file.exists(group + "/" + field))
      throw Error(ErrorKind::kMissingField,
                  fmt::format("{}: missing {}/{}", file.path().string(), group, field));
  }
  TumorRecord rec;
  const auto label = file.read_doubles(group + "/label");
  if (label.size() != 1 || label[0] != std::floor(label[0]))
    throw Error(ErrorKind::kInvalidLabel, fmt::format("{}: malformed label", file.path().string()));
  rec.label = class_from_code(static_cast<int>(label[0]));
  rec.pid = decode_pid(file.read_doubles(group + "/PID"));

  const MatMatrix image = read_matrix(file, group + "/image");
  const MatMatrix mask = read_matrix(file, group + "/tumorMask");
  if (image.rows != mask.rows || image.cols != mask.cols) {
    throw Error(ErrorKind::kShapeMismatch,
                fmt::format("{}: image is {}x{} but tumorMask is {}x{}", file.path().string(), image.rows,
                            image.cols, mask.rows, mask.cols));
  }
  rec.height = image.rows;
  rec.width = image.cols;
  rec.image.resize(image.values.size());
  for (std::size_t i = 0; i < image.values.size(); ++i) rec.image[i] = static_cast<std::int16_t>(image.values[i]);
  rec.tumor_mask.resize(mask.values.size());
  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    const double m = mask.values[i];
    if (m != 0.0 && m != 1.0)
      throw Error(ErrorKind::kShapeMismatch, fmt::format("{}: tumorMask value {} not in {{0,1}}", file.path().string(), m));
    rec.tumor_mask[i] = static_cast<std::uint8_t>(m);
  }
  rec.tumor_border = file.read_doubles(group + "/tumorBorder");
  return rec;
}

void write_record_group(h5::File& file, const std::string& group, const TumorRecord& rec) {
  const std::vector<double> label = {static_cast<double>(dataset_code(rec.label))};
  file.write_doubles(group + "/label", {1, 1}, label);
  std::vector<std::uint16_t> pid(rec.pid.begin(), rec.pid.end());
  file.write_u16(group + "/PID", {pid.size(), 1}, pid);
  const auto h = static_cast<std::uint64_t>(rec.height), w = static_cast<std::uint64_t>(rec.width);
  file.write_i16(group + "/image", {w, h}, to_column_major(rec.image, rec.height, rec.width));
  file.write_doubles(group + "/tumorBorder", {rec.tumor_border.size(), 1}, rec.tumor_border);
  file.write_u8(group + "/tumorMask", {w, h}, to_column_major(rec.tumor_mask, rec.height, rec.width));
}

void write_matlab_header(const std::filesystem::path& path) {
  std::string text = "MATLAB 7.3 MAT-file, Platform: GLNXA64, Created by: tumorbench HDF5 schema 1.00 .";
  text.resize(116, ' ');
  text.append(8, '\0');                 // subsystem data offset
  text.append({'\x00', '\x02', 'I', 'M'});  // version 0x0200, endian indicator
  std::fstream out(path, std::ios::in | std::ios::out | std::ios::binary);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

// Even-odd scanline fill at pixel centres. `first_is_x` selects whether each
// coordinate pair is (x, y) or (row, col). Coordinates are 1-based as in MATLAB.
std::vector<std::uint8_t> fill_polygon(const TumorRecord& rec, bool first_is_x) {
  std::vector<std::uint8_t> fill(static_cast<std::size_t>(rec.height * rec.width), 0);
  const std::size_t n = rec.tumor_border.size() / 2;
  if (n < 3) return fill;
  std::vector<double> px(n), py(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rec.tumor_border[2 * i], b = rec.tumor_border[2 * i + 1];
    px[i] = first_is_x ? a : b;
    py[i] = first_is_x ? b : a;
  }
  std::vector<double> xs;
  for (std::int64_t r = 0; r < rec.height; ++r) {
    const double y = static_cast<double>(r + 1);
    xs.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      if ((py[i] > y) != (py[j] > y)) xs.push_back(px[i] + (y - py[i]) * (px[j] - px[i]) / (py[j] - py[i]));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const auto c0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(xs[k] - 1.0)));
      const auto c1 = std::min<std::int64_t>(rec.width - 1, static_cast<std::int64_t>(std::floor(xs[k + 1] - 1.0)));
      for (std::int64_t c = c0; c <= c1; ++c) fill[static_cast<std::size_t>(r * rec.width + c)] = 1;
    }
  }
  return fill;
}

}  // namespace

std::string_view class_name(TumorClass c) { return kClassNames.at(static_cast<std::size_t>(c)); }

int dataset_code(TumorClass c) { return static_cast<int>(c) + 1; }

TumorClass class_from_code(int code) {
  if (code < 1 || code > kNumClasses)
    throw Error(ErrorKind::kInvalidLabel, fmt::format("label code {} is not one of 1, 2, 3", code));
  return static_cast<TumorClass>(code - 1);
}

TumorClass class_from_index(int index) {
  if (index < 0 || index >= kNumClasses)
    throw Error(ErrorKind::kInvalidLabel, fmt::format("class index {} is not one of 0, 1, 2", index));
  return static_cast<TumorClass>(index);
}

TumorClass class_from_name(std::string_view name) {
  for (int i = 0; i < kNumClasses; ++i)
    if (kClassNames[static_cast<std::size_t>(i)] == name) return static_cast<TumorClass>(i);
  throw Error(ErrorKind::kInvalidLabel, fmt::format("unknown class name '{}'", name));
}

void TumorRecord::validate() const {
  const auto pixels = static_cast<std::size_t>(height * width);
  if (height <= 0 || width <= 0 || image.size() != pixels || tumor_mask.size() != pixels)
    throw Error(ErrorKind::kShapeMismatch, "image and tumor mask dimensions differ");
  if (std::none_of(tumor_mask.begin(), tumor_mask.end(), [](std::uint8_t m) { return m != 0; }))
    throw Error(ErrorKind::kShapeMismatch, "tumor mask has no foreground pixel");
  if (std::any_of(tumor_mask.begin(), tumor_mask.end(), [](std::uint8_t m) { return m > 1; }))
    throw Error(ErrorKind::kShapeMismatch, "tumor mask is not binary");
  if (tumor_border.size() % 2 != 0)
    throw Error(ErrorKind::kShapeMismatch, "tumor border has an odd number of coordinates");
  // Either pair order must keep every point inside the image.
  const auto inside = [&](bool first_is_x) {
    for (std::size_t i = 0; i + 1 < tumor_border.size(); i += 2) {
      const double a = tumor_border[i], b = tumor_border[i + 1];
      const double x = first_is_x ? a : b, y = first_is_x ? b : a;
      if (!(x >= 0 && x <= static_cast<double>(width) && y >= 0 && y <= static_cast<double>(height))) return false;
    }
    return true;
  };
  if (!inside(true) && !inside(false))
    throw Error(ErrorKind::kShapeMismatch, "tumor border leaves the image bounds");
}

TumorRecord parse_record(const std::filesystem::path& path) {
  h5::File file = h5::File::open_read(path);
  if (!file.is_group("cjdata"))
    throw Error(ErrorKind::kMissingField, fmt::format("{}: no cjdata group", path.string()));
  TumorRecord rec = read_record_group(file, "cjdata");
  try {
    rec.validate();
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("{}: {}", path.string(), e.what()));
  }
  return rec;
}

void write_record(const std::filesystem::path& path, const TumorRecord& record) {
  record.validate();
  {
    h5::File file = h5::File::create(path, 512);
    write_record_group(file, "cjdata", record);
  }
  write_matlab_header(path);
}

double border_mask_overlap(const TumorRecord& record) {
  std::int64_t mask_pixels = 0;
  for (std::uint8_t m : record.tumor_mask) mask_pixels += m;
  if (mask_pixels == 0) return 0.0;
  double best = 0.0;
  for (bool first_is_x : {true, false}) {
    const auto fill = fill_polygon(record, first_is_x);
    std::int64_t hit = 0;
    for (std::size_t i = 0; i < fill.size(); ++i) hit += fill[i] & record.tumor_mask[i];
    best = std::max(best, static_cast<double>(hit) / static_cast<double>(mask_pixels));
  }
  return best;
}

TumorRecord RecordRef::load() const {
  if (key.empty()) return parse_record(source);
  h5::File file = h5::File::open_read(source);
  TumorRecord rec = read_record_group(file, key);
  rec.validate();
  return rec;
}

DatasetManifest load_dataset(const std::filesystem::path& directory) {
  if (!std::filesystem::is_directory(directory))
    throw Error(ErrorKind::kEmptyDataset, fmt::format("{} is not a directory", directory.string()));
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".mat") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
  if (files.empty())
    throw Error(ErrorKind::kEmptyDataset, fmt::format("no .mat records in {}", directory.string()));

  // The HDF5 build is not thread-safe, so records are parsed sequentially.
  DatasetManifest manifest;
  for (const auto& path : files) {
    const TumorRecord rec = parse_record(path);
    manifest.records.push_back({path, "", rec.label, rec.pid, rec.height, rec.width});
    ++manifest.class_counts[static_cast<std::size_t>(rec.label)];
  }
  manifest.total = static_cast<std::int64_t>(manifest.records.size());
  return manifest;
}

void write_manifest_cache(const std::filesystem::path& path, const DatasetManifest& manifest) {
  h5::File file = h5::File::create(path);
  file.create_group("records");
  std::vector<std::string> sources;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const TumorRecord rec = manifest.records[i].load();
    write_record_group(file, fmt::format("records/{:06d}", i), rec);
    sources.push_back(manifest.records[i].source.filename().string());
  }
  file.write_int_attribute("/", "total", manifest.total);
  if (!sources.empty()) file.write_string_list_attribute("/", "sources", sources);
}

DatasetManifest read_manifest_cache(const std::filesystem::path& path) {
  h5::File file = h5::File::open_read(path);
  DatasetManifest manifest;
  if (!file.is_group("records")) throw Error(ErrorKind::kMissingField, fmt::format("{}: no records group", path.string()));
  for (const auto& name : file.list("records")) {
    const std::string key = "records/" + name;
    const TumorRecord rec = read_record_group(file, key);
    manifest.records.push_back({path, key, rec.label, rec.pid, rec.height, rec.width});
    ++manifest.class_counts[static_cast<std::size_t>(rec.label)];
  }
  manifest.total = static_cast<std::int64_t>(manifest.records.size());
  if (manifest.total == 0) throw Error(ErrorKind::kEmptyDataset, fmt::format("{}: cache holds no records", path.string()));
  return manifest;
}

// ------------------------------------------------------------------ splits

void SplitSpec::validate(std::int64_t total) const {
  if (shuffle_buffer < 1) throw Error(ErrorKind::kInvalidSpec, "shuffle_buffer must be >= 1");
  if (exact_counts) {
    const auto& c = *exact_counts;
    if (c[0] < 0 || c[1] < 0 || c[2] < 0) throw Error(ErrorKind::kInvalidSpec, "exact_counts must be non-negative");
    if (c[0] + c[1] + c[2] != total) {
      throw Error(ErrorKind::kCountOverflow,
                  fmt::format("exact_counts sum to {} but the manifest holds {}", c[0] + c[1] + c[2], total));
    }
    if (stratified) throw Error(ErrorKind::kInvalidSpec, "stratified splits take fractions, not exact_counts");
    return;
  }
  for (double f : {train_frac, val_frac, test_frac}) {
    if (!(f >= 0.0 && f <= 1.0)) throw Error(ErrorKind::kInvalidSpec, "split fractions must lie in [0, 1]");
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
    throw Error(ErrorKind::kInvalidSpec, "split fractions must sum to 1");
}

nlohmann::json SplitSpec::to_json() const {
  nlohmann::json j = {{"train_frac", train_frac},   {"val_frac", val_frac},
                      {"test_frac", test_frac},     {"seed", seed},
                      {"shuffle_buffer", shuffle_buffer}, {"stratified", stratified},
                      {"patient_grouped", patient_grouped}};
  j["exact_counts"] = exact_counts ? nlohmann::json(*exact_counts) : nlohmann::json(nullptr);
  return j;
}

SplitSpec SplitSpec::from_json(const nlohmann::json& j) {
  SplitSpec s;
  s.train_frac = j.value("train_frac", s.train_frac);
  s.val_frac = j.value("val_frac", s.val_frac);
  s.test_frac = j.value("test_frac", s.test_frac);
  s.seed = j.value("seed", s.seed);
  s.shuffle_buffer = j.value("shuffle_buffer", s.shuffle_buffer);
  s.stratified = j.value("stratified", s.stratified);
  s.patient_grouped = j.value("patient_grouped", s.patient_grouped);
  if (j.contains("exact_counts") && !j["exact_counts"].is_null())
    s.exact_counts = j["exact_counts"].get<std::array<std::int64_t, 3>>();
  return s;
}

std::vector<std::int64_t> shuffle_buffer_order(std::int64_t n, std::int64_t buffer_size, std::uint64_t seed) {
  Rng rng(seed, /*stream=*/0x5bu);
  std::vector<std::int64_t> buffer, out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t next = 0; next < n; ++next) {
    if (static_cast<std::int64_t>(buffer.size()) < buffer_size) {
      buffer.push_back(next);
      continue;
    }
    const auto j = static_cast<std::size_t>(rng.uniform_int(buffer.size()));
    out.push_back(buffer[j]);
    buffer[j] = next;
  }
  while (!buffer.empty()) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(buffer.size()));
    out.push_back(buffer[j]);
    buffer[j] = buffer.back();
    buffer.pop_back();
  }
  return out;
}

DatasetSplit split_dataset(const DatasetManifest& manifest, const SplitSpec& spec) {
  const std::int64_t total = manifest.total;
  if (total < 3) throw Error(ErrorKind::kInvalidSpec, "need at least 3 records to split");
  spec.validate(total);

  const auto floor_count = [](double frac, std::int64_t n) {
    // Guard against 0.1 * 3064 landing a hair under an integer.
    return static_cast<std::int64_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
  };

  DatasetSplit split;
  const auto order = shuffle_buffer_order(total, spec.shuffle_buffer, spec.seed);

  if (spec.stratified) {
    std::array<std::vector<std::int64_t>, kNumClasses> by_class;
    for (std::int64_t idx : order) by_class[static_cast<std::size_t>(manifest.records[idx].label)].push_back(idx);
    std::vector<int> bucket(static_cast<std::size_t>(total), 2);
    for (const auto& members : by_class) {
      const auto n = static_cast<std::int64_t>(members.size());
      const std::int64_t tr = floor_count(spec.train_frac, n), va = floor_count(spec.val_frac, n);
      for (std::int64_t k = 0; k < n; ++k) bucket[static_cast<std::size_t>(members[k])] = k < tr ? 0 : (k < tr + va ? 1 : 2);
    }
    for (std::int64_t idx : order) {
      auto& dst = bucket[static_cast<std::size_t>(idx)] == 0 ? split.train : bucket[static_cast<std::size_t>(idx)] == 1 ? split.val : split.test;
      dst.push_back(idx);
    }
    return split;
  }

  std::int64_t n_train, n_val;
  if (spec.exact_counts) {
    n_train = (*spec.exact_counts)[0];
    n_val = (*spec.exact_counts)[1];
  } else {
    n_train = floor_count(spec.train_frac, total);
    n_val = floor_count(spec.val_frac, total);
  }

  if (spec.patient_grouped) {
    // Whole patients move together; groups are visited in shuffled order of
    // their first appearance and fill train, then val, then test.
    std::map<std::string, std::vector<std::int64_t>> groups;
    std::vector<std::string> group_order;
    for (std::int64_t idx : order) {
      const auto& pid = manifest.records[static_cast<std::size_t>(idx)].pid;
      auto [it, inserted] = groups.try_emplace(pid);
      if (inserted) group_order.push_back(pid);
      it->second.push_back(idx);
    }
    for (const auto& pid : group_order) {
      const auto& members = groups[pid];
      auto& dst = static_cast<std::int64_t>(split.train.size()) < n_train ? split.train
                  : static_cast<std::int64_t>(split.val.size()) < n_val   ? split.val
                                                                          : split.test;
      dst.insert(dst.end(), members.begin(), members.end());
    }
    return split;
  }

  split.train.assign(order.begin(), order.begin() + n_train);
  split.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test.assign(order.begin() + n_train + n_val, order.end());
  return split;
}

nlohmann::json split_to_json(const DatasetSplit& split, const SplitSpec& spec) {
  return {{"spec", spec.to_json()}, {"train", split.train}, {"val", split.val}, {"test", split.test}};
}

DatasetSplit split_from_json(const nlohmann::json& j) {
  DatasetSplit s;
  try {
    s.train = j.at("train").get<std::vector<std::int64_t>>();
    s.val = j.at("val").get<std::vector<std::int64_t>>();
    s.test = j.at("test").get<std::vector<std::int64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, fmt::format("malformed split file: {}", e.what()));
  }
  return s;
}

}  // namespace tumorbench
