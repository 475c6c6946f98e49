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

#ifndef TUMORBENCH_PREPROCESS_HPP_
#define TUMORBENCH_PREPROCESS_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tumorbench/data_ingest.hpp"
#include "tumorbench/hdf5_file.hpp"
#include "tumorbench/tensor.hpp"

namespace tumorbench {

// Single-channel image in double precision, row-major.
struct RawImage {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<double> pixels;

  RawImage() = default;
  RawImage(std::int64_t h, std::int64_t w, double fill = 0.0)
      : height(h), width(w), pixels(static_cast<std::size_t>(h * w), fill) {}

  double& at(std::int64_t y, std::int64_t x) { return pixels[static_cast<std::size_t>(y * width + x)]; }
  double at(std::int64_t y, std::int64_t x) const { return pixels[static_cast<std::size_t>(y * width + x)]; }
};

RawImage raw_image_from(const TumorRecord& record);

// 3x3 kernel applied as a correlation (identical to convolution for the
// symmetric default).
struct SharpenKernel {
  std::array<double, 9> weights = {0, -1, 0, -1, 5, -1, 0, -1, 0};
};

enum class Interpolation { kBilinear, kNearest };
enum class ScaleAt { kModel, kPreprocess };

struct PreprocessConfig {
  int side = 256;
  Interpolation interpolation = Interpolation::kBilinear;
  SharpenKernel kernel;
  ScaleAt scale_at = ScaleAt::kModel;

  nlohmann::json to_json() const;
  static PreprocessConfig from_json(const nlohmann::json& j);
  // Stable 64-bit digest of to_json(), as 16 hex digits.
  std::string hash() const;
};

// (in - min) * 255 / (max - min); constant images become all zeros.
RawImage normalize_range(const RawImage& img);

// Half-pixel-centre sampling: source = (dst + 0.5) * in/out - 0.5, clamped
// to the edge. Halving therefore averages 2x2 blocks exactly.
RawImage resize_bilinear(const RawImage& img, int side = 256);
RawImage resize(const RawImage& img, int side, Interpolation mode);

// Replicate-border 3x3 filtering without clipping.
RawImage filter3x3(const RawImage& img, const SharpenKernel& kernel);
// filter3x3 followed by clipping to [0, 255].
RawImage sharpen(const RawImage& img, const SharpenKernel& kernel = {});

RawImage complement(const RawImage& img);

// normalize -> resize -> sharpen -> complement -> replicate to 3 channels.
// Returns an (side, side, 3) float tensor in [0, 255], or [0, 1] when
// config.scale_at == kPreprocess.
Tensor preprocess_pipeline(const RawImage& raw, const PreprocessConfig& config = {});

// HDF5 store of preprocessed images keyed by manifest index:
//   /images (N, side, side, 3) float32, chunked one image per chunk
//   /labels (N) int64; attributes config (JSON) and config_hash.
class PreprocessedCache {
 public:
  static void build(const std::filesystem::path& path, const DatasetManifest& manifest,
                    const PreprocessConfig& config);
  // Throws kConfig when `expected` is given and its hash differs.
  static PreprocessedCache open(const std::filesystem::path& path,
                                const std::optional<PreprocessConfig>& expected = std::nullopt);

  std::int64_t size() const { return size_; }
  const PreprocessConfig& config() const { return config_; }
  int label(std::int64_t index) const { return static_cast<int>(labels_.at(static_cast<std::size_t>(index))); }
  const std::vector<std::int64_t>& labels() const { return labels_; }
  Tensor image(std::int64_t index) const;

 private:
  PreprocessedCache(h5::File file, PreprocessConfig config, std::vector<std::int64_t> labels);
  h5::File file_;
  PreprocessConfig config_;
  std::vector<std::int64_t> labels_;
  std::int64_t size_ = 0;
};

}  // namespace tumorbench

#endif  // TUMORBENCH_PREPROCESS_HPP_
