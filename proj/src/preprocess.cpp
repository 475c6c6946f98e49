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

#include "tumorbench/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "tumorbench/error.hpp"

namespace tumorbench {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string interpolation_name(Interpolation m) { return m == Interpolation::kNearest ? "nearest" : "bilinear"; }

}  // namespace

RawImage raw_image_from(const TumorRecord& record) {
  RawImage img(record.height, record.width);
  std::transform(record.image.begin(), record.image.end(), img.pixels.begin(),
                 [](std::int16_t v) { return static_cast<double>(v); });
  return img;
}

nlohmann::json PreprocessConfig::to_json() const {
  return {{"side", side},
          {"interpolation", interpolation_name(interpolation)},
          {"sharpen_kernel", kernel.weights},
          {"scale_at", scale_at == ScaleAt::kModel ? "model" : "preprocess"}};
}

PreprocessConfig PreprocessConfig::from_json(const nlohmann::json& j) {
  PreprocessConfig c;
  c.side = j.value("side", c.side);
  const std::string interp = j.value("interpolation", std::string("bilinear"));
  if (interp == "bilinear") {
    c.interpolation = Interpolation::kBilinear;
  } else if (interp == "nearest") {
    c.interpolation = Interpolation::kNearest;
  } else {
    throw Error(ErrorKind::kConfig, fmt::format("unknown interpolation '{}'", interp));
  }
  if (j.contains("sharpen_kernel")) c.kernel.weights = j["sharpen_kernel"].get<std::array<double, 9>>();
  const std::string scale = j.value("scale_at", std::string("model"));
  if (scale == "model") {
    c.scale_at = ScaleAt::kModel;
  } else if (scale == "preprocess") {
    c.scale_at = ScaleAt::kPreprocess;
  } else {
    throw Error(ErrorKind::kConfig, fmt::format("scale_at must be model or preprocess, got '{}'", scale));
  }
  return c;
}

std::string PreprocessConfig::hash() const { return fmt::format("{:016x}", fnv1a(to_json().dump())); }

RawImage normalize_range(const RawImage& img) {
  RawImage out(img.height, img.width);
  if (img.pixels.empty()) return out;
  const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const double min = *lo, span = *hi - *lo;
  if (span == 0.0) return out;
  const double scale = 255.0 / span;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) out.pixels[i] = (img.pixels[i] - min) * scale;
  return out;
}

RawImage resize(const RawImage& img, int side, Interpolation mode) {
  if (side < 8) throw Error(ErrorKind::kInvalidSize, fmt::format("resize side {} is below 8", side));
  RawImage out(side, side);
  const double sy = static_cast<double>(img.height) / side;
  const double sx = static_cast<double>(img.width) / side;
  const auto clamp_index = [](double v, std::int64_t n) {
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(v), 0, n - 1);
  };
#pragma omp parallel for schedule(static)
  for (int y = 0; y < side; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height - 1));
    for (int x = 0; x < side; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width - 1));
      if (mode == Interpolation::kNearest) {
        out.at(y, x) = img.at(clamp_index(std::floor((y + 0.5) * sy), img.height),
                              clamp_index(std::floor((x + 0.5) * sx), img.width));
        continue;
      }
      const auto y0 = static_cast<std::int64_t>(std::floor(fy)), x0 = static_cast<std::int64_t>(std::floor(fx));
      const std::int64_t y1 = std::min(y0 + 1, img.height - 1), x1 = std::min(x0 + 1, img.width - 1);
      const double wy = fy - static_cast<double>(y0), wx = fx - static_cast<double>(x0);
      const double top = img.at(y0, x0) * (1 - wx) + img.at(y0, x1) * wx;
      const double bottom = img.at(y1, x0) * (1 - wx) + img.at(y1, x1) * wx;
      out.at(y, x) = top * (1 - wy) + bottom * wy;
    }
  }
  return out;
}

RawImage resize_bilinear(const RawImage& img, int side) { return resize(img, side, Interpolation::kBilinear); }

RawImage filter3x3(const RawImage& img, const SharpenKernel& kernel) {
  RawImage out(img.height, img.width);
  const std::int64_t h = img.height, w = img.width;
#pragma omp parallel for schedule(static)
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        const std::int64_t yy = std::clamp<std::int64_t>(y + dy, 0, h - 1);
        for (int dx = -1; dx <= 1; ++dx) {
          const std::int64_t xx = std::clamp<std::int64_t>(x + dx, 0, w - 1);
          acc += kernel.weights[static_cast<std::size_t>((dy + 1) * 3 + (dx + 1))] * img.at(yy, xx);
        }
      }
      out.at(y, x) = acc;
    }
  }
  return out;
}

RawImage sharpen(const RawImage& img, const SharpenKernel& kernel) {
  RawImage out = filter3x3(img, kernel);
  for (double& v : out.pixels) v = std::clamp(v, 0.0, 255.0);
  return out;
}

RawImage complement(const RawImage& img) {
  RawImage out(img.height, img.width);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) out.pixels[i] = 255.0 - img.pixels[i];
  return out;
}

Tensor preprocess_pipeline(const RawImage& raw, const PreprocessConfig& config) {
  if (raw.height < 8 || raw.width < 8)
    throw Error(ErrorKind::kInvalidSize, fmt::format("raw image {}x{} is below 8x8", raw.height, raw.width));
  const RawImage img = complement(sharpen(resize(normalize_range(raw), config.side, config.interpolation), config.kernel));
  const double scale = config.scale_at == ScaleAt::kPreprocess ? 1.0 / 255.0 : 1.0;
  Tensor out({config.side, config.side, 3});
  float* dst = out.data();
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const auto v = static_cast<float>(img.pixels[i] * scale);
    dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = v;
  }
  return out;
}

// ------------------------------------------------------------------- cache

void PreprocessedCache::build(const std::filesystem::path& path, const DatasetManifest& manifest,
                              const PreprocessConfig& config) {
  const auto n = static_cast<std::uint64_t>(manifest.total);
  const auto side = static_cast<std::uint64_t>(config.side);
  h5::File file = h5::File::create(path);
  file.create_float_dataset("images", {n, side, side, 3}, {1, side, side, 3});
  std::vector<std::int64_t> labels;
  for (std::uint64_t i = 0; i < n; ++i) {
    const TumorRecord rec = manifest.records[i].load();
    const Tensor img = preprocess_pipeline(raw_image_from(rec), config);
    file.write_float_slab("images", i, img.span());
    labels.push_back(static_cast<int>(rec.label));
  }
  file.write_ints("labels", labels);
  file.write_string_attribute("/", "config", config.to_json().dump());
  file.write_string_attribute("/", "config_hash", config.hash());
}

PreprocessedCache PreprocessedCache::open(const std::filesystem::path& path,
                                          const std::optional<PreprocessConfig>& expected) {
  h5::File file = h5::File::open_read(path);
  PreprocessConfig config;
  try {
    config = PreprocessConfig::from_json(nlohmann::json::parse(file.read_string_attribute("/", "config")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, fmt::format("{}: unreadable cache config: {}", path.string(), e.what()));
  }
  const std::string stored = file.read_string_attribute("/", "config_hash");
  if (expected && expected->hash() != stored) {
    throw Error(ErrorKind::kConfig, fmt::format("{}: cache was built with config {} but {} was requested",
                                                path.string(), stored, expected->hash()));
  }
  auto labels = file.read_ints("labels");
  return PreprocessedCache(std::move(file), config, std::move(labels));
}

PreprocessedCache::PreprocessedCache(h5::File file, PreprocessConfig config, std::vector<std::int64_t> labels)
    : file_(std::move(file)), config_(config), labels_(std::move(labels)) {
  size_ = static_cast<std::int64_t>(labels_.size());
}

Tensor PreprocessedCache::image(std::int64_t index) const {
  if (index < 0 || index >= size_)
    throw Error(ErrorKind::kShapeError, fmt::format("cache index {} outside [0, {})", index, size_));
  Tensor out({config_.side, config_.side, 3});
  file_.read_float_slab("images", static_cast<std::uint64_t>(index), out.span());
  return out;
}

}  // namespace tumorbench
