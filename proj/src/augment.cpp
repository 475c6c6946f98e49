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

#include "tumorbench/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "tumorbench/error.hpp"

namespace tumorbench {

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

std::int64_t reflect(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

// Inverse-mapped resampling: out(y, x) = bilinear(in, map(y, x)).
template <typename Map>
Tensor resample(const Tensor& img, Map map) {
  const std::int64_t h = img.dim(0), w = img.dim(1), c = img.dim(2);
  Tensor out(img.shape());
  const float* src = img.data();
  float* dst = out.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      auto [sy, sx] = map(static_cast<double>(y), static_cast<double>(x));
      sy = snap(sy);
      sx = snap(sx);
      const double fy = std::floor(sy), fx = std::floor(sx);
      const double wy = sy - fy, wx = sx - fx;
      const auto y0 = static_cast<std::int64_t>(fy), x0 = static_cast<std::int64_t>(fx);
      const std::int64_t ry0 = reflect(y0, h), ry1 = reflect(y0 + 1, h);
      const std::int64_t rx0 = reflect(x0, w), rx1 = reflect(x0 + 1, w);
      float* o = dst + (y * w + x) * c;
      const float* p00 = src + (ry0 * w + rx0) * c;
      const float* p01 = src + (ry0 * w + rx1) * c;
      const float* p10 = src + (ry1 * w + rx0) * c;
      const float* p11 = src + (ry1 * w + rx1) * c;
      for (std::int64_t k = 0; k < c; ++k) {
        if (wy == 0.0 && wx == 0.0) {
          o[k] = p00[k];
          continue;
        }
        const double top = p00[k] * (1.0 - wx) + p01[k] * wx;
        const double bottom = p10[k] * (1.0 - wx) + p11[k] * wx;
        o[k] = static_cast<float>(top * (1.0 - wy) + bottom * wy);
      }
    }
  }
  return out;
}

void require_hwc(const Tensor& img) {
  if (img.rank() != 3) throw Error(ErrorKind::kShapeError, "augmentation expects an (H, W, C) image");
}

std::string units_name(RotationUnits u) { return u == RotationUnits::kTurns ? "turns" : "paper"; }

}  // namespace

void AugmentationConfig::validate() const {
  const auto fraction = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::kConfig, fmt::format("augmentation {} must lie in [0, 1]", name));
  };
  fraction(zoom_frac, "zoom_frac");
  fraction(contrast_frac, "contrast_frac");
  fraction(translation.height_frac, "translation.height_frac");
  fraction(translation.width_frac, "translation.width_frac");
  if (!(rotation1_max_deg >= 0.0) || !(rotation2_max_deg >= 0.0))
    throw Error(ErrorKind::kConfig, "rotation limits must be non-negative");
  if (!(rescale > 0.0)) throw Error(ErrorKind::kConfig, "rescale must be positive");
}

nlohmann::json AugmentationConfig::to_json() const {
  return {{"flip_horizontal", flip_horizontal},
          {"rotation1_max_deg", rotation1_max_deg},
          {"zoom_frac", zoom_frac},
          {"contrast_frac", contrast_frac},
          {"rescale", rescale},
          {"rotation2_max_deg", rotation2_max_deg},
          {"translation",
           {{"height_frac", translation.height_frac},
            {"width_frac", translation.width_frac},
            {"fill", "reflect"},
            {"interpolation", "bilinear"}}},
          {"enabled", enabled},
          {"rotation_units", units_name(rotation_units)}};
}

AugmentationConfig AugmentationConfig::from_json(const nlohmann::json& j) {
  AugmentationConfig c;
  c.flip_horizontal = j.value("flip_horizontal", c.flip_horizontal);
  c.rotation1_max_deg = j.value("rotation1_max_deg", c.rotation1_max_deg);
  c.zoom_frac = j.value("zoom_frac", c.zoom_frac);
  c.contrast_frac = j.value("contrast_frac", c.contrast_frac);
  c.rescale = j.value("rescale", c.rescale);
  c.rotation2_max_deg = j.value("rotation2_max_deg", c.rotation2_max_deg);
  c.enabled = j.value("enabled", c.enabled);
  if (j.contains("translation")) {
    const auto& t = j["translation"];
    c.translation.height_frac = t.value("height_frac", c.translation.height_frac);
    c.translation.width_frac = t.value("width_frac", c.translation.width_frac);
    if (t.value("fill", std::string("reflect")) != "reflect" ||
        t.value("interpolation", std::string("bilinear")) != "bilinear")
      throw Error(ErrorKind::kConfig, "translation supports fill=reflect, interpolation=bilinear only");
  }
  const std::string units = j.value("rotation_units", std::string("paper"));
  if (units == "paper") {
    c.rotation_units = RotationUnits::kPaper;
  } else if (units == "turns") {
    c.rotation_units = RotationUnits::kTurns;
  } else {
    throw Error(ErrorKind::kConfig, fmt::format("rotation_units must be paper or turns, got '{}'", units));
  }
  c.validate();
  return c;
}

double AugmentationConfig::rotation1_limit_deg() const {
  // The first limit is configured in degrees but originates as 0.2 (rad).
  return rotation_units == RotationUnits::kPaper ? rotation1_max_deg : rotation1_max_deg / kDegPerRad * 360.0;
}

double AugmentationConfig::rotation2_limit_deg() const {
  return rotation_units == RotationUnits::kPaper ? rotation2_max_deg : rotation2_max_deg * 360.0;
}

Tensor flip_horizontal(const Tensor& img) {
  require_hwc(img);
  const std::int64_t h = img.dim(0), w = img.dim(1), c = img.dim(2);
  Tensor out(img.shape());
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x)
      std::copy_n(img.data() + (y * w + (w - 1 - x)) * c, c, out.data() + (y * w + x) * c);
  return out;
}

Tensor rotate(const Tensor& img, double degrees) {
  require_hwc(img);
  if (degrees == 0.0) return img;
  const double theta = degrees / kDegPerRad;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double cy = (static_cast<double>(img.dim(0)) - 1.0) / 2.0, cx = (static_cast<double>(img.dim(1)) - 1.0) / 2.0;
  return resample(img, [=](double y, double x) {
    const double dy = y - cy, dx = x - cx;
    return std::pair{cy + sn * dx + cs * dy, cx + cs * dx - sn * dy};
  });
}

Tensor zoom(const Tensor& img, double scale) {
  require_hwc(img);
  if (scale == 1.0) return img;
  const double cy = (static_cast<double>(img.dim(0)) - 1.0) / 2.0, cx = (static_cast<double>(img.dim(1)) - 1.0) / 2.0;
  return resample(img, [=](double y, double x) { return std::pair{cy + (y - cy) / scale, cx + (x - cx) / scale}; });
}

Tensor adjust_contrast(const Tensor& img, double factor, double value_max) {
  require_hwc(img);
  const std::int64_t hw = img.dim(0) * img.dim(1), c = img.dim(2);
  std::vector<double> mean(static_cast<std::size_t>(c), 0.0);
  for (std::int64_t i = 0; i < hw; ++i)
    for (std::int64_t k = 0; k < c; ++k) mean[static_cast<std::size_t>(k)] += img.data()[i * c + k];
  for (double& m : mean) m /= static_cast<double>(hw);
  Tensor out(img.shape());
  for (std::int64_t i = 0; i < hw; ++i) {
    for (std::int64_t k = 0; k < c; ++k) {
      const double m = mean[static_cast<std::size_t>(k)];
      const double v = m + factor * (img.data()[i * c + k] - m);
      out.data()[i * c + k] = static_cast<float>(std::clamp(v, 0.0, value_max));
    }
  }
  return out;
}

Tensor translate(const Tensor& img, double dy, double dx) {
  require_hwc(img);
  if (dy == 0.0 && dx == 0.0) return img;
  return resample(img, [=](double y, double x) { return std::pair{y - dy, x - dx}; });
}

Tensor rescale(const Tensor& img, double factor) {
  Tensor out(img.shape());
  const float* src = img.data();
  float* dst = out.data();
  for (std::int64_t i = 0; i < img.size(); ++i) dst[i] = static_cast<float>(static_cast<double>(src[i]) * factor);
  return out;
}

AugmentationDraw draw_augmentation(const AugmentationConfig& cfg, std::int64_t height, std::int64_t width, Rng& rng) {
  // Every draw is consumed even for disabled transforms so that toggling one
  // transform leaves the others' parameters unchanged.
  AugmentationDraw d;
  const double u_flip = rng.uniform();
  d.flip = cfg.flip_horizontal && u_flip < 0.5;
  const double r1 = cfg.rotation1_limit_deg();
  d.rotation1_deg = rng.uniform(-r1, r1);
  d.zoom = rng.uniform(1.0 - cfg.zoom_frac, 1.0 + cfg.zoom_frac);
  d.contrast = rng.uniform(1.0 - cfg.contrast_frac, 1.0 + cfg.contrast_frac);
  const double r2 = cfg.rotation2_limit_deg();
  d.rotation2_deg = rng.uniform(-r2, r2);
  const double hy = cfg.translation.height_frac * static_cast<double>(height);
  const double hx = cfg.translation.width_frac * static_cast<double>(width);
  d.dy = rng.uniform(-hy, hy);
  d.dx = rng.uniform(-hx, hx);
  return d;
}

Tensor apply_draw(const Tensor& img, const AugmentationConfig& cfg, const AugmentationDraw& draw, double value_max) {
  Tensor x = draw.flip ? flip_horizontal(img) : img;
  x = rotate(x, draw.rotation1_deg);
  x = zoom(x, draw.zoom);
  x = adjust_contrast(x, draw.contrast, value_max);
  x = rescale(x, cfg.rescale);
  x = rotate(x, draw.rotation2_deg);
  return translate(x, draw.dy, draw.dx);
}

Tensor apply_augmentations(const Tensor& img, const AugmentationConfig& cfg, Rng& rng, bool training,
                           double value_max) {
  require_hwc(img);
  if (!training || !cfg.enabled) return rescale(img, cfg.rescale);
  const AugmentationDraw draw = draw_augmentation(cfg, img.dim(0), img.dim(1), rng);
  return apply_draw(img, cfg, draw, value_max);
}

Rng augmentation_stream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t sample_index) {
  return Rng::substream(seed, {0xa06u, epoch, sample_index});
}

}  // namespace tumorbench
