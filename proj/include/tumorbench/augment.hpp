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

#ifndef TUMORBENCH_AUGMENT_HPP_
#define TUMORBENCH_AUGMENT_HPP_

#include <cstdint>

#include "json.hpp"
#include "tumorbench/rng.hpp"
#include "tumorbench/tensor.hpp"

namespace tumorbench {

// kPaper reads the rotation limits as stated angles (0.2 rad, 30 deg).
// kTurns reads the original layer arguments (0.2 and 30) as fractions of a
// full turn, the way the Keras RandomRotation layer interprets them.
enum class RotationUnits { kPaper, kTurns };

struct TranslationSpec {
  double height_frac = 0.2;
  double width_frac = 0.3;
  bool operator==(const TranslationSpec&) const = default;
};

struct AugmentationConfig {
  bool flip_horizontal = true;
  double rotation1_max_deg = 11.459155902616464;  // 0.2 rad
  double zoom_frac = 0.2;
  double contrast_frac = 0.2;
  double rescale = 1.0 / 255.0;
  double rotation2_max_deg = 30.0;
  TranslationSpec translation;
  bool enabled = true;
  RotationUnits rotation_units = RotationUnits::kPaper;

  void validate() const;  // throws kConfig
  nlohmann::json to_json() const;
  static AugmentationConfig from_json(const nlohmann::json& j);
  bool operator==(const AugmentationConfig&) const = default;

  double rotation1_limit_deg() const;
  double rotation2_limit_deg() const;
};

// Geometric transforms work on (H, W, C) tensors, sample bilinearly about
// the pixel-grid centre ((H-1)/2, (W-1)/2) and fill with half-sample
// symmetric reflection ("dcba|abcd|dcba").

Tensor flip_horizontal(const Tensor& img);
// Counter-clockwise for positive angles.
Tensor rotate(const Tensor& img, double degrees);
// s > 1 magnifies: output(p) = input(c + (p - c) / s).
Tensor zoom(const Tensor& img, double scale);
// Per-channel mean + factor * (x - mean), clipped to [0, value_max].
Tensor adjust_contrast(const Tensor& img, double factor, double value_max);
// output(y, x) = input(y - dy, x - dx).
Tensor translate(const Tensor& img, double dy, double dx);
Tensor rescale(const Tensor& img, double factor);

// One sample's random parameters, drawn in the fixed order below.
struct AugmentationDraw {
  bool flip = false;
  double rotation1_deg = 0.0;
  double zoom = 1.0;
  double contrast = 1.0;
  double rotation2_deg = 0.0;
  double dy = 0.0;
  double dx = 0.0;
};

AugmentationDraw draw_augmentation(const AugmentationConfig& cfg, std::int64_t height, std::int64_t width, Rng& rng);

// flip -> rotation 1 -> zoom -> contrast -> rescale -> rotation 2 -> translation.
// `value_max` is the input range upper bound used for contrast clipping.
Tensor apply_draw(const Tensor& img, const AugmentationConfig& cfg, const AugmentationDraw& draw,
                  double value_max = 255.0);

// Training path (and cfg.enabled): all seven transforms. Otherwise rescale only.
Tensor apply_augmentations(const Tensor& img, const AugmentationConfig& cfg, Rng& rng, bool training,
                           double value_max = 255.0);

// Sample-level stream: independent of batch composition and thread count.
Rng augmentation_stream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t sample_index);

}  // namespace tumorbench

#endif  // TUMORBENCH_AUGMENT_HPP_
