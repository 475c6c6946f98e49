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

#ifndef TUMORBENCH_MODEL_BACKBONES_HPP_
#define TUMORBENCH_MODEL_BACKBONES_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "tumorbench/nn/graph.hpp"

namespace tumorbench::model {

enum class BackboneKind { kXception, kResNet50V2, kInceptionResNetV2, kDenseNet201 };

inline constexpr std::array<BackboneKind, 4> kAllBackbones = {
    BackboneKind::kXception, BackboneKind::kResNet50V2, BackboneKind::kInceptionResNetV2,
    BackboneKind::kDenseNet201};

// Static facts about a backbone's ImageNet "notop" release.
struct BackboneInfo {
  BackboneKind kind;
  std::string_view name;          // xception, resnet50v2, ...
  std::string_view display_name;  // Xception, ResNet50V2, ...
  int feature_depth;
  int total_stride;
  std::string_view weights_file;  // legacy Keras HDF5 file name
  std::string_view weights_url;
};

const BackboneInfo& backbone_info(BackboneKind kind);
std::string_view backbone_name(BackboneKind kind);

// Accepts the canonical names plus the display spellings; throws
// ErrorKind::kUnknownBackbone otherwise.
BackboneKind parse_backbone(std::string_view name);

// Appends the convolutional tower (no classifier top) to `graph`, starting
// at `input`, and returns the final activation node. Layer and weight names
// match the Keras application models so pretrained files load by name.
// Kernels are glorot-uniform from `seed`; biases and BN shifts are zero.
nn::NodeId build_backbone_tower(nn::Graph& graph, nn::NodeId input, BackboneKind kind,
                                std::uint64_t seed);

}  // namespace tumorbench::model

#endif  // TUMORBENCH_MODEL_BACKBONES_HPP_
