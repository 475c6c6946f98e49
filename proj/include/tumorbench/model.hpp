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

#ifndef TUMORBENCH_MODEL_HPP_
#define TUMORBENCH_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "json.hpp"
#include "tumorbench/augment.hpp"
#include "tumorbench/model/backbones.hpp"
#include "tumorbench/nn/graph.hpp"
#include "tumorbench/optim.hpp"

namespace tumorbench::model {

// weights_source: "imagenet" resolves the published notop file (local
// cache first, then network); "random" keeps the seeded initialization;
// anything else is a path to a weights file.
struct BackboneSpec {
  BackboneKind kind = BackboneKind::kResNet50V2;
  std::string weights_source = "imagenet";
  bool trainable = true;
  Shape input_shape = {256, 256, 3};
  int feature_depth = 0;

  nlohmann::json to_json() const;
  static BackboneSpec from_json(const nlohmann::json& j);
};

struct BackboneOptions {
  std::string weights_source = "imagenet";
  std::uint64_t seed = 0;  // initialization when weights are not loaded
  Shape input_shape = {256, 256, 3};
  bool trainable = true;
};

struct Backbone {
  BackboneSpec spec;
  nn::Graph graph;
  nn::NodeId output = 0;
};

// Throws kUnknownBackbone, kWeightsUnavailable, kShapeIncompatible.
Backbone build_backbone(BackboneKind kind, const BackboneOptions& options = {});

struct HeadConfig {
  int dense_units = 1280;
  std::uint64_t dense1_seed = 1377;
  std::uint64_t dense_out_seed = 0;  // the global experiment seed
  double dense_out_range = 0.05;
  double bn_momentum = 0.99;
  double bn_epsilon = 1e-3;
  int num_classes = 3;

  nlohmann::json to_json() const;
  static HeadConfig from_json(const nlohmann::json& j);
};

struct CompileConfig {
  std::string optimizer = "adamax";
  double learning_rate = 1e-4;
  double beta_1 = 0.9;
  double beta_2 = 0.999;
  double epsilon = 1e-7;
  std::string loss = "sparse_categorical_crossentropy";
  std::string metric = "accuracy";

  void validate() const;  // throws kConfig
  nlohmann::json to_json() const;
  static CompileConfig from_json(const nlohmann::json& j);
};

// Backbone + head as one graph, with the in-graph augmentation settings.
struct ModelHandle {
  BackboneSpec backbone;
  HeadConfig head;
  AugmentationConfig augmentation;
  // True when images arrive already divided by 255 (scale_at=preprocess).
  bool input_prescaled = false;
  std::optional<CompileConfig> compile;
  std::unique_ptr<Adamax> optimizer;

  nn::Graph graph{Shape{256, 256, 3}};
  nn::NodeId features = 0, gap = 0, bn1 = 0, dense1 = 0, bn2 = 0, logits = 0, probs = 0;

  int num_classes() const { return head.num_classes; }
};

// gap -> bn1 -> dense1 (relu) -> bn2 -> dense_out -> softmax.
// Throws kShapeIncompatible when the backbone output is not 4-D.
ModelHandle attach_head(Backbone backbone, const HeadConfig& head = {}, const AugmentationConfig& augmentation = {});

void compile_model(ModelHandle& handle, const CompileConfig& config = {});

// Eval-path input adapter: (H, W, 3) image -> model input in [0, 1].
Tensor model_input(const ModelHandle& handle, const Tensor& image, Rng& rng, bool training);

// Inference-mode forward of a (N, H, W, 3) batch in [0, 1]. Throws kShapeError.
Tensor predict(ModelHandle& handle, const Tensor& batch);

// Mean sparse categorical cross-entropy over probability rows, with the
// probabilities clipped to [eps, 1 - eps], and its gradient w.r.t. the
// pre-softmax logits (zero for rows whose true-class probability is clipped).
struct LossResult {
  double loss = 0.0;
  Tensor grad_logits;
  std::int64_t correct = 0;
};
LossResult sparse_categorical_crossentropy(const Tensor& probs, std::span<const int> labels, double eps = 1e-7);

struct BatchResult {
  double loss = 0.0;
  std::int64_t correct = 0;
  std::int64_t count = 0;
};

// One optimizer step on a model-input batch (requires compile_model).
BatchResult train_on_batch(ModelHandle& handle, const Tensor& batch, std::span<const int> labels);

// Loss/accuracy without updating anything; fills `probs` when non-null.
BatchResult test_on_batch(ModelHandle& handle, const Tensor& batch, std::span<const int> labels,
                          Tensor* probs = nullptr);

inline constexpr std::int64_t kModelFormatVersion = 1;

// Single HDF5 file: format version, architecture JSON, augmentation and
// compile settings, and every weight under /weights/<layer>/<name>.
void save_model(const ModelHandle& handle, const std::filesystem::path& path);
// Throws kCorruptArtifact or kVersionMismatch.
ModelHandle load_model(const std::filesystem::path& path);

// ---- pretrained weights -------------------------------------------------

// Looks for the notop file in $TUMORBENCH_WEIGHTS_DIR, then ~/.keras/models,
// then downloads it into the first of those that is writable (when built
// with network support). Throws kWeightsUnavailable.
std::filesystem::path resolve_pretrained_weights(BackboneKind kind);

// Copies weights from a legacy Keras HDF5 weights file into the layers of
// `graph` by layer name ("/" and "_" are treated alike). Every weighted
// layer must be found. Returns the number of tensors assigned.
std::int64_t load_keras_weights(nn::Graph& graph, const std::filesystem::path& path);

// Writes `graph`'s weights in the legacy Keras layout (for round trips and
// interop tests).
void save_keras_weights(nn::Graph& graph, const std::filesystem::path& path);

}  // namespace tumorbench::model

#endif  // TUMORBENCH_MODEL_HPP_
