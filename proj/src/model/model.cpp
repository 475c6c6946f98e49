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

#include "tumorbench/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "tumorbench/error.hpp"
#include "tumorbench/hdf5_file.hpp"

namespace tumorbench::model {

// ------------------------------------------------------------ JSON glue

nlohmann::json BackboneSpec::to_json() const {
  return {{"kind", backbone_name(kind)},
          {"weights_source", weights_source},
          {"trainable", trainable},
          {"input_shape", input_shape},
          {"feature_depth", feature_depth}};
}

BackboneSpec BackboneSpec::from_json(const nlohmann::json& j) {
  BackboneSpec s;
  s.kind = parse_backbone(j.at("kind").get<std::string>());
  s.weights_source = j.value("weights_source", s.weights_source);
  s.trainable = j.value("trainable", s.trainable);
  s.input_shape = j.value("input_shape", s.input_shape);
  s.feature_depth = j.value("feature_depth", 0);
  return s;
}

nlohmann::json HeadConfig::to_json() const {
  return {{"dense_units", dense_units},       {"dense1_seed", dense1_seed}, {"dense_out_seed", dense_out_seed},
          {"dense_out_range", dense_out_range}, {"bn_momentum", bn_momentum}, {"bn_epsilon", bn_epsilon},
          {"num_classes", num_classes}};
}

HeadConfig HeadConfig::from_json(const nlohmann::json& j) {
  HeadConfig h;
  h.dense_units = j.value("dense_units", h.dense_units);
  h.dense1_seed = j.value("dense1_seed", h.dense1_seed);
  h.dense_out_seed = j.value("dense_out_seed", h.dense_out_seed);
  h.dense_out_range = j.value("dense_out_range", h.dense_out_range);
  h.bn_momentum = j.value("bn_momentum", h.bn_momentum);
  h.bn_epsilon = j.value("bn_epsilon", h.bn_epsilon);
  h.num_classes = j.value("num_classes", h.num_classes);
  return h;
}

nlohmann::json CompileConfig::to_json() const {
  return {{"optimizer", optimizer}, {"learning_rate", learning_rate}, {"beta_1", beta_1}, {"beta_2", beta_2},
          {"epsilon", epsilon},     {"loss", loss},                   {"metric", metric}};
}

CompileConfig CompileConfig::from_json(const nlohmann::json& j) {
  CompileConfig c;
  c.optimizer = j.value("optimizer", c.optimizer);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta_1 = j.value("beta_1", c.beta_1);
  c.beta_2 = j.value("beta_2", c.beta_2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.loss = j.value("loss", c.loss);
  c.metric = j.value("metric", c.metric);
  return c;
}

// ------------------------------------------------------------- building

Backbone build_backbone(BackboneKind kind, const BackboneOptions& options) {
  const BackboneInfo& info = backbone_info(kind);
  if (options.input_shape.size() != 3 || options.input_shape[2] != 3)
    throw Error(ErrorKind::kShapeIncompatible, "backbones take (H, W, 3) inputs");
  if (options.input_shape[0] % info.total_stride != 0 || options.input_shape[1] % info.total_stride != 0) {
    throw Error(ErrorKind::kShapeIncompatible,
                fmt::format("{} needs input sides divisible by {}", info.display_name, info.total_stride));
  }
  Backbone b{BackboneSpec{}, nn::Graph(options.input_shape), 0};
  b.output = build_backbone_tower(b.graph, b.graph.input(), kind, options.seed);
  b.spec.kind = kind;
  b.spec.weights_source = options.weights_source;
  b.spec.trainable = options.trainable;
  b.spec.input_shape = options.input_shape;
  b.spec.feature_depth = static_cast<int>(b.graph.shape(b.output).back());

  if (options.weights_source == "imagenet") {
    load_keras_weights(b.graph, resolve_pretrained_weights(kind));
  } else if (options.weights_source != "random") {
    if (!std::filesystem::exists(options.weights_source)) {
      throw Error(ErrorKind::kWeightsUnavailable,
                  fmt::format("weights file {} does not exist", options.weights_source));
    }
    load_keras_weights(b.graph, options.weights_source);
  }
  for (std::size_t id = 1; id < b.graph.size(); ++id)
    b.graph.layer(static_cast<nn::NodeId>(id))->set_trainable(options.trainable);
  return b;
}

ModelHandle attach_head(Backbone backbone, const HeadConfig& head, const AugmentationConfig& augmentation) {
  if (backbone.graph.shape(backbone.output).size() != 4) {
    throw Error(ErrorKind::kShapeIncompatible,
                fmt::format("backbone output {} is not a 4-D feature map", shape_string(backbone.graph.shape(backbone.output))));
  }
  augmentation.validate();
  ModelHandle h;
  h.backbone = backbone.spec;
  h.head = head;
  h.augmentation = augmentation;
  h.graph = std::move(backbone.graph);
  h.features = backbone.output;

  nn::Graph& g = h.graph;
  const nn::BatchNormOptions bn{static_cast<float>(head.bn_epsilon), static_cast<float>(head.bn_momentum), true};
  h.gap = g.add<nn::GlobalAvgPool2D>({h.features}, "head_gap");
  h.bn1 = g.add<nn::BatchNorm>({h.gap}, "head_bn1", bn);
  nn::DenseOptions d1;
  d1.units = head.dense_units;
  d1.activation = nn::Activation::kRelu;
  d1.kernel_init = {nn::Initializer::kGlorotUniform, head.dense1_seed, 0.05f};
  h.dense1 = g.add<nn::Dense>({h.bn1}, "head_dense1", d1);
  h.bn2 = g.add<nn::BatchNorm>({h.dense1}, "head_bn2", bn);
  nn::DenseOptions out;
  out.units = head.num_classes;
  out.activation = nn::Activation::kLinear;
  out.kernel_init = {nn::Initializer::kRandomUniform, head.dense_out_seed, static_cast<float>(head.dense_out_range)};
  h.logits = g.add<nn::Dense>({h.bn2}, "dense_out", out);
  h.probs = g.add<nn::Softmax>({h.logits}, "softmax");
  return h;
}

void CompileConfig::validate() const {
  if (optimizer != "adamax") throw Error(ErrorKind::kConfig, fmt::format("unsupported optimizer '{}'", optimizer));
  if (loss != "sparse_categorical_crossentropy")
    throw Error(ErrorKind::kConfig, fmt::format("unsupported loss '{}'", loss));
  if (metric != "accuracy") throw Error(ErrorKind::kConfig, fmt::format("unsupported metric '{}'", metric));
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::kConfig, "learning_rate must be positive");
}

void compile_model(ModelHandle& handle, const CompileConfig& config) {
  config.validate();
  handle.compile = config;
  handle.optimizer = std::make_unique<Adamax>(config.learning_rate, config.beta_1, config.beta_2, config.epsilon);
}

Tensor model_input(const ModelHandle& handle, const Tensor& image, Rng& rng, bool training) {
  if (!handle.input_prescaled) return apply_augmentations(image, handle.augmentation, rng, training, 255.0);
  AugmentationConfig cfg = handle.augmentation;
  cfg.rescale = 1.0;
  return apply_augmentations(image, cfg, rng, training, 1.0);
}

// ------------------------------------------------------ loss and steps

LossResult sparse_categorical_crossentropy(const Tensor& probs, std::span<const int> labels, double eps) {
  if (probs.rank() != 2) throw Error(ErrorKind::kShapeError, "loss expects (batch, classes) probabilities");
  const std::int64_t n = probs.dim(0), k = probs.dim(1);
  if (static_cast<std::int64_t>(labels.size()) != n) {
    throw Error(ErrorKind::kLengthMismatch,
                fmt::format("{} labels for {} probability rows", labels.size(), n));
  }
  if (n == 0) throw Error(ErrorKind::kEmptyInput, "loss over an empty batch");
  LossResult r;
  r.grad_logits = Tensor({n, k});
  double total = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= k) throw Error(ErrorKind::kLabelOutOfRange, fmt::format("label {} outside [0, {})", y, k));
    const float* p = probs.data() + i * k;
    const double py = p[y];
    const double clipped = std::clamp(py, eps, 1.0 - eps);
    total += -std::log(clipped);
    const auto arg = std::max_element(p, p + k) - p;
    if (arg == y) ++r.correct;
    // d(-log p_y)/d(logit_j) = p_j - [j == y], zero once p_y is clipped.
    if (py > eps && py < 1.0 - eps) {
      for (std::int64_t j = 0; j < k; ++j)
        r.grad_logits[i * k + j] = static_cast<float>((p[j] - (j == y ? 1.0 : 0.0)) / static_cast<double>(n));
    }
  }
  r.loss = total / static_cast<double>(n);
  return r;
}

BatchResult train_on_batch(ModelHandle& handle, const Tensor& batch, std::span<const int> labels) {
  if (!handle.optimizer) throw Error(ErrorKind::kConfig, "model is not compiled");
  const Tensor& probs = handle.graph.forward(batch, nn::Mode::kTraining, handle.probs);
  LossResult loss = sparse_categorical_crossentropy(probs, labels, handle.compile->epsilon);
  BatchResult r{loss.loss, loss.correct, batch.dim(0)};
  if (!std::isfinite(loss.loss)) {
    handle.graph.release_activations();
    return r;
  }
  handle.graph.zero_grad();
  handle.graph.backward(handle.logits, loss.grad_logits);
  handle.optimizer->step(handle.graph.trainable_parameters());
  return r;
}

BatchResult test_on_batch(ModelHandle& handle, const Tensor& batch, std::span<const int> labels, Tensor* probs) {
  Tensor p = predict(handle, batch);
  const double eps = handle.compile ? handle.compile->epsilon : 1e-7;
  LossResult loss = sparse_categorical_crossentropy(p, labels, eps);
  if (probs != nullptr) *probs = std::move(p);
  return {loss.loss, loss.correct, batch.dim(0)};
}

Tensor predict(ModelHandle& handle, const Tensor& batch) {
  Tensor out = handle.graph.forward(batch, nn::Mode::kInference, handle.probs);
  handle.graph.release_activations();
  return out;
}

// ---------------------------------------------------------- persistence

void save_model(const ModelHandle& handle, const std::filesystem::path& path) {
  // Write to a sibling temp file and rename so a crash never leaves a
  // half-written checkpoint under the final name.
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    h5::File file = h5::File::create(tmp);
    file.write_string_attribute("/", "format", "tumorbench-model");
    file.write_int_attribute("/", "format_version", kModelFormatVersion);
    nlohmann::json arch = {{"backbone", handle.backbone.to_json()},
                           {"head", handle.head.to_json()},
                           {"input_prescaled", handle.input_prescaled},
                           {"graph", handle.graph.describe()}};
    file.write_text("architecture", arch.dump());
    file.write_text("augmentation", handle.augmentation.to_json().dump());
    if (handle.compile) file.write_text("compile", handle.compile->to_json().dump());
    auto& graph = const_cast<nn::Graph&>(handle.graph);
    for (const nn::Parameter* p : graph.parameters()) {
      std::vector<std::uint64_t> dims(p->value.shape().begin(), p->value.shape().end());
      file.write_floats("weights/" + p->name, dims, p->value.span());
    }
  }
  std::filesystem::rename(tmp, path);
}

ModelHandle load_model(const std::filesystem::path& path) {
  try {
    h5::File file = h5::File::open_read(path);
    if (!file.has_attribute("/", "format_version") || !file.has_attribute("/", "format") ||
        file.read_string_attribute("/", "format") != "tumorbench-model")
      throw Error(ErrorKind::kCorruptArtifact, fmt::format("{} is not a saved model", path.string()));
    const std::int64_t version = file.read_int_attribute("/", "format_version");
    if (version != kModelFormatVersion) {
      throw Error(ErrorKind::kVersionMismatch,
                  fmt::format("{} has format version {}, expected {}", path.string(), version, kModelFormatVersion));
    }
    const auto arch = nlohmann::json::parse(file.read_text("architecture"));
    BackboneSpec spec = BackboneSpec::from_json(arch.at("backbone"));
    BackboneOptions options;
    options.weights_source = "random";
    options.input_shape = spec.input_shape;
    options.trainable = spec.trainable;
    Backbone backbone = build_backbone(spec.kind, options);
    backbone.spec.weights_source = spec.weights_source;
    ModelHandle handle = attach_head(std::move(backbone), HeadConfig::from_json(arch.at("head")),
                                     AugmentationConfig::from_json(nlohmann::json::parse(file.read_text("augmentation"))));
    handle.input_prescaled = arch.value("input_prescaled", false);
    if (file.exists("compile")) compile_model(handle, CompileConfig::from_json(nlohmann::json::parse(file.read_text("compile"))));

    for (nn::Parameter* p : handle.graph.parameters()) {
      const std::string name = "weights/" + p->name;
      if (!file.exists(name)) throw Error(ErrorKind::kCorruptArtifact, fmt::format("{}: missing weight {}", path.string(), p->name));
      const auto dims = file.dims(name);
      if (!std::equal(dims.begin(), dims.end(), p->value.shape().begin(), p->value.shape().end(),
                      [](std::uint64_t a, std::int64_t b) { return static_cast<std::int64_t>(a) == b; }))
        throw Error(ErrorKind::kCorruptArtifact, fmt::format("{}: weight {} has the wrong shape", path.string(), p->name));
      const auto values = file.read_floats(name);
      std::copy(values.begin(), values.end(), p->value.data());
    }
    return handle;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kVersionMismatch || e.kind() == ErrorKind::kCorruptArtifact) throw;
    throw Error(ErrorKind::kCorruptArtifact, fmt::format("cannot load model {}: {}", path.string(), e.what()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruptArtifact, fmt::format("cannot load model {}: {}", path.string(), e.what()));
  }
}

}  // namespace tumorbench::model
