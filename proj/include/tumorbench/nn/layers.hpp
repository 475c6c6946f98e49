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

#ifndef TUMORBENCH_NN_LAYERS_HPP_
#define TUMORBENCH_NN_LAYERS_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tumorbench/kernels/kernels.hpp"
#include "tumorbench/tensor.hpp"

namespace tumorbench::nn {

enum class Mode { kInference, kTraining };

// A named weight. Names follow the Keras "<layer>/<weight>" convention so
// pretrained HDF5 files map onto layers without a translation table.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;  // false for moving statistics
};

enum class Initializer { kZeros, kOnes, kGlorotUniform, kRandomUniform };

struct InitSpec {
  Initializer kind = Initializer::kGlorotUniform;
  std::uint64_t seed = 0;
  float range = 0.05f;  // half-width for kRandomUniform
};

// Fills `value` (fan computed from `shape` in Keras convention).
void initialize(Tensor& value, const InitSpec& spec);

class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;
  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  const std::string& name() const { return name_; }
  virtual std::string_view type() const = 0;

  // Allocates parameters from per-sample input shapes (leading batch dim 1)
  // and returns the per-sample output shape.
  virtual Shape build(const std::vector<Shape>& input_shapes) = 0;

  virtual void forward(std::span<const Tensor* const> inputs, Tensor& output, Mode mode) = 0;

  // Overwrites each non-null grad_inputs[i]; accumulates parameter grads.
  virtual void backward(std::span<const Tensor* const> inputs, const Tensor& output,
                        const Tensor& grad_output, std::span<Tensor* const> grad_inputs) = 0;

  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual nlohmann::json config() const { return nlohmann::json::object(); }

  // When false, parameters get no gradient and batch norm runs on moving
  // statistics even in training mode (Keras semantics for frozen layers).
  bool trainable() const { return trainable_; }
  void set_trainable(bool trainable) { trainable_ = trainable; }

 protected:
  Parameter make_parameter(std::string_view weight, Shape shape, const InitSpec& init,
                           bool trainable = true) const;

 private:
  std::string name_;
  bool trainable_ = true;
};

struct Conv2DOptions {
  int filters = 1;
  int kernel_h = 1, kernel_w = 1;
  int stride_h = 1, stride_w = 1;
  kernels::PaddingMode padding = kernels::PaddingMode::kValid;
  bool use_bias = true;
  InitSpec kernel_init{};
};

class Conv2D final : public Layer {
 public:
  Conv2D(std::string name, Conv2DOptions options) : Layer(std::move(name)), options_(options) {}
  std::string_view type() const override { return "Conv2D"; }
  Shape build(const std::vector<Shape>& input_shapes) override;
  void forward(std::span<const Tensor* const> inputs, Tensor& output, Mode mode) override;
  void backward(std::span<const Tensor* const> inputs, const Tensor& output,
                const Tensor& grad_output, std::span<Tensor* const> grad_inputs) override;
  std::vector<Parameter*> parameters() override;
  nlohmann::json config() const override;

 private:
  kernels::ConvGeometry geometry(const Tensor& input) const;
  Conv2DOptions options_;
  Parameter kernel_, bias_;
};

// Depthwise 3x3-style conv followed by a pointwise 1x1 conv, as one layer.
class SeparableConv2D final : public Layer {
 public:
  SeparableConv2D(std::string name, Conv2DOptions options)
      : Layer(std::move(name)), options_(options) {}
  std::string_view type() const override { return "SeparableConv2D"; }
  Shape build(const std::vector<Shape>& input_shapes) override;
  void forward(std::span<const Tensor* const> inputs, Tensor& output, Mode mode) override;
  void backward(std::span<const Tensor* const> inputs, const Tensor& output,
                const Tensor& grad_output, std::span<Tensor* const> grad_inputs) override;
  std::vector<Parameter*> parameters() override;
  nlohmann::json config() const override;

 private:
  Conv2DOptions options_;
  Parameter depthwise_, pointwise_, bias_;
  Tensor depthwise_out_;  // cached for backward
};

struct BatchNormOptions {
  float epsilon = 1e-3f;
  float momentum = 0.99f;
  bool scale = true;
};

class BatchNorm final : public Layer {
 public:
  BatchNorm(std::string name, BatchNormOptions options) : Layer(std::move(name)), options_(options) {}
  std::string_view type() const override { return "BatchNormalization"; }
  Shape build(const std::vector<Shape>& input_shapes) override;
  void forward(std::span<const Tensor* const> inputs, Tensor& output, Mode mode) override;
  void backward(std::span<const Tensor* const> inputs, const Tensor& output,
                const Tensor& grad_output, std::span<Tensor* const> grad_inputs) override;
  std::vector<Parameter*> parameters() override;
  nlohmann::json config() const override;

  // Set when the last forward used batch statistics.
  bool used_batch_statistics() const { return used_batch_stats_; }

 private:
  BatchNormOptions options_;
  Parameter gamma_, beta_, moving_mean_, moving_var_;
  std::vector<float> batch_mean_, batch_var_;
  bool used_batch_stats_ = false;
};

class ReLU final : public Layer {
 public:
  using Layer::Layer;
  std::string_view type() const override { return "ReLU"; }
  Shape build(const std::vector<Shape>& input_shapes) override { return input_shapes.at(0); }
  void forward(std::span<const Tensor* const> inputs, Tensor& output, Mode mode) override;
  void backward(std::span<const Tensor* const> inputs, const Tensor& output,
                const Tensor& grad_output, std::span<Tensor* const> grad_inputs) override;
};

class ZeroPadding2D final : public Layer {
 public:
  ZeroPadding2D(std::string name, int top, int bottom, int left, int right)
      : Layer(std::move(name)), top_(top), bottom_(bottom), left_(left), right_(right) {}
  std::string_view type() const override { return "ZeroPadding2D"; }
  Shape build(const std::vector<Shape>& input_shapes) override;
  void forward(std::span<const Tensor* const> inputs, Tensor& output, Mode mode) override;
  void backward(std::span<const Tensor* const> inputs, const Tensor& output,
                const Tensor& grad_output, std::span<Tensor* const> grad_inputs) override;
  nlohmann::json config() const override;

 private:
  int top_, bottom_, left_, right_;
};

struct PoolOptions {
  int pool_h = 2, pool_w = 2;
  int stride_h = 2, stride_w = 2;
  kernels::PaddingMode padding = kernels::PaddingMode::kValid;
};

class MaxPool2D final : public Layer {
 public:
  MaxPool2D(std::string name, PoolOptions options) : Layer(std::move(name)), options_(options) {}
  std::string_view type() const override { return "MaxPooling2D"; }
  Shape build(const std::vector<Shape>& input_shapes) override;
  void forward(std::span<const Tensor* const> inputs, Tensor& output, Mode mode) override;
  void backward(std::span<const Tensor* const> inputs, const Tensor& output,
                const Tensor& grad_output, std::span<Tensor* const> grad_inputs) override;
  nlohmann::json config() const override;

 private:
  PoolOptions options_;
};

class AvgPool2D final : public Layer {
 public:
  AvgPool2D(std::string name, PoolOptions options) : Layer(std::move(name)), options_(options) {}
  std::string_view type() const override { return "AveragePooling2D"; }
  Shape build(const std::vector<Shape>& input_shapes) override;
  void forward(std::span<const Tensor* const> inputs, Tensor& output, Mode mode) override;
  void backward(std::span<const Tensor* const> inputs, const Tensor& output,
                const Tensor& grad_output, std::span<Tensor* const> grad_inputs) override;
  nlohmann::json config() const override;

 private:
  PoolOptions options_;
};

class Add final : public Layer {
 public:
  using Layer::Layer;
  std::string_view type() const override { return "Add"; }
  Shape build(const std::vector<Shape>& input_shapes) override;
  void forward(std::span<const Tensor* const> inputs, Tensor& output, Mode mode) override;
  void backward(std::span<const Tensor* const> inputs, const Tensor& output,
                const Tensor& grad_output, std::span<Tensor* const> grad_inputs) override;
};

// out = inputs[0] + scale * inputs[1]; the residual merge of Inception-ResNet.
class ScaledAdd final : public Layer {
 public:
  ScaledAdd(std::string name, float scale) : Layer(std::move(name)), scale_(scale) {}
  std::string_view type() const override { return "CustomScaleLayer"; }
  Shape build(const std::vector<Shape>& input_shapes) override;
  void forward(std::span<const Tensor* const> inputs, Tensor& output, Mode mode) override;
  void backward(std::span<const Tensor* const> inputs, const Tensor& output,
                const Tensor& grad_output, std::span<Tensor* const> grad_inputs) override;
  nlohmann::json config() const override { return {{"scale", scale_}}; }

 private:
  float scale_;
};

// Channel-axis concatenation.
class Concatenate final : public Layer {
 public:
  using Layer::Layer;
  std::string_view type() const override { return "Concatenate"; }
  Shape build(const std::vector<Shape>& input_shapes) override;
  void forward(std::span<const Tensor* const> inputs, Tensor& output, Mode mode) override;
  void backward(std::span<const Tensor* const> inputs, const Tensor& output,
                const Tensor& grad_output, std::span<Tensor* const> grad_inputs) override;
};

class GlobalAvgPool2D final : public Layer {
 public:
  using Layer::Layer;
  std::string_view type() const override { return "GlobalAveragePooling2D"; }
  Shape build(const std::vector<Shape>& input_shapes) override;
  void forward(std::span<const Tensor* const> inputs, Tensor& output, Mode mode) override;
  void backward(std::span<const Tensor* const> inputs, const Tensor& output,
                const Tensor& grad_output, std::span<Tensor* const> grad_inputs) override;
};

enum class Activation { kLinear, kRelu };

struct DenseOptions {
  int units = 1;
  Activation activation = Activation::kLinear;
  InitSpec kernel_init{};
};

class Dense final : public Layer {
 public:
  Dense(std::string name, DenseOptions options) : Layer(std::move(name)), options_(options) {}
  std::string_view type() const override { return "Dense"; }
  Shape build(const std::vector<Shape>& input_shapes) override;
  void forward(std::span<const Tensor* const> inputs, Tensor& output, Mode mode) override;
  void backward(std::span<const Tensor* const> inputs, const Tensor& output,
                const Tensor& grad_output, std::span<Tensor* const> grad_inputs) override;
  std::vector<Parameter*> parameters() override;
  nlohmann::json config() const override;

 private:
  DenseOptions options_;
  Parameter kernel_, bias_;
};

// Row-wise softmax over the last axis.
class Softmax final : public Layer {
 public:
  using Layer::Layer;
  std::string_view type() const override { return "Softmax"; }
  Shape build(const std::vector<Shape>& input_shapes) override { return input_shapes.at(0); }
  void forward(std::span<const Tensor* const> inputs, Tensor& output, Mode mode) override;
  void backward(std::span<const Tensor* const> inputs, const Tensor& output,
                const Tensor& grad_output, std::span<Tensor* const> grad_inputs) override;
};

}  // namespace tumorbench::nn

#endif  // TUMORBENCH_NN_LAYERS_HPP_
