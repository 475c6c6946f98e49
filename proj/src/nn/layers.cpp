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

#include "tumorbench/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <fmt/format.h>

#include "tumorbench/error.hpp"
#include "tumorbench/rng.hpp"

namespace tumorbench::nn {

namespace kp = kernels::parallel;
using kernels::ConvGeometry;

namespace {

void require_rank(const Shape& shape, std::size_t rank, const std::string& layer) {
  if (shape.size() != rank) {
    throw Error(ErrorKind::kShapeIncompatible,
                fmt::format("layer {} expects rank-{} input, got {}", layer, rank, shape_string(shape)));
  }
}

std::string padding_name(kernels::PaddingMode mode) {
  return mode == kernels::PaddingMode::kSame ? "same" : "valid";
}

}  // namespace

void initialize(Tensor& value, const InitSpec& spec) {
  switch (spec.kind) {
    case Initializer::kZeros:
      value.fill(0.0f);
      return;
    case Initializer::kOnes:
      value.fill(1.0f);
      return;
    case Initializer::kRandomUniform: {
      Rng rng(spec.seed);
      for (auto& v : value.values()) v = static_cast<float>(rng.uniform(-spec.range, spec.range));
      return;
    }
    case Initializer::kGlorotUniform: {
      // Keras fans: dense (in, out); conv (kh, kw, in, out) with receptive field.
      const Shape& s = value.shape();
      double fan_in = 1, fan_out = 1;
      if (s.size() == 2) {
        fan_in = static_cast<double>(s[0]);
        fan_out = static_cast<double>(s[1]);
      } else if (s.size() == 4) {
        const double receptive = static_cast<double>(s[0] * s[1]);
        fan_in = receptive * static_cast<double>(s[2]);
        fan_out = receptive * static_cast<double>(s[3]);
      } else if (!s.empty()) {
        fan_in = fan_out = std::sqrt(static_cast<double>(shape_elements(s)));
      }
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      Rng rng(spec.seed);
      for (auto& v : value.values()) v = static_cast<float>(rng.uniform(-limit, limit));
      return;
    }
  }
}

Parameter Layer::make_parameter(std::string_view weight, Shape shape, const InitSpec& init,
                                bool trainable) const {
  Parameter p;
  p.name = fmt::format("{}/{}", name_, weight);
  p.value = Tensor(shape);
  initialize(p.value, init);
  p.trainable = trainable;
  if (trainable) p.grad = Tensor(std::move(shape));
  return p;
}

// ---------------------------------------------------------------- Conv2D

Shape Conv2D::build(const std::vector<Shape>& input_shapes) {
  const Shape& in = input_shapes.at(0);
  require_rank(in, 4, name());
  const int in_c = static_cast<int>(in[3]);
  kernel_ = make_parameter("kernel", {options_.kernel_h, options_.kernel_w, in_c, options_.filters},
                           options_.kernel_init);
  if (options_.use_bias) bias_ = make_parameter("bias", {options_.filters}, {Initializer::kZeros});
  const auto g = kernels::make_conv_geometry(1, static_cast<int>(in[1]), static_cast<int>(in[2]), in_c,
                                             options_.filters, options_.kernel_h, options_.kernel_w,
                                             options_.stride_h, options_.stride_w, options_.padding);
  if (g.out_h <= 0 || g.out_w <= 0) {
    throw Error(ErrorKind::kShapeIncompatible,
                fmt::format("layer {}: input {} too small", name(), shape_string(in)));
  }
  return {1, g.out_h, g.out_w, options_.filters};
}

ConvGeometry Conv2D::geometry(const Tensor& input) const {
  return kernels::make_conv_geometry(static_cast<int>(input.dim(0)), static_cast<int>(input.dim(1)),
                                     static_cast<int>(input.dim(2)), static_cast<int>(input.dim(3)),
                                     options_.filters, options_.kernel_h, options_.kernel_w,
                                     options_.stride_h, options_.stride_w, options_.padding);
}

void Conv2D::forward(std::span<const Tensor* const> inputs, Tensor& output, Mode) {
  const Tensor& x = *inputs[0];
  const ConvGeometry g = geometry(x);
  output = Tensor({g.batch, g.out_h, g.out_w, g.out_c});
  kp::conv2d_forward(g, x.span(), kernel_.value.span(), output.span());
  if (options_.use_bias) {
    const long rows = output.size() / g.out_c;
    const float* b = bias_.value.data();
    float* y = output.data();
#pragma omp parallel for schedule(static)
    for (long r = 0; r < rows; ++r)
      for (int c = 0; c < g.out_c; ++c) y[r * g.out_c + c] += b[c];
  }
}

void Conv2D::backward(std::span<const Tensor* const> inputs, const Tensor&,
                      const Tensor& grad_output, std::span<Tensor* const> grad_inputs) {
  const Tensor& x = *inputs[0];
  const ConvGeometry g = geometry(x);
  if (trainable()) {
    kp::conv2d_backward_kernel(g, x.span(), grad_output.span(), kernel_.grad.span());
    if (options_.use_bias) {
      const long rows = grad_output.size() / g.out_c;
      for (long r = 0; r < rows; ++r)
        for (int c = 0; c < g.out_c; ++c) bias_.grad[c] += grad_output[r * g.out_c + c];
    }
  }
  if (grad_inputs[0] != nullptr) {
    *grad_inputs[0] = Tensor(x.shape());
    kp::conv2d_backward_input(g, grad_output.span(), kernel_.value.span(), grad_inputs[0]->span());
  }
}

std::vector<Parameter*> Conv2D::parameters() {
  if (options_.use_bias) return {&kernel_, &bias_};
  return {&kernel_};
}

nlohmann::json Conv2D::config() const {
  return {{"filters", options_.filters},
          {"kernel_size", {options_.kernel_h, options_.kernel_w}},
          {"strides", {options_.stride_h, options_.stride_w}},
          {"padding", padding_name(options_.padding)},
          {"use_bias", options_.use_bias}};
}

// ------------------------------------------------------- SeparableConv2D

Shape SeparableConv2D::build(const std::vector<Shape>& input_shapes) {
  const Shape& in = input_shapes.at(0);
  require_rank(in, 4, name());
  const int in_c = static_cast<int>(in[3]);
  InitSpec dw_init = options_.kernel_init;
  InitSpec pw_init = options_.kernel_init;
  pw_init.seed = mix64(pw_init.seed + 1);
  depthwise_ = make_parameter("depthwise_kernel", {options_.kernel_h, options_.kernel_w, in_c, 1}, dw_init);
  pointwise_ = make_parameter("pointwise_kernel", {1, 1, in_c, options_.filters}, pw_init);
  if (options_.use_bias) bias_ = make_parameter("bias", {options_.filters}, {Initializer::kZeros});
  const auto g = kernels::make_conv_geometry(1, static_cast<int>(in[1]), static_cast<int>(in[2]), in_c,
                                             in_c, options_.kernel_h, options_.kernel_w,
                                             options_.stride_h, options_.stride_w, options_.padding);
  return {1, g.out_h, g.out_w, options_.filters};
}

void SeparableConv2D::forward(std::span<const Tensor* const> inputs, Tensor& output, Mode mode) {
  const Tensor& x = *inputs[0];
  const int in_c = static_cast<int>(x.dim(3));
  const ConvGeometry dg = kernels::make_conv_geometry(
      static_cast<int>(x.dim(0)), static_cast<int>(x.dim(1)), static_cast<int>(x.dim(2)), in_c, in_c,
      options_.kernel_h, options_.kernel_w, options_.stride_h, options_.stride_w, options_.padding);
  Tensor mid({dg.batch, dg.out_h, dg.out_w, in_c});
  kp::depthwise_conv2d_forward(dg, x.span(), depthwise_.value.span(), mid.span());
  const ConvGeometry pg = kernels::make_conv_geometry(dg.batch, dg.out_h, dg.out_w, in_c,
                                                      options_.filters, 1, 1, 1, 1,
                                                      kernels::PaddingMode::kValid);
  output = Tensor({dg.batch, dg.out_h, dg.out_w, options_.filters});
  kp::conv2d_forward(pg, mid.span(), pointwise_.value.span(), output.span());
  if (options_.use_bias) {
    const long rows = output.size() / options_.filters;
    for (long r = 0; r < rows; ++r)
      for (int c = 0; c < options_.filters; ++c) output[r * options_.filters + c] += bias_.value[c];
  }
  if (mode == Mode::kTraining) {
    depthwise_out_ = std::move(mid);
  } else {
    depthwise_out_.release();
  }
}

void SeparableConv2D::backward(std::span<const Tensor* const> inputs, const Tensor&,
                               const Tensor& grad_output, std::span<Tensor* const> grad_inputs) {
  const Tensor& x = *inputs[0];
  const int in_c = static_cast<int>(x.dim(3));
  const ConvGeometry dg = kernels::make_conv_geometry(
      static_cast<int>(x.dim(0)), static_cast<int>(x.dim(1)), static_cast<int>(x.dim(2)), in_c, in_c,
      options_.kernel_h, options_.kernel_w, options_.stride_h, options_.stride_w, options_.padding);
  const ConvGeometry pg = kernels::make_conv_geometry(dg.batch, dg.out_h, dg.out_w, in_c,
                                                      options_.filters, 1, 1, 1, 1,
                                                      kernels::PaddingMode::kValid);
  if (depthwise_out_.empty()) {
    depthwise_out_ = Tensor({dg.batch, dg.out_h, dg.out_w, in_c});
    kp::depthwise_conv2d_forward(dg, x.span(), depthwise_.value.span(), depthwise_out_.span());
  }
  if (trainable()) {
    kp::conv2d_backward_kernel(pg, depthwise_out_.span(), grad_output.span(), pointwise_.grad.span());
    if (options_.use_bias) {
      const long rows = grad_output.size() / options_.filters;
      for (long r = 0; r < rows; ++r)
        for (int c = 0; c < options_.filters; ++c) bias_.grad[c] += grad_output[r * options_.filters + c];
    }
  }
  Tensor grad_mid(depthwise_out_.shape());
  kp::conv2d_backward_input(pg, grad_output.span(), pointwise_.value.span(), grad_mid.span());
  if (trainable())
    kp::depthwise_conv2d_backward_kernel(dg, x.span(), grad_mid.span(), depthwise_.grad.span());
  if (grad_inputs[0] != nullptr) {
    *grad_inputs[0] = Tensor(x.shape());
    kp::depthwise_conv2d_backward_input(dg, grad_mid.span(), depthwise_.value.span(),
                                        grad_inputs[0]->span());
  }
  depthwise_out_.release();
}

std::vector<Parameter*> SeparableConv2D::parameters() {
  if (options_.use_bias) return {&depthwise_, &pointwise_, &bias_};
  return {&depthwise_, &pointwise_};
}

nlohmann::json SeparableConv2D::config() const {
  return {{"filters", options_.filters},
          {"kernel_size", {options_.kernel_h, options_.kernel_w}},
          {"strides", {options_.stride_h, options_.stride_w}},
          {"padding", padding_name(options_.padding)},
          {"use_bias", options_.use_bias}};
}

// ------------------------------------------------------------ BatchNorm

Shape BatchNorm::build(const std::vector<Shape>& input_shapes) {
  const Shape& in = input_shapes.at(0);
  const std::int64_t c = in.back();
  if (options_.scale) gamma_ = make_parameter("gamma", {c}, {Initializer::kOnes});
  beta_ = make_parameter("beta", {c}, {Initializer::kZeros});
  moving_mean_ = make_parameter("moving_mean", {c}, {Initializer::kZeros}, false);
  moving_var_ = make_parameter("moving_variance", {c}, {Initializer::kOnes}, false);
  return in;
}

void BatchNorm::forward(std::span<const Tensor* const> inputs, Tensor& output, Mode mode) {
  const Tensor& x = *inputs[0];
  const int channels = static_cast<int>(x.shape().back());
  const long rows = x.size() / channels;
  output = Tensor(x.shape());
  const std::span<const float> gamma =
      options_.scale ? gamma_.value.span() : std::span<const float>{};
  used_batch_stats_ = mode == Mode::kTraining && trainable();
  if (!used_batch_stats_) {
    kp::batch_norm_inference_forward(rows, channels, x.span(), gamma, beta_.value.span(),
                                     moving_mean_.value.span(), moving_var_.value.span(),
                                     options_.epsilon, output.span());
    return;
  }
  batch_mean_.assign(static_cast<std::size_t>(channels), 0.0f);
  batch_var_.assign(static_cast<std::size_t>(channels), 0.0f);
  kp::batch_norm_training_forward(rows, channels, x.span(), gamma, beta_.value.span(),
                                  options_.epsilon, output.span(), batch_mean_, batch_var_);
  const float m = options_.momentum;
  for (int c = 0; c < channels; ++c) {
    moving_mean_.value[c] = moving_mean_.value[c] * m + batch_mean_[c] * (1.0f - m);
    moving_var_.value[c] = moving_var_.value[c] * m + batch_var_[c] * (1.0f - m);
  }
}

void BatchNorm::backward(std::span<const Tensor* const> inputs, const Tensor&,
                         const Tensor& grad_output, std::span<Tensor* const> grad_inputs) {
  const Tensor& x = *inputs[0];
  const int channels = static_cast<int>(x.shape().back());
  const long rows = x.size() / channels;
  const std::span<const float> gamma =
      options_.scale ? gamma_.value.span() : std::span<const float>{};
  if (!used_batch_stats_) {
    // Inference-mode transform is affine per channel.
    if (grad_inputs[0] != nullptr) {
      *grad_inputs[0] = Tensor(x.shape());
      for (long r = 0; r < rows; ++r)
        for (int c = 0; c < channels; ++c) {
          const float s = (gamma.empty() ? 1.0f : gamma[c]) /
                          std::sqrt(moving_var_.value[c] + options_.epsilon);
          (*grad_inputs[0])[r * channels + c] = grad_output[r * channels + c] * s;
        }
    }
    return;
  }
  Tensor grad_x(x.shape());
  kp::batch_norm_backward(rows, channels, x.span(), grad_output.span(), gamma, batch_mean_,
                          batch_var_, options_.epsilon, grad_x.span(),
                          options_.scale ? gamma_.grad.span() : std::span<float>{},
                          beta_.grad.span());
  if (grad_inputs[0] != nullptr) *grad_inputs[0] = std::move(grad_x);
}

std::vector<Parameter*> BatchNorm::parameters() {
  if (options_.scale) return {&gamma_, &beta_, &moving_mean_, &moving_var_};
  return {&beta_, &moving_mean_, &moving_var_};
}

nlohmann::json BatchNorm::config() const {
  return {{"epsilon", options_.epsilon}, {"momentum", options_.momentum}, {"scale", options_.scale}};
}

// ----------------------------------------------------------------- ReLU

void ReLU::forward(std::span<const Tensor* const> inputs, Tensor& output, Mode) {
  output = Tensor(inputs[0]->shape());
  kp::relu_forward(inputs[0]->span(), output.span());
}

void ReLU::backward(std::span<const Tensor* const>, const Tensor& output,
                    const Tensor& grad_output, std::span<Tensor* const> grad_inputs) {
  if (grad_inputs[0] == nullptr) return;
  *grad_inputs[0] = Tensor(output.shape());
  kp::relu_backward(output.span(), grad_output.span(), grad_inputs[0]->span());
}

// -------------------------------------------------------- ZeroPadding2D

Shape ZeroPadding2D::build(const std::vector<Shape>& input_shapes) {
  Shape s = input_shapes.at(0);
  require_rank(s, 4, name());
  s[1] += top_ + bottom_;
  s[2] += left_ + right_;
  return s;
}

void ZeroPadding2D::forward(std::span<const Tensor* const> inputs, Tensor& output, Mode) {
  const Tensor& x = *inputs[0];
  const std::int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const std::int64_t oh = h + top_ + bottom_, ow = w + left_ + right_;
  output = Tensor({n, oh, ow, c});
#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t y = 0; y < h; ++y)
      std::memcpy(&output.at(b, y + top_, left_, 0), x.data() + x.offset(b, y, 0, 0), sizeof(float) * w * c);
}

void ZeroPadding2D::backward(std::span<const Tensor* const> inputs, const Tensor&,
                             const Tensor& grad_output, std::span<Tensor* const> grad_inputs) {
  if (grad_inputs[0] == nullptr) return;
  const Tensor& x = *inputs[0];
  const std::int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  Tensor& gx = *grad_inputs[0];
  gx = Tensor(x.shape());
#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t y = 0; y < h; ++y)
      std::memcpy(&gx.at(b, y, 0, 0), grad_output.data() + grad_output.offset(b, y + top_, left_, 0), sizeof(float) * w * c);
}

nlohmann::json ZeroPadding2D::config() const {
  return {{"padding", {{top_, bottom_}, {left_, right_}}}};
}

// -------------------------------------------------------------- Pooling

namespace {

ConvGeometry pool_geometry(const Tensor& x, const PoolOptions& o) {
  return kernels::make_pool_geometry(static_cast<int>(x.dim(0)), static_cast<int>(x.dim(1)),
                                     static_cast<int>(x.dim(2)), static_cast<int>(x.dim(3)), o.pool_h,
                                     o.pool_w, o.stride_h, o.stride_w, o.padding);
}

Shape pool_shape(const Shape& in, const PoolOptions& o) {
  const auto g = kernels::make_pool_geometry(1, static_cast<int>(in[1]), static_cast<int>(in[2]),
                                             static_cast<int>(in[3]), o.pool_h, o.pool_w, o.stride_h,
                                             o.stride_w, o.padding);
  return {1, g.out_h, g.out_w, in[3]};
}

nlohmann::json pool_config(const PoolOptions& o) {
  return {{"pool_size", {o.pool_h, o.pool_w}},
          {"strides", {o.stride_h, o.stride_w}},
          {"padding", padding_name(o.padding)}};
}

}  // namespace

Shape MaxPool2D::build(const std::vector<Shape>& input_shapes) {
  require_rank(input_shapes.at(0), 4, name());
  return pool_shape(input_shapes[0], options_);
}

void MaxPool2D::forward(std::span<const Tensor* const> inputs, Tensor& output, Mode) {
  const auto g = pool_geometry(*inputs[0], options_);
  output = Tensor({g.batch, g.out_h, g.out_w, g.out_c});
  kp::max_pool_forward(g, inputs[0]->span(), output.span());
}

void MaxPool2D::backward(std::span<const Tensor* const> inputs, const Tensor&,
                         const Tensor& grad_output, std::span<Tensor* const> grad_inputs) {
  if (grad_inputs[0] == nullptr) return;
  const auto g = pool_geometry(*inputs[0], options_);
  *grad_inputs[0] = Tensor(inputs[0]->shape());
  kp::max_pool_backward(g, inputs[0]->span(), grad_output.span(), grad_inputs[0]->span());
}

nlohmann::json MaxPool2D::config() const { return pool_config(options_); }

Shape AvgPool2D::build(const std::vector<Shape>& input_shapes) {
  require_rank(input_shapes.at(0), 4, name());
  return pool_shape(input_shapes[0], options_);
}

void AvgPool2D::forward(std::span<const Tensor* const> inputs, Tensor& output, Mode) {
  const auto g = pool_geometry(*inputs[0], options_);
  output = Tensor({g.batch, g.out_h, g.out_w, g.out_c});
  kp::avg_pool_forward(g, inputs[0]->span(), output.span());
}

void AvgPool2D::backward(std::span<const Tensor* const> inputs, const Tensor&,
                         const Tensor& grad_output, std::span<Tensor* const> grad_inputs) {
  if (grad_inputs[0] == nullptr) return;
  const auto g = pool_geometry(*inputs[0], options_);
  *grad_inputs[0] = Tensor(inputs[0]->shape());
  kp::avg_pool_backward(g, grad_output.span(), grad_inputs[0]->span());
}

nlohmann::json AvgPool2D::config() const { return pool_config(options_); }

// ------------------------------------------------------------ Add / Scale

Shape Add::build(const std::vector<Shape>& input_shapes) {
  for (const auto& s : input_shapes) {
    if (s != input_shapes.at(0)) {
      throw Error(ErrorKind::kShapeIncompatible,
                  fmt::format("layer {}: cannot add {} and {}", name(), shape_string(input_shapes[0]),
                              shape_string(s)));
    }
  }
  return input_shapes.at(0);
}

void Add::forward(std::span<const Tensor* const> inputs, Tensor& output, Mode) {
  output = *inputs[0];
  const long n = output.size();
  for (std::size_t k = 1; k < inputs.size(); ++k) {
    const float* src = inputs[k]->data();
    float* dst = output.data();
#pragma omp parallel for simd schedule(static)
    for (long i = 0; i < n; ++i) dst[i] += src[i];
  }
}

void Add::backward(std::span<const Tensor* const>, const Tensor&, const Tensor& grad_output,
                   std::span<Tensor* const> grad_inputs) {
  for (Tensor* g : grad_inputs)
    if (g != nullptr) *g = grad_output;
}

Shape ScaledAdd::build(const std::vector<Shape>& input_shapes) {
  if (input_shapes.size() != 2 || input_shapes[0] != input_shapes[1]) {
    throw Error(ErrorKind::kShapeIncompatible, fmt::format("layer {}: needs two equal inputs", name()));
  }
  return input_shapes[0];
}

void ScaledAdd::forward(std::span<const Tensor* const> inputs, Tensor& output, Mode) {
  output = Tensor(inputs[0]->shape());
  const long n = output.size();
  const float* a = inputs[0]->data();
  const float* b = inputs[1]->data();
  float* y = output.data();
  const float s = scale_;
#pragma omp parallel for simd schedule(static)
  for (long i = 0; i < n; ++i) y[i] = a[i] + s * b[i];
}

void ScaledAdd::backward(std::span<const Tensor* const>, const Tensor&, const Tensor& grad_output,
                         std::span<Tensor* const> grad_inputs) {
  if (grad_inputs[0] != nullptr) *grad_inputs[0] = grad_output;
  if (grad_inputs[1] != nullptr) {
    *grad_inputs[1] = grad_output;
    for (auto& v : grad_inputs[1]->values()) v *= scale_;
  }
}

// ----------------------------------------------------------- Concatenate

Shape Concatenate::build(const std::vector<Shape>& input_shapes) {
  Shape out = input_shapes.at(0);
  out.back() = 0;
  for (const auto& s : input_shapes) {
    if (s.size() != out.size() || !std::equal(s.begin(), s.end() - 1, out.begin())) {
      throw Error(ErrorKind::kShapeIncompatible,
                  fmt::format("layer {}: mismatched concat input {}", name(), shape_string(s)));
    }
    out.back() += s.back();
  }
  return out;
}

void Concatenate::forward(std::span<const Tensor* const> inputs, Tensor& output, Mode) {
  Shape out = inputs[0]->shape();
  out.back() = 0;
  for (const Tensor* t : inputs) out.back() += t->shape().back();
  output = Tensor(out);
  const std::int64_t total_c = out.back();
  const long rows = output.size() / total_c;
  std::int64_t offset = 0;
  for (const Tensor* t : inputs) {
    const std::int64_t c = t->shape().back();
    const float* src = t->data();
    float* dst = output.data();
#pragma omp parallel for schedule(static)
    for (long r = 0; r < rows; ++r) std::memcpy(dst + r * total_c + offset, src + r * c, sizeof(float) * c);
    offset += c;
  }
}

void Concatenate::backward(std::span<const Tensor* const> inputs, const Tensor&,
                           const Tensor& grad_output, std::span<Tensor* const> grad_inputs) {
  const std::int64_t total_c = grad_output.shape().back();
  const long rows = grad_output.size() / total_c;
  std::int64_t offset = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const std::int64_t c = inputs[k]->shape().back();
    if (grad_inputs[k] != nullptr) {
      *grad_inputs[k] = Tensor(inputs[k]->shape());
      float* dst = grad_inputs[k]->data();
      const float* src = grad_output.data();
#pragma omp parallel for schedule(static)
      for (long r = 0; r < rows; ++r)
        std::memcpy(dst + r * c, src + r * total_c + offset, sizeof(float) * c);
    }
    offset += c;
  }
}

// -------------------------------------------------------- GlobalAvgPool2D

Shape GlobalAvgPool2D::build(const std::vector<Shape>& input_shapes) {
  const Shape& in = input_shapes.at(0);
  if (in.size() != 4) {
    throw Error(ErrorKind::kShapeIncompatible,
                fmt::format("global pooling needs a 4-D feature map, got {}", shape_string(in)));
  }
  return {1, in[3]};
}

void GlobalAvgPool2D::forward(std::span<const Tensor* const> inputs, Tensor& output, Mode) {
  const Tensor& x = *inputs[0];
  output = Tensor({x.dim(0), x.dim(3)});
  kp::global_avg_pool_forward(static_cast<int>(x.dim(0)), x.dim(1) * x.dim(2),
                              static_cast<int>(x.dim(3)), x.span(), output.span());
}

void GlobalAvgPool2D::backward(std::span<const Tensor* const> inputs, const Tensor&,
                               const Tensor& grad_output, std::span<Tensor* const> grad_inputs) {
  if (grad_inputs[0] == nullptr) return;
  const Tensor& x = *inputs[0];
  *grad_inputs[0] = Tensor(x.shape());
  kp::global_avg_pool_backward(static_cast<int>(x.dim(0)), x.dim(1) * x.dim(2),
                               static_cast<int>(x.dim(3)), grad_output.span(),
                               grad_inputs[0]->span());
}

// ----------------------------------------------------------------- Dense

Shape Dense::build(const std::vector<Shape>& input_shapes) {
  const Shape& in = input_shapes.at(0);
  require_rank(in, 2, name());
  kernel_ = make_parameter("kernel", {in[1], options_.units}, options_.kernel_init);
  bias_ = make_parameter("bias", {options_.units}, {Initializer::kZeros});
  return {1, options_.units};
}

void Dense::forward(std::span<const Tensor* const> inputs, Tensor& output, Mode) {
  const Tensor& x = *inputs[0];
  const int rows = static_cast<int>(x.dim(0));
  const int in = static_cast<int>(x.dim(1));
  output = Tensor({rows, options_.units});
  kp::dense_forward(rows, in, options_.units, x.span(), kernel_.value.span(), bias_.value.span(),
                    output.span());
  if (options_.activation == Activation::kRelu) kp::relu_forward(output.span(), output.span());
}

void Dense::backward(std::span<const Tensor* const> inputs, const Tensor& output,
                     const Tensor& grad_output, std::span<Tensor* const> grad_inputs) {
  const Tensor& x = *inputs[0];
  const int rows = static_cast<int>(x.dim(0));
  const int in = static_cast<int>(x.dim(1));
  Tensor grad_pre = grad_output;
  if (options_.activation == Activation::kRelu)
    kp::relu_backward(output.span(), grad_output.span(), grad_pre.span());
  std::span<float> gx;
  if (grad_inputs[0] != nullptr) {
    *grad_inputs[0] = Tensor(x.shape());
    gx = grad_inputs[0]->span();
  }
  if (trainable()) {
    kp::dense_backward(rows, in, options_.units, x.span(), kernel_.value.span(), grad_pre.span(), gx,
                       kernel_.grad.span(), bias_.grad.span());
  } else if (!gx.empty()) {
    Tensor scratch_w(kernel_.value.shape());
    kp::dense_backward(rows, in, options_.units, x.span(), kernel_.value.span(), grad_pre.span(), gx,
                       scratch_w.span(), {});
  }
}

std::vector<Parameter*> Dense::parameters() { return {&kernel_, &bias_}; }

nlohmann::json Dense::config() const {
  return {{"units", options_.units},
          {"activation", options_.activation == Activation::kRelu ? "relu" : "linear"}};
}

// --------------------------------------------------------------- Softmax

void Softmax::forward(std::span<const Tensor* const> inputs, Tensor& output, Mode) {
  const Tensor& x = *inputs[0];
  output = Tensor(x.shape());
  const std::int64_t k = x.shape().back();
  const std::int64_t rows = x.size() / k;
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* in = x.data() + r * k;
    float* out = output.data() + r * k;
    const float peak = *std::max_element(in, in + k);
    double sum = 0.0;
    for (std::int64_t j = 0; j < k; ++j) sum += std::exp(static_cast<double>(in[j] - peak));
    for (std::int64_t j = 0; j < k; ++j)
      out[j] = static_cast<float>(std::exp(static_cast<double>(in[j] - peak)) / sum);
  }
}

void Softmax::backward(std::span<const Tensor* const>, const Tensor& output,
                       const Tensor& grad_output, std::span<Tensor* const> grad_inputs) {
  if (grad_inputs[0] == nullptr) return;
  const std::int64_t k = output.shape().back();
  const std::int64_t rows = output.size() / k;
  *grad_inputs[0] = Tensor(output.shape());
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* p = output.data() + r * k;
    const float* dp = grad_output.data() + r * k;
    double dot = 0.0;
    for (std::int64_t j = 0; j < k; ++j) dot += static_cast<double>(p[j]) * dp[j];
    for (std::int64_t j = 0; j < k; ++j)
      (*grad_inputs[0])[r * k + j] = static_cast<float>(p[j] * (dp[j] - dot));
  }
}

}  // namespace tumorbench::nn
