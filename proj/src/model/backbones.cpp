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

#include "tumorbench/model/backbones.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include <fmt/format.h>

#include "tumorbench/error.hpp"
#include "tumorbench/rng.hpp"

namespace tumorbench::model {

namespace {

using kernels::PaddingMode;
using nn::NodeId;

constexpr std::array<BackboneInfo, 4> kInfo = {{
    {BackboneKind::kXception, "xception", "Xception", 2048, 32,
     "xception_weights_tf_dim_ordering_tf_kernels_notop.h5",
     "https://storage.googleapis.com/tensorflow/keras-applications/xception/"
     "xception_weights_tf_dim_ordering_tf_kernels_notop.h5"},
    {BackboneKind::kResNet50V2, "resnet50v2", "ResNet50V2", 2048, 32,
     "resnet50v2_weights_tf_dim_ordering_tf_kernels_notop.h5",
     "https://storage.googleapis.com/tensorflow/keras-applications/resnet/"
     "resnet50v2_weights_tf_dim_ordering_tf_kernels_notop.h5"},
    {BackboneKind::kInceptionResNetV2, "inception_resnet_v2", "InceptionResNetV2", 1536, 32,
     "inception_resnet_v2_weights_tf_dim_ordering_tf_kernels_notop.h5",
     "https://storage.googleapis.com/tensorflow/keras-applications/inception_resnet_v2/"
     "inception_resnet_v2_weights_tf_dim_ordering_tf_kernels_notop.h5"},
    {BackboneKind::kDenseNet201, "densenet201", "DenseNet201", 1920, 32,
     "densenet201_weights_tf_dim_ordering_tf_kernels_notop.h5",
     "https://storage.googleapis.com/tensorflow/keras-applications/densenet/"
     "densenet201_weights_tf_dim_ordering_tf_kernels_notop.h5"},
}};

// Thin layer factory that tracks Keras-style automatic names ("conv2d_7")
// and hands every kernel its own seed.
class Builder {
 public:
  Builder(nn::Graph& graph, std::uint64_t seed, float bn_epsilon)
      : graph_(graph), seed_(seed), bn_epsilon_(bn_epsilon) {}

  std::string auto_name(const std::string& base) { return fmt::format("{}_{}", base, ++counters_[base]); }

  NodeId conv(NodeId in, std::string name, int filters, int kh, int kw, int stride, PaddingMode padding,
              bool use_bias) {
    nn::Conv2DOptions o;
    o.filters = filters;
    o.kernel_h = kh;
    o.kernel_w = kw;
    o.stride_h = o.stride_w = stride;
    o.padding = padding;
    o.use_bias = use_bias;
    o.kernel_init = next_init();
    return graph_.add<nn::Conv2D>({in}, std::move(name), o);
  }

  NodeId sepconv(NodeId in, std::string name, int filters) {
    nn::Conv2DOptions o;
    o.filters = filters;
    o.kernel_h = o.kernel_w = 3;
    o.padding = PaddingMode::kSame;
    o.use_bias = false;
    o.kernel_init = next_init();
    return graph_.add<nn::SeparableConv2D>({in}, std::move(name), o);
  }

  NodeId bn(NodeId in, std::string name, bool scale = true) {
    nn::BatchNormOptions o;
    o.epsilon = bn_epsilon_;
    o.scale = scale;
    return graph_.add<nn::BatchNorm>({in}, std::move(name), o);
  }

  NodeId relu(NodeId in, std::string name) { return graph_.add<nn::ReLU>({in}, std::move(name)); }

  NodeId pad(NodeId in, std::string name, int p) {
    return graph_.add<nn::ZeroPadding2D>({in}, std::move(name), p, p, p, p);
  }

  NodeId max_pool(NodeId in, std::string name, int size, int stride, PaddingMode padding) {
    return graph_.add<nn::MaxPool2D>({in}, std::move(name), nn::PoolOptions{size, size, stride, stride, padding});
  }

  NodeId avg_pool(NodeId in, std::string name, int size, int stride, PaddingMode padding) {
    return graph_.add<nn::AvgPool2D>({in}, std::move(name), nn::PoolOptions{size, size, stride, stride, padding});
  }

  NodeId add(std::vector<NodeId> ins, std::string name) { return graph_.add<nn::Add>(std::move(ins), std::move(name)); }

  NodeId concat(std::vector<NodeId> ins, std::string name) {
    return graph_.add<nn::Concatenate>(std::move(ins), std::move(name));
  }

  NodeId scaled_add(NodeId x, NodeId up, std::string name, float scale) {
    return graph_.add<nn::ScaledAdd>({x, up}, std::move(name), scale);
  }

  std::int64_t channels(NodeId id) const { return graph_.shape(id).back(); }

 private:
  nn::InitSpec next_init() {
    return {nn::Initializer::kGlorotUniform, Rng::substream(seed_, {++kernel_count_}).next_u64(), 0.05f};
  }

  nn::Graph& graph_;
  std::uint64_t seed_;
  float bn_epsilon_;
  std::uint64_t kernel_count_ = 0;
  std::map<std::string, int> counters_;
};

// ---------------------------------------------------------------- Xception

NodeId build_xception(Builder& b, NodeId x) {
  x = b.conv(x, "block1_conv1", 32, 3, 3, 2, PaddingMode::kValid, false);
  x = b.bn(x, "block1_conv1_bn");
  x = b.relu(x, "block1_conv1_act");
  x = b.conv(x, "block1_conv2", 64, 3, 3, 1, PaddingMode::kValid, false);
  x = b.bn(x, "block1_conv2_bn");
  x = b.relu(x, "block1_conv2_act");

  // Entry flow: strided residual blocks 2-4. Block 2 starts without a ReLU.
  const int entry_filters[] = {128, 256, 728};
  for (int i = 0; i < 3; ++i) {
    const int block = i + 2;
    const int f = entry_filters[i];
    const std::string p = fmt::format("block{}", block);
    NodeId residual = b.conv(x, b.auto_name("conv2d"), f, 1, 1, 2, PaddingMode::kSame, false);
    residual = b.bn(residual, b.auto_name("batch_normalization"));
    NodeId y = x;
    if (block > 2) y = b.relu(y, p + "_sepconv1_act");
    y = b.sepconv(y, p + "_sepconv1", f);
    y = b.bn(y, p + "_sepconv1_bn");
    y = b.relu(y, p + "_sepconv2_act");
    y = b.sepconv(y, p + "_sepconv2", f);
    y = b.bn(y, p + "_sepconv2_bn");
    y = b.max_pool(y, p + "_pool", 3, 2, PaddingMode::kSame);
    x = b.add({y, residual}, b.auto_name("add"));
  }

  // Middle flow: eight identity blocks.
  for (int block = 5; block <= 12; ++block) {
    NodeId y = x;
    for (int k = 1; k <= 3; ++k) {
      const std::string p = fmt::format("block{}_sepconv{}", block, k);
      y = b.relu(y, p + "_act");
      y = b.sepconv(y, p, 728);
      y = b.bn(y, p + "_bn");
    }
    x = b.add({y, x}, b.auto_name("add"));
  }

  NodeId residual = b.conv(x, b.auto_name("conv2d"), 1024, 1, 1, 2, PaddingMode::kSame, false);
  residual = b.bn(residual, b.auto_name("batch_normalization"));
  NodeId y = b.relu(x, "block13_sepconv1_act");
  y = b.sepconv(y, "block13_sepconv1", 728);
  y = b.bn(y, "block13_sepconv1_bn");
  y = b.relu(y, "block13_sepconv2_act");
  y = b.sepconv(y, "block13_sepconv2", 1024);
  y = b.bn(y, "block13_sepconv2_bn");
  y = b.max_pool(y, "block13_pool", 3, 2, PaddingMode::kSame);
  x = b.add({y, residual}, b.auto_name("add"));

  x = b.sepconv(x, "block14_sepconv1", 1536);
  x = b.bn(x, "block14_sepconv1_bn");
  x = b.relu(x, "block14_sepconv1_act");
  x = b.sepconv(x, "block14_sepconv2", 2048);
  x = b.bn(x, "block14_sepconv2_bn");
  return b.relu(x, "block14_sepconv2_act");
}

// -------------------------------------------------------------- ResNet50V2

NodeId resnet_v2_block(Builder& b, NodeId x, int filters, int stride, bool conv_shortcut,
                       const std::string& name) {
  NodeId preact = b.bn(x, name + "_preact_bn");
  preact = b.relu(preact, name + "_preact_relu");
  NodeId shortcut = x;
  if (conv_shortcut) {
    shortcut = b.conv(preact, name + "_0_conv", 4 * filters, 1, 1, stride, PaddingMode::kValid, true);
  } else if (stride > 1) {
    shortcut = b.max_pool(x, b.auto_name("max_pooling2d"), 1, stride, PaddingMode::kValid);
  }
  NodeId y = b.conv(preact, name + "_1_conv", filters, 1, 1, 1, PaddingMode::kValid, false);
  y = b.bn(y, name + "_1_bn");
  y = b.relu(y, name + "_1_relu");
  y = b.pad(y, name + "_2_pad", 1);
  y = b.conv(y, name + "_2_conv", filters, 3, 3, stride, PaddingMode::kValid, false);
  y = b.bn(y, name + "_2_bn");
  y = b.relu(y, name + "_2_relu");
  y = b.conv(y, name + "_3_conv", 4 * filters, 1, 1, 1, PaddingMode::kValid, true);
  return b.add({shortcut, y}, name + "_out");
}

NodeId build_resnet50v2(Builder& b, NodeId x) {
  x = b.pad(x, "conv1_pad", 3);
  x = b.conv(x, "conv1_conv", 64, 7, 7, 2, PaddingMode::kValid, true);
  x = b.pad(x, "pool1_pad", 1);
  x = b.max_pool(x, "pool1_pool", 3, 2, PaddingMode::kValid);

  struct Stage {
    const char* name;
    int filters, blocks, last_stride;
  };
  for (const Stage& s : {Stage{"conv2", 64, 3, 2}, Stage{"conv3", 128, 4, 2}, Stage{"conv4", 256, 6, 2},
                         Stage{"conv5", 512, 3, 1}}) {
    x = resnet_v2_block(b, x, s.filters, 1, true, fmt::format("{}_block1", s.name));
    for (int i = 2; i < s.blocks; ++i) x = resnet_v2_block(b, x, s.filters, 1, false, fmt::format("{}_block{}", s.name, i));
    x = resnet_v2_block(b, x, s.filters, s.last_stride, false, fmt::format("{}_block{}", s.name, s.blocks));
  }
  x = b.bn(x, "post_bn");
  return b.relu(x, "post_relu");
}

// ------------------------------------------------------- InceptionResNetV2

// Conv (no bias) + BN without scale + ReLU, auto-named unless `name` is given.
NodeId conv_bn(Builder& b, NodeId x, int filters, int kh, int kw, int stride = 1,
               PaddingMode padding = PaddingMode::kSame, const std::string& name = {}) {
  const bool named = !name.empty();
  x = b.conv(x, named ? name : b.auto_name("conv2d"), filters, kh, kw, stride, padding, false);
  x = b.bn(x, named ? name + "_bn" : b.auto_name("batch_normalization"), false);
  return b.relu(x, named ? name + "_ac" : b.auto_name("activation"));
}

NodeId inception_resnet_block(Builder& b, NodeId x, float scale, const std::string& type, int index,
                              bool activate) {
  std::vector<NodeId> branches;
  if (type == "block35") {
    branches.push_back(conv_bn(b, x, 32, 1, 1));
    NodeId b1 = conv_bn(b, x, 32, 1, 1);
    branches.push_back(conv_bn(b, b1, 32, 3, 3));
    NodeId b2 = conv_bn(b, x, 32, 1, 1);
    b2 = conv_bn(b, b2, 48, 3, 3);
    branches.push_back(conv_bn(b, b2, 64, 3, 3));
  } else if (type == "block17") {
    branches.push_back(conv_bn(b, x, 192, 1, 1));
    NodeId b1 = conv_bn(b, x, 128, 1, 1);
    b1 = conv_bn(b, b1, 160, 1, 7);
    branches.push_back(conv_bn(b, b1, 192, 7, 1));
  } else {
    branches.push_back(conv_bn(b, x, 192, 1, 1));
    NodeId b1 = conv_bn(b, x, 192, 1, 1);
    b1 = conv_bn(b, b1, 224, 1, 3);
    branches.push_back(conv_bn(b, b1, 256, 3, 1));
  }
  const std::string name = fmt::format("{}_{}", type, index);
  NodeId mixed = b.concat(branches, name + "_mixed");
  NodeId up = b.conv(mixed, name + "_conv", static_cast<int>(b.channels(x)), 1, 1, 1, PaddingMode::kSame, true);
  x = b.scaled_add(x, up, name, scale);
  return activate ? b.relu(x, name + "_ac") : x;
}

NodeId build_inception_resnet_v2(Builder& b, NodeId x) {
  x = conv_bn(b, x, 32, 3, 3, 2, PaddingMode::kValid);
  x = conv_bn(b, x, 32, 3, 3, 1, PaddingMode::kValid);
  x = conv_bn(b, x, 64, 3, 3);
  x = b.max_pool(x, b.auto_name("max_pooling2d"), 3, 2, PaddingMode::kValid);
  x = conv_bn(b, x, 80, 1, 1, 1, PaddingMode::kValid);
  x = conv_bn(b, x, 192, 3, 3, 1, PaddingMode::kValid);
  x = b.max_pool(x, b.auto_name("max_pooling2d"), 3, 2, PaddingMode::kValid);

  {
    NodeId b0 = conv_bn(b, x, 96, 1, 1);
    NodeId b1 = conv_bn(b, x, 48, 1, 1);
    b1 = conv_bn(b, b1, 64, 5, 5);
    NodeId b2 = conv_bn(b, x, 64, 1, 1);
    b2 = conv_bn(b, b2, 96, 3, 3);
    b2 = conv_bn(b, b2, 96, 3, 3);
    NodeId bp = b.avg_pool(x, b.auto_name("average_pooling2d"), 3, 1, PaddingMode::kSame);
    bp = conv_bn(b, bp, 64, 1, 1);
    x = b.concat({b0, b1, b2, bp}, "mixed_5b");
  }
  for (int i = 1; i <= 10; ++i) x = inception_resnet_block(b, x, 0.17f, "block35", i, true);

  {
    NodeId b0 = conv_bn(b, x, 384, 3, 3, 2, PaddingMode::kValid);
    NodeId b1 = conv_bn(b, x, 256, 1, 1);
    b1 = conv_bn(b, b1, 256, 3, 3);
    b1 = conv_bn(b, b1, 384, 3, 3, 2, PaddingMode::kValid);
    NodeId bp = b.max_pool(x, b.auto_name("max_pooling2d"), 3, 2, PaddingMode::kValid);
    x = b.concat({b0, b1, bp}, "mixed_6a");
  }
  for (int i = 1; i <= 20; ++i) x = inception_resnet_block(b, x, 0.1f, "block17", i, true);

  {
    NodeId b0 = conv_bn(b, x, 256, 1, 1);
    b0 = conv_bn(b, b0, 384, 3, 3, 2, PaddingMode::kValid);
    NodeId b1 = conv_bn(b, x, 256, 1, 1);
    b1 = conv_bn(b, b1, 288, 3, 3, 2, PaddingMode::kValid);
    NodeId b2 = conv_bn(b, x, 256, 1, 1);
    b2 = conv_bn(b, b2, 288, 3, 3);
    b2 = conv_bn(b, b2, 320, 3, 3, 2, PaddingMode::kValid);
    NodeId bp = b.max_pool(x, b.auto_name("max_pooling2d"), 3, 2, PaddingMode::kValid);
    x = b.concat({b0, b1, b2, bp}, "mixed_7a");
  }
  for (int i = 1; i <= 9; ++i) x = inception_resnet_block(b, x, 0.2f, "block8", i, true);
  x = inception_resnet_block(b, x, 1.0f, "block8", 10, false);

  return conv_bn(b, x, 1536, 1, 1, 1, PaddingMode::kSame, "conv_7b");
}

// ------------------------------------------------------------- DenseNet201

NodeId dense_conv_block(Builder& b, NodeId x, const std::string& name) {
  NodeId y = b.bn(x, name + "_0_bn");
  y = b.relu(y, name + "_0_relu");
  y = b.conv(y, name + "_1_conv", 128, 1, 1, 1, PaddingMode::kValid, false);
  y = b.bn(y, name + "_1_bn");
  y = b.relu(y, name + "_1_relu");
  y = b.conv(y, name + "_2_conv", 32, 3, 3, 1, PaddingMode::kSame, false);
  return b.concat({x, y}, name + "_concat");
}

NodeId transition_block(Builder& b, NodeId x, const std::string& name) {
  const int filters = static_cast<int>(b.channels(x) / 2);
  x = b.bn(x, name + "_bn");
  x = b.relu(x, name + "_relu");
  x = b.conv(x, name + "_conv", filters, 1, 1, 1, PaddingMode::kValid, false);
  return b.avg_pool(x, name + "_pool", 2, 2, PaddingMode::kValid);
}

NodeId build_densenet201(Builder& b, NodeId x) {
  x = b.pad(x, b.auto_name("zero_padding2d"), 3);
  x = b.conv(x, "conv1_conv", 64, 7, 7, 2, PaddingMode::kValid, false);
  x = b.bn(x, "conv1_bn");
  x = b.relu(x, "conv1_relu");
  x = b.pad(x, b.auto_name("zero_padding2d"), 1);
  x = b.max_pool(x, "pool1", 3, 2, PaddingMode::kValid);

  const int blocks[] = {6, 12, 48, 32};
  for (int stage = 0; stage < 4; ++stage) {
    for (int i = 1; i <= blocks[stage]; ++i)
      x = dense_conv_block(b, x, fmt::format("conv{}_block{}", stage + 2, i));
    if (stage < 3) x = transition_block(b, x, fmt::format("pool{}", stage + 2));
  }
  x = b.bn(x, "bn");
  return b.relu(x, "relu");
}

}  // namespace

const BackboneInfo& backbone_info(BackboneKind kind) {
  for (const auto& info : kInfo)
    if (info.kind == kind) return info;
  throw Error(ErrorKind::kUnknownBackbone, "unknown backbone enumerator");
}

std::string_view backbone_name(BackboneKind kind) { return backbone_info(kind).name; }

BackboneKind parse_backbone(std::string_view name) {
  std::string key;
  for (char c : name)
    if (c != '_' && c != '-') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (const auto& info : kInfo) {
    std::string canon;
    for (char c : info.name)
      if (c != '_') canon.push_back(c);
    if (key == canon) return info.kind;
  }
  throw Error(ErrorKind::kUnknownBackbone, fmt::format("unknown backbone '{}'", name));
}

nn::NodeId build_backbone_tower(nn::Graph& graph, nn::NodeId input, BackboneKind kind, std::uint64_t seed) {
  switch (kind) {
    case BackboneKind::kXception: {
      Builder b(graph, seed, 1e-3f);
      return build_xception(b, input);
    }
    case BackboneKind::kResNet50V2: {
      Builder b(graph, seed, 1.001e-5f);
      return build_resnet50v2(b, input);
    }
    case BackboneKind::kInceptionResNetV2: {
      Builder b(graph, seed, 1e-3f);
      return build_inception_resnet_v2(b, input);
    }
    case BackboneKind::kDenseNet201: {
      Builder b(graph, seed, 1.001e-5f);
      return build_densenet201(b, input);
    }
  }
  throw Error(ErrorKind::kUnknownBackbone, "unknown backbone enumerator");
}

}  // namespace tumorbench::model
