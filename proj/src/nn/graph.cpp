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

#include "tumorbench/nn/graph.hpp"

#include <fmt/format.h>

#include "tumorbench/error.hpp"

namespace tumorbench::nn {

Graph::Graph(Shape input_shape) {
  Node in;
  in.shape = {1};
  in.shape.insert(in.shape.end(), input_shape.begin(), input_shape.end());
  nodes_.push_back(std::move(in));
}

NodeId Graph::add(std::unique_ptr<Layer> layer, std::vector<NodeId> inputs) {
  std::vector<Shape> shapes;
  for (NodeId id : inputs) {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
      throw Error(ErrorKind::kShapeIncompatible, fmt::format("layer {}: unknown input node {}", layer->name(), id));
    }
    shapes.push_back(nodes_[static_cast<std::size_t>(id)].shape);
  }
  Node node;
  node.shape = layer->build(shapes);
  node.layer = std::move(layer);
  node.inputs = std::move(inputs);
  const NodeId id = static_cast<NodeId>(nodes_.size());
  for (NodeId in : node.inputs) nodes_[static_cast<std::size_t>(in)].consumers.push_back(id);
  nodes_.push_back(std::move(node));
  needs_grad_cache_.clear();
  return id;
}

Layer* Graph::find(const std::string& name) {
  for (auto& n : nodes_)
    if (n.layer && n.layer->name() == name) return n.layer.get();
  return nullptr;
}

const Tensor& Graph::forward(const Tensor& batch, Mode mode, NodeId target) {
  if (target < 0) target = static_cast<NodeId>(nodes_.size()) - 1;
  const Shape& expect = nodes_[0].shape;
  if (batch.rank() != expect.size() ||
      !std::equal(expect.begin() + 1, expect.end(), batch.shape().begin() + 1)) {
    throw Error(ErrorKind::kShapeError,
                fmt::format("model expects batches shaped (n,{}...), got {}",
                            shape_string(Shape(expect.begin() + 1, expect.end())),
                            shape_string(batch.shape())));
  }
  release_activations();
  nodes_[0].value = batch;

  // Remaining-consumer counts for early release in inference mode.
  std::vector<int> pending(nodes_.size(), 0);
  for (NodeId id = 1; id <= target; ++id)
    for (NodeId in : nodes_[static_cast<std::size_t>(id)].inputs) ++pending[static_cast<std::size_t>(in)];

  std::vector<const Tensor*> ins;
  for (NodeId id = 1; id <= target; ++id) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    ins.clear();
    for (NodeId in : node.inputs) ins.push_back(&nodes_[static_cast<std::size_t>(in)].value);
    node.layer->forward(ins, node.value, mode);
    if (mode == Mode::kInference) {
      for (NodeId in : node.inputs) {
        if (--pending[static_cast<std::size_t>(in)] == 0) nodes_[static_cast<std::size_t>(in)].value.release();
      }
    }
  }
  last_forward_ = target;
  return nodes_[static_cast<std::size_t>(target)].value;
}

bool Graph::needs_grad(NodeId id) const {
  if (needs_grad_cache_.size() != nodes_.size()) {
    auto& cache = const_cast<std::vector<bool>&>(needs_grad_cache_);
    cache.assign(nodes_.size(), false);
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
      bool need = false;
      for (Parameter* p : nodes_[i].layer->parameters())
        if (p->trainable && nodes_[i].layer->trainable()) need = true;
      for (NodeId in : nodes_[i].inputs) need = need || cache[static_cast<std::size_t>(in)];
      cache[i] = need;
    }
  }
  return needs_grad_cache_[static_cast<std::size_t>(id)];
}

void Graph::backward(NodeId from, const Tensor& grad) {
  if (from > last_forward_) {
    throw Error(ErrorKind::kShapeError, "backward past the last forward node");
  }
  needs_grad_cache_.clear();
  for (auto& n : nodes_) {
    n.grad.release();
    n.has_grad = false;
  }
  Node& start = nodes_[static_cast<std::size_t>(from)];
  start.grad = grad;
  start.has_grad = true;

  std::vector<const Tensor*> ins;
  std::vector<Tensor> scratch;
  std::vector<Tensor*> outs;
  for (NodeId id = from; id >= 1; --id) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.has_grad) continue;
    ins.clear();
    outs.clear();
    scratch.assign(node.inputs.size(), Tensor());
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      const NodeId in = node.inputs[k];
      ins.push_back(&nodes_[static_cast<std::size_t>(in)].value);
      outs.push_back(in != 0 && needs_grad(in) ? &scratch[k] : nullptr);
    }
    node.layer->backward(ins, node.value, node.grad, outs);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      if (outs[k] == nullptr) continue;
      Node& src = nodes_[static_cast<std::size_t>(node.inputs[k])];
      if (!src.has_grad) {
        src.grad = std::move(scratch[k]);
        src.has_grad = true;
      } else {
        float* dst = src.grad.data();
        const float* add = scratch[k].data();
        const long n = src.grad.size();
#pragma omp parallel for simd schedule(static)
        for (long i = 0; i < n; ++i) dst[i] += add[i];
      }
    }
    // Every consumer of this node has already run its backward pass.
    node.grad.release();
    node.has_grad = false;
    node.value.release();
  }
  release_activations();
}

void Graph::zero_grad() {
  for (Parameter* p : parameters())
    if (p->trainable) p->grad.fill(0.0f);
}

void Graph::release_activations() {
  for (auto& n : nodes_) {
    n.value.release();
    n.grad.release();
    n.has_grad = false;
  }
  last_forward_ = -1;
}

std::vector<Parameter*> Graph::parameters() {
  std::vector<Parameter*> out;
  for (auto& n : nodes_) {
    if (!n.layer) continue;
    for (Parameter* p : n.layer->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<Parameter*> Graph::trainable_parameters() {
  std::vector<Parameter*> out;
  for (auto& n : nodes_) {
    if (!n.layer || !n.layer->trainable()) continue;
    for (Parameter* p : n.layer->parameters())
      if (p->trainable) out.push_back(p);
  }
  return out;
}

std::int64_t Graph::count_parameters() const {
  std::int64_t total = 0;
  for (const auto& n : nodes_) {
    if (!n.layer) continue;
    for (const Parameter* p : const_cast<Layer*>(n.layer.get())->parameters()) total += p->value.size();
  }
  return total;
}

std::int64_t Graph::count_trainable_parameters() const {
  std::int64_t total = 0;
  for (const auto& n : nodes_) {
    if (!n.layer || !n.layer->trainable()) continue;
    for (const Parameter* p : const_cast<Layer*>(n.layer.get())->parameters())
      if (p->trainable) total += p->value.size();
  }
  return total;
}

nlohmann::json Graph::describe() const {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    std::vector<std::string> inputs;
    for (NodeId in : n.inputs)
      inputs.push_back(in == 0 ? "input" : nodes_[static_cast<std::size_t>(in)].layer->name());
    layers.push_back({{"name", n.layer->name()},
                      {"type", n.layer->type()},
                      {"inputs", inputs},
                      {"config", n.layer->config()},
                      {"trainable", n.layer->trainable()}});
  }
  Shape in(nodes_[0].shape.begin() + 1, nodes_[0].shape.end());
  return {{"input_shape", in}, {"layers", layers}};
}

}  // namespace tumorbench::nn
