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

#ifndef TUMORBENCH_NN_GRAPH_HPP_
#define TUMORBENCH_NN_GRAPH_HPP_

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "tumorbench/nn/layers.hpp"

namespace tumorbench::nn {

using NodeId = int;

// A static DAG of layers in insertion (= topological) order with a single
// image input at node 0.
//
// Training-mode forward keeps every activation alive until backward has
// consumed it; inference-mode forward frees each activation as soon as its
// last consumer has run.
class Graph {
 public:
  // `input_shape` is per-sample, e.g. {256, 256, 3}.
  explicit Graph(Shape input_shape);
  Graph(Graph&&) noexcept = default;
  Graph& operator=(Graph&&) noexcept = default;

  NodeId input() const { return 0; }

  // Builds `layer` against the shapes of `inputs` and appends it.
  NodeId add(std::unique_ptr<Layer> layer, std::vector<NodeId> inputs);

  template <typename L, typename... Args>
  NodeId add(std::vector<NodeId> inputs, std::string name, Args&&... args) {
    return add(std::make_unique<L>(std::move(name), std::forward<Args>(args)...), std::move(inputs));
  }

  // Per-sample output shape of a node (leading batch dimension 1).
  const Shape& shape(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)).shape; }
  std::size_t size() const { return nodes_.size(); }
  Layer* layer(NodeId id) { return nodes_.at(static_cast<std::size_t>(id)).layer.get(); }
  const Layer* layer(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)).layer.get(); }
  const std::vector<NodeId>& inputs_of(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)).inputs; }
  Layer* find(const std::string& name);

  // Runs every node up to and including `target` (default: last node).
  const Tensor& forward(const Tensor& batch, Mode mode, NodeId target = -1);
  const Tensor& activation(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }

  // Seeds d(loss)/d(node `from`) with `grad` and propagates to all parameters.
  // Requires a preceding training-mode forward that reached `from`.
  void backward(NodeId from, const Tensor& grad);

  void zero_grad();
  void release_activations();

  std::vector<Parameter*> parameters();
  std::vector<Parameter*> trainable_parameters();
  std::int64_t count_parameters() const;
  std::int64_t count_trainable_parameters() const;

  // Architecture descriptor: ordered layers with type, inputs and config.
  nlohmann::json describe() const;

 private:
  struct Node {
    std::unique_ptr<Layer> layer;  // null for the input node
    std::vector<NodeId> inputs;
    std::vector<NodeId> consumers;
    Shape shape;
    Tensor value;
    Tensor grad;
    bool has_grad = false;
  };

  bool needs_grad(NodeId id) const;

  std::vector<Node> nodes_;
  std::vector<bool> needs_grad_cache_;
  NodeId last_forward_ = -1;
};

}  // namespace tumorbench::nn

#endif  // TUMORBENCH_NN_GRAPH_HPP_
