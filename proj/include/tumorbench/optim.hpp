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

#ifndef TUMORBENCH_OPTIM_HPP_
#define TUMORBENCH_OPTIM_HPP_

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "tumorbench/nn/layers.hpp"

namespace tumorbench {

// Adamax (the infinity-norm Adam variant):
//   m <- b1 m + (1 - b1) g
//   u <- max(b2 u, |g|)
//   p <- p - lr / (1 - b1^t) * m / (u + eps)
class Adamax {
 public:
  explicit Adamax(double learning_rate = 1e-4, double beta_1 = 0.9, double beta_2 = 0.999, double epsilon = 1e-7)
      : lr_(learning_rate), beta_1_(beta_1), beta_2_(beta_2), epsilon_(epsilon) {}

  // Applies one update to every parameter from its accumulated gradient.
  void step(const std::vector<nn::Parameter*>& parameters);

  std::int64_t iterations() const { return iterations_; }
  double learning_rate() const { return lr_; }

 private:
  struct Slot {
    std::vector<float> m, u;
  };
  double lr_, beta_1_, beta_2_, epsilon_;
  std::int64_t iterations_ = 0;
  std::unordered_map<const nn::Parameter*, Slot> slots_;
};

}  // namespace tumorbench

#endif  // TUMORBENCH_OPTIM_HPP_
