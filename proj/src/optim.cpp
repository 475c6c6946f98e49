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

#include "tumorbench/optim.hpp"

#include <algorithm>
#include <cmath>

namespace tumorbench {

void Adamax::step(const std::vector<nn::Parameter*>& parameters) {
  ++iterations_;
  const double correction = 1.0 - std::pow(beta_1_, static_cast<double>(iterations_));
  const auto step_size = static_cast<float>(lr_ / correction);
  const auto b1 = static_cast<float>(beta_1_), b2 = static_cast<float>(beta_2_);
  const auto eps = static_cast<float>(epsilon_);
  for (nn::Parameter* p : parameters) {
    Slot& slot = slots_[p];
    const auto n = static_cast<std::size_t>(p->value.size());
    if (slot.m.size() != n) {
      slot.m.assign(n, 0.0f);
      slot.u.assign(n, 0.0f);
    }
    float* w = p->value.data();
    const float* g = p->grad.data();
    float* m = slot.m.data();
    float* u = slot.u.data();
    const auto count = static_cast<long>(n);
#pragma omp parallel for simd schedule(static)
    for (long i = 0; i < count; ++i) {
      m[i] += (g[i] - m[i]) * (1.0f - b1);
      u[i] = std::max(b2 * u[i], std::abs(g[i]));
      w[i] -= step_size * m[i] / (u[i] + eps);
    }
  }
}

}  // namespace tumorbench
