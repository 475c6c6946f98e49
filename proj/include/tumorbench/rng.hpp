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

#ifndef TUMORBENCH_RNG_HPP_
#define TUMORBENCH_RNG_HPP_

#include <array>
#include <cstdint>
#include <initializer_list>

namespace tumorbench {

// Counter-based generator (Philox4x32-10). The draw sequence is a pure
// function of (seed, stream, position) and uses only integer arithmetic, so
// it is identical on every platform and compiler. The standard library
// distributions are deliberately not used for the same reason.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  // Independent generator keyed by this seed and a tuple of ids
  // (e.g. {sample_index, epoch}).
  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n);

  // Approximately standard normal (Box-Muller on two uniforms).
  double normal();

  std::uint64_t seed() const { return seed_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
};

// SplitMix64 finalizer; used to fold ids into stream numbers.
std::uint64_t mix64(std::uint64_t x);

}  // namespace tumorbench

#endif  // TUMORBENCH_RNG_HPP_
