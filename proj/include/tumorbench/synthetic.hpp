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

#ifndef TUMORBENCH_SYNTHETIC_HPP_
#define TUMORBENCH_SYNTHETIC_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tumorbench/data_ingest.hpp"

namespace tumorbench::synthetic {

// Phantom slice: an elliptical head with textured tissue and one lesion
// whose placement and appearance depend on the class (peripheral bright
// disc, large ring-enhancing mass, small midline blob). The mask covers the
// lesion and the border traces it as 1-based (row, col) pairs.
TumorRecord make_record(TumorClass label, std::string pid, std::int64_t side, std::uint64_t seed);

struct DatasetOptions {
  std::int64_t per_class = 20;
  std::int64_t side = 512;
  std::uint64_t seed = 0;
  std::int64_t patients = 0;  // 0: one patient per slice
};

// Writes <dir>/<n>.mat for n = 1.. with classes interleaved; returns paths.
std::vector<std::filesystem::path> write_dataset(const std::filesystem::path& dir, const DatasetOptions& options);

}  // namespace tumorbench::synthetic

#endif  // TUMORBENCH_SYNTHETIC_HPP_
