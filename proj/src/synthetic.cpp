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

#include "tumorbench/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "tumorbench/error.hpp"
#include "tumorbench/rng.hpp"

namespace tumorbench::synthetic {

TumorRecord make_record(TumorClass label, std::string pid, std::int64_t side, std::uint64_t seed) {
  if (side < 16) throw Error(ErrorKind::kInvalidSize, "synthetic slices need side >= 16");
  Rng rng = Rng::substream(seed, {0x5e7u, static_cast<std::uint64_t>(label)});
  const auto s = static_cast<double>(side);
  const double cy = s / 2.0 + rng.uniform(-0.03, 0.03) * s;
  const double cx = s / 2.0 + rng.uniform(-0.03, 0.03) * s;
  const double ay = s * rng.uniform(0.40, 0.45), ax = s * rng.uniform(0.33, 0.38);

  // Lesion centre and radius by class.
  double ly = 0, lx = 0, radius = 0, peak = 0;
  bool ring = false;
  switch (label) {
    case TumorClass::kMeningioma: {
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      ly = cy + 0.78 * ay * std::sin(angle);
      lx = cx + 0.78 * ax * std::cos(angle);
      radius = s * rng.uniform(0.07, 0.09);
      peak = 1500;
      break;
    }
    case TumorClass::kGlioma:
      ly = cy + rng.uniform(-0.25, 0.1) * ay;
      lx = cx + (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.25, 0.4) * ax;
      radius = s * rng.uniform(0.12, 0.15);
      peak = 1100;
      ring = true;
      break;
    case TumorClass::kPituitary:
      ly = cy + rng.uniform(0.2, 0.3) * ay;
      lx = cx + rng.uniform(-0.03, 0.03) * ax;
      radius = s * rng.uniform(0.04, 0.055);
      peak = 1700;
      break;
  }

  TumorRecord r;
  r.label = label;
  r.pid = std::move(pid);
  r.height = side;
  r.width = side;
  r.image.assign(static_cast<std::size_t>(side * side), 0);
  r.tumor_mask.assign(static_cast<std::size_t>(side * side), 0);
  const double fy = rng.uniform(0.02, 0.05), fx = rng.uniform(0.02, 0.05), phase = rng.uniform(0.0, 6.3);
  Rng noise = Rng::substream(seed, {0x5e8u});
  for (std::int64_t y = 0; y < side; ++y) {
    for (std::int64_t x = 0; x < side; ++x) {
      const double dy = (static_cast<double>(y) - cy) / ay, dx = (static_cast<double>(x) - cx) / ax;
      const double e = dy * dy + dx * dx;
      double v = 0.0;
      if (e <= 1.0) {
        v = 420.0 + 120.0 * std::sin(fy * static_cast<double>(y) * 6.0 + phase) * std::cos(fx * static_cast<double>(x) * 6.0);
        if (e > 0.85) v += 350.0;  // bright scalp rim
      }
      const double ry = static_cast<double>(y) - ly, rx = static_cast<double>(x) - lx;
      const double d = std::sqrt(ry * ry + rx * rx) / radius;
      if (d <= 1.0) {
        r.tumor_mask[static_cast<std::size_t>(y * side + x)] = 1;
        v = ring ? (d > 0.65 ? peak : 250.0) : peak * (1.0 - 0.3 * d * d);
      }
      v += noise.normal() * 25.0;
      r.image[static_cast<std::size_t>(y * side + x)] = static_cast<std::int16_t>(std::clamp(v, 0.0, 32767.0));
    }
  }
  constexpr int kPoints = 48;
  for (int i = 0; i < kPoints; ++i) {
    const double t = 2.0 * std::numbers::pi * i / kPoints;
    r.tumor_border.push_back(ly + radius * std::sin(t) + 1.0);
    r.tumor_border.push_back(lx + radius * std::cos(t) + 1.0);
  }
  return r;
}

std::vector<std::filesystem::path> write_dataset(const std::filesystem::path& dir, const DatasetOptions& options) {
  if (options.per_class < 1) throw Error(ErrorKind::kInvalidSize, "per_class must be at least 1");
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  const std::int64_t total = options.per_class * kNumClasses;
  for (std::int64_t n = 0; n < total; ++n) {
    const auto label = class_from_index(static_cast<int>(n % kNumClasses));
    const std::int64_t patient = options.patients > 0 ? n % options.patients : n;
    const auto path = dir / fmt::format("{}.mat", n + 1);
    const std::uint64_t seed = Rng::substream(options.seed, {0x5e9u, static_cast<std::uint64_t>(n)}).next_u64();
    write_record(path, make_record(label, fmt::format("P{:05d}", patient), options.side, seed));
    paths.push_back(path);
  }
  return paths;
}

}  // namespace tumorbench::synthetic
