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

#ifndef TUMORBENCH_TRAIN_HPP_
#define TUMORBENCH_TRAIN_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tumorbench/data_ingest.hpp"
#include "tumorbench/model.hpp"
#include "tumorbench/preprocess.hpp"

namespace tumorbench::train {

// Indexed images with labels; the model sees image(i) through model_input.
class ImageSource {
 public:
  virtual ~ImageSource() = default;
  virtual std::int64_t size() const = 0;
  virtual Tensor image(std::int64_t index) const = 0;
  virtual int label(std::int64_t index) const = 0;
};

class CacheSource final : public ImageSource {
 public:
  explicit CacheSource(const PreprocessedCache& cache) : cache_(cache) {}
  std::int64_t size() const override { return cache_.size(); }
  Tensor image(std::int64_t index) const override { return cache_.image(index); }
  int label(std::int64_t index) const override { return cache_.label(index); }

 private:
  const PreprocessedCache& cache_;
};

class MemorySource final : public ImageSource {
 public:
  MemorySource(std::vector<Tensor> images, std::vector<int> labels);
  std::int64_t size() const override { return static_cast<std::int64_t>(images_.size()); }
  Tensor image(std::int64_t index) const override { return images_.at(static_cast<std::size_t>(index)); }
  int label(std::int64_t index) const override { return labels_.at(static_cast<std::size_t>(index)); }

 private:
  std::vector<Tensor> images_;
  std::vector<int> labels_;
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  std::uint64_t seed = 0;
  std::optional<int> early_stop_patience;  // epochs without improvement
  std::string checkpoint_policy = "best_val_accuracy";

  void validate() const;  // throws kConfig
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0, train_accuracy = 0.0;
  double val_loss = 0.0, val_accuracy = 0.0;
};

struct TrainingHistory {
  std::vector<EpochRecord> records;
};

// epoch,train_loss,train_acc,val_loss,val_acc with 17 significant digits.
void write_history_csv(const TrainingHistory& history, const std::filesystem::path& path);
TrainingHistory read_history_csv(const std::filesystem::path& path);

struct TrainResult {
  TrainingHistory history;
  std::filesystem::path best_checkpoint;
  int best_epoch = 0;
  double best_val_accuracy = -1.0;
  double first_batch_loss = 0.0;  // loss of the very first update
};

// Called after every epoch; returning false stops training early.
using EpochCallback = std::function<bool(const EpochRecord&)>;

// Fine-tunes `handle` (compiled) on split.train, validates on split.val
// after every epoch and saves `checkpoint` whenever validation accuracy
// improves (ties keep the earlier epoch). Throws kEmptySplit and
// kDivergedLoss (after writing <checkpoint>.diverged.json).
TrainResult train(model::ModelHandle& handle, const DatasetSplit& split, const ImageSource& source,
                  const TrainConfig& config, const std::filesystem::path& checkpoint,
                  const EpochCallback& on_epoch = {});

// Seeded per-epoch permutation of the training indices.
std::vector<std::int64_t> epoch_order(const std::vector<std::int64_t>& indices, std::uint64_t seed, int epoch);

// Eval-path (N, H, W, 3) batch for `indices`.
Tensor eval_batch(const model::ModelHandle& handle, const ImageSource& source, std::span<const std::int64_t> indices);

struct PredictionSet {
  std::vector<std::int64_t> indices;
  std::vector<int> y_true;
  Tensor y_prob;  // (N, K)
  std::vector<int> y_pred;
  double wall_seconds = 0.0;  // forward passes only
};

// Throws kEmptySplit.
PredictionSet evaluate(model::ModelHandle& handle, const std::vector<std::int64_t>& indices, const ImageSource& source,
                       int batch_size = 32);

// index,true,pred,p0,...,pK-1
void write_predictions_csv(const PredictionSet& predictions, const std::filesystem::path& path);

struct TimingStats {
  std::vector<double> samples;
  double min = 0.0, median = 0.0, mean = 0.0;
  std::int64_t images = 0;
  bool outputs_identical = true;

  nlohmann::json to_json() const;
};

// Times `repeats` full inference passes over preloaded inputs.
TimingStats benchmark_predict(model::ModelHandle& handle, const std::vector<std::int64_t>& indices,
                              const ImageSource& source, int repeats, int batch_size = 32);

// Order statistics over raw timing samples. Throws kEmptyInput.
TimingStats summarize_timings(std::vector<double> samples);

}  // namespace tumorbench::train

#endif  // TUMORBENCH_TRAIN_HPP_
