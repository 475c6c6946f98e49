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

#include "tumorbench/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "tumorbench/error.hpp"
#include "tumorbench/metrics.hpp"

namespace tumorbench::train {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Stacks per-sample (H, W, C) tensors into an (N, H, W, C) batch.
Tensor stack(const std::vector<Tensor>& items) {
  Shape shape = items.front().shape();
  shape.insert(shape.begin(), static_cast<std::int64_t>(items.size()));
  Tensor out(shape);
  const std::int64_t per = items.front().size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].shape() != items.front().shape())
      throw Error(ErrorKind::kShapeError, "images in one batch differ in shape");
    std::copy_n(items[i].data(), per, out.data() + static_cast<std::int64_t>(i) * per);
  }
  return out;
}

std::vector<int> labels_of(const ImageSource& source, std::span<const std::int64_t> indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (const auto i : indices) out.push_back(source.label(i));
  return out;
}

void write_diverged_state(const std::filesystem::path& checkpoint, const TrainingHistory& history, int epoch,
                          std::int64_t batch, double loss) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : history.records) {
    records.push_back({{"epoch", r.epoch},
                       {"train_loss", r.train_loss},
                       {"train_acc", r.train_accuracy},
                       {"val_loss", r.val_loss},
                       {"val_acc", r.val_accuracy}});
  }
  const nlohmann::json state = {{"epoch", epoch}, {"batch", batch}, {"loss", std::isnan(loss) ? "nan" : "inf"},
                                {"history", records}};
  std::ofstream(checkpoint.string() + ".diverged.json") << state.dump(2) << '\n';
}

}  // namespace

MemorySource::MemorySource(std::vector<Tensor> images, std::vector<int> labels)
    : images_(std::move(images)), labels_(std::move(labels)) {
  if (images_.size() != labels_.size()) {
    throw Error(ErrorKind::kLengthMismatch,
                fmt::format("{} images vs {} labels", images_.size(), labels_.size()));
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorKind::kConfig, "train.epochs must be at least 1");
  if (batch_size < 1) throw Error(ErrorKind::kConfig, "train.batch_size must be at least 1");
  if (early_stop_patience && *early_stop_patience < 1)
    throw Error(ErrorKind::kConfig, "train.early_stop_patience must be at least 1");
  if (checkpoint_policy != "best_val_accuracy")
    throw Error(ErrorKind::kConfig, fmt::format("unsupported checkpoint_policy '{}'", checkpoint_policy));
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"seed", seed},
          {"early_stop_patience", early_stop_patience ? nlohmann::json(*early_stop_patience) : nlohmann::json()},
          {"checkpoint_policy", checkpoint_policy}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  if (j.contains("early_stop_patience") && !j["early_stop_patience"].is_null())
    c.early_stop_patience = j["early_stop_patience"].get<int>();
  c.checkpoint_policy = j.value("checkpoint_policy", c.checkpoint_policy);
  c.validate();
  return c;
}

void write_history_csv(const TrainingHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, fmt::format("cannot write {}", path.string()));
  out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  for (const auto& r : history.records) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.epoch, r.train_loss, r.train_accuracy, r.val_loss,
                       r.val_accuracy);
  }
}

TrainingHistory read_history_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, fmt::format("cannot read {}", path.string()));
  std::string line;
  std::getline(in, line);
  if (line.rfind("epoch,train_loss,train_acc,val_loss,val_acc", 0) != 0)
    throw Error(ErrorKind::kIo, fmt::format("{}: unexpected history header '{}'", path.string(), line));
  TrainingHistory h;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw Error(ErrorKind::kIo, fmt::format("{}: malformed row '{}'", path.string(), line));
    h.records.push_back({std::stoi(cells[0]), std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3]),
                         std::stod(cells[4])});
  }
  return h;
}

std::vector<std::int64_t> epoch_order(const std::vector<std::int64_t>& indices, std::uint64_t seed, int epoch) {
  std::vector<std::int64_t> order = indices;
  Rng rng = Rng::substream(seed, {0x7a1u, static_cast<std::uint64_t>(epoch)});
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(i)));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

Tensor eval_batch(const model::ModelHandle& handle, const ImageSource& source, std::span<const std::int64_t> indices) {
  std::vector<Tensor> items;
  items.reserve(indices.size());
  Rng unused(0, 0);
  for (const auto i : indices) items.push_back(model::model_input(handle, source.image(i), unused, false));
  return stack(items);
}

TrainResult train(model::ModelHandle& handle, const DatasetSplit& split, const ImageSource& source,
                  const TrainConfig& config, const std::filesystem::path& checkpoint, const EpochCallback& on_epoch) {
  config.validate();
  if (split.train.empty()) throw Error(ErrorKind::kEmptySplit, "training split is empty");
  if (split.val.empty()) throw Error(ErrorKind::kEmptySplit, "validation split is empty");
  if (!handle.optimizer) throw Error(ErrorKind::kConfig, "model is not compiled");

  TrainResult result;
  result.best_checkpoint = checkpoint;
  int since_best = 0;
  bool first_batch = true;
  const auto bs = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<std::int64_t> order = epoch_order(split.train, config.seed, epoch);
    double loss_sum = 0.0;
    std::int64_t correct = 0, seen = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::span<const std::int64_t> idx(order.data() + start, std::min(bs, order.size() - start));
      std::vector<Tensor> items;
      items.reserve(idx.size());
      for (const auto i : idx) {
        Rng rng = augmentation_stream(config.seed, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(i));
        items.push_back(model::model_input(handle, source.image(i), rng, true));
      }
      const std::vector<int> labels = labels_of(source, idx);
      const model::BatchResult br = model::train_on_batch(handle, stack(items), labels);
      if (!std::isfinite(br.loss)) {
        write_diverged_state(checkpoint, result.history, epoch + 1, static_cast<std::int64_t>(start / bs), br.loss);
        throw Error(ErrorKind::kDivergedLoss,
                    fmt::format("non-finite loss at epoch {} batch {}", epoch + 1, start / bs));
      }
      if (first_batch) {
        result.first_batch_loss = br.loss;
        first_batch = false;
      }
      loss_sum += br.loss * static_cast<double>(br.count);
      correct += br.correct;
      seen += br.count;
    }

    double val_loss_sum = 0.0;
    std::int64_t val_correct = 0;
    for (std::size_t start = 0; start < split.val.size(); start += bs) {
      const std::span<const std::int64_t> idx(split.val.data() + start, std::min(bs, split.val.size() - start));
      const std::vector<int> labels = labels_of(source, idx);
      const model::BatchResult br = model::test_on_batch(handle, eval_batch(handle, source, idx), labels);
      val_loss_sum += br.loss * static_cast<double>(br.count);
      val_correct += br.correct;
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
    rec.val_loss = val_loss_sum / static_cast<double>(split.val.size());
    rec.val_accuracy = static_cast<double>(val_correct) / static_cast<double>(split.val.size());
    if (!std::isfinite(rec.val_loss)) {
      write_diverged_state(checkpoint, result.history, rec.epoch, -1, rec.val_loss);
      throw Error(ErrorKind::kDivergedLoss, fmt::format("non-finite validation loss at epoch {}", rec.epoch));
    }
    result.history.records.push_back(rec);

    if (rec.val_accuracy > result.best_val_accuracy) {
      result.best_val_accuracy = rec.val_accuracy;
      result.best_epoch = rec.epoch;
      model::save_model(handle, checkpoint);
      since_best = 0;
    } else {
      ++since_best;
    }
    if (on_epoch && !on_epoch(rec)) break;
    if (config.early_stop_patience && since_best >= *config.early_stop_patience) break;
  }
  return result;
}

PredictionSet evaluate(model::ModelHandle& handle, const std::vector<std::int64_t>& indices, const ImageSource& source,
                       int batch_size) {
  if (indices.empty()) throw Error(ErrorKind::kEmptySplit, "evaluation split is empty");
  if (batch_size < 1) throw Error(ErrorKind::kConfig, "batch_size must be at least 1");
  PredictionSet out;
  out.indices = indices;
  out.y_true = labels_of(source, indices);
  const auto k = static_cast<std::int64_t>(handle.num_classes());
  out.y_prob = Tensor({static_cast<std::int64_t>(indices.size()), k});
  const auto bs = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < indices.size(); start += bs) {
    const std::span<const std::int64_t> idx(indices.data() + start, std::min(bs, indices.size() - start));
    const Tensor batch = eval_batch(handle, source, idx);
    const auto t0 = Clock::now();
    const Tensor probs = model::predict(handle, batch);
    out.wall_seconds += seconds_since(t0);
    std::copy_n(probs.data(), probs.size(), out.y_prob.data() + static_cast<std::int64_t>(start) * k);
  }
  out.y_pred = metrics::argmax_rows(out.y_prob);
  return out;
}

void write_predictions_csv(const PredictionSet& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, fmt::format("cannot write {}", path.string()));
  const std::int64_t k = p.y_prob.rank() == 2 ? p.y_prob.dim(1) : 0;
  out << "index,true,pred";
  for (std::int64_t j = 0; j < k; ++j) out << ",p" << j;
  out << '\n';
  for (std::size_t i = 0; i < p.indices.size(); ++i) {
    out << p.indices[i] << ',' << p.y_true[i] << ',' << p.y_pred[i];
    for (std::int64_t j = 0; j < k; ++j) out << fmt::format(",{:.9g}", p.y_prob[static_cast<std::int64_t>(i) * k + j]);
    out << '\n';
  }
}

nlohmann::json TimingStats::to_json() const {
  return {{"samples", samples}, {"min", min},       {"median", median},
          {"mean", mean},       {"images", images}, {"outputs_identical", outputs_identical}};
}

TimingStats summarize_timings(std::vector<double> samples) {
  if (samples.empty()) throw Error(ErrorKind::kEmptyInput, "no timing samples");
  TimingStats t;
  t.samples = samples;
  std::sort(samples.begin(), samples.end());
  t.min = samples.front();
  const std::size_t n = samples.size();
  t.median = n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  t.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  return t;
}

TimingStats benchmark_predict(model::ModelHandle& handle, const std::vector<std::int64_t>& indices,
                              const ImageSource& source, int repeats, int batch_size) {
  if (repeats < 1) throw Error(ErrorKind::kConfig, "repeats must be at least 1");
  if (batch_size < 1) throw Error(ErrorKind::kConfig, "batch_size must be at least 1");
  std::vector<Tensor> batches;
  const auto bs = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < indices.size(); start += bs) {
    const std::span<const std::int64_t> idx(indices.data() + start, std::min(bs, indices.size() - start));
    batches.push_back(eval_batch(handle, source, idx));
  }
  std::vector<double> samples;
  std::vector<std::vector<float>> first;
  bool identical = true;
  for (int r = 0; r < repeats; ++r) {
    std::vector<std::vector<float>> outputs;
    const auto t0 = Clock::now();
    for (const Tensor& b : batches) {
      const Tensor p = model::predict(handle, b);
      outputs.emplace_back(p.data(), p.data() + p.size());
    }
    samples.push_back(seconds_since(t0));
    if (r == 0) {
      first = std::move(outputs);
    } else if (outputs != first) {
      identical = false;
    }
  }
  TimingStats t = summarize_timings(std::move(samples));
  t.images = static_cast<std::int64_t>(indices.size());
  t.outputs_identical = identical;
  return t;
}

}  // namespace tumorbench::train
