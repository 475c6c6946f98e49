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

#ifndef TUMORBENCH_METRICS_HPP_
#define TUMORBENCH_METRICS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tumorbench/tensor.hpp"

namespace tumorbench::metrics {

// K x K counts, rows = actual class, columns = predicted class.
struct ConfusionMatrix {
  int k = 0;
  std::vector<std::int64_t> counts;
  std::vector<std::string> class_order;

  std::int64_t at(int actual, int predicted) const { return counts[static_cast<std::size_t>(actual * k + predicted)]; }
  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t row_sum(int actual) const;
  std::int64_t col_sum(int predicted) const;
};

// Throws kLabelOutOfRange, kLengthMismatch.
ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, int k);
// Builds from explicit row-major counts. Throws kShapeError on negative or
// non-square input.
ConfusionMatrix confusion_from_counts(int k, std::vector<std::int64_t> counts);

// One-vs-rest counts for a single class.
struct ClassStats {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};
std::vector<ClassStats> class_stats(const ConfusionMatrix& cm);

// Structured notes about 0/0 per-class terms that were replaced by 0.
struct Warning {
  std::string metric;
  int class_index = -1;  // -1 when the warning is not per-class
  std::string message;
};
using Warnings = std::vector<Warning>;

// trace / total. Throws kEmptyMatrix.
double accuracy(const ConfusionMatrix& cm);

// Per-class one-vs-rest values; 0/0 becomes 0 and is noted in `warnings`.
std::vector<double> precision_per_class(const ConfusionMatrix& cm, Warnings* warnings = nullptr);
std::vector<double> recall_per_class(const ConfusionMatrix& cm, Warnings* warnings = nullptr);
std::vector<double> f1_per_class(const ConfusionMatrix& cm, Warnings* warnings = nullptr);
std::vector<double> csi_per_class(const ConfusionMatrix& cm, Warnings* warnings = nullptr);

// Unweighted means of the per-class values.
double macro_precision(const ConfusionMatrix& cm, Warnings* warnings = nullptr);
double macro_recall(const ConfusionMatrix& cm, Warnings* warnings = nullptr);
double macro_f1(const ConfusionMatrix& cm, Warnings* warnings = nullptr);
double csi(const ConfusionMatrix& cm, Warnings* warnings = nullptr);

// Errors on the misclassification indicator e_i = [pred_i != true_i]:
// mae = mse = mean(e), rmse = sqrt(mse).
struct ErrorMetrics {
  double mae = 0.0, mse = 0.0, rmse = 0.0;
};
// Throws kEmptyInput, kLengthMismatch.
ErrorMetrics error_metrics(std::span<const int> y_true, std::span<const int> y_pred);
ErrorMetrics error_metrics(const ConfusionMatrix& cm);

enum class Variant { kMacroBinary, kMulticlass };
std::string_view variant_name(Variant v);

// kMulticlass is the generalized correlation over the full matrix;
// kMacroBinary averages the per-class binary coefficients.
double mcc(const ConfusionMatrix& cm, Variant variant = Variant::kMulticlass, Warnings* warnings = nullptr);
std::vector<double> mcc_per_class(const ConfusionMatrix& cm, Warnings* warnings = nullptr);

// Chance-corrected agreement (Po - Pe) / (1 - Pe). kMulticlass throws
// kDegenerateMarginals when Pe = 1; per-class terms with Pe = 1 become 0.
double kappa(const ConfusionMatrix& cm, Variant variant = Variant::kMulticlass, Warnings* warnings = nullptr);
std::vector<double> kappa_per_class(const ConfusionMatrix& cm, Warnings* warnings = nullptr);

// Row-wise argmax with the lowest index winning ties.
std::vector<int> argmax_rows(const Tensor& probs);

struct PerClassMetrics {
  std::string name;
  ClassStats stats;
  double precision = 0.0, recall = 0.0, f1 = 0.0, csi = 0.0, mcc = 0.0, kappa = 0.0;
};

struct MetricReport {
  std::int64_t n = 0;
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
  double mae = 0.0, mse = 0.0, rmse = 0.0;
  double mcc_macro_binary = 0.0, mcc_multiclass = 0.0;
  // NaN when the marginals are degenerate (every label and prediction in one class).
  double kappa_macro_binary = 0.0, kappa_multiclass = 0.0;
  double csi_macro = 0.0;
  Variant mcc_variant = Variant::kMulticlass;
  Variant kappa_variant = Variant::kMulticlass;
  std::vector<PerClassMetrics> per_class;
  Warnings warnings;

  double mcc() const { return mcc_variant == Variant::kMulticlass ? mcc_multiclass : mcc_macro_binary; }
  double kappa() const { return kappa_variant == Variant::kMulticlass ? kappa_multiclass : kappa_macro_binary; }

  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
};

// Default class names are the tumor classes in index order.
std::vector<std::string> default_class_order(int k);

MetricReport report_from_labels(std::span<const int> y_true, std::span<const int> y_pred, int k,
                                std::vector<std::string> class_order = {});
// Probabilities (N, K) -> argmax predictions -> every metric.
MetricReport full_report(std::span<const int> y_true, const Tensor& y_prob, std::vector<std::string> class_order = {});

// Published headline values that the standard MCC, kappa and CSI formulas
// do not reproduce from the published confusion matrix; carried in every
// metrics.json so downstream readers see the divergence.
nlohmann::json published_divergence();

}  // namespace tumorbench::metrics

#endif  // TUMORBENCH_METRICS_HPP_
