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

#include "tumorbench/metrics.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "tumorbench/data_ingest.hpp"
#include "tumorbench/error.hpp"

namespace tumorbench::metrics {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio(double num, double den, const char* metric, int cls, Warnings* warnings) {
  if (den == 0.0) {
    if (warnings != nullptr)
      warnings->push_back({metric, cls, fmt::format("{} undefined (0/0) for class {}; using 0", metric, cls)});
    return 0.0;
  }
  return num / den;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double binary_mcc(const ClassStats& s, int cls, Warnings* warnings) {
  const auto tp = static_cast<double>(s.tp), fp = static_cast<double>(s.fp);
  const auto fn = static_cast<double>(s.fn), tn = static_cast<double>(s.tn);
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  return ratio(tp * tn - fp * fn, std::sqrt(den), "mcc", cls, warnings);
}

double binary_kappa(const ClassStats& s, int cls, Warnings* warnings) {
  const auto tp = static_cast<double>(s.tp), fp = static_cast<double>(s.fp);
  const auto fn = static_cast<double>(s.fn), tn = static_cast<double>(s.tn);
  const double n = tp + fp + fn + tn;
  if (n == 0.0) return ratio(0.0, 0.0, "kappa", cls, warnings);
  const double po = (tp + tn) / n;
  const double pe = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (n * n);
  return ratio(po - pe, 1.0 - pe, "kappa", cls, warnings);
}

void check_labels(std::span<const int> y_true, std::span<const int> y_pred, int k) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorKind::kLengthMismatch,
                fmt::format("{} true labels vs {} predictions", y_true.size(), y_pred.size()));
  }
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    for (const int v : {y_true[i], y_pred[i]}) {
      if (v < 0 || v >= k)
        throw Error(ErrorKind::kLabelOutOfRange, fmt::format("label {} at position {} outside [0, {})", v, i, k));
    }
  }
}

}  // namespace

std::int64_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t t = 0;
  for (int i = 0; i < k; ++i) t += at(i, i);
  return t;
}

std::int64_t ConfusionMatrix::row_sum(int actual) const {
  std::int64_t s = 0;
  for (int j = 0; j < k; ++j) s += at(actual, j);
  return s;
}

std::int64_t ConfusionMatrix::col_sum(int predicted) const {
  std::int64_t s = 0;
  for (int i = 0; i < k; ++i) s += at(i, predicted);
  return s;
}

std::vector<std::string> default_class_order(int k) {
  std::vector<std::string> names;
  for (int i = 0; i < k; ++i)
    names.emplace_back(i < kNumClasses ? std::string(class_name(class_from_index(i))) : fmt::format("class_{}", i));
  return names;
}

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, int k) {
  if (k < 1) throw Error(ErrorKind::kShapeError, "confusion matrix needs at least one class");
  check_labels(y_true, y_pred, k);
  ConfusionMatrix cm{k, std::vector<std::int64_t>(static_cast<std::size_t>(k * k), 0), default_class_order(k)};
  for (std::size_t i = 0; i < y_true.size(); ++i) ++cm.counts[static_cast<std::size_t>(y_true[i] * k + y_pred[i])];
  return cm;
}

ConfusionMatrix confusion_from_counts(int k, std::vector<std::int64_t> counts) {
  if (k < 1 || counts.size() != static_cast<std::size_t>(k * k))
    throw Error(ErrorKind::kShapeError, fmt::format("{} counts do not form a {}x{} matrix", counts.size(), k, k));
  for (const auto c : counts)
    if (c < 0) throw Error(ErrorKind::kShapeError, "confusion counts must be non-negative");
  return {k, std::move(counts), default_class_order(k)};
}

std::vector<ClassStats> class_stats(const ConfusionMatrix& cm) {
  const std::int64_t n = cm.total();
  std::vector<ClassStats> out(static_cast<std::size_t>(cm.k));
  for (int c = 0; c < cm.k; ++c) {
    ClassStats& s = out[static_cast<std::size_t>(c)];
    s.tp = cm.at(c, c);
    s.fp = cm.col_sum(c) - s.tp;
    s.fn = cm.row_sum(c) - s.tp;
    s.tn = n - s.tp - s.fp - s.fn;
  }
  return out;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::int64_t n = cm.total();
  if (n == 0) throw Error(ErrorKind::kEmptyMatrix, "accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(n);
}

std::vector<double> precision_per_class(const ConfusionMatrix& cm, Warnings* warnings) {
  std::vector<double> out;
  int c = 0;
  for (const auto& s : class_stats(cm))
    out.push_back(ratio(static_cast<double>(s.tp), static_cast<double>(s.tp + s.fp), "precision", c++, warnings));
  return out;
}

std::vector<double> recall_per_class(const ConfusionMatrix& cm, Warnings* warnings) {
  std::vector<double> out;
  int c = 0;
  for (const auto& s : class_stats(cm))
    out.push_back(ratio(static_cast<double>(s.tp), static_cast<double>(s.tp + s.fn), "recall", c++, warnings));
  return out;
}

std::vector<double> f1_per_class(const ConfusionMatrix& cm, Warnings* warnings) {
  // 2PR / (P + R) written as 2TP / (2TP + FP + FN): identical where both are
  // defined, and free of the intermediate 0/0 terms.
  std::vector<double> out;
  int c = 0;
  for (const auto& s : class_stats(cm)) {
    out.push_back(ratio(2.0 * static_cast<double>(s.tp), static_cast<double>(2 * s.tp + s.fp + s.fn), "f1", c++,
                        warnings));
  }
  return out;
}

std::vector<double> csi_per_class(const ConfusionMatrix& cm, Warnings* warnings) {
  std::vector<double> out;
  int c = 0;
  for (const auto& s : class_stats(cm))
    out.push_back(ratio(static_cast<double>(s.tp), static_cast<double>(s.tp + s.fp + s.fn), "csi", c++, warnings));
  return out;
}

double macro_precision(const ConfusionMatrix& cm, Warnings* warnings) { return mean(precision_per_class(cm, warnings)); }
double macro_recall(const ConfusionMatrix& cm, Warnings* warnings) { return mean(recall_per_class(cm, warnings)); }
double macro_f1(const ConfusionMatrix& cm, Warnings* warnings) { return mean(f1_per_class(cm, warnings)); }
double csi(const ConfusionMatrix& cm, Warnings* warnings) { return mean(csi_per_class(cm, warnings)); }

ErrorMetrics error_metrics(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorKind::kLengthMismatch,
                fmt::format("{} true labels vs {} predictions", y_true.size(), y_pred.size()));
  }
  if (y_true.empty()) throw Error(ErrorKind::kEmptyInput, "error metrics over zero samples");
  std::int64_t wrong = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) wrong += y_true[i] != y_pred[i] ? 1 : 0;
  const double m = static_cast<double>(wrong) / static_cast<double>(y_true.size());
  return {m, m, std::sqrt(m)};
}

ErrorMetrics error_metrics(const ConfusionMatrix& cm) {
  const std::int64_t n = cm.total();
  if (n == 0) throw Error(ErrorKind::kEmptyInput, "error metrics over zero samples");
  const double m = static_cast<double>(n - cm.trace()) / static_cast<double>(n);
  return {m, m, std::sqrt(m)};
}

std::string_view variant_name(Variant v) { return v == Variant::kMulticlass ? "multiclass" : "macro_binary"; }

std::vector<double> mcc_per_class(const ConfusionMatrix& cm, Warnings* warnings) {
  std::vector<double> out;
  int c = 0;
  for (const auto& s : class_stats(cm)) out.push_back(binary_mcc(s, c++, warnings));
  return out;
}

double mcc(const ConfusionMatrix& cm, Variant variant, Warnings* warnings) {
  if (variant == Variant::kMacroBinary) return mean(mcc_per_class(cm, warnings));
  const auto s = static_cast<double>(cm.total()), c = static_cast<double>(cm.trace());
  double pt = 0.0, pp = 0.0, tt = 0.0;
  for (int k = 0; k < cm.k; ++k) {
    const auto p = static_cast<double>(cm.col_sum(k)), t = static_cast<double>(cm.row_sum(k));
    pt += p * t;
    pp += p * p;
    tt += t * t;
  }
  const double den = std::sqrt((s * s - pp) * (s * s - tt));
  return ratio(c * s - pt, den, "mcc", -1, warnings);
}

std::vector<double> kappa_per_class(const ConfusionMatrix& cm, Warnings* warnings) {
  std::vector<double> out;
  int c = 0;
  for (const auto& s : class_stats(cm)) out.push_back(binary_kappa(s, c++, warnings));
  return out;
}

double kappa(const ConfusionMatrix& cm, Variant variant, Warnings* warnings) {
  if (variant == Variant::kMacroBinary) return mean(kappa_per_class(cm, warnings));
  const auto n = static_cast<double>(cm.total());
  if (n == 0.0) throw Error(ErrorKind::kEmptyMatrix, "kappa of an empty confusion matrix");
  const double po = static_cast<double>(cm.trace()) / n;
  double pe = 0.0;
  for (int k = 0; k < cm.k; ++k) pe += static_cast<double>(cm.row_sum(k)) * static_cast<double>(cm.col_sum(k));
  pe /= n * n;
  if (pe == 1.0) throw Error(ErrorKind::kDegenerateMarginals, "chance agreement is 1; kappa is undefined");
  return (po - pe) / (1.0 - pe);
}

std::vector<int> argmax_rows(const Tensor& probs) {
  if (probs.rank() != 2) throw Error(ErrorKind::kShapeError, "argmax expects (N, K) probabilities");
  const std::int64_t n = probs.dim(0), k = probs.dim(1);
  std::vector<int> out(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const float* row = probs.data() + i * k;
    int best = 0;
    for (int j = 1; j < k; ++j)
      if (row[j] > row[best]) best = j;
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

MetricReport report_from_labels(std::span<const int> y_true, std::span<const int> y_pred, int k,
                                std::vector<std::string> class_order) {
  MetricReport r;
  r.confusion = confusion_matrix(y_true, y_pred, k);
  if (!class_order.empty()) {
    if (static_cast<int>(class_order.size()) != k)
      throw Error(ErrorKind::kShapeError, fmt::format("{} class names for {} classes", class_order.size(), k));
    r.confusion.class_order = std::move(class_order);
  }
  const ConfusionMatrix& cm = r.confusion;
  r.n = cm.total();
  r.accuracy = accuracy(cm);
  Warnings& w = r.warnings;
  const auto precision = precision_per_class(cm, &w);
  const auto recall = recall_per_class(cm, &w);
  const auto f1 = f1_per_class(cm, &w);
  const auto csis = csi_per_class(cm, &w);
  const auto mccs = mcc_per_class(cm, &w);
  const auto kappas = kappa_per_class(cm, &w);
  r.macro_precision = mean(precision);
  r.macro_recall = mean(recall);
  r.macro_f1 = mean(f1);
  r.csi_macro = mean(csis);
  r.mcc_macro_binary = mean(mccs);
  r.kappa_macro_binary = mean(kappas);
  r.mcc_multiclass = mcc(cm, Variant::kMulticlass, &w);
  try {
    r.kappa_multiclass = kappa(cm, Variant::kMulticlass);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kDegenerateMarginals) throw;
    r.kappa_multiclass = kNaN;
    w.push_back({"kappa", -1, "chance agreement is 1; multiclass kappa is undefined"});
  }
  const ErrorMetrics err = error_metrics(cm);
  r.mae = err.mae;
  r.mse = err.mse;
  r.rmse = err.rmse;
  const auto stats = class_stats(cm);
  for (int c = 0; c < k; ++c) {
    const auto i = static_cast<std::size_t>(c);
    r.per_class.push_back({cm.class_order[i], stats[i], precision[i], recall[i], f1[i], csis[i], mccs[i], kappas[i]});
  }
  return r;
}

MetricReport full_report(std::span<const int> y_true, const Tensor& y_prob, std::vector<std::string> class_order) {
  const std::vector<int> pred = argmax_rows(y_prob);
  return report_from_labels(y_true, pred, static_cast<int>(y_prob.dim(1)), std::move(class_order));
}

nlohmann::json MetricReport::to_json() const {
  using nlohmann::json;
  json confusion_rows = json::array();
  for (int i = 0; i < confusion.k; ++i) {
    json row = json::array();
    for (int j = 0; j < confusion.k; ++j) row.push_back(confusion.at(i, j));
    confusion_rows.push_back(row);
  }
  json per = json::object();
  for (const auto& p : per_class) {
    per[p.name] = {{"tp", p.stats.tp},   {"fp", p.stats.fp},       {"fn", p.stats.fn}, {"tn", p.stats.tn},
                   {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},       {"csi", p.csi},
                   {"mcc", p.mcc},       {"kappa", p.kappa}};
  }
  json warn = json::array();
  for (const auto& w : warnings) warn.push_back({{"metric", w.metric}, {"class_index", w.class_index}, {"message", w.message}});
  return {{"n", n},
          {"class_order", confusion.class_order},
          {"confusion", confusion_rows},
          {"accuracy", accuracy},
          {"precision_macro", macro_precision},
          {"recall_macro", macro_recall},
          {"f1_macro", macro_f1},
          {"mae", mae},
          {"mse", mse},
          {"rmse", rmse},
          {"mcc", {{"macro_binary", mcc_macro_binary}, {"multiclass", mcc_multiclass}}},
          {"kappa", {{"macro_binary", kappa_macro_binary}, {"multiclass", kappa_multiclass}}},
          {"csi_macro", csi_macro},
          {"per_class", per},
          {"variants", {{"mcc", variant_name(mcc_variant)}, {"kappa", variant_name(kappa_variant)}, {"csi", "macro"}}},
          {"warnings", warn},
          {"published_divergence", published_divergence()}};
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  const auto num = [](const nlohmann::json& v) { return v.is_null() ? kNaN : v.get<double>(); };
  try {
    MetricReport r;
    r.n = j.at("n").get<std::int64_t>();
    const auto& rows = j.at("confusion");
    const int k = static_cast<int>(rows.size());
    std::vector<std::int64_t> counts;
    for (const auto& row : rows)
      for (const auto& v : row) counts.push_back(v.get<std::int64_t>());
    r.confusion = confusion_from_counts(k, std::move(counts));
    if (j.contains("class_order")) r.confusion.class_order = j["class_order"].get<std::vector<std::string>>();
    r.accuracy = num(j.at("accuracy"));
    r.macro_precision = num(j.at("precision_macro"));
    r.macro_recall = num(j.at("recall_macro"));
    r.macro_f1 = num(j.at("f1_macro"));
    r.mae = num(j.at("mae"));
    r.mse = num(j.at("mse"));
    r.rmse = num(j.at("rmse"));
    r.mcc_macro_binary = num(j.at("mcc").at("macro_binary"));
    r.mcc_multiclass = num(j.at("mcc").at("multiclass"));
    r.kappa_macro_binary = num(j.at("kappa").at("macro_binary"));
    r.kappa_multiclass = num(j.at("kappa").at("multiclass"));
    r.csi_macro = num(j.at("csi_macro"));
    if (j.contains("variants")) {
      const auto& v = j["variants"];
      r.mcc_variant = v.value("mcc", "multiclass") == "multiclass" ? Variant::kMulticlass : Variant::kMacroBinary;
      r.kappa_variant = v.value("kappa", "multiclass") == "multiclass" ? Variant::kMulticlass : Variant::kMacroBinary;
    }
    if (j.contains("per_class")) {
      for (const auto& name : r.confusion.class_order) {
        if (!j["per_class"].contains(name)) continue;
        const auto& p = j["per_class"][name];
        PerClassMetrics m;
        m.name = name;
        m.stats = {p.at("tp").get<std::int64_t>(), p.at("fp").get<std::int64_t>(), p.at("fn").get<std::int64_t>(),
                   p.at("tn").get<std::int64_t>()};
        m.precision = num(p.at("precision"));
        m.recall = num(p.at("recall"));
        m.f1 = num(p.at("f1"));
        m.csi = num(p.at("csi"));
        m.mcc = num(p.at("mcc"));
        m.kappa = num(p.at("kappa"));
        r.per_class.push_back(m);
      }
    }
    if (j.contains("warnings")) {
      for (const auto& w : j["warnings"])
        r.warnings.push_back({w.value("metric", ""), w.value("class_index", -1), w.value("message", "")});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMissingMetrics, fmt::format("malformed metrics: {}", e.what()));
  }
}

nlohmann::json published_divergence() {
  // ResNet50V2 test confusion (rows actual meningioma, glioma, pituitary),
  // recovered from the published percentages over 312 images.
  const ConfusionMatrix cm = confusion_from_counts(3, {65, 0, 0, 1, 151, 0, 0, 0, 95});
  return {{"not_reproduced", true},
          {"model", "resnet50v2"},
          {"published", {{"mcc", 0.9969}, {"kappa", 0.9967}, {"csi", 0.9968}}},
          {"standard_formulas_on_published_confusion",
           {{"mcc_multiclass", mcc(cm, Variant::kMulticlass)},
            {"mcc_macro_binary", mcc(cm, Variant::kMacroBinary)},
            {"kappa_multiclass", kappa(cm, Variant::kMulticlass)},
            {"kappa_macro_binary", kappa(cm, Variant::kMacroBinary)},
            {"csi_macro", csi(cm)}}},
          {"note",
           "the published MCC, kappa and CSI are not reproduced by their stated formulas under macro, pooled or "
           "multiclass aggregation; reported values use the standard formulas"}};
}

}  // namespace tumorbench::metrics
