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

#ifndef TUMORBENCH_ERROR_HPP_
#define TUMORBENCH_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace tumorbench {

// Every failure the library reports carries one of these kinds so callers
// (and the CLI exit-code mapping) can branch without parsing messages.
enum class ErrorKind {
  // data_ingest
  kMissingField,
  kInvalidLabel,
  kShapeMismatch,
  kEmptyDataset,
  kInvalidSpec,
  kCountOverflow,
  kIo,
  // preprocess
  kInvalidSize,
  // model
  kUnknownBackbone,
  kWeightsUnavailable,
  kShapeIncompatible,
  kShapeError,
  kCorruptArtifact,
  kVersionMismatch,
  // train
  kEmptySplit,
  kDivergedLoss,
  // metrics
  kLabelOutOfRange,
  kLengthMismatch,
  kEmptyMatrix,
  kEmptyInput,
  kDegenerateMarginals,
  // report / cli
  kMissingMetrics,
  kEmptyHistory,
  kUsage,
  kConfig,
};

std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tumorbench

#endif  // TUMORBENCH_ERROR_HPP_
