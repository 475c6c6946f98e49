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

#include "tumorbench/error.hpp"

namespace tumorbench {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMissingField: return "MissingField";
    case ErrorKind::kInvalidLabel: return "InvalidLabel";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kEmptyDataset: return "EmptyDataset";
    case ErrorKind::kInvalidSpec: return "InvalidSpec";
    case ErrorKind::kCountOverflow: return "CountOverflow";
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kInvalidSize: return "InvalidSize";
    case ErrorKind::kUnknownBackbone: return "UnknownBackbone";
    case ErrorKind::kWeightsUnavailable: return "WeightsUnavailable";
    case ErrorKind::kShapeIncompatible: return "ShapeIncompatible";
    case ErrorKind::kShapeError: return "ShapeError";
    case ErrorKind::kCorruptArtifact: return "CorruptArtifact";
    case ErrorKind::kVersionMismatch: return "VersionMismatch";
    case ErrorKind::kEmptySplit: return "EmptySplit";
    case ErrorKind::kDivergedLoss: return "DivergedLoss";
    case ErrorKind::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kEmptyMatrix: return "EmptyMatrix";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kDegenerateMarginals: return "DegenerateMarginals";
    case ErrorKind::kMissingMetrics: return "MissingMetrics";
    case ErrorKind::kEmptyHistory: return "EmptyHistory";
    case ErrorKind::kUsage: return "UsageError";
    case ErrorKind::kConfig: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace tumorbench
