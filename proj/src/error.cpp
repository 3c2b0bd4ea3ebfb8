// Copyright 2026 The acmgnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "acmgnn/error.hpp"

namespace acmgnn {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::DuplicateEdge: return "DuplicateEdge";
    case ErrorKind::SelfLoopInInput: return "SelfLoopInInput";
    case ErrorKind::LambdaOutOfRange: return "LambdaOutOfRange";
    case ErrorKind::AttentionNotStatic: return "AttentionNotStatic";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::GraphNotConnected: return "GraphNotConnected";
    case ErrorKind::NearZeroVector: return "NearZeroVector";
    case ErrorKind::AtProjectionCenter: return "AtProjectionCenter";
    case ErrorKind::NotOnManifold: return "NotOnManifold";
    case ErrorKind::InvalidManifold: return "InvalidManifold";
    case ErrorKind::UnknownOp: return "UnknownOp";
    case ErrorKind::NonScalarLoss: return "NonScalarLoss";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SplitOverlap: return "SplitOverlap";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::InvalidProbability: return "InvalidProbability";
    case ErrorKind::IndivisibleBlocks: return "IndivisibleBlocks";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::LambdaOutOfRange:
    case ErrorKind::AttentionNotStatic:
    case ErrorKind::UnknownOp:
    case ErrorKind::InvalidManifold:
      return ErrorCategory::Config;
    case ErrorKind::NearZeroVector:
    case ErrorKind::AtProjectionCenter:
    case ErrorKind::NotOnManifold:
    case ErrorKind::NonScalarLoss:
    case ErrorKind::NonFiniteLoss:
      return ErrorCategory::Numerical;
    default:
      return ErrorCategory::Data;
  }
}

}  // namespace acmgnn
