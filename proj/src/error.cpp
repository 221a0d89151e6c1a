// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#include "magnorm/error.hpp"

namespace magnorm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kZeroMagnitude: return "ZeroMagnitude";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kDegenerateBatch: return "DegenerateBatch";
    case ErrorKind::kNonFiniteEvaluation: return "NonFiniteEvaluation";
    case ErrorKind::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::kInfeasibleSpec: return "InfeasibleSpec";
    case ErrorKind::kUnknownQuery: return "UnknownQuery";
    case ErrorKind::kDegenerateInput: return "DegenerateInput";
    case ErrorKind::kDegenerateVariance: return "DegenerateVariance";
    case ErrorKind::kTooFewSamples: return "TooFewSamples";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kParse: return "Parse";
    case ErrorKind::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace magnorm
