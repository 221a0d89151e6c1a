// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#ifndef MAGNORM_ERROR_HPP_
#define MAGNORM_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace magnorm {

enum class ErrorKind {
  kInvalidArgument,
  kZeroMagnitude,
  kDimensionMismatch,
  kDegenerateBatch,
  kNonFiniteEvaluation,
  kNonFiniteLoss,
  kInfeasibleSpec,
  kUnknownQuery,
  kDegenerateInput,
  kDegenerateVariance,
  kTooFewSamples,
  kEmptyInput,
  kParse,
  kIo,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

}  // namespace magnorm

#endif  // MAGNORM_ERROR_HPP_
