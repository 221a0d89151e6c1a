// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#ifndef MAGNORM_CLI_HPP_
#define MAGNORM_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "magnorm/datagen.hpp"
#include "magnorm/model.hpp"
#include "magnorm/simcore.hpp"

namespace magnorm::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitPropertyFailure = 1,
  kExitConfigError = 2,
  kExitIoError = 3,
  kExitOverwriteRefused = 4,
  kExitNumericDivergence = 5,
  kExitDegenerateStatistics = 6,
};

struct ExperimentConfig {
  TaskSpec task = reference_task_spec();
  EncoderDims model;
  TrainConfig train;
  std::vector<SimilarityKind> kinds = {SimilarityKind::cosine(), SimilarityKind::dot(), SimilarityKind::qnorm(),
                                       SimilarityKind::dnorm(), SimilarityKind::learnable({0.5, 0.5})};
  std::vector<std::uint64_t> seeds = {0};
  std::optional<std::string> out;
};

// Parses a config document. Malformed JSON reports line and column; unknown
// keys and invalid values are errors.
ExperimentConfig parse_experiment_config(std::string_view text, const std::string& source = "config");
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Comma-separated kind names, e.g. "cosine,dot".
std::vector<SimilarityKind> parse_kind_list(std::string_view list);

// Directory name of one training run, e.g. "dnorm_seed0".
std::string run_name(const SimilarityKind& kind, std::uint64_t seed);

struct SuiteResult {
  std::string name;
  long trials = 0;
  double max_error = 0.0;
  double tol = 0.0;
  bool pass = false;
};

// The property suites behind `magnorm verify`.
std::vector<SuiteResult> run_property_suites(int trials, std::uint64_t seed);
void print_suite_table(std::ostream& out, const std::vector<SuiteResult>& results);

// Entry point shared by the binary and the tests; args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace magnorm::cli

#endif  // MAGNORM_CLI_HPP_
