// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#include "magnorm/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "magnorm/error.hpp"

namespace magnorm {

void LossConfig::validate() const {
  if (!(tau > 0.0)) fail(ErrorKind::kInvalidArgument, "tau must be positive");
  if (!(alpha > 0.0)) fail(ErrorKind::kInvalidArgument, "alpha must be positive");
  if (!(lambda > 0.0)) fail(ErrorKind::kInvalidArgument, "lambda must be positive");
}

std::vector<const Embedding*> ContrastiveBatch::candidates(std::size_t i) const {
  std::vector<const Embedding*> out;
  if (in_batch()) {
    out.reserve(positives.size());
    for (const auto& p : positives) out.push_back(&p);
  } else {
    const auto& negs = (*negatives)[i];
    out.reserve(negs.size() + 1);
    out.push_back(&positives[i]);
    for (const auto& n : negs) out.push_back(&n);
  }
  return out;
}

void ContrastiveBatch::validate() const {
  if (queries.empty()) fail(ErrorKind::kDegenerateBatch, "batch is empty");
  if (queries.size() != positives.size()) {
    fail(ErrorKind::kDimensionMismatch, "queries and positives are not aligned");
  }
  const auto dim = queries.front().dim();
  auto check_dim = [dim](const Embedding& e) {
    if (e.dim() != dim) fail(ErrorKind::kDimensionMismatch, "batch embeddings differ in dimension");
  };
  for (const auto& e : queries) check_dim(e);
  for (const auto& e : positives) check_dim(e);
  if (in_batch()) {
    if (queries.size() < 2) {
      fail(ErrorKind::kDegenerateBatch, "in-batch negatives need at least 2 pairs");
    }
    return;
  }
  if (negatives->size() != queries.size()) {
    fail(ErrorKind::kDimensionMismatch, "one negative list per query is required");
  }
  for (std::size_t i = 0; i < negatives->size(); ++i) {
    if ((*negatives)[i].empty()) {
      fail(ErrorKind::kDegenerateBatch, "query " + std::to_string(i) + " has no negatives");
    }
    for (const auto& e : (*negatives)[i]) check_dim(e);
  }
}

namespace kernel {

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) fail(ErrorKind::kEmptyInput, "softmax over no logits");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    p[j] = std::exp(logits[j] - m);
    z += p[j];
  }
  for (double& v : p) v /= z;
  return p;
}

}  // namespace kernel

std::vector<double> softmax_probs(const Embedding& q, std::span<const Embedding> docs,
                                  const LossConfig& cfg) {
  cfg.validate();
  if (docs.empty()) fail(ErrorKind::kEmptyInput, "softmax_probs: no documents");
  std::vector<double> logits;
  logits.reserve(docs.size());
  for (const auto& d : docs) logits.push_back(cfg.alpha * similarity(cfg.kind, q, d) / cfg.tau);
  return kernel::softmax(logits);
}

double infonce_loss(const ContrastiveBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  batch.validate();
  double total = 0.0;
  std::vector<double> logits;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto cands = batch.candidates(i);
    logits.clear();
    for (const Embedding* d : cands) {
      logits.push_back(cfg.alpha * similarity(cfg.kind, batch.queries[i], *d) / cfg.tau);
    }
    // -log p_pos = logsumexp(logits) - logit_pos
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - m);
    total += m + std::log(z) - logits[batch.positive_index(i)];
  }
  return total / static_cast<double>(batch.size());
}

double mse_symmetric_loss(std::span<const SimilarityPair> pairs, const LossConfig& cfg) {
  cfg.validate();
  if (pairs.empty()) fail(ErrorKind::kEmptyInput, "mse_symmetric_loss: no pairs");
  double total = 0.0;
  for (const auto& p : pairs) {
    const double r = cfg.lambda * similarity(cfg.kind, p.a, p.b) - p.target;
    total += r * r;
  }
  return total / static_cast<double>(pairs.size());
}

double effective_temperature(const SimilarityKind& kind, double tau, double carrier_norm) {
  if (!(tau > 0.0)) fail(ErrorKind::kInvalidArgument, "tau must be positive");
  if (!(carrier_norm > 0.0)) fail(ErrorKind::kInvalidArgument, "carrier norm must be positive");
  switch (kind.tag()) {
    case SimilarityTag::kCosine: return tau;
    case SimilarityTag::kDot:
    case SimilarityTag::kDNorm:
    case SimilarityTag::kQNorm: return tau / carrier_norm;
    case SimilarityTag::kLearnable:
      return tau / kernel::norm_power(carrier_norm, 1.0 - kind.exponents().q());
  }
  return tau;
}

}  // namespace magnorm
