// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#include "magnorm/simcore.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "magnorm/error.hpp"

namespace magnorm {

Embedding::Embedding(Vector values) : values_(std::move(values)) {
  if (values_.size() < 1) fail(ErrorKind::kInvalidArgument, "embedding dimension must be >= 1");
  if (!values_.allFinite()) fail(ErrorKind::kInvalidArgument, "embedding has non-finite entries");
}

Embedding::Embedding(std::initializer_list<double> values)
    : Embedding(Eigen::Map<const Vector>(values.begin(),
                                         static_cast<Eigen::Index>(values.size()))) {}

GammaPair::GammaPair(double gamma_q, double gamma_d) : gamma_q_(gamma_q), gamma_d_(gamma_d) {
  auto in_unit = [](double g) { return g >= 0.0 && g <= 1.0; };
  if (!in_unit(gamma_q) || !in_unit(gamma_d)) {
    fail(ErrorKind::kInvalidArgument, "gamma values must lie in [0, 1]");
  }
}

SimilarityKind SimilarityKind::parse(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "cosine" || lower == "cos") return cosine();
  if (lower == "dot") return dot();
  if (lower == "qnorm") return qnorm();
  if (lower == "dnorm") return dnorm();
  if (lower == "learnable" || lower == "learn") return learnable(GammaPair(0.5, 0.5));
  fail(ErrorKind::kInvalidArgument, "unknown similarity kind '" + std::string(name) + "'");
}

GammaPair SimilarityKind::exponents() const {
  switch (tag_) {
    case SimilarityTag::kCosine: return {1.0, 1.0};
    case SimilarityTag::kDot: return {0.0, 0.0};
    case SimilarityTag::kQNorm: return {1.0, 0.0};
    case SimilarityTag::kDNorm: return {0.0, 1.0};
    case SimilarityTag::kLearnable: return *gammas_;
  }
  return {0.0, 0.0};
}

std::string SimilarityKind::name() const {
  switch (tag_) {
    case SimilarityTag::kCosine: return "cosine";
    case SimilarityTag::kDot: return "dot";
    case SimilarityTag::kQNorm: return "qnorm";
    case SimilarityTag::kDNorm: return "dnorm";
    case SimilarityTag::kLearnable: return "learnable";
  }
  return "unknown";
}

double norm(const Embedding& v) { return v.values().norm(); }

Decomposition decompose(const Embedding& q, const Embedding& d) {
  if (q.dim() != d.dim()) fail(ErrorKind::kDimensionMismatch, "decompose: dims differ");
  const double nq = norm(q);
  const double nd = norm(d);
  if (nq == 0.0 || nd == 0.0) fail(ErrorKind::kZeroMagnitude, "decompose: zero vector");
  const double c = q.values().dot(d.values()) / (nq * nd);
  return {nq, nd, std::clamp(c, -1.0, 1.0)};
}

double similarity(const SimilarityKind& kind, const Embedding& q, const Embedding& d) {
  return kernel::similarity(kind, q.values(), d.values());
}

double scaled_logit(const SimilarityKind& kind, const Embedding& q, const Embedding& d,
                    double alpha) {
  if (!(alpha > 0.0)) fail(ErrorKind::kInvalidArgument, "alpha must be positive");
  return alpha * similarity(kind, q, d);
}

namespace kernel {

double norm_power(double norm, double gamma) {
  if (gamma == 0.0) return 1.0;
  if (gamma == 1.0) return norm;
  return std::pow(norm, gamma);
}

double similarity(const SimilarityKind& kind, const Vector& q, const Vector& d) {
  if (q.size() != d.size()) fail(ErrorKind::kDimensionMismatch, "similarity: dims differ");
  const GammaPair g = kind.exponents();
  const double dot = q.dot(d);
  if (g.q() == 0.0 && g.d() == 0.0) return dot;
  double scale_q = 1.0;
  double scale_d = 1.0;
  if (g.q() > 0.0) {
    const double nq = q.norm();
    if (nq == 0.0) fail(ErrorKind::kZeroMagnitude, kind.name() + ": query has zero norm");
    scale_q = norm_power(nq, g.q());
  }
  if (g.d() > 0.0) {
    const double nd = d.norm();
    if (nd == 0.0) fail(ErrorKind::kZeroMagnitude, kind.name() + ": document has zero norm");
    scale_d = norm_power(nd, g.d());
  }
  return dot / (scale_q * scale_d);
}

}  // namespace kernel

}  // namespace magnorm
