// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#include "magnorm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "magnorm/error.hpp"
#include "magnorm/model.hpp"

namespace magnorm {

namespace {

double mean(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sum_sq_dev(std::span<const double> xs, double m) {
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s;
}

}  // namespace

double cohens_d(const MagnitudeSample& sample) {
  const auto n1 = sample.relevant.size();
  const auto n2 = sample.irrelevant.size();
  if (n1 < 2 || n2 < 2) {
    fail(ErrorKind::kTooFewSamples, "cohens_d needs >= 2 per group (relevant " + std::to_string(n1) +
                                        ", irrelevant " + std::to_string(n2) + ")");
  }
  const double m1 = mean(sample.relevant);
  const double m2 = mean(sample.irrelevant);
  const double pooled = std::sqrt((sum_sq_dev(sample.relevant, m1) + sum_sq_dev(sample.irrelevant, m2)) /
                                  static_cast<double>(n1 + n2 - 2));
  if (!(pooled > 0.0)) {
    fail(ErrorKind::kDegenerateVariance, "pooled standard deviation is zero (relevant " + std::to_string(n1) +
                                             ", irrelevant " + std::to_string(n2) + ")");
  }
  return (m1 - m2) / pooled;
}

double cv(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::kEmptyInput, "cv of an empty list");
  const double m = mean(values);
  if (!(m > 0.0)) fail(ErrorKind::kInvalidArgument, "cv needs a positive mean");
  return std::sqrt(sum_sq_dev(values, m) / static_cast<double>(values.size())) / m;
}

std::vector<std::string> rank_documents(const SimilarityKind& kind, const Embedding& query,
                                        std::span<const std::pair<std::string, Embedding>> docs) {
  std::vector<std::pair<double, const std::string*>> scored;
  scored.reserve(docs.size());
  for (const auto& [id, doc] : docs) scored.emplace_back(similarity(kind, query, doc), &id);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  });
  std::vector<std::string> ids;
  ids.reserve(scored.size());
  for (const auto& s : scored) ids.push_back(*s.second);
  return ids;
}

namespace {

std::string describe(const char* what, const Embedding& q,
                     const std::vector<std::pair<std::string, Embedding>>& docs) {
  std::ostringstream os;
  os << std::setprecision(17) << what << ": q=[";
  for (Eigen::Index i = 0; i < q.dim(); ++i) os << (i ? "," : "") << q[i];
  os << "] docs=" << docs.size();
  return os.str();
}

}  // namespace

EquivalenceVerdict verify_ranking_equivalence(int trials, std::uint64_t seed, int dim, int n_docs) {
  if (trials < 1 || dim < 1 || n_docs < 1) {
    fail(ErrorKind::kInvalidArgument, "verify_ranking_equivalence: trials, dim and n_docs must be positive");
  }
  EquivalenceVerdict v;
  v.trials = trials;
  v.seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> log_mag(std::log(0.1), std::log(10.0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto random_embedding = [&] {
    Vector x(dim);
    for (int i = 0; i < dim; ++i) x[i] = normal(rng);
    const double n = x.norm();
    return Embedding(Vector(x * (std::exp(log_mag(rng)) / n)));
  };

  char name[16];
  for (int t = 0; t < trials; ++t) {
    const Embedding q = random_embedding();
    std::vector<std::pair<std::string, Embedding>> docs;
    for (int j = 0; j < n_docs; ++j) {
      std::snprintf(name, sizeof(name), "d%04d", j);
      docs.emplace_back(name, random_embedding());
    }
    const bool corners_ok =
        rank_documents(SimilarityKind::cosine(), q, docs) == rank_documents(SimilarityKind::dnorm(), q, docs) &&
        rank_documents(SimilarityKind::qnorm(), q, docs) == rank_documents(SimilarityKind::dot(), q, docs);
    if (!corners_ok) {
      ++v.corner_failures;
      if (!v.counterexample) v.counterexample = describe("corner", q, docs);
    }
    const double gd = unit(rng);
    const double g1 = unit(rng);
    double g2 = unit(rng);
    if (g2 == g1) g2 = 1.0 - g1;
    if (rank_documents(SimilarityKind::learnable({g1, gd}), q, docs) !=
        rank_documents(SimilarityKind::learnable({g2, gd}), q, docs)) {
      ++v.gamma_q_failures;
      if (!v.counterexample) v.counterexample = describe("gamma_q", q, docs);
    }
  }
  return v;
}

nlohmann::json to_json(const EquivalenceVerdict& v) {
  nlohmann::json j{{"trials", v.trials},
                   {"seed", v.seed},
                   {"corner_failures", v.corner_failures},
                   {"gamma_q_failures", v.gamma_q_failures},
                   {"pass", v.pass()}};
  if (v.counterexample) j["counterexample"] = *v.counterexample;
  return j;
}

namespace {

std::vector<double> norms(const Matrix& m) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m.row(i).norm();
  return out;
}

std::vector<double> split_query_norms(const TwoTowerEncoder& encoder, const SyntheticTask& task,
                                      Split split) {
  const auto& ids = task.splits.of(split);
  if (ids.empty()) fail(ErrorKind::kEmptyInput, std::string("split '") + std::string(split_name(split)) + "' is empty");
  Matrix f(static_cast<Eigen::Index>(ids.size()), task.feature_dim());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    f.row(static_cast<Eigen::Index>(i)) = task.query_features.row(static_cast<Eigen::Index>(ids[i]));
  }
  return norms(encoder.forward_batch(f, Tower::kQuery));
}

}  // namespace

MagnitudeSample relevance_magnitudes(const TwoTowerEncoder& encoder, const SyntheticTask& task,
                                     Split split) {
  const auto& ids = task.splits.of(split);
  if (ids.empty()) fail(ErrorKind::kEmptyInput, std::string("split '") + std::string(split_name(split)) + "' is empty");
  std::vector<bool> relevant(task.n_docs(), false);
  for (std::size_t q : ids) {
    for (const auto& [d, grade] : task.qrels[q]) {
      if (grade >= 1) relevant[d] = true;
    }
  }
  const auto mags = norms(encoder.forward_batch(task.doc_features, Tower::kDoc));
  MagnitudeSample s;
  for (std::size_t d = 0; d < mags.size(); ++d) (relevant[d] ? s.relevant : s.irrelevant).push_back(mags[d]);
  return s;
}

DiagnosticsReport magnitude_report(const TwoTowerEncoder& encoder, const SyntheticTask& task,
                                   const SimilarityKind& kind, Split split) {
  const MagnitudeSample s = relevance_magnitudes(encoder, task, split);
  DiagnosticsReport r;
  r.split = std::string(split_name(split));
  r.kind = kind.name();
  r.cohens_d = cohens_d(s);
  r.n_rel = s.relevant.size();
  r.n_irrel = s.irrelevant.size();
  r.query_cv = cv(split_query_norms(encoder, task, split));
  r.doc_cv = cv(norms(encoder.forward_batch(task.doc_features, Tower::kDoc)));
  return r;
}

double delta_cv(const TwoTowerEncoder& dnorm, const TwoTowerEncoder& dot, const SyntheticTask& task,
                Split split) {
  const double denom = cv(split_query_norms(dot, task, split));
  if (!(denom > 0.0)) fail(ErrorKind::kDegenerateVariance, "Dot query magnitudes have zero CV");
  return cv(split_query_norms(dnorm, task, split)) / denom;
}

nlohmann::json to_json(const DiagnosticsReport& r) {
  nlohmann::json j{{"split", r.split},       {"kind", r.kind},       {"cohens_d", r.cohens_d},
                   {"n_rel", r.n_rel},       {"n_irrel", r.n_irrel}, {"query_cv", r.query_cv},
                   {"doc_cv", r.doc_cv}};
  if (r.delta_cv) j["delta_cv"] = *r.delta_cv;
  return j;
}

void write_diagnostics_csv(std::ostream& out, std::span<const DiagnosticsReport> reports) {
  std::ostringstream buf;
  buf << std::setprecision(17) << "split,kind,cohens_d,n_rel,n_irrel,query_cv,doc_cv\n";
  for (const auto& r : reports) {
    buf << r.split << ',' << r.kind << ',' << r.cohens_d << ',' << r.n_rel << ',' << r.n_irrel << ','
        << r.query_cv << ',' << r.doc_cv << '\n';
  }
  out << buf.str();
}

}  // namespace magnorm
