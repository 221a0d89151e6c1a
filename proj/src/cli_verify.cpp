// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "magnorm/cli.hpp"
#include "magnorm/diagnostics.hpp"
#include "magnorm/grad.hpp"
#include "magnorm/objective.hpp"

namespace magnorm::cli {

namespace {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  int dim(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  // Random direction scaled to a magnitude drawn log-uniformly in [lo, hi].
  Embedding embedding(int n, double lo, double hi) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = g(rng_);
    const double mag = std::exp(uniform(std::log(lo), std::log(hi)));
    return Embedding(Vector(v * (mag / v.norm())));
  }

 private:
  std::mt19937_64 rng_;
};

SuiteResult finish(std::string name, long trials, double max_error, double tol) {
  return {std::move(name), trials, max_error, tol, max_error <= tol};
}

std::vector<SuiteResult> ranking_suites(int trials, std::uint64_t seed) {
  const EquivalenceVerdict v = verify_ranking_equivalence(trials, seed);
  return {finish("ranking_corners", trials, v.corner_failures, 0.0),
          finish("ranking_gamma_q", trials, v.gamma_q_failures, 0.0)};
}

SuiteResult corner_suite(int trials, std::uint64_t seed) {
  Sampler s(seed + 1);
  const std::pair<GammaPair, SimilarityKind> corners[] = {
      {{1.0, 1.0}, SimilarityKind::cosine()},
      {{0.0, 0.0}, SimilarityKind::dot()},
      {{1.0, 0.0}, SimilarityKind::qnorm()},
      {{0.0, 1.0}, SimilarityKind::dnorm()},
  };
  double worst = 0.0;
  const long pairs = 10L * trials;
  for (long t = 0; t < pairs; ++t) {
    const int n = s.dim(2, 16);
    const Embedding q = s.embedding(n, 0.1, 10.0);
    const Embedding d = s.embedding(n, 0.1, 10.0);
    for (const auto& [g, kind] : corners) {
      worst = std::max(worst, std::abs(similarity(SimilarityKind::learnable(g), q, d) - similarity(kind, q, d)));
    }
  }
  return finish("corner_degeneracy", pairs, worst, 1e-12);
}

std::vector<SuiteResult> symmetry_suites(int trials, std::uint64_t seed) {
  Sampler s(seed + 2);
  double exact = 0.0;
  double qnorm = 0.0;
  const long pairs = 10L * trials;
  for (long t = 0; t < pairs; ++t) {
    const int n = s.dim(2, 16);
    const Embedding a = s.embedding(n, 0.5, 2.0);
    const Embedding b = s.embedding(n, 0.5, 2.0);
    for (const auto& kind : {SimilarityKind::cosine(), SimilarityKind::dot()}) {
      exact = std::max(exact, std::abs(similarity(kind, a, b) - similarity(kind, b, a)));
    }
    const auto dec = decompose(a, b);
    const double asym = similarity(SimilarityKind::qnorm(), a, b) - similarity(SimilarityKind::qnorm(), b, a);
    qnorm = std::max(qnorm, std::abs(asym - (dec.norm_d - dec.norm_q) * dec.cos_theta));
  }
  return {finish("symmetry_exact", pairs, exact, 0.0), finish("qnorm_asymmetry", pairs, qnorm, 1e-12)};
}

std::vector<SuiteResult> jacobian_suites(int trials, std::uint64_t seed) {
  Sampler s(seed + 3);
  double idempotent = 0.0;
  double kernel = 0.0;
  double trace = 0.0;
  long count = 0;
  for (int n : {2, 8, 64}) {
    for (int t = 0; t < trials; ++t, ++count) {
      const Embedding v = s.embedding(n, 0.1, 10.0);
      const SquareMatrix p = tangent_projection(v);
      const Vector unit_v = v.values() / v.values().norm();
      idempotent = std::max(idempotent, (p * p - p).cwiseAbs().maxCoeff());
      kernel = std::max(kernel, (p * unit_v).norm());
      trace = std::max(trace, std::abs(p.trace() - (n - 1)));
    }
  }
  return {finish("projection_idempotent", count, idempotent, 1e-12),
          finish("projection_kernel", count, kernel, 1e-12), finish("projection_trace", count, trace, 1e-9)};
}

ContrastiveBatch random_batch(Sampler& s, int n, int b, double lo, double hi) {
  ContrastiveBatch batch;
  for (int i = 0; i < b; ++i) {
    batch.queries.push_back(s.embedding(n, lo, hi));
    batch.positives.push_back(s.embedding(n, lo, hi));
  }
  return batch;
}

SuiteResult radial_suite(int trials, std::uint64_t seed) {
  Sampler s(seed + 4);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto batch = random_batch(s, s.dim(2, 16), s.dim(2, 8), 0.1, 10.0);
    LossConfig cfg;
    cfg.kind = SimilarityKind::cosine();
    const auto g = infonce_grad(batch, cfg);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Vector& q = batch.queries[i].values();
      const double denom = g.d_queries[i].norm() * q.norm();
      if (denom > 0.0) worst = std::max(worst, std::abs(g.d_queries[i].dot(q)) / denom);
    }
  }
  return finish("radial_gradient", trials, worst, 1e-10);
}

SuiteResult gamma_suite(int trials, std::uint64_t seed) {
  Sampler s(seed + 5);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const int n = s.dim(2, 8);
    const Embedding q = s.embedding(n, 0.5, 2.0);
    const Embedding d = s.embedding(n, 0.5, 2.0);
    const GammaPair g{s.uniform(0.05, 0.95), s.uniform(0.05, 0.95)};
    const auto analytic = sim_grad(SimilarityKind::learnable(g), q, d);
    const auto f = [&](const Vector& x) {
      return similarity(SimilarityKind::learnable({x[0], x[1]}), q, d);
    };
    const Vector numeric = finite_difference(f, Vector{{g.q(), g.d()}});
    worst = std::max(worst, relative_error(*analytic.d_gamma_q, numeric[0]));
    worst = std::max(worst, relative_error(*analytic.d_gamma_d, numeric[1]));
  }
  return finish("gamma_gradient", trials, worst, 1e-6);
}

SuiteResult temperature_suite(int trials, std::uint64_t seed) {
  Sampler s(seed + 6);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const int n = s.dim(2, 16);
    const Embedding q = s.embedding(n, 0.5, 4.0);
    std::vector<Embedding> docs;
    const int k = s.dim(2, 16);
    for (int j = 0; j < k; ++j) docs.push_back(s.embedding(n, 0.5, 4.0));
    LossConfig dn;
    dn.kind = SimilarityKind::dnorm();
    dn.alpha = 1.0;
    dn.tau = s.uniform(0.05, 1.0);
    LossConfig cos = dn;
    cos.kind = SimilarityKind::cosine();
    cos.tau = effective_temperature(dn.kind, dn.tau, norm(q));
    const auto a = softmax_probs(q, docs, dn);
    const auto b = softmax_probs(q, docs, cos);
    for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, std::abs(a[j] - b[j]));
  }
  return finish("effective_temperature", trials, worst, 1e-12);
}

}  // namespace

std::vector<SuiteResult> run_property_suites(int trials, std::uint64_t seed) {
  std::vector<SuiteResult> out = ranking_suites(trials, seed);
  out.push_back(corner_suite(trials, seed));
  for (auto& r : symmetry_suites(trials, seed)) out.push_back(std::move(r));
  for (auto& r : jacobian_suites(trials, seed)) out.push_back(std::move(r));
  out.push_back(radial_suite(trials, seed));
  out.push_back(gamma_suite(trials, seed));
  out.push_back(temperature_suite(trials, seed));
  for (const auto& kind : {SimilarityKind::cosine(), SimilarityKind::dot(), SimilarityKind::qnorm(),
                           SimilarityKind::dnorm(), SimilarityKind::learnable({0.5, 0.5})}) {
    const auto report = gradcheck(kind, trials, seed, 1e-6);
    out.push_back(finish("gradcheck_" + kind.name(), trials, report.max_rel_err, report.tol));
  }
  return out;
}

void print_suite_table(std::ostream& out, const std::vector<SuiteResult>& results) {
  char line[160];
  std::snprintf(line, sizeof(line), "%-24s %8s %12s %10s  %s\n", "suite", "trials", "max_error", "tol", "status");
  out << line;
  for (const auto& r : results) {
    std::snprintf(line, sizeof(line), "%-24s %8ld %12.3e %10.1e  %s\n", r.name.c_str(), r.trials, r.max_error, r.tol,
                  r.pass ? "PASS" : "FAIL");
    out << line;
  }
}

}  // namespace magnorm::cli
