// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#include "magnorm/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include "json_util.hpp"
#include "magnorm/error.hpp"

namespace magnorm {

namespace {

// Generator shape constants. Latents live on the unit sphere; spreads are
// relative to that scale.
constexpr double kClusterSpread = 0.5;   // doc latent around its center
constexpr double kQuerySpread = 0.35;    // query latent around its generating doc
constexpr int kMaxExtraPositives = 2;    // same-cluster grade-1 docs per query
constexpr int kHubTopics = 3;            // clusters a hub document blends
constexpr double kHubAngularDecay = 4.0; // link weight exp(kappa * cos)

Vector gaussian(std::mt19937_64& rng, Eigen::Index dim, double scale) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = g(rng);
  return v * scale;
}

Vector unit(const Vector& v) {
  const double n = v.norm();
  return n > 0.0 ? Vector(v / n) : v;
}

std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::string padded(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%06zu", prefix, i);
  return buf;
}

}  // namespace

std::string split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "unknown";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val" || name == "validation") return Split::kVal;
  if (name == "test") return Split::kTest;
  fail(ErrorKind::kInvalidArgument, "unknown split '" + std::string(name) + "'");
}

void TaskSpec::validate() const {
  if (n_docs < 1 || n_queries < 1 || feature_dim < 1 || n_clusters < 1) {
    fail(ErrorKind::kInvalidArgument, "task sizes must be positive");
  }
  if (n_clusters > n_docs) fail(ErrorKind::kInvalidArgument, "n_clusters exceeds n_docs");
  if (hub_fraction < 0.0 || hub_fraction > 1.0) {
    fail(ErrorKind::kInvalidArgument, "hub_fraction must lie in [0, 1]");
  }
  if (hub_multiplicity < 1) fail(ErrorKind::kInvalidArgument, "hub_multiplicity must be positive");
  if (noise_sigma < 0.0) fail(ErrorKind::kInvalidArgument, "noise_sigma must be nonnegative");
  const double parts[] = {splits.train, splits.val, splits.test};
  for (double f : parts) {
    if (f < 0.0 || f > 1.0) fail(ErrorKind::kInvalidArgument, "split fractions must lie in [0, 1]");
  }
  if (std::abs(splits.train + splits.val + splits.test - 1.0) > 1e-9) {
    fail(ErrorKind::kInvalidArgument, "split fractions must sum to 1");
  }
}

TaskSpec reference_task_spec() { return TaskSpec{}; }

const std::vector<std::size_t>& SplitViews::of(Split s) const {
  switch (s) {
    case Split::kTrain: return train;
    case Split::kVal: return val;
    case Split::kTest: return test;
  }
  return train;
}

std::vector<std::size_t>& SplitViews::of(Split s) {
  return const_cast<std::vector<std::size_t>&>(std::as_const(*this).of(s));
}

std::string SyntheticTask::doc_id(std::size_t i) { return padded('d', i); }
std::string SyntheticTask::query_id(std::size_t i) { return padded('q', i); }

Qrels SyntheticTask::to_qrels(std::span<const std::size_t> queries) const {
  Qrels out;
  auto add = [&](std::size_t q) {
    auto& row = out[query_id(q)];
    for (const auto& [d, grade] : qrels[q]) row[doc_id(d)] = grade;
  };
  if (queries.empty()) {
    for (std::size_t q = 0; q < qrels.size(); ++q) add(q);
  } else {
    for (std::size_t q : queries) add(q);
  }
  return out;
}

std::vector<int> relevance_counts(const std::vector<std::map<std::size_t, int>>& qrels,
                                  std::size_t n_docs) {
  std::vector<int> counts(n_docs, 0);
  for (const auto& row : qrels) {
    for (const auto& [d, grade] : row) {
      if (grade >= 1) ++counts.at(d);
    }
  }
  return counts;
}

SplitViews split(std::size_t n_queries, const SplitFractions& f, std::uint64_t seed) {
  const double total = f.train + f.val + f.test;
  if (f.train < 0 || f.val < 0 || f.test < 0 || std::abs(total - 1.0) > 1e-9) {
    fail(ErrorKind::kInvalidArgument, "split fractions must be nonnegative and sum to 1");
  }
  std::vector<std::size_t> order(n_queries);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n_queries; i > 1; --i) std::swap(order[i - 1], order[draw_index(rng, i)]);

  // Largest remainder; ties go to the earlier split.
  const double fr[3] = {f.train, f.val, f.test};
  std::size_t sizes[3];
  double rem[3];
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double exact = fr[s] * static_cast<double>(n_queries);
    sizes[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[s] = exact - static_cast<double>(sizes[s]);
    assigned += sizes[s];
  }
  while (assigned < n_queries) {
    int best = 0;
    for (int s = 1; s < 3; ++s) {
      if (rem[s] > rem[best]) best = s;
    }
    ++sizes[best];
    rem[best] = -1.0;
    ++assigned;
  }
  SplitViews views;
  auto first = order.begin();
  views.train.assign(first, first + static_cast<std::ptrdiff_t>(sizes[0]));
  first += static_cast<std::ptrdiff_t>(sizes[0]);
  views.val.assign(first, first + static_cast<std::ptrdiff_t>(sizes[1]));
  first += static_cast<std::ptrdiff_t>(sizes[1]);
  views.test.assign(first, order.end());
  for (auto* v : {&views.train, &views.val, &views.test}) std::sort(v->begin(), v->end());
  return views;
}

SplitViews split(const SyntheticTask& task, const SplitFractions& fractions, std::uint64_t seed) {
  return split(task.n_queries(), fractions, seed);
}

SyntheticTask gen_asymmetric(const TaskSpec& spec) {
  spec.validate();
  const auto n_docs = static_cast<std::size_t>(spec.n_docs);
  const auto n_queries = static_cast<std::size_t>(spec.n_queries);
  const Eigen::Index dim = spec.feature_dim;
  const auto n_hubs = static_cast<std::size_t>(std::llround(spec.hub_fraction * static_cast<double>(n_docs)));
  if (n_hubs > 0 && static_cast<std::size_t>(spec.hub_multiplicity) > n_queries) {
    fail(ErrorKind::kInfeasibleSpec, "hub_multiplicity exceeds n_queries");
  }

  std::mt19937_64 rng(spec.seed);
  const double per_coord = 1.0 / std::sqrt(static_cast<double>(dim));

  std::vector<Vector> centers;
  for (int c = 0; c < spec.n_clusters; ++c) centers.push_back(unit(gaussian(rng, dim, 1.0)));

  SyntheticTask task;
  task.doc_latent.resize(static_cast<Eigen::Index>(n_docs), dim);
  task.doc_features.resize(static_cast<Eigen::Index>(n_docs), dim);
  task.doc_cluster.resize(n_docs);
  task.is_hub.assign(n_docs, false);

  // Hub designation: a seeded partial shuffle picks n_hubs documents.
  {
    std::vector<std::size_t> ids(n_docs);
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t i = 0; i < n_hubs; ++i) std::swap(ids[i], ids[i + draw_index(rng, n_docs - i)]);
    for (std::size_t i = 0; i < n_hubs; ++i) task.is_hub[ids[i]] = true;
  }

  for (std::size_t i = 0; i < n_docs; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(spec.n_clusters));
    task.doc_cluster[i] = c;
    Vector latent = unit(centers[static_cast<std::size_t>(c)] + gaussian(rng, dim, kClusterSpread * per_coord));
    if (task.is_hub[i] && spec.n_clusters > 1) {
      // Broad documents: the own-topic latent plus other topic centers.
      Vector blend = latent;
      std::set<int> topics{c};
      const int want = std::min(kHubTopics, spec.n_clusters);
      while (static_cast<int>(topics.size()) < want) {
        const int t = static_cast<int>(draw_index(rng, static_cast<std::size_t>(spec.n_clusters)));
        if (topics.insert(t).second) blend += centers[static_cast<std::size_t>(t)];
      }
      latent = unit(blend);
    }
    task.doc_latent.row(static_cast<Eigen::Index>(i)) = latent.transpose();
    task.doc_features.row(static_cast<Eigen::Index>(i)) =
        (latent + gaussian(rng, dim, spec.noise_sigma * per_coord)).transpose();
  }

  task.query_latent.resize(static_cast<Eigen::Index>(n_queries), dim);
  task.query_features.resize(static_cast<Eigen::Index>(n_queries), dim);
  task.query_cluster.resize(n_queries);
  task.qrels.resize(n_queries);

  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(spec.n_clusters));
  for (std::size_t i = 0; i < n_docs; ++i) members[static_cast<std::size_t>(task.doc_cluster[i])].push_back(i);

  for (std::size_t q = 0; q < n_queries; ++q) {
    const std::size_t gen = draw_index(rng, n_docs);
    const int c = task.doc_cluster[gen];
    const Vector doc_lat = task.doc_latent.row(static_cast<Eigen::Index>(gen)).transpose();
    const Vector latent = unit(doc_lat + gaussian(rng, dim, kQuerySpread * per_coord));
    task.query_cluster[q] = c;
    task.query_latent.row(static_cast<Eigen::Index>(q)) = latent.transpose();
    task.query_features.row(static_cast<Eigen::Index>(q)) =
        (latent + gaussian(rng, dim, spec.noise_sigma * per_coord)).transpose();
    task.qrels[q][gen] = 2;

    const int extra = static_cast<int>(draw_index(rng, kMaxExtraPositives + 1));
    if (extra > 0) {
      std::vector<std::pair<double, std::size_t>> near;
      for (std::size_t d : members[static_cast<std::size_t>(c)]) {
        if (d == gen) continue;
        near.emplace_back(-latent.dot(task.doc_latent.row(static_cast<Eigen::Index>(d)).transpose()), d);
      }
      std::sort(near.begin(), near.end());
      for (int k = 0; k < extra && k < static_cast<int>(near.size()); ++k) task.qrels[q][near[static_cast<std::size_t>(k)].second] = 1;
    }
  }

  // Hub links: weighted sampling without replacement (exponential keys) over
  // queries from other clusters, weight exp(kappa * cos(query, hub)).
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t h = 0; h < n_docs; ++h) {
    if (!task.is_hub[h]) continue;
    const Vector hub = task.doc_latent.row(static_cast<Eigen::Index>(h)).transpose();
    std::vector<std::pair<double, std::size_t>> keys;
    for (std::size_t q = 0; q < n_queries; ++q) {
      const double r = u01(rng);
      if (task.query_cluster[q] == task.doc_cluster[h] && spec.n_clusters > 1) continue;
      if (task.qrels[q].count(h)) continue;
      const double w = std::exp(kHubAngularDecay * task.query_latent.row(static_cast<Eigen::Index>(q)).dot(hub.transpose()));
      keys.emplace_back(std::log(std::max(r, 1e-300)) / w, q);
    }
    if (keys.size() < static_cast<std::size_t>(spec.hub_multiplicity)) {
      fail(ErrorKind::kInfeasibleSpec, "not enough eligible queries for hub " + SyntheticTask::doc_id(h));
    }
    std::partial_sort(keys.begin(), keys.begin() + spec.hub_multiplicity, keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    for (int k = 0; k < spec.hub_multiplicity; ++k) task.qrels[keys[static_cast<std::size_t>(k)].second][h] = 1;
  }

  task.relevance_count = relevance_counts(task.qrels, n_docs);
  task.splits = split(n_queries, spec.splits, spec.seed ^ 0x5eed5eedULL);
  return task;
}

std::vector<SymmetricPair> gen_symmetric(const TaskSpec& spec) {
  spec.validate();
  const Eigen::Index dim = spec.feature_dim;
  if (dim < 2) fail(ErrorKind::kInvalidArgument, "symmetric pairs need feature_dim >= 2");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double per_coord = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<SymmetricPair> pairs;
  pairs.reserve(static_cast<std::size_t>(spec.n_queries));
  for (int i = 0; i < spec.n_queries; ++i) {
    const Vector a = unit(gaussian(rng, dim, 1.0));
    Vector perp = gaussian(rng, dim, 1.0);
    perp = unit(perp - perp.dot(a) * a);
    const double theta = M_PI * u01(rng);
    const Vector b = std::cos(theta) * a + std::sin(theta) * perp;
    const double mag_a = 0.5 + 1.5 * u01(rng);
    const double mag_b = 0.5 + 1.5 * u01(rng);
    Vector fa = mag_a * a + gaussian(rng, dim, spec.noise_sigma * per_coord);
    Vector fb = mag_b * b + gaussian(rng, dim, spec.noise_sigma * per_coord);
    const double target = std::clamp((1.0 + a.dot(b)) / 2.0, 0.0, 1.0);
    if (u01(rng) < 0.5) std::swap(fa, fb);
    pairs.push_back({std::move(fa), std::move(fb), target});
  }
  return pairs;
}

nlohmann::json to_json(const TaskSpec& s) {
  return {{"n_docs", s.n_docs},
          {"n_queries", s.n_queries},
          {"feature_dim", s.feature_dim},
          {"n_clusters", s.n_clusters},
          {"hub_fraction", s.hub_fraction},
          {"hub_multiplicity", s.hub_multiplicity},
          {"noise_sigma", s.noise_sigma},
          {"seed", s.seed},
          {"splits", {s.splits.train, s.splits.val, s.splits.test}}};
}

TaskSpec task_spec_from_json(const nlohmann::json& j) {
  TaskSpec s;
  detail::StrictObject o(j, "task");
  o.read("n_docs", s.n_docs);
  o.read("n_queries", s.n_queries);
  o.read("feature_dim", s.feature_dim);
  o.read("n_clusters", s.n_clusters);
  o.read("hub_fraction", s.hub_fraction);
  o.read("hub_multiplicity", s.hub_multiplicity);
  o.read("noise_sigma", s.noise_sigma);
  o.read("seed", s.seed);
  if (const auto* sp = o.child("splits")) {
    if (!sp->is_array() || sp->size() != 3) fail(ErrorKind::kParse, "task.splits: expected [train, val, test]");
    s.splits = {(*sp)[0].get<double>(), (*sp)[1].get<double>(), (*sp)[2].get<double>()};
  }
  o.finish();
  s.validate();
  return s;
}

namespace {

void write_rows_jsonl(const std::filesystem::path& path, const Matrix& rows,
                      std::string (*id)(std::size_t)) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    nlohmann::json rec;
    rec["id"] = id(static_cast<std::size_t>(i));
    rec["features"] = detail::vector_to_json(rows.row(i).transpose());
    out << rec.dump() << '\n';
  }
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

Matrix read_rows_jsonl(const std::filesystem::path& path, std::vector<std::string>& ids) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot read " + path.string());
  std::vector<Vector> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::kParse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!rec.contains("id") || !rec.contains("features")) {
      fail(ErrorKind::kParse, path.string() + ":" + std::to_string(lineno) + ": need id and features");
    }
    ids.push_back(rec["id"].get<std::string>());
    rows.push_back(detail::vector_from_json(rec["features"], path.string()));
    if (rows.back().size() != rows.front().size()) {
      fail(ErrorKind::kParse, path.string() + ":" + std::to_string(lineno) + ": inconsistent feature length");
    }
  }
  if (rows.empty()) fail(ErrorKind::kParse, path.string() + ": no records");
  Matrix m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return m;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

}  // namespace

bool task_exists(const std::filesystem::path& dir) {
  for (const char* f : {"corpus.jsonl", "queries.jsonl", "qrels.txt", "splits.json"}) {
    if (std::filesystem::exists(dir / f)) return true;
  }
  return false;
}

void write_task(const SyntheticTask& task, const TaskSpec& spec, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  write_rows_jsonl(dir / "corpus.jsonl", task.doc_features, &SyntheticTask::doc_id);
  write_rows_jsonl(dir / "queries.jsonl", task.query_features, &SyntheticTask::query_id);
  {
    std::ofstream out(dir / "qrels.txt");
    if (!out) fail(ErrorKind::kIo, "cannot write qrels.txt");
    write_qrels(out, task.to_qrels());
  }
  nlohmann::json splits;
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    std::vector<std::string> ids;
    for (std::size_t q : task.splits.of(s)) ids.push_back(SyntheticTask::query_id(q));
    splits[split_name(s)] = ids;
  }
  std::ofstream(dir / "splits.json") << splits.dump(1) << '\n';
  nlohmann::json meta;
  meta["spec"] = to_json(spec);
  std::vector<std::string> hubs;
  for (std::size_t i = 0; i < task.n_docs(); ++i) {
    if (task.is_hub[i]) hubs.push_back(SyntheticTask::doc_id(i));
  }
  meta["hub_docs"] = hubs;
  meta["doc_cluster"] = task.doc_cluster;
  meta["query_cluster"] = task.query_cluster;
  std::ofstream meta_out(dir / "task_meta.json");
  meta_out << meta.dump(1) << '\n';
  if (!meta_out) fail(ErrorKind::kIo, "cannot write task_meta.json");
}

SyntheticTask load_task(const std::filesystem::path& dir) {
  for (const char* f : {"corpus.jsonl", "queries.jsonl", "qrels.txt", "splits.json"}) {
    if (!std::filesystem::exists(dir / f)) fail(ErrorKind::kIo, "missing task file " + (dir / f).string());
  }
  SyntheticTask task;
  std::vector<std::string> doc_ids, query_ids;
  task.doc_features = read_rows_jsonl(dir / "corpus.jsonl", doc_ids);
  task.query_features = read_rows_jsonl(dir / "queries.jsonl", query_ids);
  if (task.doc_features.cols() != task.query_features.cols()) {
    fail(ErrorKind::kParse, "corpus and query feature lengths differ");
  }
  std::map<std::string, std::size_t> doc_index, query_index;
  for (std::size_t i = 0; i < doc_ids.size(); ++i) {
    if (doc_ids[i] != SyntheticTask::doc_id(i)) fail(ErrorKind::kParse, "corpus ids must be d000000.. in order");
    doc_index[doc_ids[i]] = i;
  }
  for (std::size_t i = 0; i < query_ids.size(); ++i) {
    if (query_ids[i] != SyntheticTask::query_id(i)) fail(ErrorKind::kParse, "query ids must be q000000.. in order");
    query_index[query_ids[i]] = i;
  }
  task.qrels.resize(query_ids.size());
  {
    std::ifstream in(dir / "qrels.txt");
    const Qrels q = read_qrels(in);
    for (const auto& [qid, docs] : q) {
      auto qi = query_index.find(qid);
      if (qi == query_index.end()) fail(ErrorKind::kParse, "qrels references unknown query " + qid);
      for (const auto& [did, grade] : docs) {
        auto di = doc_index.find(did);
        if (di == doc_index.end()) fail(ErrorKind::kParse, "qrels references unknown doc " + did);
        if (grade > 0) task.qrels[qi->second][di->second] = grade;
      }
    }
  }
  const auto splits = read_json_file(dir / "splits.json");
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    auto& view = task.splits.of(s);
    for (const auto& id : splits.at(split_name(s))) {
      auto qi = query_index.find(id.get<std::string>());
      if (qi == query_index.end()) fail(ErrorKind::kParse, "splits.json references unknown query");
      view.push_back(qi->second);
    }
  }
  task.is_hub.assign(task.n_docs(), false);
  if (std::filesystem::exists(dir / "task_meta.json")) {
    const auto meta = read_json_file(dir / "task_meta.json");
    for (const auto& id : meta.value("hub_docs", nlohmann::json::array())) {
      task.is_hub.at(doc_index.at(id.get<std::string>())) = true;
    }
    task.doc_cluster = meta.value("doc_cluster", std::vector<int>{});
    task.query_cluster = meta.value("query_cluster", std::vector<int>{});
  }
  task.relevance_count = relevance_counts(task.qrels, task.n_docs());
  return task;
}

}  // namespace magnorm
