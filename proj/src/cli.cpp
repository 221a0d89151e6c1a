// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#include "magnorm/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "json_util.hpp"
#include "magnorm/diagnostics.hpp"
#include "magnorm/error.hpp"
#include "magnorm/metrics.hpp"

namespace magnorm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised for outcomes that map to a specific exit code without a library
// error kind behind them.
class ExitError : public std::runtime_error {
 public:
  ExitError(int code, const std::string& message) : std::runtime_error(message), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) fail(ErrorKind::kIo, "cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << content;
  out.close();
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

json parse_json_text(std::string_view text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    fail(ErrorKind::kParse, source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                                ": malformed JSON (" + e.what() + ")");
  }
}

json read_json_file(const fs::path& path) { return parse_json_text(read_file(path), path.string()); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void refuse_overwrite(const fs::path& path) {
  throw ExitError(kExitOverwriteRefused, path.string() + " already exists; pass --force to overwrite");
}

fs::path resolve_out(const std::string& flag, const std::optional<std::string>& from_config) {
  if (!flag.empty()) return flag;
  if (from_config) return *from_config;
  if (const char* env = std::getenv("MAGNORM_OUT"); env != nullptr && *env != '\0') return env;
  return "magnorm_out";
}

json config_echo(const ExperimentConfig& cfg, const TrainConfig& train) {
  return {{"task", to_json(cfg.task)}, {"model", to_json(cfg.model)}, {"train", to_json(train)}};
}

int code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo:
      return kExitIoError;
    case ErrorKind::kNonFiniteLoss:
    case ErrorKind::kNonFiniteEvaluation:
      return kExitNumericDivergence;
    case ErrorKind::kDegenerateVariance:
    case ErrorKind::kTooFewSamples:
      return kExitDegenerateStatistics;
    default:
      return kExitConfigError;
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view text, const std::string& source) {
  const json j = parse_json_text(text, source);
  ExperimentConfig cfg;
  detail::StrictObject root(j, source);
  if (const json* t = root.child("task")) cfg.task = task_spec_from_json(*t);
  if (const json* m = root.child("model")) cfg.model = encoder_dims_from_json(*m);
  if (const json* t = root.child("train")) cfg.train = train_config_from_json(*t);
  if (const json* k = root.child("kinds")) {
    if (!k->is_array() || k->empty()) fail(ErrorKind::kParse, source + ": kinds must be a nonempty array");
    cfg.kinds.clear();
    for (const auto& name : *k) {
      if (!name.is_string()) fail(ErrorKind::kParse, source + ": kinds entries must be strings");
      cfg.kinds.push_back(SimilarityKind::parse(name.get<std::string>()));
    }
  }
  if (const json* s = root.child("seeds")) {
    if (!s->is_array() || s->empty()) fail(ErrorKind::kParse, source + ": seeds must be a nonempty array");
    cfg.seeds.clear();
    for (const auto& v : *s) {
      if (!v.is_number_unsigned()) fail(ErrorKind::kParse, source + ": seeds must be nonnegative integers");
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  if (const json* o = root.child("out")) {
    if (!o->is_string()) fail(ErrorKind::kParse, source + ": out must be a string");
    cfg.out = o->get<std::string>();
  }
  root.finish();
  if (cfg.model.feature_dim != cfg.task.feature_dim) {
    if (j.contains("model") && j["model"].contains("feature_dim")) {
      fail(ErrorKind::kParse, source + ": model.feature_dim does not match task.feature_dim");
    }
    cfg.model.feature_dim = cfg.task.feature_dim;
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return parse_experiment_config(read_file(path), path.string());
}

std::vector<SimilarityKind> parse_kind_list(std::string_view list) {
  std::vector<SimilarityKind> kinds;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    const auto name = list.substr(start, comma - start);
    if (!name.empty()) kinds.push_back(SimilarityKind::parse(name));
    start = comma + 1;
  }
  if (kinds.empty()) fail(ErrorKind::kInvalidArgument, "empty kind list");
  return kinds;
}

std::string run_name(const SimilarityKind& kind, std::uint64_t seed) {
  return kind.name() + "_seed" + std::to_string(seed);
}

namespace {

struct Common {
  std::string config;
  std::string out;
  std::string kinds;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_experiment_config(c.config);
  if (!c.kinds.empty()) cfg.kinds = parse_kind_list(c.kinds);
  return cfg;
}

// The task seed follows --seed for `gen`; training seeds follow it elsewhere.
fs::path task_dir(const fs::path& out) { return out / "task"; }

SyntheticTask generate_task(const TaskSpec& spec, const fs::path& dir, bool force, std::ostream& out) {
  if (task_exists(dir) && !force) refuse_overwrite(dir);
  const SyntheticTask task = gen_asymmetric(spec);
  write_task(task, spec, dir);
  out << "wrote task (" << task.n_docs() << " docs, " << task.n_queries() << " queries) to " << dir.string() << "\n";
  return task;
}

SyntheticTask require_task(const fs::path& dir) {
  if (!task_exists(dir)) fail(ErrorKind::kIo, "no task at " + dir.string() + "; run `magnorm gen` first");
  return load_task(dir);
}

struct TrainFlags {
  bool resume = false;
  std::optional<long> stop_after;
};

struct RunSummary {
  std::string kind;
  std::uint64_t seed = 0;
  long best_step = 0;
  double val_ndcg10 = 0.0;
  double untrained_val_ndcg10 = 0.0;
  std::vector<long> steps;
  fs::path dir;
};

RunSummary train_one(const ExperimentConfig& cfg, const SyntheticTask& task, const SimilarityKind& kind,
                     std::uint64_t seed, const fs::path& runs_root, bool force, const TrainFlags& flags,
                     std::ostream& out) {
  const fs::path dir = runs_root / run_name(kind, seed);
  const fs::path ckpt_path = dir / "checkpoint.json";
  const fs::path state_path = dir / "state.json";
  if (fs::exists(ckpt_path) && !force && !flags.resume) refuse_overwrite(ckpt_path);

  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = seed;
  train_cfg.loss.kind = kind;
  const json echo = config_echo(cfg, train_cfg);

  const TwoTowerEncoder init =
      init_encoder(cfg.model.feature_dim, cfg.model.hidden_dim, cfg.model.embed_dim, cfg.model.shared, seed);
  TrainOptions options;
  options.stop_after = flags.stop_after;
  if (flags.resume) {
    const json saved = read_json_file(state_path);
    if (saved.value("config", json()) != echo) {
      fail(ErrorKind::kInvalidArgument, "resume: configuration differs from the run in " + dir.string());
    }
    options.resume = training_state_from_json(saved.at("state"));
  }

  const TrainResult result = [&] {
    try {
      return train(task, init, train_cfg, options);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNonFiniteLoss) throw;
      fail(ErrorKind::kNonFiniteLoss, "kind " + kind.name() + ", seed " + std::to_string(seed) + ": " + e.what());
    }
  }();

  RunSummary summary;
  summary.kind = kind.name();
  summary.seed = seed;
  summary.dir = dir;
  summary.untrained_val_ndcg10 = evaluate_ndcg(init, inference_kind(kind, GammaParams{}), task, task.splits.val);
  for (const auto& r : result.log.records) summary.steps.push_back(r.step);

  write_file(state_path, dump({{"config", echo}, {"state", to_json(result.state)}}));
  std::ostringstream csv;
  result.log.write_csv(csv);
  write_file(dir / "trainlog.csv", csv.str());

  if (!result.log.records.empty()) {
    const Snapshot& best = select_checkpoint(result.log, result.snapshots);
    Checkpoint ckpt{init.dims(), best.params, best.gammas, best.step, best.val_ndcg10, kind.name(), seed, echo};
    write_file(ckpt_path, dump(to_json(ckpt)));
    summary.best_step = best.step;
    summary.val_ndcg10 = best.val_ndcg10;
  }
  out << run_name(kind, seed) << ": step " << result.state.step << "/" << result.total_steps;
  if (!result.log.records.empty()) {
    out << ", best val NDCG@10 " << summary.val_ndcg10 << " at step " << summary.best_step;
  }
  out << "\n";
  return summary;
}

struct LoadedModel {
  Checkpoint ckpt;
  TwoTowerEncoder encoder;
  SimilarityKind kind;
};

LoadedModel load_model(const fs::path& path) {
  Checkpoint c = checkpoint_from_json(read_json_file(path));
  TwoTowerEncoder enc(c.dims, c.params);
  const SimilarityKind kind = inference_kind(SimilarityKind::parse(c.kind), c.gammas);
  return {std::move(c), std::move(enc), kind};
}

// Task next to a checkpoint laid out as <out>/runs/<run>/checkpoint.json.
fs::path task_for(const fs::path& checkpoint, const std::string& flag, const fs::path& out) {
  if (!flag.empty()) return flag;
  const fs::path sibling = checkpoint.parent_path().parent_path().parent_path() / "task";
  if (task_exists(sibling)) return sibling;
  return task_dir(out);
}

std::vector<std::pair<Metric, int>> metric_requests(const std::vector<int>& ks, std::size_t n_docs) {
  const int cap = static_cast<int>(n_docs);
  std::vector<std::pair<Metric, int>> req;
  for (int k : ks) req.emplace_back(Metric::kNdcg, std::min(k, cap));
  req.emplace_back(Metric::kRecall, std::min(100, cap));
  for (int k : ks) req.emplace_back(Metric::kMrr, std::min(k, cap));
  return req;
}

struct EvalOutput {
  std::vector<MetricRow> rows;
};

EvalOutput eval_model(const LoadedModel& m, const SyntheticTask& task, Split split, const std::vector<int>& ks,
                      const fs::path& dir, bool force) {
  const auto& queries = task.splits.of(split);
  if (queries.empty()) fail(ErrorKind::kEmptyInput, "split '" + split_name(split) + "' has no queries");
  const fs::path run_path = dir / "run.trec";
  const fs::path metrics_path = dir / "metrics.csv";
  if (!force && (fs::exists(run_path) || fs::exists(metrics_path))) refuse_overwrite(dir);
  const int depth = std::max(100, *std::max_element(ks.begin(), ks.end()));
  const auto runs = retrieve(m.encoder, m.kind, task, queries, static_cast<std::size_t>(depth));
  EvalOutput result{evaluate_runs(runs, task.to_qrels(queries), metric_requests(ks, task.n_docs()))};
  std::ostringstream run_text;
  write_run(run_text, runs, m.ckpt.kind);
  write_file(run_path, run_text.str());
  std::ostringstream csv;
  write_metrics_csv(csv, result.rows);
  write_file(metrics_path, csv.str());
  return result;
}

void print_all_rows(std::ostream& out, const std::vector<MetricRow>& rows) {
  for (const auto& r : rows) {
    if (r.query_id == "ALL") out << "  " << metric_name(r.metric) << "@" << r.k << " = " << r.value << "\n";
  }
}

double all_value(const std::vector<MetricRow>& rows, Metric metric) {
  for (const auto& r : rows) {
    if (r.query_id == "ALL" && r.metric == metric) return r.value;
  }
  return 0.0;
}

// ---- subcommands ----

int cmd_gen(const Common& c, std::ostream& out) {
  ExperimentConfig cfg = load_config(c);
  if (c.seed) cfg.task.seed = *c.seed;
  generate_task(cfg.task, task_dir(resolve_out(c.out, cfg.out)), c.force, out);
  return kExitOk;
}

int cmd_train(const Common& c, const TrainFlags& flags, std::ostream& out) {
  ExperimentConfig cfg = load_config(c);
  if (c.seed) cfg.seeds = {*c.seed};
  const fs::path root = resolve_out(c.out, cfg.out);
  const SyntheticTask task = require_task(task_dir(root));
  for (std::uint64_t seed : cfg.seeds) {
    for (const auto& kind : cfg.kinds) train_one(cfg, task, kind, seed, root / "runs", c.force, flags, out);
  }
  return kExitOk;
}

struct EvalFlags {
  std::string checkpoint;
  std::string run_file;
  std::string qrels_file;
  std::string task;
  std::string split = "test";
  std::vector<int> ks = {10};
};

int cmd_eval(const Common& c, const EvalFlags& f, std::ostream& out) {
  for (int k : f.ks) {
    if (k < 1) fail(ErrorKind::kInvalidArgument, "--k values must be positive");
  }
  const Split split = parse_split(f.split);
  if (!f.run_file.empty()) {
    // External run file against external or task qrels.
    std::ifstream run_in(f.run_file);
    if (!run_in) fail(ErrorKind::kIo, "cannot read " + f.run_file);
    const auto runs = read_run(run_in);
    Qrels qrels;
    if (!f.qrels_file.empty()) {
      std::ifstream qin(f.qrels_file);
      if (!qin) fail(ErrorKind::kIo, "cannot read " + f.qrels_file);
      qrels = read_qrels(qin);
    } else {
      const fs::path tdir = f.task.empty() ? task_dir(resolve_out(c.out, std::nullopt)) : fs::path(f.task);
      std::ifstream qin(tdir / "qrels.txt");
      if (!qin) fail(ErrorKind::kIo, "cannot read " + (tdir / "qrels.txt").string());
      qrels = read_qrels(qin);
    }
    const auto rows =
        evaluate_runs(runs, qrels, metric_requests(f.ks, static_cast<std::size_t>(std::numeric_limits<int>::max())));
    const fs::path dest = c.out.empty() ? fs::path(f.run_file).parent_path() / "metrics.csv" : fs::path(c.out) / "metrics.csv";
    if (fs::exists(dest) && !c.force) refuse_overwrite(dest);
    std::ostringstream csv;
    write_metrics_csv(csv, rows);
    write_file(dest, csv.str());
    out << "evaluated " << runs.size() << " queries from " << f.run_file << "\n";
    print_all_rows(out, rows);
    return kExitOk;
  }
  if (f.checkpoint.empty()) fail(ErrorKind::kInvalidArgument, "eval needs --checkpoint or --run");
  const fs::path ckpt_path = f.checkpoint;
  const LoadedModel m = load_model(ckpt_path);
  const SyntheticTask task = require_task(task_for(ckpt_path, f.task, resolve_out("", std::nullopt)));
  const fs::path dir = c.out.empty() ? ckpt_path.parent_path() / ("eval_" + split_name(split)) : fs::path(c.out);
  const EvalOutput result = eval_model(m, task, split, f.ks, dir, c.force);
  out << "evaluated " << m.ckpt.kind << " on " << split_name(split) << " -> " << dir.string() << "\n";
  print_all_rows(out, result.rows);
  return kExitOk;
}

struct DiagnoseFlags {
  std::vector<std::string> checkpoints;
  std::string task;
};

int cmd_diagnose(const Common& c, const DiagnoseFlags& f, std::ostream& out) {
  if (f.checkpoints.empty()) fail(ErrorKind::kInvalidArgument, "diagnose needs at least one --checkpoint");
  std::vector<LoadedModel> models;
  for (const auto& p : f.checkpoints) models.push_back(load_model(p));
  const SyntheticTask task = require_task(task_for(f.checkpoints.front(), f.task, resolve_out("", std::nullopt)));

  const LoadedModel* dot = nullptr;
  const LoadedModel* dnorm = nullptr;
  for (const auto& m : models) {
    const auto tag = SimilarityKind::parse(m.ckpt.kind).tag();
    if (tag == SimilarityTag::kDot && dot == nullptr) dot = &m;
    if (tag == SimilarityTag::kDNorm && dnorm == nullptr) dnorm = &m;
  }

  std::vector<DiagnosticsReport> reports;
  json delta = json::object();
  for (Split split : {Split::kTrain, Split::kVal, Split::kTest}) {
    if (task.splits.of(split).empty()) continue;
    std::optional<double> dcv;
    if (dot != nullptr && dnorm != nullptr) {
      dcv = delta_cv(dnorm->encoder, dot->encoder, task, split);
      delta[split_name(split)] = *dcv;
    }
    for (const auto& m : models) {
      DiagnosticsReport r = magnitude_report(m.encoder, task, SimilarityKind::parse(m.ckpt.kind), split);
      const auto tag = SimilarityKind::parse(m.ckpt.kind).tag();
      if (dcv && (tag == SimilarityTag::kDot || tag == SimilarityTag::kDNorm)) r.delta_cv = dcv;
      reports.push_back(std::move(r));
    }
  }

  const fs::path dir = c.out.empty() ? fs::path(f.checkpoints.front()).parent_path() : fs::path(c.out);
  const fs::path json_path = dir / "diagnostics.json";
  const fs::path csv_path = dir / "diagnostics.csv";
  if (!c.force && (fs::exists(json_path) || fs::exists(csv_path))) refuse_overwrite(json_path);
  json doc{{"checkpoints", f.checkpoints}, {"reports", json::array()}};
  for (const auto& r : reports) doc["reports"].push_back(to_json(r));
  if (!delta.empty()) doc["delta_cv"] = delta;
  write_file(json_path, dump(doc));
  std::ostringstream csv;
  write_diagnostics_csv(csv, reports);
  write_file(csv_path, csv.str());
  out << "wrote " << reports.size() << " reports to " << json_path.string() << "\n";
  return kExitOk;
}

int cmd_verify(const Common& c, int trials, std::ostream& out) {
  if (trials < 1) fail(ErrorKind::kInvalidArgument, "--trials must be at least 1");
  const auto results = run_property_suites(trials, c.seed.value_or(0));
  print_suite_table(out, results);
  const bool ok = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
  out << (ok ? "all suites passed" : "property failures detected") << "\n";
  return ok ? kExitOk : kExitPropertyFailure;
}

int cmd_sweep(const Common& c, std::ostream& out) {
  ExperimentConfig cfg = load_config(c);
  if (c.seed) cfg.seeds = {*c.seed};
  const fs::path root = resolve_out(c.out, cfg.out);
  const fs::path summary_path = root / "sweep.csv";
  if (fs::exists(summary_path) && !c.force) refuse_overwrite(summary_path);

  SyntheticTask task;
  if (task_exists(task_dir(root))) {
    const json meta = read_json_file(task_dir(root) / "task_meta.json");
    if (meta.at("spec") != to_json(cfg.task) && !c.force) {
      throw ExitError(kExitOverwriteRefused, "existing task at " + task_dir(root).string() +
                                                 " was generated from a different spec; pass --force");
    }
    task = meta.at("spec") == to_json(cfg.task) ? load_task(task_dir(root))
                                                : generate_task(cfg.task, task_dir(root), true, out);
  } else {
    task = generate_task(cfg.task, task_dir(root), false, out);
  }

  std::ostringstream csv;
  csv.precision(17);
  csv << "kind,seed,best_step,val_ndcg10,untrained_val_ndcg10,test_ndcg10,test_recall100,test_mrr10\n";
  std::map<std::uint64_t, std::vector<long>> grids;
  bool step_matched = true;
  for (std::uint64_t seed : cfg.seeds) {
    for (const auto& kind : cfg.kinds) {
      const RunSummary s = train_one(cfg, task, kind, seed, root / "runs", c.force, {}, out);
      auto [it, fresh] = grids.emplace(seed, s.steps);
      if (!fresh && it->second != s.steps) step_matched = false;
      const LoadedModel m = load_model(s.dir / "checkpoint.json");
      const auto rows = eval_model(m, task, Split::kTest, {10}, s.dir / "eval_test", true).rows;
      csv << s.kind << ',' << seed << ',' << s.best_step << ',' << s.val_ndcg10 << ',' << s.untrained_val_ndcg10 << ','
          << all_value(rows, Metric::kNdcg) << ',' << all_value(rows, Metric::kRecall) << ','
          << all_value(rows, Metric::kMrr) << '\n';
    }
  }
  write_file(summary_path, csv.str());
  out << "sweep summary: " << summary_path.string() << (step_matched ? " (step grids match)" : " (step grids differ)")
      << "\n";
  return step_matched ? kExitOk : kExitPropertyFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"magnorm: magnitude-aware contrastive retrieval laboratory", "magnorm"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common common;
  TrainFlags train_flags;
  long stop_after = 0;
  EvalFlags eval_flags;
  DiagnoseFlags diag_flags;
  int trials = 1000;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub, bool with_kinds) {
    sub->add_option("--config", common.config, "JSON experiment config");
    sub->add_option("--out", common.out, "output directory (default: config, $MAGNORM_OUT, ./magnorm_out)");
    sub->add_option("--seed", seed, "seed override");
    sub->add_flag("--force", common.force, "overwrite existing outputs");
    if (with_kinds) sub->add_option("--kinds", common.kinds, "comma-separated similarity kinds");
  };

  auto* gen = app.add_subcommand("gen", "generate the synthetic retrieval task");
  add_common(gen, false);
  auto* train_cmd = app.add_subcommand("train", "train one model per (kind, seed)");
  add_common(train_cmd, true);
  train_cmd->add_flag("--resume", train_flags.resume, "continue from state.json in each run directory");
  train_cmd->add_option("--stop-after", stop_after, "stop once this many steps are done")->check(CLI::PositiveNumber);
  auto* eval = app.add_subcommand("eval", "write a TREC run and metrics for a checkpoint or run file");
  add_common(eval, false);
  eval->add_option("--checkpoint", eval_flags.checkpoint, "checkpoint.json to evaluate");
  eval->add_option("--run", eval_flags.run_file, "existing TREC run file to score instead");
  eval->add_option("--qrels", eval_flags.qrels_file, "TREC qrels for --run (default: task qrels)");
  eval->add_option("--task", eval_flags.task, "task directory");
  eval->add_option("--split", eval_flags.split, "train, val or test");
  eval->add_option("--k", eval_flags.ks, "cutoffs for NDCG and MRR")->delimiter(',');
  auto* diagnose = app.add_subcommand("diagnose", "magnitude diagnostics for one or more checkpoints");
  add_common(diagnose, false);
  diagnose->add_option("--checkpoint", diag_flags.checkpoints, "checkpoint.json (repeatable)");
  diagnose->add_option("--task", diag_flags.task, "task directory");
  auto* verify = app.add_subcommand("verify", "run the property suites");
  add_common(verify, false);
  verify->add_option("--trials", trials, "random instances per suite");
  auto* sweep = app.add_subcommand("sweep", "gen + train + eval over all configured kinds and seeds");
  add_common(sweep, true);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  auto seed_given = [&](CLI::App* sub) { return sub->count("--seed") > 0; };
  try {
    if (gen->parsed()) {
      if (seed_given(gen)) common.seed = seed;
      return cmd_gen(common, out);
    }
    if (train_cmd->parsed()) {
      if (seed_given(train_cmd)) common.seed = seed;
      if (train_cmd->count("--stop-after") > 0) train_flags.stop_after = stop_after;
      return cmd_train(common, train_flags, out);
    }
    if (eval->parsed()) return cmd_eval(common, eval_flags, out);
    if (diagnose->parsed()) return cmd_diagnose(common, diag_flags, out);
    if (verify->parsed()) {
      if (seed_given(verify)) common.seed = seed;
      return cmd_verify(common, trials, out);
    }
    if (sweep->parsed()) {
      if (seed_given(sweep)) common.seed = seed;
      return cmd_sweep(common, out);
    }
  } catch (const ExitError& e) {
    err << "error: " << e.what() << "\n";
    return e.code();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return code_for(e.kind());
  } catch (const json::exception& e) {
    err << "error: malformed file: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIoError;
  }
  return kExitConfigError;
}

}  // namespace magnorm::cli
