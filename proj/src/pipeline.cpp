#include "article/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "article/io.hpp"

namespace article {

using nlohmann::json;

namespace {

class ConfigErrors {
 public:
  void add(const std::string& msg) { errors_.push_back(msg); }
  template <typename F>
  void guard(const std::string& context, F&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      add(context + ": " + e.what());
    }
  }
  void raise_if_any() const {
    if (errors_.empty()) return;
    std::string msg = "invalid config:";
    for (const auto& e : errors_) msg += "\n  - " + e;
    throw std::invalid_argument(msg);
  }

 private:
  std::vector<std::string> errors_;
};

DatasetFormat format_from_string(const std::string& s) {
  if (s == "csv") return DatasetFormat::csv;
  if (s == "jsonl") return DatasetFormat::jsonl;
  throw std::invalid_argument("unknown dataset format: " + s);
}

BackendKind kind_from_string(const std::string& s) {
  if (s == "remote") return BackendKind::remote;
  if (s == "mock_oracle") return BackendKind::mock_oracle;
  throw std::invalid_argument("unknown backend kind: " + s);
}

TiePolicy tie_from_string(const std::string& s) {
  if (s == "drop") return TiePolicy::drop;
  if (s == "offensive") return TiePolicy::offensive;
  throw std::invalid_argument("unknown tie_policy: " + s);
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  ConfigErrors errs;

  errs.guard("dataset", [&] {
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      c.dataset_path = d.value("path", std::string{});
      c.dataset_format = format_from_string(d.value("format", "csv"));
    }
  });
  errs.guard("output_dir", [&] {
    c.output_dir = j.value("output_dir", std::string{"out"});
  });
  errs.guard("backend", [&] {
    if (j.contains("backend")) {
      const auto& b = j.at("backend");
      c.backend.kind = kind_from_string(b.value("kind", "mock_oracle"));
      c.backend.endpoint_url = b.value("endpoint_url", c.backend.endpoint_url);
      c.backend.auth_env = b.value("auth_env", c.backend.auth_env);
      c.backend.max_concurrency = b.value("max_concurrency", c.backend.max_concurrency);
      c.backend.max_retries = b.value("max_retries", c.backend.max_retries);
      c.backend.requests_per_minute =
          b.value("requests_per_minute", c.backend.requests_per_minute);
      c.backend.cache_dir = b.value("cache_dir", std::string{});
      c.backend.model_id = b.value("model_id", c.backend.model_id);
      c.backend.temperature = b.value("temperature", c.backend.temperature);
      c.backend.max_tokens = b.value("max_tokens", c.backend.max_tokens);
      c.backend.mock_variant = b.value("mock_variant", c.backend.mock_variant);
      c.backend.backoff_base_ms = b.value("backoff_base_ms", c.backend.backoff_base_ms);
    }
    c.backend.validate();
  });
  errs.guard("template", [&] {
    if (j.contains("template")) {
      const auto& t = j.at("template");
      c.prompt.system_instruction = t.value("system_instruction", c.prompt.system_instruction);
      c.prompt.example_format = t.value("example_format", c.prompt.example_format);
      c.prompt.query_format = t.value("query_format", c.prompt.query_format);
      if (t.contains("label_offensive"))
        c.prompt.label_lexicon[Label::offensive] = t.at("label_offensive").get<std::string>();
      if (t.contains("label_non_offensive"))
        c.prompt.label_lexicon[Label::non_offensive] =
            t.at("label_non_offensive").get<std::string>();
    }
    c.prompt.validate();
  });
  errs.guard("consistency", [&] {
    if (j.contains("consistency")) {
      const auto& s = j.at("consistency");
      c.consistency.n_train = s.value("n_train", c.consistency.n_train);
      c.consistency.k = s.value("k", c.consistency.k);
      c.consistency.seed = s.value("seed", c.consistency.seed);
      if (s.contains("positive_class"))
        c.consistency.positive_class = label_from_string(s.at("positive_class").get<std::string>());
      if (s.contains("f1_mode")) {
        std::string m = s.at("f1_mode").get<std::string>();
        if (m == "binary") c.consistency.f1_mode = F1Mode::binary;
        else if (m == "macro") c.consistency.f1_mode = F1Mode::macro;
        else throw std::invalid_argument("unknown f1_mode: " + m);
      }
    }
    c.consistency.validate();
  });
  errs.guard("group_eval", [&] {
    if (j.contains("group_eval")) {
      const auto& g = j.at("group_eval");
      c.group_eval.train_frac = g.value("train_frac", c.group_eval.train_frac);
      c.group_eval.n_icl = g.value("n_icl", c.group_eval.n_icl);
      if (g.contains("seeds"))
        c.group_eval.seeds = g.at("seeds").get<std::vector<std::uint64_t>>();
    }
    c.group_eval.validate();
  });
  errs.guard("ks", [&] {
    if (j.contains("ks")) c.ks = j.at("ks").get<std::vector<double>>();
    for (double k : c.ks)
      if (k < 0.0 || k > 1.0) throw std::invalid_argument("k values must be in [0,1]");
    if (!std::is_sorted(c.ks.begin(), c.ks.end()))
      throw std::invalid_argument("ks must be sorted ascending");
  });
  errs.guard("ct", [&] {
    if (j.contains("ct")) {
      const auto& t = j.at("ct");
      c.ct.tolerance = t.value("tolerance", c.ct.tolerance);
      c.ct.max_iter = t.value("max_iter", c.ct.max_iter);
      c.ct.wqs_threshold = t.value("wqs_threshold", c.ct.wqs_threshold);
    }
    if (c.ct.wqs_threshold < 0.0 || c.ct.wqs_threshold > 1.0)
      throw std::invalid_argument("wqs_threshold must be in [0,1]");
  });
  errs.guard("tie_policy", [&] {
    c.tie_policy = tie_from_string(j.value("tie_policy", "drop"));
  });
  errs.guard("simulate", [&] {
    if (!j.contains("simulate")) return;
    const auto& s = j.at("simulate");
    SimConfig sim;
    sim.n_comments = s.value("n_comments", sim.n_comments);
    sim.block_size = s.value("block_size", sim.block_size);
    sim.annotators_per_block = s.value("annotators_per_block", sim.annotators_per_block);
    sim.seed = s.value("seed", sim.seed);
    for (const auto& p : s.value("profiles", json::array())) {
      AnnotatorProfile profile;
      profile.theta = p.value("theta", profile.theta);
      profile.epsilon = p.value("epsilon", profile.epsilon);
      profile.group = p.value("group", std::string{});
      profile.n_annotations = p.value("n_annotations", profile.n_annotations);
      std::size_t count = p.value("count", std::size_t{1});
      for (std::size_t i = 0; i < count; ++i) sim.profiles.push_back(profile);
    }
    sim.validate();
    c.simulate = std::move(sim);
  });
  errs.guard("stability", [&] {
    if (!j.contains("stability")) return;
    const auto& s = j.at("stability");
    c.stability.include_crowdtruth = s.value("include_crowdtruth", true);
    for (const auto& v : s.value("variants", json::array())) {
      StabilityVariant var;
      var.name = v.at("name").get<std::string>();
      var.mock_variant = v.value("mock_variant", 0);
      if (v.contains("model_id")) var.model_id = v.at("model_id").get<std::string>();
      c.stability.variants.push_back(std::move(var));
    }
  });
  errs.guard("max_errored_fraction", [&] {
    c.max_errored_fraction = j.value("max_errored_fraction", c.max_errored_fraction);
  });

  errs.raise_if_any();
  return c;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  return from_json(json::parse(io::read_file(path)));
}

json RunConfig::to_json() const {
  json j;
  j["dataset"] = {{"path", dataset_path.string()},
                  {"format", dataset_format == DatasetFormat::csv ? "csv" : "jsonl"}};
  j["output_dir"] = output_dir.string();
  j["backend"] = {{"kind", backend.kind == BackendKind::remote ? "remote" : "mock_oracle"},
                  {"endpoint_url", backend.endpoint_url},
                  {"auth_env", backend.auth_env},
                  {"max_concurrency", backend.max_concurrency},
                  {"max_retries", backend.max_retries},
                  {"requests_per_minute", backend.requests_per_minute},
                  {"cache_dir", backend.cache_dir.string()},
                  {"model_id", backend.model_id},
                  {"temperature", backend.temperature},
                  {"max_tokens", backend.max_tokens},
                  {"mock_variant", backend.mock_variant}};
  j["template"] = {{"system_instruction", prompt.system_instruction},
                   {"example_format", prompt.example_format},
                   {"query_format", prompt.query_format},
                   {"label_offensive", prompt.label_lexicon.at(Label::offensive)},
                   {"label_non_offensive", prompt.label_lexicon.at(Label::non_offensive)}};
  j["consistency"] = {{"n_train", consistency.n_train},
                      {"k", consistency.k},
                      {"seed", consistency.seed},
                      {"positive_class", label_to_string(consistency.positive_class)},
                      {"f1_mode", consistency.f1_mode == F1Mode::binary ? "binary" : "macro"}};
  j["group_eval"] = {{"train_frac", group_eval.train_frac},
                     {"n_icl", group_eval.n_icl},
                     {"seeds", group_eval.seeds}};
  j["ks"] = ks;
  j["ct"] = {{"tolerance", ct.tolerance},
             {"max_iter", ct.max_iter},
             {"wqs_threshold", ct.wqs_threshold}};
  j["tie_policy"] = tie_policy == TiePolicy::drop ? "drop" : "offensive";
  j["max_errored_fraction"] = max_errored_fraction;
  if (simulate) {
    json profiles = json::array();
    for (const auto& p : simulate->profiles)
      profiles.push_back({{"theta", p.theta},
                          {"epsilon", p.epsilon},
                          {"group", p.group},
                          {"n_annotations", p.n_annotations}});
    j["simulate"] = {{"n_comments", simulate->n_comments},
                     {"block_size", simulate->block_size},
                     {"annotators_per_block", simulate->annotators_per_block},
                     {"seed", simulate->seed},
                     {"profiles", profiles}};
  }
  if (!stability.variants.empty()) {
    json variants = json::array();
    for (const auto& v : stability.variants) {
      json vj = {{"name", v.name}, {"mock_variant", v.mock_variant}};
      if (v.model_id) vj["model_id"] = *v.model_id;
      variants.push_back(std::move(vj));
    }
    j["stability"] = {{"variants", variants},
                      {"include_crowdtruth", stability.include_crowdtruth}};
  }
  return j;
}

namespace {

void write_json_file(const std::filesystem::path& path, const json& j) {
  io::write_file(path, j.dump(2) + "\n");
}

void write_manifest(const RunConfig& config, const std::string& subcommand,
                    const std::map<std::string, double>& timings_ms) {
  json m;
  m["subcommand"] = subcommand;
  m["version"] = "0.1.0";
  m["config"] = config.to_json();
  m["seed"] = config.consistency.seed;
  char buf[64];
  std::time_t now = std::time(nullptr);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  m["created_at"] = buf;
  m["timings_ms"] = timings_ms;
  write_json_file(config.output_dir / "manifest.json", m);
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

Dataset load_input(const RunConfig& config) {
  if (config.dataset_path.empty())
    throw std::invalid_argument("config needs dataset.path for this subcommand");
  return load_dataset(config.dataset_path, config.dataset_format);
}

json score_to_json(const ConsistencyScore& s, const std::string& group, double k) {
  return json{{"annotator_id", s.annotator_id},
              {"group", group},
              {"f1", s.f1},
              {"n_train", s.n_train},
              {"n_test", s.n_test},
              {"n_unparseable", s.n_unparseable},
              {"flagged_inconsistent_at_k", s.f1 < k}};
}

void write_consistency_scores(const RunConfig& config, const Dataset& dataset,
                              const ScoreRunResult& run) {
  json j;
  j["k"] = config.consistency.k;
  j["scores"] = json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : run.scores) {
    const std::string& group = dataset.annotator(s.annotator_id).group;
    j["scores"].push_back(score_to_json(s, group, config.consistency.k));
    rows.push_back({s.annotator_id, group, io::fmt_full(s.f1), std::to_string(s.n_train),
                    std::to_string(s.n_test), std::to_string(s.n_unparseable),
                    s.f1 < config.consistency.k ? "true" : "false"});
  }
  j["unscorable"] = run.unscorable;
  j["errored"] = run.errored;
  write_json_file(config.output_dir / "consistency_scores.json", j);
  io::write_csv(config.output_dir / "consistency_scores.csv",
                {"annotator_id", "group", "f1", "n_train", "n_test", "n_unparseable",
                 "flagged_inconsistent_at_k"},
                rows);
}

void check_errored_fraction(const RunConfig& config, const ScoreRunResult& run,
                            std::size_t n_annotators) {
  if (n_annotators == 0) return;
  double frac = static_cast<double>(run.errored.size()) / n_annotators;
  if (frac > config.max_errored_fraction) {
    std::string msg = "errored annotator fraction " + io::fmt3(frac) + " exceeds limit " +
                      io::fmt3(config.max_errored_fraction);
    for (const auto& id : run.errored) msg += "\n  errored: " + id;
    throw std::runtime_error(msg);
  }
}

ScoreRunResult load_scores(const RunConfig& config, std::map<std::string, std::string>* groups) {
  json j = json::parse(io::read_file(config.output_dir / "consistency_scores.json"));
  ScoreRunResult run;
  for (const auto& s : j.at("scores")) {
    ConsistencyScore cs;
    cs.annotator_id = s.at("annotator_id").get<std::string>();
    cs.f1 = s.at("f1").get<double>();
    cs.n_train = s.at("n_train").get<std::size_t>();
    cs.n_test = s.at("n_test").get<std::size_t>();
    cs.n_unparseable = s.at("n_unparseable").get<std::size_t>();
    if (groups) (*groups)[cs.annotator_id] = s.at("group").get<std::string>();
    run.scores.push_back(std::move(cs));
  }
  run.unscorable = j.value("unscorable", std::vector<std::string>{});
  run.errored = j.value("errored", std::vector<std::string>{});
  return run;
}

void write_filter_outputs(const RunConfig& config, const Dataset& dataset,
                          const FilterResult& filtered) {
  json j;
  j["k"] = config.consistency.k;
  j["consistent"] = filtered.consistent;
  j["inconsistent"] = filtered.inconsistent;
  write_json_file(config.output_dir / "filter.json", j);

  auto retention = retention_stats(dataset, filtered.consistent);
  std::vector<std::vector<std::string>> rows;
  for (const auto& [group, stats] : retention)
    rows.push_back({group, io::fmt_full(stats.pct_annotators_remaining),
                    io::fmt_full(stats.pct_comments_remaining)});
  io::write_csv(config.output_dir / "retention.csv",
                {"group", "pct_annotators_remaining", "pct_comments_remaining"}, rows);
}

std::set<std::string> load_consistent_set(const RunConfig& config) {
  json j = json::parse(io::read_file(config.output_dir / "filter.json"));
  return j.at("consistent").get<std::set<std::string>>();
}

std::vector<std::string> dataset_groups(const Dataset& dataset) {
  std::set<std::string> groups;
  for (const auto& a : dataset.annotators()) groups.insert(a.group);
  return {groups.begin(), groups.end()};
}

json table_to_json(const GroupLabelTable& t) {
  json entries = json::object();
  for (const auto& [id, e] : t.entries)
    entries[id] = {{"comment_text", e.comment_text},
                   {"label", label_to_string(e.label)},
                   {"votes_offensive", e.votes_offensive},
                   {"votes_non_offensive", e.votes_non_offensive}};
  return json{{"group", t.group}, {"dropped_ties", t.dropped_ties}, {"entries", entries}};
}

GroupLabelTable table_from_json(const json& j) {
  GroupLabelTable t;
  t.group = j.at("group").get<std::string>();
  t.dropped_ties = j.at("dropped_ties").get<std::size_t>();
  for (const auto& [id, e] : j.at("entries").items()) {
    GroupLabelEntry entry;
    entry.comment_text = e.at("comment_text").get<std::string>();
    entry.label = label_from_string(e.at("label").get<std::string>());
    entry.votes_offensive = e.at("votes_offensive").get<std::size_t>();
    entry.votes_non_offensive = e.at("votes_non_offensive").get<std::size_t>();
    t.entries.emplace(id, std::move(entry));
  }
  return t;
}

std::string join_seed_f1s(const std::vector<double>& f1s) {
  std::string out;
  for (std::size_t i = 0; i < f1s.size(); ++i) {
    if (i) out += ';';
    out += io::fmt3(f1s[i]);
  }
  return out;
}

void run_ingest(const RunConfig& config) {
  Stopwatch sw;
  Dataset d = load_input(config);
  json summary;
  summary["n_comments"] = d.comments().size();
  summary["n_annotators"] = d.annotators().size();
  summary["n_annotations"] = d.annotations().size();
  std::map<std::string, std::size_t> by_group;
  for (const auto& a : d.annotators()) ++by_group[a.group];
  summary["annotators_per_group"] = by_group;
  write_json_file(config.output_dir / "dataset_summary.json", summary);
  write_manifest(config, "ingest", {{"total", sw.ms()}});
}

void run_simulate(const RunConfig& config) {
  Stopwatch sw;
  if (!config.simulate)
    throw std::invalid_argument("config needs a 'simulate' section for this subcommand");
  SimResult sim = gen_dataset(*config.simulate);
  save_dataset(sim.dataset, config.output_dir / "dataset", config.dataset_format);
  save_ground_truth(sim.ground_truth, config.output_dir / "ground_truth.csv");
  write_manifest(config, "simulate", {{"total", sw.ms()}});
}

std::size_t step1_probe_count(const Dataset& dataset, const ConsistencyConfig& cfg) {
  std::size_t probes = 0;
  for (const auto& a : dataset.annotators()) {
    std::size_t n = dataset.annotations_of(a.id).size();
    if (n >= cfg.n_train + 1) probes += n - cfg.n_train;
  }
  return probes;
}

void run_score(const RunConfig& config, bool dry_run) {
  Stopwatch sw;
  Dataset d = load_input(config);
  if (dry_run) {
    std::printf("dry-run: %zu step-1 probes across %zu annotators\n",
                step1_probe_count(d, config.consistency), d.annotators().size());
    return;
  }
  auto backend = make_backend(config.backend, config.prompt);
  auto run = score_all_annotators(d, *backend, config.backend, config.prompt,
                                  config.consistency);
  check_errored_fraction(config, run, d.annotators().size());
  write_consistency_scores(config, d, run);
  write_manifest(config, "score", {{"total", sw.ms()}});
}

void run_filter(const RunConfig& config) {
  Stopwatch sw;
  Dataset d = load_input(config);
  auto run = load_scores(config, nullptr);
  auto filtered = filter_annotators(run.scores, config.consistency.k);
  write_filter_outputs(config, d, filtered);
  write_manifest(config, "filter", {{"total", sw.ms()}});
}

void run_aggregate(const RunConfig& config) {
  Stopwatch sw;
  Dataset d = load_input(config);
  auto consistent = load_consistent_set(config);
  json tables = json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& group : dataset_groups(d)) {
    auto table = aggregate_labels(d, consistent, group, config.tie_policy);
    for (const auto& [id, e] : table.entries)
      rows.push_back({group, id, label_to_string(e.label),
                      std::to_string(e.votes_offensive),
                      std::to_string(e.votes_non_offensive)});
    tables.push_back(table_to_json(table));
  }
  write_json_file(config.output_dir / "group_labels.json", json{{"tables", tables}});
  io::write_csv(config.output_dir / "group_labels.csv",
                {"group", "comment_id", "label", "votes_offensive", "votes_non_offensive"},
                rows);
  write_manifest(config, "aggregate", {{"total", sw.ms()}});
}

void run_eval_group(const RunConfig& config, bool dry_run) {
  Stopwatch sw;
  json j = json::parse(io::read_file(config.output_dir / "group_labels.json"));
  std::vector<GroupLabelTable> tables;
  for (const auto& t : j.at("tables")) tables.push_back(table_from_json(t));

  if (dry_run) {
    std::size_t probes = 0;
    for (const auto& t : tables) {
      std::size_t n = t.entries.size();
      std::size_t n_train = static_cast<std::size_t>(config.group_eval.train_frac * n);
      probes += (n - n_train) * config.group_eval.seeds.size();
    }
    std::printf("dry-run: %zu group-eval probes across %zu groups\n", probes, tables.size());
    return;
  }

  auto backend = make_backend(config.backend, config.prompt);
  json out = json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& t : tables) {
    auto eval = evaluate_group(t, *backend, config.backend, config.prompt, config.group_eval);
    out.push_back({{"group", eval.group},
                   {"f1_per_seed", eval.f1_per_seed},
                   {"f1_mean", eval.f1_mean},
                   {"ci95_halfwidth", eval.ci95_halfwidth},
                   {"dropped_ties", t.dropped_ties},
                   {"n_train", eval.n_train},
                   {"n_test", eval.n_test},
                   {"n_unparseable", eval.n_unparseable}});
    rows.push_back({eval.group, io::fmt3(config.consistency.k), join_seed_f1s(eval.f1_per_seed),
                    io::fmt3(eval.f1_mean), io::fmt3(eval.ci95_halfwidth),
                    std::to_string(t.dropped_ties), std::to_string(eval.n_train),
                    std::to_string(eval.n_test)});
  }
  write_json_file(config.output_dir / "group_eval.json", json{{"groups", out}});
  io::write_csv(config.output_dir / "group_eval.csv",
                {"group", "k", "f1_per_seed", "f1_mean", "ci95_halfwidth", "dropped_ties",
                 "n_train", "n_test"},
                rows);
  write_manifest(config, "eval-group", {{"total", sw.ms()}});
}

void write_ct_outputs(const RunConfig& config, const QualityScores& scores) {
  json j;
  j["iterations_used"] = scores.iterations_used;
  j["converged"] = scores.converged;
  j["skipped_single_worker_units"] = scores.skipped_single_worker_units;
  j["wqs_threshold"] = config.ct.wqs_threshold;
  json workers = json::array();
  std::vector<std::vector<std::string>> wrows;
  for (const auto& [id, wqs] : scores.wqs) {
    workers.push_back({{"worker_id", id},
                       {"wqs", wqs},
                       {"wwa", scores.wwa.at(id)},
                       {"wua", scores.wua.at(id)}});
    wrows.push_back({id, io::fmt_full(wqs), io::fmt_full(scores.wwa.at(id)),
                     io::fmt_full(scores.wua.at(id))});
  }
  j["workers"] = workers;
  json units = json::array();
  std::vector<std::vector<std::string>> urows;
  for (const auto& [id, uqs] : scores.uqs) {
    units.push_back({{"unit_id", id}, {"uqs", uqs}});
    urows.push_back({id, io::fmt_full(uqs)});
  }
  j["units"] = units;
  write_json_file(config.output_dir / "ct_scores.json", j);
  io::write_csv(config.output_dir / "ct_worker_scores.csv", {"worker_id", "wqs", "wwa", "wua"},
                wrows);
  io::write_csv(config.output_dir / "ct_unit_scores.csv", {"unit_id", "uqs"}, urows);
}

void run_crowdtruth(const RunConfig& config) {
  Stopwatch sw;
  Dataset d = load_input(config);
  auto scores = quality_fixpoint(build_vectors(d), config.ct.tolerance, config.ct.max_iter);
  write_ct_outputs(config, scores);
  write_manifest(config, "crowdtruth", {{"total", sw.ms()}});
}

QualityScores load_ct_scores(const RunConfig& config) {
  json j = json::parse(io::read_file(config.output_dir / "ct_scores.json"));
  QualityScores s;
  s.iterations_used = j.at("iterations_used").get<std::size_t>();
  s.converged = j.at("converged").get<bool>();
  for (const auto& w : j.at("workers")) {
    std::string id = w.at("worker_id").get<std::string>();
    s.wqs[id] = w.at("wqs").get<double>();
    s.wwa[id] = w.at("wwa").get<double>();
    s.wua[id] = w.at("wua").get<double>();
  }
  for (const auto& u : j.at("units"))
    s.uqs[u.at("unit_id").get<std::string>()] = u.at("uqs").get<double>();
  return s;
}

void run_compare(const RunConfig& config) {
  Stopwatch sw;
  Dataset d = load_input(config);
  auto article_kept = load_consistent_set(config);
  auto ct_scores = load_ct_scores(config);
  auto [ct_kept, ct_removed] = filter_by_wqs(ct_scores, config.ct.wqs_threshold);

  auto backend = make_backend(config.backend, config.prompt);
  auto rows = compare_methods(d, article_kept, config.consistency.k, ct_kept,
                              config.ct.wqs_threshold, *backend, config.backend, config.prompt,
                              config.group_eval, config.tie_policy);

  json out = json::array();
  std::vector<std::vector<std::string>> csv;
  for (const auto& r : rows) {
    out.push_back({{"group", r.group},
                   {"method", r.method},
                   {"threshold", r.threshold},
                   {"f1_mean", r.f1_mean},
                   {"ci95_halfwidth", r.ci95_halfwidth},
                   {"f1_per_seed", r.f1_per_seed},
                   {"group_emptied", r.group_emptied}});
    csv.push_back({r.group, r.method, io::fmt3(r.threshold), io::fmt3(r.f1_mean),
                   io::fmt3(r.ci95_halfwidth), r.group_emptied ? "true" : "false"});
  }
  write_json_file(config.output_dir / "comparison.json", json{{"rows", out}});
  io::write_csv(config.output_dir / "comparison.csv",
                {"group", "method", "threshold", "f1_mean", "ci95_halfwidth", "group_emptied"},
                csv);

  // Venn overlap of the flagged (removed) annotators, overall and per group
  json inconsistent_json =
      json::parse(io::read_file(config.output_dir / "filter.json")).at("inconsistent");
  auto article_flagged = inconsistent_json.get<std::set<std::string>>();
  std::vector<std::vector<std::string>> venn_rows;
  json venn_json = json::array();
  auto add_venn = [&](const std::string& scope, const std::set<std::string>& a,
                      const std::set<std::string>& b) {
    auto v = venn_counts(a, b);
    venn_rows.push_back({scope, std::to_string(v.only_a), std::to_string(v.only_b),
                         std::to_string(v.both)});
    venn_json.push_back({{"scope", scope},
                         {"only_article", v.only_a},
                         {"only_crowdtruth", v.only_b},
                         {"both", v.both}});
  };
  add_venn("all", article_flagged, ct_removed);
  for (const auto& group : dataset_groups(d)) {
    std::set<std::string> ga, gb;
    for (const auto& id : article_flagged)
      if (d.has_annotator(id) && d.annotator(id).group == group) ga.insert(id);
    for (const auto& id : ct_removed)
      if (d.has_annotator(id) && d.annotator(id).group == group) gb.insert(id);
    add_venn(group, ga, gb);
  }
  write_json_file(config.output_dir / "venn.json", json{{"rows", venn_json}});
  io::write_csv(config.output_dir / "venn.csv",
                {"scope", "only_article", "only_crowdtruth", "both"}, venn_rows);
  write_manifest(config, "compare", {{"total", sw.ms()}});
}

void run_sweep(const RunConfig& config, bool dry_run) {
  Stopwatch sw;
  Dataset d = load_input(config);
  if (dry_run) {
    std::size_t step1 = step1_probe_count(d, config.consistency);
    std::size_t per_group = d.comments().size();  // upper bound per (k, group)
    std::size_t step2 = config.ks.size() * dataset_groups(d).size() * per_group *
                        config.group_eval.seeds.size();
    std::printf("dry-run: %zu step-1 probes; at most %zu group-eval probes\n", step1, step2);
    return;
  }
  auto backend = make_backend(config.backend, config.prompt);
  auto report = k_sweep(d, config.ks, *backend, config.backend, config.prompt,
                        config.consistency, config.group_eval, config.tie_policy);
  check_errored_fraction(config, {report.scores, report.unscorable, report.errored},
                         d.annotators().size());
  write_consistency_scores(config, d,
                           {report.scores, report.unscorable, report.errored});

  std::vector<std::vector<std::string>> rows;
  json jrows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({io::fmt3(r.k), r.group, io::fmt3(r.f1_mean), io::fmt3(r.ci95_halfwidth),
                    io::fmt3(r.pct_annotators), io::fmt3(r.pct_comments)});
    jrows.push_back({{"k", r.k},
                     {"group", r.group},
                     {"f1_mean", r.f1_mean},
                     {"ci95_halfwidth", r.ci95_halfwidth},
                     {"f1_per_seed", r.f1_per_seed},
                     {"pct_annotators_remaining", r.pct_annotators},
                     {"pct_comments_remaining", r.pct_comments},
                     {"dropped_ties", r.dropped_ties},
                     {"n_train", r.n_train},
                     {"n_test", r.n_test}});
  }
  io::write_csv(config.output_dir / "k_sweep.csv",
                {"k", "group", "f1_mean", "ci95_halfwidth", "pct_annotators_remaining",
                 "pct_comments_remaining"},
                rows);

  json inconsistent = json::object();
  for (const auto& [k, ids] : report.inconsistent_by_k) inconsistent[io::fmt3(k)] = ids;
  write_json_file(config.output_dir / "k_sweep.json",
                  json{{"rows", jrows}, {"inconsistent_by_k", inconsistent}});
  write_manifest(config, "sweep", {{"total", sw.ms()}});
}

void run_stability(const RunConfig& config) {
  Stopwatch sw;
  Dataset d = load_input(config);
  if (config.stability.variants.size() < 2 && !config.stability.include_crowdtruth)
    throw std::invalid_argument("stability needs at least two runs to compare");

  std::map<std::string, std::set<std::string>> flagged;  // run name -> inconsistent set
  std::vector<std::string> run_names;

  for (const auto& variant : config.stability.variants) {
    BackendConfig bc = config.backend;
    bc.mock_variant = variant.mock_variant;
    if (variant.model_id) bc.model_id = *variant.model_id;
    auto backend = make_backend(bc, config.prompt);
    auto run = score_all_annotators(d, *backend, bc, config.prompt, config.consistency);
    check_errored_fraction(config, run, d.annotators().size());
    std::map<std::string, double> scores;
    for (const auto& s : run.scores) scores[s.annotator_id] = s.f1;
    flagged[variant.name] = median_split(scores);
    run_names.push_back(variant.name);
  }

  if (config.stability.include_crowdtruth) {
    auto ct = quality_fixpoint(build_vectors(d), config.ct.tolerance, config.ct.max_iter);
    flagged["crowdtruth"] = median_split(ct.wqs);
    run_names.push_back("crowdtruth");
  }

  std::vector<std::vector<std::string>> rows;
  json matrix = json::object();
  for (const auto& a : run_names) {
    matrix[a] = json::object();
    for (const auto& b : run_names) {
      double sim = jaccard(flagged[a], flagged[b]);
      rows.push_back({a, b, io::fmt3(sim)});
      matrix[a][b] = sim;
    }
  }
  io::write_csv(config.output_dir / "jaccard.csv", {"run_a", "run_b", "jaccard"}, rows);
  json sets = json::object();
  for (const auto& [name, ids] : flagged) sets[name] = ids;
  write_json_file(config.output_dir / "jaccard.json",
                  json{{"matrix", matrix}, {"flagged", sets}});
  write_manifest(config, "stability", {{"total", sw.ms()}});
}

void run_report(const RunConfig& config) {
  Stopwatch sw;
  json report = json::object();
  auto maybe = [&](const char* key, const char* file) {
    auto p = config.output_dir / file;
    if (std::filesystem::exists(p)) report[key] = json::parse(io::read_file(p));
  };
  maybe("k_sweep", "k_sweep.json");
  maybe("consistency_scores", "consistency_scores.json");
  maybe("group_eval", "group_eval.json");
  maybe("crowdtruth", "ct_scores.json");
  maybe("comparison", "comparison.json");
  maybe("venn", "venn.json");
  maybe("jaccard", "jaccard.json");
  if (report.empty())
    throw std::runtime_error("report: no artifacts found under " + config.output_dir.string());
  write_json_file(config.output_dir / "analysis_report.json", report);
  write_manifest(config, "report", {{"total", sw.ms()}});
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = {
      "ingest",  "simulate", "score",  "filter",    "aggregate", "eval-group",
      "crowdtruth", "compare",  "sweep", "stability", "report"};
  return names;
}

void run_subcommand(const std::string& name, const RunConfig& config, bool dry_run) {
  std::filesystem::create_directories(config.output_dir);
  if (name == "ingest") run_ingest(config);
  else if (name == "simulate") run_simulate(config);
  else if (name == "score") run_score(config, dry_run);
  else if (name == "filter") run_filter(config);
  else if (name == "aggregate") run_aggregate(config);
  else if (name == "eval-group") run_eval_group(config, dry_run);
  else if (name == "crowdtruth") run_crowdtruth(config);
  else if (name == "compare") run_compare(config);
  else if (name == "sweep") run_sweep(config, dry_run);
  else if (name == "stability") run_stability(config);
  else if (name == "report") run_report(config);
  else throw std::invalid_argument("unknown subcommand: " + name);
}

}  // namespace article
