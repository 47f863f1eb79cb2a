#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "article/dataset.hpp"
#include "article/llm_backend.hpp"

namespace article {

enum class F1Mode { binary, macro };

struct ConsistencyConfig {
  std::size_t n_train = 10;
  double k = 0.45;
  std::uint64_t seed = 0;
  Label positive_class = Label::offensive;
  F1Mode f1_mode = F1Mode::binary;

  void validate() const;
};

struct PredictionRecord {
  std::string comment_id;
  Label predicted;
  Label gold;
};

struct ConsistencyScore {
  std::string annotator_id;
  double f1 = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_unparseable = 0;
  std::vector<PredictionRecord> predictions;  // parseable ones only
};

double f1_score(const std::vector<Label>& predictions, const std::vector<Label>& golds,
                F1Mode mode, Label positive_class);

ConsistencyScore score_annotator(const Annotator& annotator, const Dataset& dataset,
                                 Backend& backend, const BackendConfig& backend_cfg,
                                 const PromptTemplate& tmpl, const ConsistencyConfig& cfg);

struct ScoreRunResult {
  std::vector<ConsistencyScore> scores;          // sorted by annotator_id
  std::vector<std::string> unscorable;           // too few annotations
  std::vector<std::string> errored;              // backend failures
};

// Scores every annotator in the dataset; per-annotator work runs on up to
// backend_cfg.max_concurrency threads. Results are order-independent.
ScoreRunResult score_all_annotators(const Dataset& dataset, Backend& backend,
                                    const BackendConfig& backend_cfg,
                                    const PromptTemplate& tmpl,
                                    const ConsistencyConfig& cfg);

struct FilterResult {
  std::set<std::string> consistent;
  std::set<std::string> inconsistent;
};

// inconsistent iff f1 < k (strict)
FilterResult filter_annotators(const std::vector<ConsistencyScore>& scores, double k);

struct RetentionStats {
  double pct_annotators_remaining = 0.0;
  double pct_comments_remaining = 0.0;
};

// Per-group retention. A comment remains for a group if at least one
// consistent annotator of that group annotated it.
std::map<std::string, RetentionStats> retention_stats(
    const Dataset& dataset, const std::set<std::string>& consistent);

}  // namespace article
