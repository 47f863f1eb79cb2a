#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "article/consistency.hpp"
#include "article/dataset.hpp"
#include "article/groupmodel.hpp"

namespace article {

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

// strictly below the lower-interpolation median
std::set<std::string> median_split(const std::map<std::string, double>& scores);

struct VennCounts {
  std::size_t only_a = 0;
  std::size_t only_b = 0;
  std::size_t both = 0;
};

VennCounts venn_counts(const std::set<std::string>& a, const std::set<std::string>& b);

struct KSweepRow {
  double k = 0.0;
  std::string group;
  double f1_mean = 0.0;
  double ci95_halfwidth = 0.0;
  std::vector<double> f1_per_seed;
  double pct_annotators = 0.0;
  double pct_comments = 0.0;
  std::size_t dropped_ties = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

struct KSweepReport {
  std::vector<KSweepRow> rows;  // ordered by (k, group)
  std::map<double, std::set<std::string>> inconsistent_by_k;
  std::vector<ConsistencyScore> scores;
  std::vector<std::string> unscorable;
  std::vector<std::string> errored;
};

// Step-1 scores are computed once (they are k-independent); each k then
// filters, aggregates, and evaluates every group.
KSweepReport k_sweep(const Dataset& dataset, const std::vector<double>& ks,
                     Backend& backend, const BackendConfig& backend_cfg,
                     const PromptTemplate& tmpl, const ConsistencyConfig& consistency_cfg,
                     const GroupEvalConfig& group_cfg, TiePolicy tie_policy = TiePolicy::drop);

struct ComparisonRow {
  std::string group;
  std::string method;     // "article" or "crowdtruth"
  double threshold = 0.0; // k or WQS cutoff
  double f1_mean = 0.0;
  double ci95_halfwidth = 0.0;
  std::vector<double> f1_per_seed;
  bool group_emptied = false;
};

std::vector<ComparisonRow> compare_methods(
    const Dataset& dataset, const std::set<std::string>& article_kept, double article_threshold,
    const std::set<std::string>& ct_kept, double ct_threshold, Backend& backend,
    const BackendConfig& backend_cfg, const PromptTemplate& tmpl, const GroupEvalConfig& group_cfg,
    TiePolicy tie_policy = TiePolicy::drop);

}  // namespace article
