#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "article/consistency.hpp"
#include "article/dataset.hpp"
#include "article/llm_backend.hpp"

namespace article {

enum class TiePolicy { drop, offensive };

struct GroupLabelEntry {
  std::string comment_text;
  Label label = Label::non_offensive;
  std::size_t votes_offensive = 0;
  std::size_t votes_non_offensive = 0;
};

struct GroupLabelTable {
  std::string group;
  std::map<std::string, GroupLabelEntry> entries;  // comment_id -> entry
  std::size_t dropped_ties = 0;
};

struct GroupEvalConfig {
  double train_frac = 0.7;
  std::size_t n_icl = 15;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  void validate() const;
};

struct GroupEvalResult {
  std::string group;
  std::vector<double> f1_per_seed;
  double f1_mean = 0.0;
  double ci95_halfwidth = 0.0;
  std::size_t n_train = 0;   // from the last seed; identical split sizes per seed
  std::size_t n_test = 0;
  std::size_t n_unparseable = 0;  // summed across seeds
};

// Majority vote over the consistent annotators of one group.
GroupLabelTable aggregate_labels(const Dataset& dataset,
                                 const std::set<std::string>& consistent,
                                 const std::string& group,
                                 TiePolicy tie_policy = TiePolicy::drop);

GroupEvalResult evaluate_group(const GroupLabelTable& table, Backend& backend,
                               const BackendConfig& backend_cfg, const PromptTemplate& tmpl,
                               const GroupEvalConfig& cfg);

// mean and Student-t 95% half-width (n-1 dof)
std::pair<double, double> ci95(const std::vector<double>& values);

}  // namespace article
