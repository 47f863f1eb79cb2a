#include "article/analysis.hpp"

#include <algorithm>
#include <stdexcept>

#include "article/io.hpp"

namespace article {

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::set<std::string> median_split(const std::map<std::string, double>& scores) {
  if (scores.empty()) throw std::invalid_argument("median_split: no scores");
  std::vector<double> values;
  values.reserve(scores.size());
  for (const auto& [id, v] : scores) values.push_back(v);
  std::sort(values.begin(), values.end());
  double median = values[(values.size() - 1) / 2];  // lower interpolation

  std::set<std::string> inconsistent;
  for (const auto& [id, v] : scores)
    if (v < median) inconsistent.insert(id);
  return inconsistent;
}

VennCounts venn_counts(const std::set<std::string>& a, const std::set<std::string>& b) {
  VennCounts v;
  for (const auto& x : a) {
    if (b.count(x)) ++v.both;
    else ++v.only_a;
  }
  for (const auto& x : b)
    if (!a.count(x)) ++v.only_b;
  return v;
}

namespace {

std::vector<std::string> sorted_groups(const Dataset& dataset) {
  std::set<std::string> groups;
  for (const auto& a : dataset.annotators()) groups.insert(a.group);
  return {groups.begin(), groups.end()};
}

}  // namespace

KSweepReport k_sweep(const Dataset& dataset, const std::vector<double>& ks,
                     Backend& backend, const BackendConfig& backend_cfg,
                     const PromptTemplate& tmpl, const ConsistencyConfig& consistency_cfg,
                     const GroupEvalConfig& group_cfg, TiePolicy tie_policy) {
  if (!std::is_sorted(ks.begin(), ks.end()))
    throw std::invalid_argument("k values must be sorted ascending");
  for (double k : ks)
    if (k < 0.0 || k > 1.0) throw std::invalid_argument("k values must be in [0,1]");

  KSweepReport report;
  auto run = score_all_annotators(dataset, backend, backend_cfg, tmpl, consistency_cfg);
  report.scores = std::move(run.scores);
  report.unscorable = std::move(run.unscorable);
  report.errored = std::move(run.errored);

  auto groups = sorted_groups(dataset);
  for (double k : ks) {
    auto filtered = filter_annotators(report.scores, k);
    report.inconsistent_by_k[k] = filtered.inconsistent;
    auto retention = retention_stats(dataset, filtered.consistent);
    for (const auto& group : groups) {
      KSweepRow row;
      row.k = k;
      row.group = group;
      auto rit = retention.find(group);
      if (rit != retention.end()) {
        row.pct_annotators = rit->second.pct_annotators_remaining;
        row.pct_comments = rit->second.pct_comments_remaining;
      }
      try {
        auto table = aggregate_labels(dataset, filtered.consistent, group, tie_policy);
        row.dropped_ties = table.dropped_ties;
        auto eval = evaluate_group(table, backend, backend_cfg, tmpl, group_cfg);
        row.f1_mean = eval.f1_mean;
        row.ci95_halfwidth = eval.ci95_halfwidth;
        row.f1_per_seed = eval.f1_per_seed;
        row.n_train = eval.n_train;
        row.n_test = eval.n_test;
      } catch (const std::exception& e) {
        throw std::runtime_error("k=" + io::fmt3(k) + ", group '" + group + "': " + e.what());
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::vector<ComparisonRow> compare_methods(
    const Dataset& dataset, const std::set<std::string>& article_kept, double article_threshold,
    const std::set<std::string>& ct_kept, double ct_threshold, Backend& backend,
    const BackendConfig& backend_cfg, const PromptTemplate& tmpl, const GroupEvalConfig& group_cfg,
    TiePolicy tie_policy) {
  std::vector<ComparisonRow> rows;
  struct Method {
    const char* name;
    const std::set<std::string>* kept;
    double threshold;
  };
  const Method methods[] = {{"article", &article_kept, article_threshold},
                            {"crowdtruth", &ct_kept, ct_threshold}};
  for (const auto& group : sorted_groups(dataset)) {
    for (const auto& m : methods) {
      ComparisonRow row;
      row.group = group;
      row.method = m.name;
      row.threshold = m.threshold;
      try {
        auto table = aggregate_labels(dataset, *m.kept, group, tie_policy);
        auto eval = evaluate_group(table, backend, backend_cfg, tmpl, group_cfg);
        row.f1_mean = eval.f1_mean;
        row.ci95_halfwidth = eval.ci95_halfwidth;
        row.f1_per_seed = eval.f1_per_seed;
      } catch (const std::invalid_argument&) {
        row.group_emptied = true;  // flagged, not fatal
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace article
