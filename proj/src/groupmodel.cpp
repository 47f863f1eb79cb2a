#include "article/groupmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "article/rng.hpp"

namespace article {

void GroupEvalConfig::validate() const {
  if (train_frac <= 0.0 || train_frac >= 1.0)
    throw std::invalid_argument("train_frac must be in (0,1)");
  if (n_icl < 1) throw std::invalid_argument("n_icl must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("need at least one seed");
}

GroupLabelTable aggregate_labels(const Dataset& dataset,
                                 const std::set<std::string>& consistent,
                                 const std::string& group, TiePolicy tie_policy) {
  std::set<std::string> members;
  for (const auto& a : dataset.annotators())
    if (a.group == group && consistent.count(a.id)) members.insert(a.id);
  if (members.empty())
    throw std::invalid_argument("group '" + group + "' has no consistent annotators");

  GroupLabelTable table;
  table.group = group;
  for (const auto& c : dataset.comments()) {
    std::size_t off = 0, non = 0;
    for (const auto* ann : dataset.annotations_on(c.id)) {
      if (!members.count(ann->annotator_id)) continue;
      if (ann->binary_label == Label::offensive) ++off;
      else ++non;
    }
    if (off + non == 0) continue;
    if (off == non && tie_policy == TiePolicy::drop) {
      ++table.dropped_ties;
      continue;
    }
    GroupLabelEntry e;
    e.comment_text = c.text;
    e.votes_offensive = off;
    e.votes_non_offensive = non;
    e.label = off >= non ? Label::offensive : Label::non_offensive;
    if (off == non) e.label = Label::offensive;  // tie_policy == offensive
    table.entries.emplace(c.id, std::move(e));
  }
  return table;
}

std::pair<double, double> ci95(const std::vector<double>& values) {
  if (values.size() < 2) throw std::invalid_argument("ci95 needs at least 2 values");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / (n - 1.0));
  boost::math::students_t dist(n - 1.0);
  double t = boost::math::quantile(dist, 0.975);
  return {mean, t * sd / std::sqrt(n)};
}

GroupEvalResult evaluate_group(const GroupLabelTable& table, Backend& backend,
                               const BackendConfig& backend_cfg, const PromptTemplate& tmpl,
                               const GroupEvalConfig& cfg) {
  cfg.validate();
  const std::size_t n = table.entries.size();
  if (n < cfg.n_icl + 1)
    throw std::invalid_argument("group '" + table.group + "' has " + std::to_string(n) +
                                " entries, needs at least " + std::to_string(cfg.n_icl + 1));

  std::vector<const std::pair<const std::string, GroupLabelEntry>*> items;
  items.reserve(n);
  for (const auto& kv : table.entries) items.push_back(&kv);

  GroupEvalResult result;
  result.group = table.group;

  for (std::uint64_t seed : cfg.seeds) {
    auto order = items;
    Rng rng(derive_seed(seed, "group_eval:" + table.group));
    rng.shuffle(order);

    std::size_t n_train = static_cast<std::size_t>(std::floor(cfg.train_frac * n));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    if (n_train < cfg.n_icl)
      throw std::invalid_argument("group '" + table.group + "': training split of " +
                                  std::to_string(n_train) + " cannot supply " +
                                  std::to_string(cfg.n_icl) + " ICL examples");
    result.n_train = n_train;
    result.n_test = n - n_train;

    std::vector<Label> preds, golds;
    for (std::size_t t = n_train; t < n; ++t) {
      // fresh ICL draw per test instance
      std::vector<std::size_t> pool(n_train);
      for (std::size_t i = 0; i < n_train; ++i) pool[i] = i;
      std::vector<IclExample> icl;
      icl.reserve(cfg.n_icl);
      for (std::size_t j = 0; j < cfg.n_icl; ++j) {
        std::size_t pick = j + rng.next_index(n_train - j);
        std::swap(pool[j], pool[pick]);
        const auto& e = order[pool[j]]->second;
        icl.emplace_back(e.comment_text, e.label);
      }
      auto pred = predict_label(backend, backend_cfg, tmpl, icl, order[t]->second.comment_text);
      if (!pred.label) {
        ++result.n_unparseable;
        continue;
      }
      preds.push_back(*pred.label);
      golds.push_back(order[t]->second.label);
    }
    if (preds.empty())
      throw std::runtime_error("group '" + table.group + "': every prediction unparseable");
    result.f1_per_seed.push_back(f1_score(preds, golds, F1Mode::binary, Label::offensive));
  }

  if (result.f1_per_seed.size() >= 2) {
    auto [mean, hw] = ci95(result.f1_per_seed);
    result.f1_mean = mean;
    result.ci95_halfwidth = hw;
  } else {
    result.f1_mean = result.f1_per_seed.front();
    result.ci95_halfwidth = 0.0;
  }
  return result;
}

}  // namespace article
