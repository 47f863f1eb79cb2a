#include "article/consistency.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

namespace article {

void ConsistencyConfig::validate() const {
  if (k < 0.0 || k > 1.0) throw std::invalid_argument("k must be in [0,1]");
  if (n_train < 1) throw std::invalid_argument("n_train must be >= 1");
}

namespace {

double binary_f1(const std::vector<Label>& predictions, const std::vector<Label>& golds,
                 Label positive) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    bool p = predictions[i] == positive;
    bool g = golds[i] == positive;
    if (p && g) ++tp;
    else if (p && !g) ++fp;
    else if (!p && g) ++fn;
  }
  if (tp + fp + fn == 0) return 1.0;  // positive class absent on both sides
  if (tp == 0) return 0.0;
  return 2.0 * tp / (2.0 * tp + fp + fn);
}

}  // namespace

double f1_score(const std::vector<Label>& predictions, const std::vector<Label>& golds,
                F1Mode mode, Label positive_class) {
  if (predictions.size() != golds.size())
    throw std::invalid_argument("f1_score: length mismatch");
  if (predictions.empty()) throw std::invalid_argument("f1_score: empty input");
  if (mode == F1Mode::binary) return binary_f1(predictions, golds, positive_class);
  return 0.5 * (binary_f1(predictions, golds, Label::offensive) +
                binary_f1(predictions, golds, Label::non_offensive));
}

ConsistencyScore score_annotator(const Annotator& annotator, const Dataset& dataset,
                                 Backend& backend, const BackendConfig& backend_cfg,
                                 const PromptTemplate& tmpl, const ConsistencyConfig& cfg) {
  cfg.validate();
  auto annotations = dataset.annotations_of(annotator.id);
  auto [train, test] = annotator_split(annotations, cfg.n_train, cfg.seed);

  std::vector<IclExample> icl;
  icl.reserve(train.size());
  for (const auto* a : train)
    icl.emplace_back(dataset.comment(a->comment_id).text, a->binary_label);

  ConsistencyScore score;
  score.annotator_id = annotator.id;
  score.n_train = train.size();
  score.n_test = test.size();

  std::vector<Label> preds, golds;
  for (const auto* a : test) {
    const std::string& text = dataset.comment(a->comment_id).text;
    ParsedPrediction pred;
    try {
      pred = predict_label(backend, backend_cfg, tmpl, icl, text);
    } catch (const std::exception& e) {
      throw std::runtime_error("annotator " + annotator.id + ", comment " + a->comment_id +
                               ": " + e.what());
    }
    if (!pred.label) {
      ++score.n_unparseable;
      continue;
    }
    preds.push_back(*pred.label);
    golds.push_back(a->binary_label);
    score.predictions.push_back({a->comment_id, *pred.label, a->binary_label});
  }

  if (preds.empty())
    throw std::runtime_error("annotator " + annotator.id + ": every prediction unparseable");
  score.f1 = f1_score(preds, golds, cfg.f1_mode, cfg.positive_class);
  return score;
}

ScoreRunResult score_all_annotators(const Dataset& dataset, Backend& backend,
                                    const BackendConfig& backend_cfg,
                                    const PromptTemplate& tmpl,
                                    const ConsistencyConfig& cfg) {
  cfg.validate();
  const auto& annotators = dataset.annotators();

  struct Slot {
    enum class State { scored, unscorable, errored } state = State::errored;
    ConsistencyScore score;
    std::string error;
  };
  std::vector<Slot> slots(annotators.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= annotators.size()) return;
      const Annotator& a = annotators[i];
      if (dataset.annotations_of(a.id).size() < cfg.n_train + 1) {
        slots[i].state = Slot::State::unscorable;
        continue;
      }
      try {
        slots[i].score = score_annotator(a, dataset, backend, backend_cfg, tmpl, cfg);
        slots[i].state = Slot::State::scored;
      } catch (const std::exception& e) {
        slots[i].state = Slot::State::errored;
        slots[i].error = e.what();
      }
    }
  };

  int n_threads = std::min<int>(backend_cfg.max_concurrency,
                                static_cast<int>(annotators.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ScoreRunResult result;
  for (std::size_t i = 0; i < annotators.size(); ++i) {
    switch (slots[i].state) {
      case Slot::State::scored: result.scores.push_back(std::move(slots[i].score)); break;
      case Slot::State::unscorable: result.unscorable.push_back(annotators[i].id); break;
      case Slot::State::errored: result.errored.push_back(annotators[i].id); break;
    }
  }
  std::sort(result.scores.begin(), result.scores.end(),
            [](const ConsistencyScore& a, const ConsistencyScore& b) {
              return a.annotator_id < b.annotator_id;
            });
  std::sort(result.unscorable.begin(), result.unscorable.end());
  std::sort(result.errored.begin(), result.errored.end());
  return result;
}

FilterResult filter_annotators(const std::vector<ConsistencyScore>& scores, double k) {
  if (k < 0.0 || k > 1.0) throw std::invalid_argument("k must be in [0,1]");
  FilterResult r;
  for (const auto& s : scores) {
    if (s.f1 < k) r.inconsistent.insert(s.annotator_id);
    else r.consistent.insert(s.annotator_id);
  }
  return r;
}

std::map<std::string, RetentionStats> retention_stats(
    const Dataset& dataset, const std::set<std::string>& consistent) {
  for (const auto& id : consistent)
    if (!dataset.has_annotator(id))
      throw std::invalid_argument("retention_stats: unknown annotator " + id);

  std::map<std::string, std::size_t> group_total, group_kept;
  for (const auto& a : dataset.annotators()) {
    ++group_total[a.group];
    if (consistent.count(a.id)) ++group_kept[a.group];
  }

  std::map<std::string, std::size_t> comments_total, comments_kept;
  for (const auto& c : dataset.comments()) {
    std::set<std::string> groups_here, groups_kept_here;
    for (const auto* ann : dataset.annotations_on(c.id)) {
      const auto& group = dataset.annotator(ann->annotator_id).group;
      groups_here.insert(group);
      if (consistent.count(ann->annotator_id)) groups_kept_here.insert(group);
    }
    for (const auto& g : groups_here) ++comments_total[g];
    for (const auto& g : groups_kept_here) ++comments_kept[g];
  }

  std::map<std::string, RetentionStats> out;
  for (const auto& [group, total] : group_total) {
    if (total == 0) throw std::logic_error("empty group " + group);
    RetentionStats s;
    s.pct_annotators_remaining = 100.0 * group_kept[group] / total;
    std::size_t ct = comments_total[group];
    s.pct_comments_remaining = ct == 0 ? 0.0 : 100.0 * comments_kept[group] / ct;
    out[group] = s;
  }
  return out;
}

}  // namespace article
