#include "article/crowdtruth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace article {

std::vector<WorkerVector> build_vectors(const Dataset& dataset) {
  std::vector<WorkerVector> out;
  out.reserve(dataset.annotations().size());
  for (const auto& a : dataset.annotations()) {
    WorkerVector v;
    v.worker_id = a.annotator_id;
    v.unit_id = a.comment_id;
    v.vector[a.binary_label == Label::offensive ? 0 : 1] = 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

double cosine(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  double dot = a[0] * b[0] + a[1] * b[1];
  double na = std::sqrt(a[0] * a[0] + a[1] * a[1]);
  double nb = std::sqrt(b[0] * b[0] + b[1] * b[1]);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (na * nb);
}

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

QualityScores quality_fixpoint(const std::vector<WorkerVector>& vectors,
                               double tolerance, std::size_t max_iter) {
  // stable integer indices, sorted ids for deterministic enumeration
  std::map<std::string, std::size_t> worker_idx, unit_idx;
  for (const auto& v : vectors) {
    worker_idx.emplace(v.worker_id, 0);
    unit_idx.emplace(v.unit_id, 0);
  }
  std::vector<std::string> workers, units;
  for (auto& [id, idx] : worker_idx) { idx = workers.size(); workers.push_back(id); }
  for (auto& [id, idx] : unit_idx) { idx = units.size(); units.push_back(id); }

  struct Entry { std::size_t worker; std::array<double, 2> vec; };
  std::vector<std::vector<Entry>> on_unit(units.size());
  for (const auto& v : vectors)
    on_unit[unit_idx.at(v.unit_id)].push_back({worker_idx.at(v.worker_id), v.vector});
  for (auto& entries : on_unit)
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.worker < b.worker; });

  QualityScores result;
  std::vector<bool> unit_active(units.size(), true);
  for (std::size_t u = 0; u < units.size(); ++u)
    if (on_unit[u].size() < 2) {
      unit_active[u] = false;
      ++result.skipped_single_worker_units;
    }

  std::vector<double> wqs(workers.size(), 1.0), uqs(units.size(), 1.0);
  std::vector<double> wwa(workers.size(), 1.0), wua(workers.size(), 1.0);

  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    double max_change = 0.0;

    // UQS from the previous iteration's WQS
    std::vector<double> uqs_new = uqs;
    for (std::size_t u = 0; u < units.size(); ++u) {
      if (!unit_active[u]) continue;
      const auto& entries = on_unit[u];
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < entries.size(); ++i)
        for (std::size_t j = i + 1; j < entries.size(); ++j) {
          double w = wqs[entries[i].worker] * wqs[entries[j].worker];
          num += w * cosine(entries[i].vec, entries[j].vec);
          den += w;
        }
      uqs_new[u] = safe_div(num, den);
      max_change = std::max(max_change, std::abs(uqs_new[u] - uqs[u]));
    }

    // WQS = WWA * WUA, with co-worker weights from the previous WQS
    std::vector<double> wwa_num(workers.size(), 0.0), wwa_den(workers.size(), 0.0);
    std::vector<double> wua_num(workers.size(), 0.0), wua_den(workers.size(), 0.0);
    for (std::size_t u = 0; u < units.size(); ++u) {
      if (!unit_active[u]) continue;
      const auto& entries = on_unit[u];
      std::array<double, 2> total{0.0, 0.0};
      for (const auto& e : entries) {
        total[0] += e.vec[0];
        total[1] += e.vec[1];
      }
      for (const auto& e : entries) {
        for (const auto& other : entries) {
          if (other.worker == e.worker) continue;
          double w = wqs[other.worker] * uqs_new[u];
          wwa_num[e.worker] += w * cosine(e.vec, other.vec);
          wwa_den[e.worker] += w;
        }
        std::array<double, 2> rest{total[0] - e.vec[0], total[1] - e.vec[1]};
        wua_num[e.worker] += uqs_new[u] * cosine(e.vec, rest);
        wua_den[e.worker] += uqs_new[u];
      }
    }

    std::vector<double> wqs_new = wqs;
    for (std::size_t w = 0; w < workers.size(); ++w) {
      wwa[w] = safe_div(wwa_num[w], wwa_den[w]);
      wua[w] = safe_div(wua_num[w], wua_den[w]);
      wqs_new[w] = wwa[w] * wua[w];
      max_change = std::max(max_change, std::abs(wqs_new[w] - wqs[w]));
    }

    uqs = std::move(uqs_new);
    wqs = std::move(wqs_new);
    result.iterations_used = iter;
    if (max_change < tolerance) {
      result.converged = true;
      break;
    }
  }

  for (std::size_t w = 0; w < workers.size(); ++w) {
    result.wqs[workers[w]] = wqs[w];
    result.wwa[workers[w]] = wwa[w];
    result.wua[workers[w]] = wua[w];
  }
  for (std::size_t u = 0; u < units.size(); ++u)
    if (unit_active[u]) result.uqs[units[u]] = uqs[u];
  return result;
}

std::pair<std::set<std::string>, std::set<std::string>> filter_by_wqs(
    const QualityScores& scores, double threshold) {
  if (threshold < 0.0 || threshold > 1.0)
    throw std::invalid_argument("threshold must be in [0,1]");
  std::set<std::string> kept, removed;
  for (const auto& [id, wqs] : scores.wqs) {
    if (wqs >= threshold) kept.insert(id);
    else removed.insert(id);
  }
  return {std::move(kept), std::move(removed)};
}

}  // namespace article
