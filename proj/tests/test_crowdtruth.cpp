#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "article/crowdtruth.hpp"
#include "article/rng.hpp"
#include "test_util.hpp"

using namespace article;

namespace {

WorkerVector wv(const std::string& worker, const std::string& unit, Label label) {
  WorkerVector v;
  v.worker_id = worker;
  v.unit_id = unit;
  v.vector[label == Label::offensive ? 0 : 1] = 1.0;
  return v;
}

// Independent reference evaluator: literal transcription of the recurrences,
// naive nested loops over string-keyed maps, no shared code with the library.
struct ReferenceScores {
  std::map<std::string, double> wqs, uqs;
};

ReferenceScores reference_fixpoint(const std::vector<WorkerVector>& vectors, int iterations) {
  auto cosv = [](const std::array<double, 2>& a, const std::array<double, 2>& b) {
    double dot = a[0] * b[0] + a[1] * b[1];
    double na = std::sqrt(a[0] * a[0] + a[1] * a[1]);
    double nb = std::sqrt(b[0] * b[0] + b[1] * b[1]);
    return (na == 0 || nb == 0) ? 0.0 : dot / (na * nb);
  };
  ReferenceScores s;
  std::map<std::string, std::vector<const WorkerVector*>> per_unit;
  std::map<std::string, std::vector<const WorkerVector*>> per_worker;
  for (const auto& v : vectors) {
    per_unit[v.unit_id].push_back(&v);
    per_worker[v.worker_id].push_back(&v);
    s.wqs[v.worker_id] = 1.0;
    s.uqs[v.unit_id] = 1.0;
  }

  for (int it = 0; it < iterations; ++it) {
    auto wqs_prev = s.wqs;
    // UQS
    for (auto& [unit, vs] : per_unit) {
      double num = 0, den = 0;
      for (std::size_t i = 0; i < vs.size(); ++i)
        for (std::size_t j = i + 1; j < vs.size(); ++j) {
          double w = wqs_prev[vs[i]->worker_id] * wqs_prev[vs[j]->worker_id];
          num += w * cosv(vs[i]->vector, vs[j]->vector);
          den += w;
        }
      s.uqs[unit] = den == 0 ? 0.0 : num / den;
    }
    // WQS = WWA * WUA
    for (auto& [worker, mine] : per_worker) {
      double wwa_num = 0, wwa_den = 0, wua_num = 0, wua_den = 0;
      for (const auto* v : mine) {
        const auto& vs = per_unit[v->unit_id];
        if (vs.size() < 2) continue;
        std::array<double, 2> total{0, 0};
        for (const auto* o : vs) {
          total[0] += o->vector[0];
          total[1] += o->vector[1];
        }
        for (const auto* o : vs) {
          if (o->worker_id == worker) continue;
          double w = wqs_prev[o->worker_id] * s.uqs[v->unit_id];
          wwa_num += w * cosv(v->vector, o->vector);
          wwa_den += w;
        }
        std::array<double, 2> rest{total[0] - v->vector[0], total[1] - v->vector[1]};
        wua_num += s.uqs[v->unit_id] * cosv(v->vector, rest);
        wua_den += s.uqs[v->unit_id];
      }
      double wwa = wwa_den == 0 ? 0.0 : wwa_num / wwa_den;
      double wua = wua_den == 0 ? 0.0 : wua_num / wua_den;
      s.wqs[worker] = wwa * wua;
    }
  }
  return s;
}

std::vector<WorkerVector> dissenter_fixture() {
  // 3 workers x 4 units; C disagrees with unanimous A, B everywhere
  std::vector<WorkerVector> vs;
  for (int u = 0; u < 4; ++u) {
    std::string unit = "u" + std::to_string(u);
    Label majority = u % 2 ? Label::offensive : Label::non_offensive;
    Label minority = u % 2 ? Label::non_offensive : Label::offensive;
    vs.push_back(wv("A", unit, majority));
    vs.push_back(wv("B", unit, majority));
    vs.push_back(wv("C", unit, minority));
  }
  return vs;
}

}  // namespace

TEST_CASE("build_vectors one-hot encodes annotations") {
  auto d = testutil::tiny_dataset();
  auto vectors = build_vectors(d);
  CHECK(vectors.size() == d.annotations().size());
  for (const auto& v : vectors) {
    CHECK(v.vector[0] + v.vector[1] == doctest::Approx(1.0));
    CHECK((v.vector[0] == 1.0 || v.vector[1] == 1.0));
  }
  // spot check polarity
  CHECK(vectors[0].vector[1] == 1.0);  // a1/c1 rating 1 -> non_offensive -> (0,1)
  CHECK(vectors[1].vector[0] == 1.0);  // a1/c2 rating 5 -> offensive -> (1,0)
}

TEST_CASE("unanimous dataset fixes at all ones immediately") {
  std::vector<WorkerVector> vs;
  for (int w = 0; w < 5; ++w)
    for (int u = 0; u < 10; ++u)
      vs.push_back(wv("w" + std::to_string(w), "u" + std::to_string(u), Label::offensive));

  auto scores = quality_fixpoint(vs);
  CHECK(scores.converged);
  CHECK(scores.iterations_used <= 1);
  for (const auto& [id, wqs] : scores.wqs) CHECK(wqs == doctest::Approx(1.0).epsilon(1e-9));
  for (const auto& [id, uqs] : scores.uqs) CHECK(uqs == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("two agreeing workers on one unit score 1") {
  std::vector<WorkerVector> vs = {wv("a", "u", Label::offensive), wv("b", "u", Label::offensive)};
  auto scores = quality_fixpoint(vs);
  CHECK(scores.wqs.at("a") == doctest::Approx(1.0));
  CHECK(scores.wqs.at("b") == doctest::Approx(1.0));
  CHECK(scores.uqs.at("u") == doctest::Approx(1.0));
}

TEST_CASE("a total dissenter scores strictly lowest and matches the reference") {
  auto vs = dissenter_fixture();
  auto scores = quality_fixpoint(vs, 1e-6, 100);
  CHECK(scores.converged);
  CHECK(scores.wqs.at("C") < scores.wqs.at("A"));
  CHECK(scores.wqs.at("A") == doctest::Approx(scores.wqs.at("B")).epsilon(1e-12));

  auto ref = reference_fixpoint(vs, 100);
  for (const auto& [id, wqs] : scores.wqs)
    CHECK(wqs == doctest::Approx(ref.wqs.at(id)).epsilon(1e-6));
  for (const auto& [id, uqs] : scores.uqs)
    CHECK(uqs == doctest::Approx(ref.uqs.at(id)).epsilon(1e-6));
}

TEST_CASE("fixpoint is invariant to input enumeration order") {
  auto vs = dissenter_fixture();
  auto shuffled = vs;
  Rng rng(9);
  rng.shuffle(shuffled);
  auto s1 = quality_fixpoint(vs);
  auto s2 = quality_fixpoint(shuffled);
  for (const auto& [id, wqs] : s1.wqs) CHECK(wqs == s2.wqs.at(id));
  for (const auto& [id, uqs] : s1.uqs) CHECK(uqs == s2.uqs.at(id));
}

TEST_CASE("scores stay in [0,1] on random inputs and converge") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<WorkerVector> vs;
    int n_workers = 3 + static_cast<int>(rng.next_index(5));
    int n_units = 3 + static_cast<int>(rng.next_index(6));
    for (int u = 0; u < n_units; ++u)
      for (int w = 0; w < n_workers; ++w)
        vs.push_back(wv("w" + std::to_string(w), "u" + std::to_string(u),
                        rng.next_double() < 0.5 ? Label::offensive : Label::non_offensive));
    auto scores = quality_fixpoint(vs, 1e-6, 100);
    CHECK(scores.converged);
    for (const auto& [id, v] : scores.wqs) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-12);
    }
    for (const auto& [id, v] : scores.uqs) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("removing a perfect worker from a unanimous dataset changes nothing") {
  std::vector<WorkerVector> vs;
  for (int w = 0; w < 4; ++w)
    for (int u = 0; u < 6; ++u)
      vs.push_back(wv("w" + std::to_string(w), "u" + std::to_string(u), Label::offensive));
  auto before = quality_fixpoint(vs);

  std::vector<WorkerVector> without;
  std::copy_if(vs.begin(), vs.end(), std::back_inserter(without),
               [](const WorkerVector& v) { return v.worker_id != "w3"; });
  auto after = quality_fixpoint(without);
  for (const auto& [id, wqs] : after.wqs)
    CHECK(wqs == doctest::Approx(before.wqs.at(id)).epsilon(1e-12));
}

TEST_CASE("single-worker units are skipped with a count") {
  std::vector<WorkerVector> vs = {wv("a", "u1", Label::offensive),
                                  wv("b", "u1", Label::offensive),
                                  wv("a", "u2", Label::offensive)};
  auto scores = quality_fixpoint(vs);
  CHECK(scores.skipped_single_worker_units == 1);
  CHECK(scores.uqs.count("u2") == 0);
}

TEST_CASE("filter_by_wqs keeps at-threshold workers") {
  QualityScores s;
  s.wqs = {{"a", 0.2}, {"b", 0.6}, {"c", 0.9}};
  auto [kept, removed] = filter_by_wqs(s, 0.6);
  CHECK(kept == std::set<std::string>{"b", "c"});
  CHECK(removed == std::set<std::string>{"a"});
  auto [kept0, removed0] = filter_by_wqs(s, 0.0);
  CHECK(kept0.size() == 3);
  CHECK(removed0.empty());
}
