#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "article/analysis.hpp"
#include "article/rng.hpp"

using namespace article;

namespace {

std::set<std::string> random_set(Rng& rng, std::size_t universe, double p) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < universe; ++i)
    if (rng.next_double() < p) out.insert("x" + std::to_string(i));
  return out;
}

}  // namespace

TEST_CASE("jaccard basics") {
  std::set<std::string> a = {"a", "b", "c"};
  std::set<std::string> b = {"b", "c", "d"};
  CHECK(jaccard(a, b) == doctest::Approx(0.5));
  CHECK(jaccard(a, a) == doctest::Approx(1.0));
  CHECK(jaccard(a, {"z"}) == doctest::Approx(0.0));
  CHECK(jaccard({}, {}) == doctest::Approx(1.0));
}

TEST_CASE("jaccard symmetry and bounds on random sets") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    auto a = random_set(rng, 20, rng.next_double());
    auto b = random_set(rng, 20, rng.next_double());
    double ab = jaccard(a, b);
    CHECK(ab == jaccard(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(jaccard(a, a) == doctest::Approx(1.0));
  }
}

TEST_CASE("median_split uses lower interpolation and strict less-than") {
  SUBCASE("odd count") {
    std::map<std::string, double> scores = {{"a", 0.2}, {"b", 0.5}, {"c", 0.8}};
    CHECK(median_split(scores) == std::set<std::string>{"a"});
  }
  SUBCASE("all equal flags nobody") {
    std::map<std::string, double> scores = {{"a", 0.3}, {"b", 0.3}, {"c", 0.3}};
    CHECK(median_split(scores).empty());
  }
  SUBCASE("even count takes the lower central value") {
    std::map<std::string, double> scores = {{"a", 0.1}, {"b", 0.9}};
    CHECK(median_split(scores).empty());  // median 0.1, nothing strictly below
  }
  SUBCASE("flags at most ceil(n/2)") {
    Rng rng(23);
    for (int trial = 0; trial < 300; ++trial) {
      std::map<std::string, double> scores;
      std::size_t n = 1 + rng.next_index(25);
      for (std::size_t i = 0; i < n; ++i)
        scores["a" + std::to_string(i)] = rng.next_index(5) / 4.0;  // many ties
      auto flagged = median_split(scores);
      CHECK(flagged.size() <= (n + 1) / 2);
      // everything flagged is strictly below everything unflagged's median share
      double median = [&] {
        std::vector<double> v;
        for (auto& [id, s] : scores) v.push_back(s);
        std::sort(v.begin(), v.end());
        return v[(v.size() - 1) / 2];
      }();
      for (const auto& id : flagged) CHECK(scores.at(id) < median);
    }
  }
}

TEST_CASE("venn_counts partitions the union") {
  std::set<std::string> a = {"1", "2", "3"};
  std::set<std::string> b = {"3", "4"};
  auto v = venn_counts(a, b);
  CHECK(v.only_a == 2);
  CHECK(v.only_b == 1);
  CHECK(v.both == 1);

  SUBCASE("equal sets") {
    auto ve = venn_counts(a, a);
    CHECK(ve.only_a == 0);
    CHECK(ve.only_b == 0);
    CHECK(ve.both == a.size());
  }
  SUBCASE("disjoint sets") {
    auto vd = venn_counts(a, {"9"});
    CHECK(vd.both == 0);
  }
  SUBCASE("partition identities on random sets") {
    Rng rng(29);
    for (int trial = 0; trial < 300; ++trial) {
      auto x = random_set(rng, 15, rng.next_double());
      auto y = random_set(rng, 15, rng.next_double());
      auto vc = venn_counts(x, y);
      CHECK(vc.only_a + vc.both == x.size());
      CHECK(vc.only_b + vc.both == y.size());
      std::set<std::string> uni = x;
      uni.insert(y.begin(), y.end());
      CHECK(vc.only_a + vc.only_b + vc.both == uni.size());
    }
  }
}
