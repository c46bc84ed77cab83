#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "kpg/error.hpp"
#include "kpg/metrics.hpp"

using namespace kpg;

namespace {

double ari(const std::vector<int>& a, const std::vector<int>& b) { return adjusted_rand_index(a, b); }

Dendrogram dendrogram_of(const std::vector<double>& d, int n, Linkage link = Linkage::Average) {
  return agglomerate(DissimilarityMatrix::from_values(static_cast<std::size_t>(n), d), link);
}

}  // namespace

TEST_CASE("ARI examples") {
  CHECK(ari({0, 0, 1, 1}, {1, 1, 0, 0}) == 1.0);
  CHECK(ari({0, 0, 1, 1}, {0, 1, 0, 1}) == -0.5);
  CHECK(ari({0, 1, 2, 3}, {0, 0, 0, 0}) == 0.0);
  CHECK(ari({0, 1, 2}, {5, 6, 7}) == 1.0);
  CHECK(ari({0, 0, 0}, {1, 1, 1}) == 1.0);
  CHECK_THROWS_AS(ari({0, 1}, {0}), Error);
  CHECK_THROWS_AS(ari({0}, {0}), Error);
}

TEST_CASE("ARI agrees with the contingency formula on all partitions of five") {
  auto parts = oracle::set_partitions(5);
  REQUIRE(parts.size() == 52);
  double worst = 0;
  for (const auto& a : parts)
    for (const auto& b : parts) {
      double got = ari(a, b);
      worst = std::max(worst, std::abs(got - oracle::ari_contingency(a, b)));
      CHECK(got == ari(b, a));
      if (a == b) CHECK(got == 1.0);
      else CHECK(got < 1.0);
    }
  CHECK(worst <= 1e-12);
}

TEST_CASE("ARI is invariant under relabeling") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> lab(0, 3);
  for (int t = 0; t < 200; ++t) {
    std::vector<int> a(9), b(9);
    for (auto& v : a) v = lab(rng);
    for (auto& v : b) v = lab(rng);
    std::vector<int> relabeled = a;
    for (auto& v : relabeled) v = 10 - 3 * v;
    CHECK(ari(relabeled, b) == ari(a, b));
    CHECK(ari(a, b) == doctest::Approx(oracle::ari_pairs(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("inconsistent pairs") {
  KeypointSchema s = fixtures::schema_of({3, 2});
  CHECK(inconsistent_pairs(s, std::vector<int>{0, 1, 2, 3, 4}).count == 0);
  InconsistentPairs all = inconsistent_pairs(s, std::vector<int>{0, 0, 0, 1, 2});
  CHECK(all.count == 3);
  REQUIRE(all.pairs.size() == 3);
  CHECK(all.pairs[0].class_id == 1);
  CHECK(all.pairs[0].kp_a == 0);
  CHECK(all.pairs[0].kp_b == 1);
  CHECK(inconsistent_pairs(s, std::vector<int>{0, 1, 2, 0, 1}).count == 0);
  CHECK(inconsistent_pairs(s, std::vector<int>{0, 1, 2, 3, 3}).pairs[0].class_id == 2);
  CHECK(ambiguous_pairs(s, std::vector<int>{0, 0, 1, 2, 3}, std::vector<int>{0, 0, 0, 1, 2}) == 1);
}

TEST_CASE("ambiguity matrix on a two keypoint class") {
  KeypointSchema s = fixtures::schema_of({2});
  Dendrogram g = dendrogram_of({0, 1, 1, 0}, 2);
  std::vector<int> counts{1, 2};
  AmbiguityMatrix m = ambiguity_matrix(s, g, g, counts, counts);
  CHECK(m.at(0, 0) == 1);
  CHECK(m.at(0, 1) == 0);
  CHECK(m.at(1, 0) == 0);
  CHECK(m.at(1, 1) == 0);
  REQUIRE(m.frontier.size() == 2);
  CHECK(m.frontier[0] == std::pair<int, int>{1, 2});
  CHECK(m.frontier[1] == std::pair<int, int>{2, 1});
}

TEST_CASE("ambiguity matrix matches exhaustive cuts on random schemas") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    KeypointSchema s = fixtures::random_schema(rng, 3, 4);
    int n = static_cast<int>(s.num_keypoints());
    if (n < 2) continue;
    auto dr = oracle::random_matrix(rng, n, true), dh = oracle::random_matrix(rng, n, false);
    Dendrogram gr = dendrogram_of(dr, n), gh = dendrogram_of(dh, n, Linkage::Complete);
    std::vector<int> counts;
    for (int m = 1; m <= n; ++m) counts.push_back(m);
    AmbiguityMatrix m = ambiguity_matrix(s, gr, gh, counts, counts);
    auto cls = fixtures::class_vector(s);
    std::vector<std::vector<long long>> cells(counts.size(), std::vector<long long>(counts.size()));
    for (std::size_t r = 0; r < counts.size(); ++r)
      for (std::size_t h = 0; h < counts.size(); ++h) {
        cells[r][h] = oracle::ambiguous(cls, oracle::cut(dr, n, oracle::Link::Average, counts[r]),
                                        oracle::cut(dh, n, oracle::Link::Complete, counts[h]));
        CHECK(m.at(r, h) == cells[r][h]);
        if (r + 1 < counts.size()) CHECK(m.at(r + 1, h) <= m.at(r, h));
        if (h + 1 < counts.size()) CHECK(m.at(r, h + 1) <= m.at(r, h));
      }
    CHECK(m.at(counts.size() - 1, 0) == 0);
    CHECK(m.at(0, counts.size() - 1) == 0);
    CHECK(m.frontier == oracle::zero_frontier(counts, counts, cells));
  }
}

TEST_CASE("consensus curve") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 3 + trial % 8;
    auto da = oracle::random_matrix(rng, n, false), db = oracle::random_matrix(rng, n, false);
    Dendrogram a = dendrogram_of(da, n), b = dendrogram_of(db, n);
    std::vector<int> counts;
    for (int m = 1; m <= n; ++m) counts.push_back(m);
    auto self = consensus_curve(a, a, counts);
    for (const auto& p : self) CHECK(p.ari == 1.0);
    auto curve = consensus_curve(a, b, counts);
    REQUIRE(curve.size() == counts.size());
    CHECK(curve.back().ari == 1.0);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      CHECK(curve[i].m == counts[i]);
      double expected = oracle::ari_contingency(oracle::cut(da, n, oracle::Link::Average, counts[i]),
                                                oracle::cut(db, n, oracle::Link::Average, counts[i]));
      CHECK(curve[i].ari == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("count lists") {
  CHECK(parse_counts("10,20,30") == std::vector<int>{10, 20, 30});
  CHECK(parse_counts("10:40:10") == std::vector<int>{10, 20, 30, 40});
  CHECK(parse_counts("1,5:7:1") == std::vector<int>{1, 5, 6, 7});
  CHECK_THROWS_AS(parse_counts("a"), Error);
  CHECK_THROWS_AS(parse_counts("5:1:1"), Error);
  CHECK_THROWS_AS(parse_counts("1:5:0"), Error);
}

TEST_CASE("consensus between groupings") {
  KeypointSchema s = fixtures::schema_of({2, 2});
  Grouping a{s.fingerprint(), 2, 4, {0, 1, 0, 1}, {0, 1, 2, 3}};
  Grouping b{s.fingerprint(), 2, 2, {0, 1, 0, 1}, {0, 0, 1, 1}};
  ConsensusReport r = compare_groupings(a, b);
  CHECK(r.ari_reg == 1.0);
  CHECK(r.ari_heat == 0.0);
  CHECK(consensus_to_json(r).find("\"ari\"") != std::string::npos);
}
