#pragma once

// Reference implementations used only by tests. They are written for clarity
// rather than speed and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

enum class Link { Average, Complete };

/// Full-recompute agglomeration. states[s] is the partition (lists of
/// leaves) after s merges, so it has n - s clusters. Ties go to the pair with
/// the lexicographically smallest (smallest leaf, smallest leaf).
inline std::vector<std::vector<std::vector<int>>> agglomerate(const std::vector<double>& d, int n,
                                                              Link link) {
  struct Cluster {
    int id;
    std::vector<int> members;
  };
  std::vector<Cluster> live;
  for (int i = 0; i < n; ++i) live.push_back({i, {i}});

  auto snapshot = [&] {
    std::vector<std::vector<int>> parts;
    for (const auto& c : live) parts.push_back(c.members);
    return parts;
  };
  std::vector<std::vector<std::vector<int>>> states{snapshot()};

  for (int step = 0; step < n - 1; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::pair<int, int> best_key{std::numeric_limits<int>::max(), std::numeric_limits<int>::max()};
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < live.size(); ++i) {
      for (std::size_t j = i + 1; j < live.size(); ++j) {
        double value;
        if (link == Link::Complete) {
          value = -std::numeric_limits<double>::infinity();
          for (int a : live[i].members)
            for (int b : live[j].members) value = std::max(value, d[a * n + b]);
        } else {
          double sum = 0;
          for (int a : live[i].members)
            for (int b : live[j].members) sum += d[a * n + b];
          value = sum / static_cast<double>(live[i].members.size() * live[j].members.size());
        }
        // Members are kept sorted, so front() is the smallest leaf.
        int ri = live[i].members.front(), rj = live[j].members.front();
        std::pair<int, int> key{std::min(ri, rj), std::max(ri, rj)};
        if (value < best || (value == best && key < best_key)) {
          best = value;
          best_key = key;
          bi = i;
          bj = j;
        }
      }
    }
    Cluster merged{n + step, live[bi].members};
    merged.members.insert(merged.members.end(), live[bj].members.begin(), live[bj].members.end());
    std::sort(merged.members.begin(), merged.members.end());
    live.erase(live.begin() + static_cast<long>(bj));
    live.erase(live.begin() + static_cast<long>(bi));
    live.push_back(merged);
    states.push_back(snapshot());
  }
  return states;
}

/// Labels for a partition, numbered by smallest member.
inline std::vector<int> labels_of(const std::vector<std::vector<int>>& parts, int n) {
  std::vector<std::vector<int>> sorted = parts;
  for (auto& p : sorted) std::sort(p.begin(), p.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (std::size_t g = 0; g < sorted.size(); ++g)
    for (int i : sorted[g]) labels[static_cast<std::size_t>(i)] = static_cast<int>(g);
  return labels;
}

/// Cut to m clusters: the state after n - m merges.
inline std::vector<int> cut(const std::vector<double>& d, int n, Link link, int m) {
  return labels_of(agglomerate(d, n, link)[static_cast<std::size_t>(n - m)], n);
}

/// ARI by direct enumeration of element pairs (Hubert and Arabie form).
inline double ari_pairs(const std::vector<int>& a, const std::vector<int>& b) {
  long long n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      bool sa = a[i] == a[j], sb = b[i] == b[j];
      if (sa && sb) ++n11;
      else if (sa) ++n10;
      else if (sb) ++n01;
      else ++n00;
    }
  }
  double num = 2.0 * (static_cast<double>(n11) * static_cast<double>(n00) -
                      static_cast<double>(n10) * static_cast<double>(n01));
  double den = static_cast<double>((n11 + n10) * (n10 + n00) + (n11 + n01) * (n01 + n00));
  return den == 0 ? 1.0 : num / den;
}

/// ARI from the contingency table with the textbook expected-index formula.
inline double ari_contingency(const std::vector<int>& a, const std::vector<int>& b) {
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  double index = 0, sr = 0, sc = 0;
  for (const auto& [k, v] : table) index += c2(v);
  for (const auto& [k, v] : rows) sr += c2(v);
  for (const auto& [k, v] : cols) sc += c2(v);
  double expected = sr * sc / c2(static_cast<double>(a.size()));
  double max_index = (sr + sc) / 2;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

/// All set partitions of {0..n-1} as restricted growth strings.
inline std::vector<std::vector<int>> set_partitions(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(n), 0);
  auto rec = [&](auto&& self, int i, int max_label) -> void {
    if (i == n) {
      out.push_back(cur);
      return;
    }
    for (int v = 0; v <= max_label + 1; ++v) {
      cur[static_cast<std::size_t>(i)] = v;
      self(self, i + 1, std::max(max_label, v));
    }
  };
  if (n > 0) {
    cur[0] = 0;
    rec(rec, 1, 0);
  }
  return out;
}

/// Same-class pairs sharing a label in both arrays.
inline long long ambiguous(const std::vector<int>& cls, const std::vector<int>& reg,
                           const std::vector<int>& heat) {
  long long count = 0;
  for (std::size_t i = 0; i < cls.size(); ++i)
    for (std::size_t j = i + 1; j < cls.size(); ++j)
      if (cls[i] == cls[j] && reg[i] == reg[j] && heat[i] == heat[j]) ++count;
  return count;
}

/// Same-class pairs sharing a label.
inline long long inconsistent(const std::vector<int>& cls, const std::vector<int>& labels) {
  long long count = 0;
  for (std::size_t i = 0; i < cls.size(); ++i)
    for (std::size_t j = i + 1; j < cls.size(); ++j)
      if (cls[i] == cls[j] && labels[i] == labels[j]) ++count;
  return count;
}

/// Zero cells of the grid that no other zero cell dominates (both counts <=).
inline std::vector<std::pair<int, int>> zero_frontier(const std::vector<int>& counts_reg,
                                                      const std::vector<int>& counts_heat,
                                                      const std::vector<std::vector<long long>>& cells) {
  std::set<std::pair<int, int>> zeros;
  for (std::size_t r = 0; r < counts_reg.size(); ++r)
    for (std::size_t h = 0; h < counts_heat.size(); ++h)
      if (cells[r][h] == 0) zeros.insert({counts_reg[r], counts_heat[h]});
  std::vector<std::pair<int, int>> out;
  for (const auto& z : zeros) {
    bool dominated = false;
    for (const auto& o : zeros)
      if (o != z && o.first <= z.first && o.second <= z.second) dominated = true;
    if (!dominated) out.push_back(z);
  }
  return out;
}

/// Random symmetric zero-diagonal matrix. With `ties`, entries are small
/// integers so duplicates are frequent and every average is exact.
inline std::vector<double> random_matrix(std::mt19937_64& rng, int n, bool ties) {
  std::vector<double> d(static_cast<std::size_t>(n * n), 0.0);
  std::uniform_real_distribution<double> real(0.0, 10.0);
  std::uniform_int_distribution<int> small(0, 4);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double v = ties ? static_cast<double>(small(rng)) : real(rng);
      d[static_cast<std::size_t>(i * n + j)] = d[static_cast<std::size_t>(j * n + i)] = v;
    }
  return d;
}

}  // namespace oracle
