#include "kpg/cluster.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <tuple>

#include "io_util.hpp"
#include "kpg/error.hpp"

namespace kpg {

using detail::Json;

std::string_view to_string(Linkage linkage) {
  return linkage == Linkage::Average ? "average" : "complete";
}

Linkage parse_linkage(std::string_view text) {
  if (text == "average") return Linkage::Average;
  if (text == "complete") return Linkage::Complete;
  fail("unknown linkage '" + std::string(text) + "' (expected average or complete)");
}

Dendrogram agglomerate(const DissimilarityMatrix& matrix, Linkage linkage) {
  const std::size_t n = matrix.n();
  require(n >= 2, "agglomerative clustering needs at least two items");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      require(matrix.at(i, j) == matrix.at(j, i), "dissimilarity matrix is not symmetric");
    }
  }

  // Slot k holds one active cluster whose smallest member is leaf k; a merge
  // keeps the lower slot. For average linkage `table` stores sums of member
  // distances, for complete linkage the linkage distance itself.
  std::vector<double> table(matrix.values().begin(), matrix.values().end());
  std::vector<int> ids(n);
  std::vector<int> sizes(n, 1);
  std::vector<char> active(n, 1);
  std::iota(ids.begin(), ids.end(), 0);

  auto linkage_distance = [&](std::size_t p, std::size_t q) {
    double v = table[p * n + q];
    if (linkage == Linkage::Average) v /= static_cast<double>(sizes[p]) * sizes[q];
    return v;
  };

  Dendrogram out;
  out.n = n;
  out.linkage = linkage;
  out.merges.reserve(n - 1);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_p = n;
    std::size_t best_q = n;
    for (std::size_t p = 0; p < n; ++p) {
      if (!active[p]) continue;
      for (std::size_t q = p + 1; q < n; ++q) {
        if (!active[q]) continue;
        double d = linkage_distance(p, q);
        if (std::tie(d, p, q) < std::tie(best, best_p, best_q)) {
          best = d;
          best_p = p;
          best_q = q;
        }
      }
    }

    int new_id = static_cast<int>(n + step);
    out.merges.push_back({std::min(ids[best_p], ids[best_q]), std::max(ids[best_p], ids[best_q]), best,
                          new_id, sizes[best_p] + sizes[best_q]});

    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == best_p || k == best_q) continue;
      double merged = linkage == Linkage::Average
                          ? table[best_p * n + k] + table[best_q * n + k]
                          : std::max(table[best_p * n + k], table[best_q * n + k]);
      table[best_p * n + k] = merged;
      table[k * n + best_p] = merged;
    }
    sizes[best_p] += sizes[best_q];
    ids[best_p] = new_id;
    active[best_q] = 0;
  }
  return out;
}

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

Labels cut(const Dendrogram& dendrogram, int m) {
  const std::size_t n = dendrogram.n;
  require(m >= 1 && static_cast<std::size_t>(m) <= n,
          "cluster count " + std::to_string(m) + " outside [1, " + std::to_string(n) + "]");
  require(dendrogram.merges.size() + 1 == n, "dendrogram does not hold n - 1 merges");

  // Union-find over leaves and internal nodes.
  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::size_t applied = n - static_cast<std::size_t>(m);
  for (std::size_t s = 0; s < applied; ++s) {
    const Merge& merge = dendrogram.merges[s];
    require(merge.a >= 0 && merge.b >= 0 && static_cast<std::size_t>(merge.a) < n + s &&
                static_cast<std::size_t>(merge.b) < n + s,
            "dendrogram merge references an unknown cluster");
    std::size_t node = n + s;
    parent[find_root(parent, static_cast<std::size_t>(merge.a))] = node;
    parent[find_root(parent, static_cast<std::size_t>(merge.b))] = node;
  }

  Labels labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(find_root(parent, i));
  int count = canonicalize_labels(labels);
  require(count == m, "dendrogram cut produced " + std::to_string(count) + " clusters");
  return labels;
}

Labels restricted_cut(const Dendrogram& dendrogram, int m, const KeypointSchema& schema) {
  require(dendrogram.n == schema.num_keypoints(), "dendrogram size does not match schema");
  Labels labels = cut(dendrogram, m);
  for (std::size_t c = 0; c < schema.num_classes(); ++c) {
    std::size_t begin = schema.offset(c);
    std::size_t end = begin + static_cast<std::size_t>(schema.class_at(c).kp_count);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = i + 1; j < end; ++j) {
        if (labels[i] == labels[j]) {
          fail("restricted clustering merged keypoints " + std::to_string(i - begin) + " and " +
               std::to_string(j - begin) + " of class " + std::to_string(schema.class_at(c).id) +
               " at " + std::to_string(m) + " clusters");
        }
      }
    }
  }
  return labels;
}

int canonicalize_labels(Labels& labels) {
  std::vector<std::pair<int, int>> remap;  // (old, new), small in practice
  int next = 0;
  for (int& label : labels) {
    auto it = std::find_if(remap.begin(), remap.end(),
                           [label](const auto& p) { return p.first == label; });
    if (it == remap.end()) {
      remap.emplace_back(label, next);
      label = next++;
    } else {
      label = it->second;
    }
  }
  return next;
}

Grouping make_grouping(const KeypointSchema& schema, Labels reg_labels, Labels heat_labels) {
  const std::size_t n = schema.num_keypoints();
  require(reg_labels.size() == n, "reg labels have length " + std::to_string(reg_labels.size()) +
                                      ", schema has " + std::to_string(n) + " keypoints");
  require(heat_labels.size() == n, "heat labels have length " +
                                       std::to_string(heat_labels.size()) + ", schema has " +
                                       std::to_string(n) + " keypoints");
  Grouping g;
  g.schema_fingerprint = schema.fingerprint();
  g.m_reg = canonicalize_labels(reg_labels);
  g.m_heat = canonicalize_labels(heat_labels);
  g.reg_labels = std::move(reg_labels);
  g.heat_labels = std::move(heat_labels);
  return g;
}

namespace {

std::size_t channels_per_keypoint(Head head) { return head == Head::Regression ? 2 : 1; }

int check_layout(const Tensor& weights, std::span<const int> labels, Head head) {
  std::size_t per = channels_per_keypoint(head);
  require(weights.rank() >= 1, "weights tensor must have at least one dimension");
  require(weights.rows() == per * labels.size(),
          std::string(to_string(head)) + " weights have " + std::to_string(weights.rows()) +
              " rows, expected " + std::to_string(per * labels.size()));
  int m = 0;
  for (int label : labels) {
    require(label >= 0, "negative cluster label");
    m = std::max(m, label + 1);
  }
  return m;
}

}  // namespace

WeightInitMap average_weights(const Tensor& weights, std::span<const int> labels, Head head) {
  int m = check_layout(weights, labels, head);
  std::size_t per = channels_per_keypoint(head);
  std::size_t len = weights.row_length();

  WeightInitMap map;
  map.head = head;
  map.members.resize(static_cast<std::size_t>(m));
  for (std::size_t k = 0; k < labels.size(); ++k) {
    map.members[static_cast<std::size_t>(labels[k])].push_back(static_cast<int>(k));
  }
  for (std::size_t g = 0; g < map.members.size(); ++g) {
    require(!map.members[g].empty(), "cluster " + std::to_string(g) + " has no members");
  }

  std::vector<double> out(static_cast<std::size_t>(m) * per * len, 0.0);
  for (std::size_t g = 0; g < map.members.size(); ++g) {
    for (std::size_t r = 0; r < per; ++r) {
      double* dst = out.data() + (g * per + r) * len;
      // Running mean: exact for identical rows, so expand-then-average is a
      // fixed point.
      std::size_t count = 0;
      for (int member : map.members[g]) {
        auto src = weights.row(static_cast<std::size_t>(member) * per + r);
        ++count;
        for (std::size_t f = 0; f < len; ++f) {
          dst[f] += (src[f] - dst[f]) / static_cast<double>(count);
        }
      }
    }
  }

  std::vector<std::size_t> shape = weights.shape();
  shape[0] = static_cast<std::size_t>(m) * per;
  map.weights = Tensor(std::move(shape), std::move(out), weights.dtype());
  return map;
}

Tensor expand_weights(const Tensor& grouped, std::span<const int> labels, Head head) {
  std::size_t per = channels_per_keypoint(head);
  int m = 0;
  for (int label : labels) m = std::max(m, label + 1);
  require(grouped.rank() >= 1 && grouped.rows() == static_cast<std::size_t>(m) * per,
          "grouped weights do not match the labels");
  std::size_t len = grouped.row_length();
  std::vector<double> out;
  out.reserve(labels.size() * per * len);
  for (int label : labels) {
    for (std::size_t r = 0; r < per; ++r) {
      auto src = grouped.row(static_cast<std::size_t>(label) * per + r);
      out.insert(out.end(), src.begin(), src.end());
    }
  }
  std::vector<std::size_t> shape = grouped.shape();
  shape[0] = labels.size() * per;
  return Tensor(std::move(shape), std::move(out), grouped.dtype());
}

std::string weight_map_to_json(const WeightInitMap& map) {
  Json clusters = Json::array();
  for (std::size_t g = 0; g < map.members.size(); ++g) {
    clusters.push_back(Json{{"cluster", g}, {"members", map.members[g]}});
  }
  Json shape = map.weights.shape();
  return detail::dump_json(Json{{"head", std::string(to_string(map.head))},
                                {"clusters", clusters},
                                {"output_shape", shape}});
}

std::string dendrogram_to_json(const Dendrogram& dendrogram) {
  std::string out = "{\n  \"linkage\": \"" + std::string(to_string(dendrogram.linkage)) +
                    "\",\n  \"merges\": [";
  for (std::size_t s = 0; s < dendrogram.merges.size(); ++s) {
    const Merge& m = dendrogram.merges[s];
    Json record{{"a", m.a}, {"b", m.b}, {"distance", m.distance}, {"id", m.id}, {"size", m.size}};
    out += (s ? ",\n    " : "\n    ") + record.dump();
  }
  out += dendrogram.merges.empty() ? "],\n" : "\n  ],\n";
  out += "  \"n\": " + std::to_string(dendrogram.n) + "\n}\n";
  return out;
}

Dendrogram dendrogram_from_json(std::string_view text) {
  Json root = detail::parse_json(text, "dendrogram");
  Dendrogram d;
  long long n = detail::get_int(root, "n", "dendrogram");
  require(n >= 1, "dendrogram: n must be >= 1");
  d.n = static_cast<std::size_t>(n);
  d.linkage = parse_linkage(detail::get_string(root, "linkage", "dendrogram"));
  const Json& merges = detail::field(root, "merges", "dendrogram");
  require(merges.is_array(), "dendrogram: 'merges' must be an array");
  for (const Json& rec : merges) {
    Merge m;
    m.a = static_cast<int>(detail::get_int(rec, "a", "merge"));
    m.b = static_cast<int>(detail::get_int(rec, "b", "merge"));
    m.distance = detail::get_number(rec, "distance", "merge");
    m.id = static_cast<int>(detail::get_int(rec, "id", "merge"));
    m.size = static_cast<int>(detail::get_int(rec, "size", "merge"));
    d.merges.push_back(m);
  }
  require(d.merges.size() + 1 == d.n, "dendrogram: expected n - 1 merges");
  for (std::size_t s = 0; s < d.merges.size(); ++s) {
    const Merge& m = d.merges[s];
    require(m.id == static_cast<int>(d.n + s), "dendrogram: merge ids must be n, n+1, ...");
    require(m.a >= 0 && m.a < m.b && m.b < m.id, "dendrogram: merge references invalid clusters");
  }
  return d;
}

Dendrogram read_dendrogram(const std::string& path) {
  return dendrogram_from_json(detail::read_text_file(path));
}

void write_dendrogram(const Dendrogram& dendrogram, const std::string& path) {
  detail::write_text_file(path, dendrogram_to_json(dendrogram));
}

}  // namespace kpg
