#include "kpg/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>

#include "io_util.hpp"
#include "kpg/error.hpp"

namespace kpg {

using detail::Json;

namespace {

std::int64_t choose2(std::int64_t k) { return k * (k - 1) / 2; }

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

}  // namespace

double adjusted_rand_index(std::span<const int> labels_a, std::span<const int> labels_b) {
  require(labels_a.size() == labels_b.size(), "partitions differ in length (" +
                                                  std::to_string(labels_a.size()) + " vs " +
                                                  std::to_string(labels_b.size()) + ")");
  require(labels_a.size() >= 2, "adjusted Rand index needs at least two elements");
  require(labels_a.size() <= 1'000'000, "partition too large for exact pair counting");

  std::map<std::pair<int, int>, std::int64_t> cells;
  std::map<int, std::int64_t> rows, cols;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    ++cells[{labels_a[i], labels_b[i]}];
    ++rows[labels_a[i]];
    ++cols[labels_b[i]];
  }
  std::int64_t index = 0, sum_a = 0, sum_b = 0;
  for (const auto& [key, count] : cells) index += choose2(count);
  for (const auto& [key, count] : rows) sum_a += choose2(count);
  for (const auto& [key, count] : cols) sum_b += choose2(count);
  const std::int64_t total = choose2(static_cast<std::int64_t>(labels_a.size()));

  // ARI = (index - a*b/N) / ((a+b)/2 - a*b/N); scaled by 2N to stay integral.
  using Wide = __int128;
  Wide numerator = 2 * static_cast<Wide>(index) * total - 2 * static_cast<Wide>(sum_a) * sum_b;
  Wide denominator = static_cast<Wide>(sum_a + sum_b) * total - 2 * static_cast<Wide>(sum_a) * sum_b;
  if (denominator == 0) return 1.0;
  return static_cast<double>(static_cast<long double>(numerator) /
                             static_cast<long double>(denominator));
}

InconsistentPairs inconsistent_pairs(const KeypointSchema& schema, std::span<const int> labels) {
  require(labels.size() == schema.num_keypoints(),
          "labels have length " + std::to_string(labels.size()) + ", schema has " +
              std::to_string(schema.num_keypoints()) + " keypoints");
  InconsistentPairs out;
  for (std::size_t c = 0; c < schema.num_classes(); ++c) {
    const auto& cls = schema.class_at(c);
    std::size_t base = schema.offset(c);
    for (int a = 0; a < cls.kp_count; ++a) {
      for (int b = a + 1; b < cls.kp_count; ++b) {
        if (labels[base + a] == labels[base + b]) {
          ++out.count;
          out.pairs.push_back({cls.id, a, b});
        }
      }
    }
  }
  return out;
}

long long ambiguous_pairs(const KeypointSchema& schema, std::span<const int> reg_labels,
                          std::span<const int> heat_labels) {
  require(reg_labels.size() == schema.num_keypoints() &&
              heat_labels.size() == schema.num_keypoints(),
          "label arrays do not match the schema");
  long long count = 0;
  for (std::size_t c = 0; c < schema.num_classes(); ++c) {
    std::size_t base = schema.offset(c);
    std::size_t size = static_cast<std::size_t>(schema.class_at(c).kp_count);
    for (std::size_t a = base; a < base + size; ++a) {
      for (std::size_t b = a + 1; b < base + size; ++b) {
        if (reg_labels[a] == reg_labels[b] && heat_labels[a] == heat_labels[b]) ++count;
      }
    }
  }
  return count;
}

AmbiguityMatrix ambiguity_matrix(const KeypointSchema& schema, const Dendrogram& reg,
                                 const Dendrogram& heat, std::span<const int> counts_reg,
                                 std::span<const int> counts_heat) {
  const std::size_t n = schema.num_keypoints();
  require(reg.n == n && heat.n == n, "dendrograms do not match the schema size");
  AmbiguityMatrix out;
  out.counts_reg.assign(counts_reg.begin(), counts_reg.end());
  out.counts_heat.assign(counts_heat.begin(), counts_heat.end());

  std::vector<Labels> heat_cuts;
  heat_cuts.reserve(counts_heat.size());
  for (int m : counts_heat) heat_cuts.push_back(cut(heat, m));
  for (int mr : counts_reg) {
    Labels reg_labels = cut(reg, mr);
    for (const Labels& heat_labels : heat_cuts) {
      out.cells.push_back(ambiguous_pairs(schema, reg_labels, heat_labels));
    }
  }

  for (std::size_t r = 0; r < counts_reg.size(); ++r) {
    for (std::size_t h = 0; h < counts_heat.size(); ++h) {
      if (out.at(r, h) != 0) continue;
      bool dominated = false;
      for (std::size_t r2 = 0; r2 < counts_reg.size() && !dominated; ++r2) {
        for (std::size_t h2 = 0; h2 < counts_heat.size(); ++h2) {
          if (out.at(r2, h2) != 0) continue;
          bool le = counts_reg[r2] <= counts_reg[r] && counts_heat[h2] <= counts_heat[h];
          bool lt = counts_reg[r2] < counts_reg[r] || counts_heat[h2] < counts_heat[h];
          if (le && lt) {
            dominated = true;
            break;
          }
        }
      }
      if (!dominated) out.frontier.emplace_back(counts_reg[r], counts_heat[h]);
    }
  }
  std::sort(out.frontier.begin(), out.frontier.end());
  out.frontier.erase(std::unique(out.frontier.begin(), out.frontier.end()), out.frontier.end());
  return out;
}

std::vector<ConsensusPoint> consensus_curve(const Dendrogram& a, const Dendrogram& b,
                                            std::span<const int> counts) {
  require(a.n == b.n, "dendrograms cover different numbers of keypoints");
  std::vector<ConsensusPoint> curve;
  curve.reserve(counts.size());
  for (int m : counts) curve.push_back({m, adjusted_rand_index(cut(a, m), cut(b, m))});
  return curve;
}

std::vector<int> parse_counts(const std::string& text) {
  std::vector<int> out;
  std::stringstream stream(text);
  std::string item;
  auto to_int = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      int v = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail("invalid cluster count '" + s + "' in '" + text + "'");
    }
  };
  while (std::getline(stream, item, ',')) {
    if (item.empty()) continue;
    auto first = item.find(':');
    if (first == std::string::npos) {
      out.push_back(to_int(item));
      continue;
    }
    auto second = item.find(':', first + 1);
    int start = to_int(item.substr(0, first));
    int stop = to_int(item.substr(first + 1, second == std::string::npos ? std::string::npos
                                                                         : second - first - 1));
    int step = second == std::string::npos ? 1 : to_int(item.substr(second + 1));
    require(step >= 1, "count range step must be >= 1");
    for (int v = start; v <= stop; v += step) out.push_back(v);
  }
  require(!out.empty(), "empty cluster count list");
  return out;
}

// Reports -----------------------------------------------------------------

ConsensusReport compare_groupings(const Grouping& a, const Grouping& b) {
  require(a.schema_fingerprint == b.schema_fingerprint,
          "groupings were built for different schemas");
  ConsensusReport r;
  r.ari_reg = adjusted_rand_index(a.reg_labels, b.reg_labels);
  r.ari_heat = adjusted_rand_index(a.heat_labels, b.heat_labels);
  r.m_reg_a = a.m_reg;
  r.m_heat_a = a.m_heat;
  r.m_reg_b = b.m_reg;
  r.m_heat_b = b.m_heat;
  return r;
}

std::string consensus_to_json(const ConsensusReport& r) {
  return detail::dump_json(
      Json{{"ari", Json{{"reg", r.ari_reg}, {"heat", r.ari_heat}}},
           {"a", Json{{"m_reg", r.m_reg_a}, {"m_heat", r.m_heat_a}}},
           {"b", Json{{"m_reg", r.m_reg_b}, {"m_heat", r.m_heat_b}}}});
}

std::string consensus_to_text(const ConsensusReport& r) {
  std::ostringstream out;
  out << "grouping a: (" << r.m_reg_a << "," << r.m_heat_a << ")  grouping b: (" << r.m_reg_b
      << "," << r.m_heat_b << ")\n";
  out << "head   ARI\n";
  out << "reg    " << fixed(r.ari_reg, 6) << "\n";
  out << "heat   " << fixed(r.ari_heat, 6) << "\n";
  return out.str();
}

std::string curve_to_json(const std::vector<ConsensusPoint>& curve) {
  Json points = Json::array();
  for (const auto& p : curve) points.push_back(Json{{"m", p.m}, {"ari", p.ari}});
  return detail::dump_json(Json{{"curve", points}});
}

std::string curve_to_text(const std::vector<ConsensusPoint>& curve) {
  std::ostringstream out;
  out << "clusters        ARI\n";
  for (const auto& p : curve) {
    char line[64];
    std::snprintf(line, sizeof line, "%8d  %9s\n", p.m, fixed(p.ari, 6).c_str());
    out << line;
  }
  return out.str();
}

std::string ambiguity_to_json(const AmbiguityMatrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.counts_reg.size(); ++r) {
    Json row = Json::array();
    for (std::size_t h = 0; h < m.counts_heat.size(); ++h) row.push_back(m.at(r, h));
    rows.push_back(row);
  }
  Json frontier = Json::array();
  for (const auto& [mr, mh] : m.frontier) frontier.push_back(Json::array({mr, mh}));
  return detail::dump_json(Json{{"counts_reg", m.counts_reg},
                                {"counts_heat", m.counts_heat},
                                {"cells", rows},
                                {"frontier", frontier}});
}

std::string ambiguity_to_text(const AmbiguityMatrix& m) {
  std::size_t width = 6;
  for (long long v : m.cells) width = std::max(width, std::to_string(v).size() + 1);
  for (int c : m.counts_heat) width = std::max(width, std::to_string(c).size() + 1);
  auto pad = [width](const std::string& s) {
    return std::string(width > s.size() ? width - s.size() : 0, ' ') + s;
  };

  std::ostringstream out;
  out << "ambiguous pairs (rows: reg clusters, columns: heat clusters)\n";
  out << pad("reg\\heat");
  for (int c : m.counts_heat) out << pad(std::to_string(c));
  out << "\n";
  for (std::size_t r = 0; r < m.counts_reg.size(); ++r) {
    out << pad(std::to_string(m.counts_reg[r]));
    for (std::size_t h = 0; h < m.counts_heat.size(); ++h) out << pad(std::to_string(m.at(r, h)));
    out << "\n";
  }
  out << "zero-ambiguity frontier:";
  if (m.frontier.empty()) out << " none";
  for (const auto& [mr, mh] : m.frontier) out << " (" << mr << "," << mh << ")";
  out << "\n";
  return out.str();
}

namespace {

Json pairs_json(const InconsistentPairs& p) {
  Json list = Json::array();
  for (const auto& pair : p.pairs) {
    list.push_back(Json{{"class_id", pair.class_id}, {"kp_a", pair.kp_a}, {"kp_b", pair.kp_b}});
  }
  return Json{{"count", p.count}, {"pairs", list}};
}

}  // namespace

std::string analysis_to_json(const AnalysisReport& report) {
  Json root{{"validity", Json::parse(validity_to_json(report.validity))},
            {"inconsistent", Json{{"reg", pairs_json(report.reg)}, {"heat", pairs_json(report.heat)}}}};
  if (report.has_matrix) root["ambiguity_matrix"] = Json::parse(ambiguity_to_json(report.matrix));
  return detail::dump_json(root);
}

std::string analysis_to_text(const AnalysisReport& report) {
  const ValidityReport& v = report.validity;
  std::ostringstream out;
  bool restricted = v.mode == GroupingMode::Restricted;
  out << "mode: " << (restricted ? "restricted" : "unrestricted") << "\n";
  out << "restricted_ok: " << (v.restricted_ok ? "true" : "false") << "\n";
  out << "ambiguous pairs: " << v.ambiguous_pairs_total
      << (v.decodable() ? " (decodable)" : " (NOT decodable)") << "\n";
  out << "inconsistent pairs  reg: " << report.reg.count << "  heat: " << report.heat.count << "\n";
  if (!v.offending.empty()) {
    out << "offending pairs (class kp_a kp_b head):\n";
    for (const auto& p : v.offending) {
      out << "  " << p.class_id << " " << p.kp_a << " " << p.kp_b << " " << to_string(p.head)
          << "\n";
    }
  }
  if (report.has_matrix) out << ambiguity_to_text(report.matrix);
  out << "verdict: " << (v.ok() ? "valid" : "INVALID") << "\n";
  return out.str();
}

}  // namespace kpg
