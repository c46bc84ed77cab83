#include "kpg/schema.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "io_util.hpp"
#include "kpg/error.hpp"

namespace kpg {

using detail::Json;

std::string_view to_string(Head head) {
  return head == Head::Regression ? "reg" : "heat";
}

Head parse_head(std::string_view text) {
  if (text == "reg") return Head::Regression;
  if (text == "heat") return Head::Heatmap;
  fail("unknown head '" + std::string(text) + "' (expected reg or heat)");
}

std::string_view to_string(PairHead head) {
  switch (head) {
    case PairHead::Regression: return "reg";
    case PairHead::Heatmap: return "heat";
    case PairHead::Both: return "both";
  }
  return "both";
}

GroupingMode parse_grouping_mode(std::string_view text) {
  if (text == "restricted") return GroupingMode::Restricted;
  if (text == "unrestricted") return GroupingMode::Unrestricted;
  fail("unknown grouping mode '" + std::string(text) + "'");
}

void validate_schema(const std::vector<KeypointClass>& classes) {
  require(!classes.empty(), "schema has no classes");
  std::set<int> seen;
  for (const auto& c : classes) {
    if (!seen.insert(c.id).second) fail("duplicate class id " + std::to_string(c.id));
    if (c.kp_count < 1) {
      fail("class " + std::to_string(c.id) + " has kp_count " + std::to_string(c.kp_count) +
           " (must be >= 1)");
    }
  }
}

namespace {

Json classes_json(const std::vector<KeypointClass>& classes) {
  Json list = Json::array();
  for (const auto& c : classes) {
    list.push_back(Json{{"id", c.id}, {"name", c.name}, {"kp_count", c.kp_count}});
  }
  return list;
}

}  // namespace

KeypointSchema KeypointSchema::create(std::vector<KeypointClass> classes) {
  validate_schema(classes);
  std::sort(classes.begin(), classes.end(),
            [](const KeypointClass& a, const KeypointClass& b) { return a.id < b.id; });

  KeypointSchema schema;
  schema.offsets_.reserve(classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    schema.offsets_.push_back(schema.n_);
    schema.n_ += static_cast<std::size_t>(classes[c].kp_count);
    schema.class_of_.insert(schema.class_of_.end(), static_cast<std::size_t>(classes[c].kp_count),
                            c);
  }
  schema.classes_ = std::move(classes);

  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(
                    detail::fnv1a64(classes_json(schema.classes_).dump())));
  schema.fingerprint_ = hex;
  return schema;
}

std::size_t KeypointSchema::find_class(int class_id) const {
  auto it = std::lower_bound(classes_.begin(), classes_.end(), class_id,
                             [](const KeypointClass& c, int id) { return c.id < id; });
  if (it == classes_.end() || it->id != class_id) return npos;
  return static_cast<std::size_t>(it - classes_.begin());
}

std::size_t KeypointSchema::class_index(int class_id) const {
  std::size_t index = find_class(class_id);
  if (index == npos) fail("unknown class id " + std::to_string(class_id));
  return index;
}

std::size_t KeypointSchema::global_index(std::size_t class_index, int local) const {
  const auto& c = classes_.at(class_index);
  require(local >= 0 && local < c.kp_count,
          "keypoint " + std::to_string(local) + " out of range for class " + std::to_string(c.id));
  return offsets_[class_index] + static_cast<std::size_t>(local);
}

KeypointRef KeypointSchema::locate(std::size_t global) const {
  require(global < n_, "global keypoint index " + std::to_string(global) + " out of range");
  std::size_t c = class_of_[global];
  return {c, static_cast<int>(global - offsets_[c])};
}

int min_restricted_clusters(const KeypointSchema& schema) {
  int largest = 0;
  for (const auto& c : schema.classes()) largest = std::max(largest, c.kp_count);
  return largest;
}

KeypointSchema deepfashion2_schema() {
  return KeypointSchema::create({
      {1, "short_sleeve_top", 25},
      {2, "long_sleeve_top", 33},
      {3, "short_sleeve_outwear", 31},
      {4, "long_sleeve_outwear", 39},
      {5, "vest", 15},
      {6, "sling", 15},
      {7, "shorts", 10},
      {8, "trousers", 14},
      {9, "skirt", 8},
      {10, "short_sleeve_dress", 29},
      {11, "long_sleeve_dress", 37},
      {12, "vest_dress", 19},
      {13, "sling_dress", 19},
  });
}

KeypointSchema coco_person_schema() { return KeypointSchema::create({{1, "person", 17}}); }

// Groupings ---------------------------------------------------------------

namespace {

void check_labels(const Labels& labels, int m, std::size_t n, std::string_view head) {
  std::string name(head);
  require(labels.size() == n, name + "_labels has length " + std::to_string(labels.size()) +
                                  ", schema has " + std::to_string(n) + " keypoints");
  require(m >= 1, "m_" + name + " must be >= 1");
  std::vector<char> used(static_cast<std::size_t>(m), 0);
  for (int label : labels) {
    require(label >= 0 && label < m, name + " label " + std::to_string(label) +
                                         " outside [0, " + std::to_string(m) + ")");
    used[static_cast<std::size_t>(label)] = 1;
  }
  for (int g = 0; g < m; ++g) {
    require(used[static_cast<std::size_t>(g)] != 0,
            name + " cluster " + std::to_string(g) + " has no members");
  }
}

}  // namespace

void validate_grouping(const KeypointSchema& schema, const Grouping& grouping) {
  require(grouping.schema_fingerprint == schema.fingerprint(),
          "grouping fingerprint " + grouping.schema_fingerprint +
              " does not match schema fingerprint " + schema.fingerprint());
  check_labels(grouping.reg_labels, grouping.m_reg, schema.num_keypoints(), "reg");
  check_labels(grouping.heat_labels, grouping.m_heat, schema.num_keypoints(), "heat");
}

Grouping identity_grouping(const KeypointSchema& schema) {
  Grouping g;
  g.schema_fingerprint = schema.fingerprint();
  g.m_reg = g.m_heat = static_cast<int>(schema.num_keypoints());
  g.reg_labels.resize(schema.num_keypoints());
  for (std::size_t i = 0; i < g.reg_labels.size(); ++i) g.reg_labels[i] = static_cast<int>(i);
  g.heat_labels = g.reg_labels;
  return g;
}

ValidityReport check_grouping(const KeypointSchema& schema, const Grouping& grouping,
                              GroupingMode mode) {
  validate_grouping(schema, grouping);
  ValidityReport report;
  report.mode = mode;
  for (std::size_t c = 0; c < schema.num_classes(); ++c) {
    const auto& cls = schema.class_at(c);
    std::size_t base = schema.offset(c);
    for (int a = 0; a < cls.kp_count; ++a) {
      for (int b = a + 1; b < cls.kp_count; ++b) {
        std::size_t ga = base + static_cast<std::size_t>(a);
        std::size_t gb = base + static_cast<std::size_t>(b);
        bool reg = grouping.reg_labels[ga] == grouping.reg_labels[gb];
        bool heat = grouping.heat_labels[ga] == grouping.heat_labels[gb];
        if (reg) ++report.inconsistent_reg;
        if (heat) ++report.inconsistent_heat;
        if (reg && heat) ++report.ambiguous_pairs_total;
        if (mode == GroupingMode::Restricted && (reg || heat)) {
          PairHead head = reg && heat ? PairHead::Both : (reg ? PairHead::Regression : PairHead::Heatmap);
          report.offending.push_back({cls.id, a, b, head});
        } else if (mode == GroupingMode::Unrestricted && reg && heat) {
          report.offending.push_back({cls.id, a, b, PairHead::Both});
        }
      }
    }
  }
  report.restricted_ok = report.inconsistent_reg == 0 && report.inconsistent_heat == 0;
  return report;
}

// JSON --------------------------------------------------------------------

KeypointSchema schema_from_json(std::string_view text) {
  Json root = detail::parse_json(text, "schema");
  const Json& list = detail::field(root, "classes", "schema");
  require(list.is_array(), "schema: 'classes' must be an array");
  std::vector<KeypointClass> classes;
  for (const Json& item : list) {
    KeypointClass c;
    c.id = static_cast<int>(detail::get_int(item, "id", "schema class"));
    c.name = detail::get_string(item, "name", "schema class");
    c.kp_count = static_cast<int>(detail::get_int(item, "kp_count", "schema class"));
    classes.push_back(std::move(c));
  }
  return KeypointSchema::create(std::move(classes));
}

std::string schema_to_json(const KeypointSchema& schema) {
  return detail::dump_json(Json{{"classes", classes_json(schema.classes())}});
}

KeypointSchema read_schema(const std::string& path) {
  return schema_from_json(detail::read_text_file(path));
}

void write_schema(const KeypointSchema& schema, const std::string& path) {
  detail::write_text_file(path, schema_to_json(schema));
}

namespace {

Labels labels_from_json(const Json& root, const char* key) {
  const Json& list = detail::field(root, key, "grouping");
  require(list.is_array(), std::string("grouping: '") + key + "' must be an array");
  Labels labels;
  labels.reserve(list.size());
  for (const Json& v : list) {
    require(v.is_number_integer(), std::string("grouping: '") + key + "' must hold integers");
    labels.push_back(v.get<int>());
  }
  return labels;
}

}  // namespace

Grouping grouping_from_json(std::string_view text) {
  Json root = detail::parse_json(text, "grouping");
  Grouping g;
  g.schema_fingerprint = detail::get_string(root, "schema_fingerprint", "grouping");
  g.m_reg = static_cast<int>(detail::get_int(root, "m_reg", "grouping"));
  g.m_heat = static_cast<int>(detail::get_int(root, "m_heat", "grouping"));
  g.reg_labels = labels_from_json(root, "reg_labels");
  g.heat_labels = labels_from_json(root, "heat_labels");
  require(g.reg_labels.size() == g.heat_labels.size(),
          "grouping: reg_labels and heat_labels differ in length");
  return g;
}

std::string grouping_to_json(const Grouping& grouping) {
  // Label arrays stay on one line each; the rest follows the canonical layout.
  Json root{{"schema_fingerprint", grouping.schema_fingerprint},
            {"m_reg", grouping.m_reg},
            {"m_heat", grouping.m_heat},
            {"reg_labels", grouping.reg_labels},
            {"heat_labels", grouping.heat_labels}};
  std::string out = "{\n";
  bool first = true;
  for (auto it = root.begin(); it != root.end(); ++it) {
    if (!first) out += ",\n";
    first = false;
    out += "  " + Json(it.key()).dump() + ": " + it.value().dump();
  }
  out += "\n}\n";
  return out;
}

Grouping read_grouping(const std::string& path) {
  return grouping_from_json(detail::read_text_file(path));
}

void write_grouping(const Grouping& grouping, const std::string& path) {
  detail::write_text_file(path, grouping_to_json(grouping));
}

std::string validity_to_json(const ValidityReport& report) {
  Json pairs = Json::array();
  for (const auto& p : report.offending) {
    pairs.push_back(Json{{"class_id", p.class_id},
                         {"kp_a", p.kp_a},
                         {"kp_b", p.kp_b},
                         {"head", std::string(to_string(p.head))}});
  }
  Json root{{"mode", report.mode == GroupingMode::Restricted ? "restricted" : "unrestricted"},
            {"restricted_ok", report.restricted_ok},
            {"decodable", report.decodable()},
            {"ambiguous_pairs_total", report.ambiguous_pairs_total},
            {"inconsistent_pairs", Json{{"reg", report.inconsistent_reg},
                                        {"heat", report.inconsistent_heat}}},
            {"offending_pairs", pairs}};
  return detail::dump_json(root);
}

}  // namespace kpg
