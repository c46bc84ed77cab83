#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace kpg {

/// Output branch a keypoint grouping applies to.
enum class Head { Regression, Heatmap };

std::string_view to_string(Head head);
Head parse_head(std::string_view text);  // "reg" | "heat"

using Labels = std::vector<int>;

struct KeypointClass {
  int id = 0;
  std::string name;
  int kp_count = 0;
};

struct KeypointRef {
  std::size_t class_index;  // position in ascending-id class order
  int local;                // class-local keypoint index
};

/// The keypoint universe: classes in ascending id order, each owning a
/// contiguous range of global keypoint indices. Immutable once built.
class KeypointSchema {
 public:
  /// Validates and sorts by class id. Throws kpg::Error on duplicate ids,
  /// kp_count < 1 or an empty class list.
  static KeypointSchema create(std::vector<KeypointClass> classes);

  std::size_t num_classes() const { return classes_.size(); }
  std::size_t num_keypoints() const { return n_; }
  const std::vector<KeypointClass>& classes() const { return classes_; }
  const KeypointClass& class_at(std::size_t index) const { return classes_.at(index); }

  /// Index of the class with the given id, or npos.
  std::size_t find_class(int class_id) const;
  /// Like find_class but throws on unknown ids.
  std::size_t class_index(int class_id) const;

  std::size_t offset(std::size_t class_index) const { return offsets_.at(class_index); }
  std::size_t global_index(std::size_t class_index, int local) const;
  KeypointRef locate(std::size_t global) const;
  std::size_t class_of(std::size_t global) const { return locate(global).class_index; }

  /// Hex FNV-1a 64 hash of the canonical class list.
  const std::string& fingerprint() const { return fingerprint_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<KeypointClass> classes_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> class_of_;
  std::size_t n_ = 0;
  std::string fingerprint_;
};

void validate_schema(const std::vector<KeypointClass>& classes);

/// Largest class size: no restriction-respecting grouping can use fewer
/// clusters.
int min_restricted_clusters(const KeypointSchema& schema);

/// Keypoint counts of the 13 DeepFashion2 clothing categories (ids 1..13).
KeypointSchema deepfashion2_schema();
/// Single-class, 17-keypoint human pose layout.
KeypointSchema coco_person_schema();

/// Two surjective maps from global keypoint index to cluster id, one per head.
struct Grouping {
  std::string schema_fingerprint;
  int m_reg = 0;
  int m_heat = 0;
  Labels reg_labels;
  Labels heat_labels;

  const Labels& labels(Head head) const {
    return head == Head::Regression ? reg_labels : heat_labels;
  }
  int clusters(Head head) const { return head == Head::Regression ? m_reg : m_heat; }
  std::size_t size() const { return reg_labels.size(); }
};

/// Throws unless the grouping belongs to `schema` and both label arrays are
/// surjective onto [0, m).
void validate_grouping(const KeypointSchema& schema, const Grouping& grouping);

/// m_reg = m_heat = n, each keypoint in its own cluster.
Grouping identity_grouping(const KeypointSchema& schema);

enum class GroupingMode { Restricted, Unrestricted };

GroupingMode parse_grouping_mode(std::string_view text);

enum class PairHead { Regression, Heatmap, Both };

std::string_view to_string(PairHead head);

struct OffendingPair {
  int class_id;
  int kp_a;  // class-local, kp_a < kp_b
  int kp_b;
  PairHead head;
};

struct ValidityReport {
  GroupingMode mode = GroupingMode::Unrestricted;
  bool restricted_ok = true;
  long long ambiguous_pairs_total = 0;
  long long inconsistent_reg = 0;
  long long inconsistent_heat = 0;
  /// Restricted mode: every same-class pair sharing a cluster in any head.
  /// Unrestricted mode: only pairs sharing clusters in both heads.
  std::vector<OffendingPair> offending;

  bool decodable() const { return ambiguous_pairs_total == 0; }
  bool ok() const { return mode == GroupingMode::Restricted ? restricted_ok : decodable(); }
};

ValidityReport check_grouping(const KeypointSchema& schema, const Grouping& grouping,
                              GroupingMode mode);

// JSON interchange ---------------------------------------------------------

KeypointSchema schema_from_json(std::string_view text);
std::string schema_to_json(const KeypointSchema& schema);
KeypointSchema read_schema(const std::string& path);
void write_schema(const KeypointSchema& schema, const std::string& path);

/// Parses without schema validation; call validate_grouping afterwards.
Grouping grouping_from_json(std::string_view text);
std::string grouping_to_json(const Grouping& grouping);
Grouping read_grouping(const std::string& path);
void write_grouping(const Grouping& grouping, const std::string& path);

std::string validity_to_json(const ValidityReport& report);

}  // namespace kpg
