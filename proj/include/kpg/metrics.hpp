#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kpg/cluster.hpp"
#include "kpg/schema.hpp"

namespace kpg {

/// Adjusted Rand Index (Hubert & Arabie) from exact integer pair counts.
/// Returns 1 when both partitions are identical up to relabeling, including
/// the degenerate all-singletons and single-cluster cases.
double adjusted_rand_index(std::span<const int> labels_a, std::span<const int> labels_b);

struct SameClassPair {
  int class_id;
  int kp_a;  // class-local, kp_a < kp_b
  int kp_b;
};

struct InconsistentPairs {
  long long count = 0;
  std::vector<SameClassPair> pairs;
};

/// Same-class keypoint pairs that share a cluster in one head's labels.
InconsistentPairs inconsistent_pairs(const KeypointSchema& schema, std::span<const int> labels);

/// Same-class pairs merged in both heads at once.
long long ambiguous_pairs(const KeypointSchema& schema, std::span<const int> reg_labels,
                          std::span<const int> heat_labels);

struct AmbiguityMatrix {
  std::vector<int> counts_reg;
  std::vector<int> counts_heat;
  std::vector<long long> cells;  // row-major [reg][heat]
  /// Zero cells not dominated by another zero cell with both counts <= and one <.
  std::vector<std::pair<int, int>> frontier;

  long long at(std::size_t r, std::size_t h) const { return cells[r * counts_heat.size() + h]; }
};

AmbiguityMatrix ambiguity_matrix(const KeypointSchema& schema, const Dendrogram& reg,
                                 const Dendrogram& heat, std::span<const int> counts_reg,
                                 std::span<const int> counts_heat);

struct ConsensusPoint {
  int m;
  double ari;
};

std::vector<ConsensusPoint> consensus_curve(const Dendrogram& a, const Dendrogram& b,
                                            std::span<const int> counts);

/// Parses "10,20,30", "10:60:10" (start:stop:step, inclusive) or mixtures.
std::vector<int> parse_counts(const std::string& text);

// Reports -----------------------------------------------------------------

struct ConsensusReport {
  double ari_reg = 0;
  double ari_heat = 0;
  int m_reg_a = 0, m_heat_a = 0, m_reg_b = 0, m_heat_b = 0;
};

ConsensusReport compare_groupings(const Grouping& a, const Grouping& b);
std::string consensus_to_json(const ConsensusReport& report);
std::string consensus_to_text(const ConsensusReport& report);

std::string curve_to_json(const std::vector<ConsensusPoint>& curve);
std::string curve_to_text(const std::vector<ConsensusPoint>& curve);

std::string ambiguity_to_json(const AmbiguityMatrix& matrix);
std::string ambiguity_to_text(const AmbiguityMatrix& matrix);

/// Validity, per-head inconsistent pairs and (optionally) an ambiguity matrix.
struct AnalysisReport {
  ValidityReport validity;
  InconsistentPairs reg;
  InconsistentPairs heat;
  bool has_matrix = false;
  AmbiguityMatrix matrix;
};

std::string analysis_to_json(const AnalysisReport& report);
std::string analysis_to_text(const AnalysisReport& report);

}  // namespace kpg
