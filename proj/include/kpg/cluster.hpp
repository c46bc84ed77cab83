#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kpg/dissim.hpp"
#include "kpg/ingest.hpp"
#include "kpg/schema.hpp"

namespace kpg {

enum class Linkage { Average, Complete };

std::string_view to_string(Linkage linkage);
Linkage parse_linkage(std::string_view text);

/// One agglomeration step. Leaves are clusters 0..n-1; the merge at step s
/// creates cluster n + s. `a < b` always.
struct Merge {
  int a = 0;
  int b = 0;
  double distance = 0;
  int id = 0;
  int size = 0;
};

struct Dendrogram {
  std::size_t n = 0;
  Linkage linkage = Linkage::Average;
  std::vector<Merge> merges;  // n - 1 records
};

/// Agglomerative clustering: repeatedly merge the closest pair of clusters.
///
/// Average linkage is unweighted (UPGMA). It keeps the unnormalized sum of
/// member distances between clusters, S(A u B, C) = S(A, C) + S(B, C), and
/// compares S / (|X| |Y|); this is the Lance-Williams recurrence scaled by the
/// cluster sizes, and keeps exactly tied inputs exactly tied. Complete linkage
/// uses d(A u B, C) = max(d(A, C), d(B, C)). Equal distances are resolved by
/// the lexicographically smallest pair of cluster representatives, where a
/// cluster is represented by its smallest leaf.
Dendrogram agglomerate(const DissimilarityMatrix& matrix, Linkage linkage);

/// Labels for the m clusters that exist after the first n - m merges,
/// numbered 0..m-1 in order of each cluster's smallest member.
Labels cut(const Dendrogram& dendrogram, int m);

/// Like cut, but throws if two keypoints of one class end up together.
Labels restricted_cut(const Dendrogram& dendrogram, int m, const KeypointSchema& schema);

/// Renumbers labels by first occurrence; returns the cluster count.
int canonicalize_labels(Labels& labels);

/// Assembles a grouping for `schema`, canonicalizing both label arrays.
Grouping make_grouping(const KeypointSchema& schema, Labels reg_labels, Labels heat_labels);

/// Cluster-averaged last-layer weights. For the heat head output row g is the
/// mean of member rows; for the regression head rows 2g and 2g+1 are the
/// means of the members' dx rows and dy rows respectively.
struct WeightInitMap {
  Head head = Head::Heatmap;
  std::vector<std::vector<int>> members;  // per cluster, ascending
  Tensor weights;
};

WeightInitMap average_weights(const Tensor& weights, std::span<const int> labels, Head head);

/// Inverse direction: every keypoint receives its cluster's row(s).
Tensor expand_weights(const Tensor& grouped, std::span<const int> labels, Head head);

std::string weight_map_to_json(const WeightInitMap& map);

std::string dendrogram_to_json(const Dendrogram& dendrogram);
Dendrogram dendrogram_from_json(std::string_view text);
Dendrogram read_dendrogram(const std::string& path);
void write_dendrogram(const Dendrogram& dendrogram, const std::string& path);

}  // namespace kpg
