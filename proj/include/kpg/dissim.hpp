#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "kpg/ingest.hpp"
#include "kpg/schema.hpp"

namespace kpg {

enum class Provenance { Offsets, AntiOffsets, ConvReg, ConvHeat, External };

std::string_view to_string(Provenance provenance);

struct Vec2 {
  double x = 0;
  double y = 0;
};

/// Symmetric n x n dissimilarities between keypoint types, with a mask of
/// entries replaced by the same-class restriction sentinel.
class DissimilarityMatrix {
 public:
  DissimilarityMatrix() = default;
  DissimilarityMatrix(std::size_t n, Provenance provenance);

  /// Wraps a row-major n*n buffer. Throws unless it is exactly symmetric with
  /// a zero diagonal.
  static DissimilarityMatrix from_values(std::size_t n, std::vector<double> values,
                                         Provenance provenance = Provenance::External);

  std::size_t n() const { return n_; }
  Provenance provenance() const { return provenance_; }
  double at(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  bool restricted(std::size_t i, std::size_t j) const { return mask_[i * n_ + j] != 0; }
  std::span<const double> values() const { return values_; }

  void set(std::size_t i, std::size_t j, double value);
  void mark_restricted(std::size_t i, std::size_t j, double sentinel);

  /// Largest entry not covered by the restriction mask (diagonal included).
  double max_finite() const;

  /// (n, n) f64 tensor for export.
  Tensor to_tensor() const;

 private:
  std::size_t n_ = 0;
  Provenance provenance_ = Provenance::External;
  std::vector<double> values_;
  std::vector<unsigned char> mask_;
};

/// Mean offset of every keypoint type from its object's bbox center, in units
/// of bbox width (x) and height (y). Only keypoints with v > 0 contribute.
/// Throws, naming every type, if any type is never observed.
std::vector<Vec2> mean_offsets(const AnnotationSet& annotations, const KeypointSchema& schema);

DissimilarityMatrix offsets_distance(std::span<const Vec2> means);
/// Negated offsets distance; intended for complete linkage, where it merges
/// the spatially farthest keypoint types first.
DissimilarityMatrix anti_offsets_distance(std::span<const Vec2> means);

/// Euclidean distance between last-layer filters. Heat weights have n rows,
/// regression weights 2n rows where rows 2i and 2i+1 are keypoint i's dx and
/// dy filters and are concatenated into one feature vector. Trailing
/// dimensions are flattened. A bias tensor with one value per row, when
/// given, is appended as an extra feature.
DissimilarityMatrix conv_weight_distance(const Tensor& weights, Head head,
                                         const KeypointSchema& schema,
                                         const Tensor* bias = nullptr);

/// Sentinel value used for same-class pairs: 1e6 * (1 + max finite entry).
double restriction_sentinel(const DissimilarityMatrix& matrix);

/// Replaces every same-class off-diagonal entry with the sentinel. Idempotent.
DissimilarityMatrix apply_restrictions(DissimilarityMatrix matrix, const KeypointSchema& schema);

}  // namespace kpg
