#include "kpg/dissim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kpg/error.hpp"

namespace kpg {

std::string_view to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::Offsets: return "offsets";
    case Provenance::AntiOffsets: return "anti_offsets";
    case Provenance::ConvReg: return "conv_reg";
    case Provenance::ConvHeat: return "conv_heat";
    case Provenance::External: return "external";
  }
  return "external";
}

DissimilarityMatrix::DissimilarityMatrix(std::size_t n, Provenance provenance)
    : n_(n), provenance_(provenance), values_(n * n, 0.0), mask_(n * n, 0) {}

DissimilarityMatrix DissimilarityMatrix::from_values(std::size_t n, std::vector<double> values,
                                                     Provenance provenance) {
  require(values.size() == n * n, "dissimilarity matrix needs " + std::to_string(n * n) +
                                      " values, got " + std::to_string(values.size()));
  DissimilarityMatrix m(n, provenance);
  for (std::size_t i = 0; i < n; ++i) {
    require(values[i * n + i] == 0.0, "dissimilarity matrix diagonal must be zero");
    for (std::size_t j = i + 1; j < n; ++j) {
      require(values[i * n + j] == values[j * n + i],
              "dissimilarity matrix is not symmetric at (" + std::to_string(i) + ", " +
                  std::to_string(j) + ")");
      require(std::isfinite(values[i * n + j]), "dissimilarity matrix has a non-finite entry");
    }
  }
  m.values_ = std::move(values);
  return m;
}

void DissimilarityMatrix::set(std::size_t i, std::size_t j, double value) {
  values_[i * n_ + j] = value;
  values_[j * n_ + i] = value;
}

void DissimilarityMatrix::mark_restricted(std::size_t i, std::size_t j, double sentinel) {
  set(i, j, sentinel);
  mask_[i * n_ + j] = 1;
  mask_[j * n_ + i] = 1;
}

double DissimilarityMatrix::max_finite() const {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!mask_[k]) best = std::max(best, values_[k]);
  }
  return best;
}

Tensor DissimilarityMatrix::to_tensor() const {
  return Tensor({n_, n_}, values_, Dtype::F64);
}

std::vector<Vec2> mean_offsets(const AnnotationSet& annotations, const KeypointSchema& schema) {
  std::size_t n = schema.num_keypoints();
  std::vector<Vec2> sums(n);
  std::vector<long long> counts(n, 0);
  for (const auto& obj : annotations.objects) {
    std::size_t cls = schema.class_index(obj.class_id);
    require(obj.keypoints.size() == static_cast<std::size_t>(schema.class_at(cls).kp_count),
            "annotation keypoint count does not match class " + std::to_string(obj.class_id));
    double cx = obj.bbox.center_x();
    double cy = obj.bbox.center_y();
    for (std::size_t k = 0; k < obj.keypoints.size(); ++k) {
      const auto& kp = obj.keypoints[k];
      if (!kp.present()) continue;
      std::size_t g = schema.offset(cls) + k;
      sums[g].x += (kp.x - cx) / obj.bbox.w;
      sums[g].y += (kp.y - cy) / obj.bbox.h;
      ++counts[g];
    }
  }
  std::string missing;
  for (std::size_t g = 0; g < n; ++g) {
    if (counts[g] == 0) {
      KeypointRef ref = schema.locate(g);
      if (!missing.empty()) missing += ", ";
      missing += std::to_string(g) + " (class " + std::to_string(schema.class_at(ref.class_index).id) +
                 " kp " + std::to_string(ref.local) + ")";
    }
  }
  if (!missing.empty()) fail("keypoint types never observed visible: " + missing);

  std::vector<Vec2> means(n);
  for (std::size_t g = 0; g < n; ++g) {
    means[g] = {sums[g].x / static_cast<double>(counts[g]),
                sums[g].y / static_cast<double>(counts[g])};
  }
  return means;
}

namespace {

DissimilarityMatrix euclidean_means(std::span<const Vec2> means, double sign, Provenance p) {
  require(means.size() >= 2, "need at least two keypoint types");
  DissimilarityMatrix m(means.size(), p);
  for (std::size_t i = 0; i < means.size(); ++i) {
    for (std::size_t j = i + 1; j < means.size(); ++j) {
      m.set(i, j, sign * std::hypot(means[i].x - means[j].x, means[i].y - means[j].y));
    }
  }
  return m;
}

}  // namespace

DissimilarityMatrix offsets_distance(std::span<const Vec2> means) {
  return euclidean_means(means, 1.0, Provenance::Offsets);
}

DissimilarityMatrix anti_offsets_distance(std::span<const Vec2> means) {
  return euclidean_means(means, -1.0, Provenance::AntiOffsets);
}

DissimilarityMatrix conv_weight_distance(const Tensor& weights, Head head,
                                         const KeypointSchema& schema, const Tensor* bias) {
  std::size_t n = schema.num_keypoints();
  std::size_t per_kp = head == Head::Regression ? 2 : 1;
  require(weights.rank() >= 1, "weights tensor must have at least one dimension");
  require(weights.rows() == per_kp * n,
          std::string(to_string(head)) + " weights have " + std::to_string(weights.rows()) +
              " rows, expected " + std::to_string(per_kp * n) + " for n = " + std::to_string(n));
  if (bias) {
    require(bias->size() == weights.rows(),
            "bias has " + std::to_string(bias->size()) + " values, expected " +
                std::to_string(weights.rows()));
  }
  require(n >= 2, "need at least two keypoint types");

  DissimilarityMatrix m(n, head == Head::Regression ? Provenance::ConvReg : Provenance::ConvHeat);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double sq = 0.0;
      for (std::size_t r = 0; r < per_kp; ++r) {
        auto a = weights.row(per_kp * i + r);
        auto b = weights.row(per_kp * j + r);
        for (std::size_t f = 0; f < a.size(); ++f) {
          double d = a[f] - b[f];
          sq += d * d;
        }
        if (bias) {
          double d = (*bias)[per_kp * i + r] - (*bias)[per_kp * j + r];
          sq += d * d;
        }
      }
      m.set(i, j, std::sqrt(sq));
    }
  }
  return m;
}

double restriction_sentinel(const DissimilarityMatrix& matrix) {
  return 1.0e6 * (1.0 + matrix.max_finite());
}

DissimilarityMatrix apply_restrictions(DissimilarityMatrix matrix, const KeypointSchema& schema) {
  require(matrix.n() == schema.num_keypoints(),
          "matrix has n = " + std::to_string(matrix.n()) + ", schema has " +
              std::to_string(schema.num_keypoints()) + " keypoints");
  double sentinel = restriction_sentinel(matrix);
  for (std::size_t c = 0; c < schema.num_classes(); ++c) {
    std::size_t begin = schema.offset(c);
    std::size_t end = begin + static_cast<std::size_t>(schema.class_at(c).kp_count);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = i + 1; j < end; ++j) matrix.mark_restricted(i, j, sentinel);
    }
  }
  return matrix;
}

}  // namespace kpg
