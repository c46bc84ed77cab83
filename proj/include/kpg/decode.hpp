#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kpg/ingest.hpp"
#include "kpg/schema.hpp"

namespace kpg {

struct Point2 {
  double x = 0;
  double y = 0;
};

/// Box corners in feature-grid units.
struct Box {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;
  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  bool contains(double x, double y) const { return x >= x1 && x <= x2 && y >= y1 && y <= y2; }
};

/// Read-only view of one (H, W) channel.
struct ChannelView {
  std::span<const float> data;
  std::size_t height = 0;
  std::size_t width = 0;

  float at(std::size_t y, std::size_t x) const { return data[y * width + x]; }
};

/// Dense (C, H, W) float map.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t channels, std::size_t height, std::size_t width);

  /// Requires a rank-3 tensor.
  static FeatureMap from_tensor(const Tensor& tensor, std::string_view name);
  Tensor to_tensor() const;

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }

  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * height_ + y) * width_ + x];
  }
  float& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * height_ + y) * width_ + x];
  }
  ChannelView channel(std::size_t c) const;
  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<float> data_;
};

/// The six CenterNet output maps of one image.
struct HeadTensors {
  FeatureMap center_heatmap;  // (C, H, W)
  FeatureMap center_offset;   // (2, H, W) dx, dy
  FeatureMap object_size;     // (2, H, W) w, h
  FeatureMap kp_regression;   // (2 m_reg, H, W) displacement from the center pixel
  FeatureMap kp_heatmap;      // (m_heat, H, W)
  FeatureMap kp_offset;       // (2, H, W) shared sub-pixel correction

  std::size_t height() const { return center_heatmap.height(); }
  std::size_t width() const { return center_heatmap.width(); }

  /// Checks channel counts against the schema/grouping and that all maps
  /// share one grid.
  void validate(const KeypointSchema& schema, const Grouping& grouping) const;
};

/// Loads the six maps; heatmap values are clamped to [0, 1].
HeadTensors load_heads(const HeadFiles& files);
void save_heads(const HeadTensors& heads, const HeadFiles& files);

struct Peak {
  int x = 0;
  int y = 0;
  double score = 0;
};

/// Pixels with score >= threshold (and > 0) that are >= each of their 8
/// neighbours. On plateaus only the smallest (y, x) pixel of a 3x3 window
/// survives. Sorted by descending score, then (y, x).
std::vector<Peak> local_peaks(ChannelView channel, double threshold);

enum class RefineMode { Base, Rescore };

std::string_view to_string(RefineMode mode);
RefineMode parse_refine_mode(std::string_view text);

enum class KeypointSource { Coarse, Refined };

std::string_view to_string(KeypointSource source);

struct DecodedKeypoint {
  double x = 0;
  double y = 0;
  double score = 0;
  KeypointSource source = KeypointSource::Coarse;
};

struct Detection {
  int class_id = 0;
  double score = 0;
  Box box;
  int center_x = 0;  // peak pixel on the center heatmap
  int center_y = 0;
  std::vector<DecodedKeypoint> keypoints;  // class-local order
};

/// Boxes from center peaks: center = peak + center_offset, box = center +/-
/// size / 2. At most top_k detections over all classes, best first.
std::vector<Detection> decode_detections(const HeadTensors& heads, const KeypointSchema& schema,
                                         int top_k, double score_threshold);

/// Center pixel plus the regressed displacement of each keypoint's
/// regression cluster.
std::vector<Point2> coarse_keypoints(const Detection& detection, const HeadTensors& heads,
                                     const Grouping& grouping, const KeypointSchema& schema);

/// exp(-d^2 / (2 sigma^2)) within 3 sigma of the center, 0 outside; the
/// pixel nearest the center is exactly 1. The center is clamped to the grid.
class GaussianMask {
 public:
  GaussianMask(Point2 center, double sigma, std::size_t height, std::size_t width);

  double value(std::size_t y, std::size_t x) const;

  Point2 center() const { return center_; }
  double sigma() const { return sigma_; }
  int radius() const { return radius_; }  // ceil(3 sigma)
  std::size_t nearest_x() const { return nearest_x_; }
  std::size_t nearest_y() const { return nearest_y_; }

  /// Inclusive pixel window holding every nonzero value.
  std::size_t x_begin() const { return x_begin_; }
  std::size_t x_end() const { return x_end_; }
  std::size_t y_begin() const { return y_begin_; }
  std::size_t y_end() const { return y_end_; }

 private:
  Point2 center_;
  double sigma_;
  int radius_;
  std::size_t nearest_x_, nearest_y_;
  std::size_t x_begin_, x_end_, y_begin_, y_end_;
};

GaussianMask gaussian_mask(Point2 center, double sigma, std::size_t height, std::size_t width);

/// Full rescored channel H * mask (zero outside the mask support).
std::vector<double> rescored_heatmap(ChannelView channel, const GaussianMask& mask);

/// Argmax of H * mask (ties to the smallest (y, x)), plus the sub-pixel
/// offset at that pixel when `kp_offset` is given. The score is the rescored
/// value. An all-zero product returns the coarse position with score 0.
DecodedKeypoint rescore_refine(ChannelView channel, Point2 coarse, double sigma,
                               const FeatureMap* kp_offset = nullptr);

/// Closest local peak (>= threshold) inside the box; ties go to the higher
/// score. Without a candidate the coarse position is kept.
DecodedKeypoint base_refine(ChannelView channel, Point2 coarse, const Box& box,
                            double threshold = 0.1, const FeatureMap* kp_offset = nullptr);
DecodedKeypoint base_refine(std::span<const Peak> peaks, Point2 coarse, const Box& box,
                            const FeatureMap* kp_offset = nullptr);

struct DecodeOptions {
  RefineMode refine = RefineMode::Rescore;
  double sigma = 2.0;
  int top_k = 100;
  double center_threshold = 0.1;
  double kp_threshold = 0.1;  // peak threshold for base refinement

  void validate() const;
};

/// Full decode. Rejects groupings with ambiguous pairs before touching the
/// tensors.
std::vector<Detection> decode_full(const HeadTensors& heads, const KeypointSchema& schema,
                                   const Grouping& grouping, const DecodeOptions& options);

/// Detections of several images as JSON, coordinates scaled by `stride` to
/// input pixels.
std::string detections_to_json(
    const std::vector<std::pair<std::string, std::vector<Detection>>>& images, int stride);

}  // namespace kpg
