#include "kpg/decode.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "io_util.hpp"
#include "kpg/error.hpp"

namespace kpg {

using detail::Json;

// FeatureMap --------------------------------------------------------------

FeatureMap::FeatureMap(std::size_t channels, std::size_t height, std::size_t width)
    : channels_(channels), height_(height), width_(width), data_(channels * height * width, 0.0f) {}

FeatureMap FeatureMap::from_tensor(const Tensor& tensor, std::string_view name) {
  require(tensor.rank() == 3, std::string(name) + " must be a (C, H, W) tensor, got rank " +
                                  std::to_string(tensor.rank()));
  FeatureMap map(tensor.dim(0), tensor.dim(1), tensor.dim(2));
  for (std::size_t i = 0; i < tensor.size(); ++i) map.data_[i] = static_cast<float>(tensor[i]);
  return map;
}

Tensor FeatureMap::to_tensor() const {
  return Tensor({channels_, height_, width_}, std::vector<double>(data_.begin(), data_.end()),
                Dtype::F32);
}

ChannelView FeatureMap::channel(std::size_t c) const {
  require(c < channels_, "channel " + std::to_string(c) + " out of range");
  return {std::span<const float>(data_).subspan(c * height_ * width_, height_ * width_), height_,
          width_};
}

namespace {

void require_shape(const FeatureMap& map, std::string_view name, std::size_t channels,
                   std::size_t height, std::size_t width) {
  if (map.channels() != channels || map.height() != height || map.width() != width) {
    fail(std::string(name) + " has shape (" + std::to_string(map.channels()) + ", " +
         std::to_string(map.height()) + ", " + std::to_string(map.width()) + "), expected (" +
         std::to_string(channels) + ", " + std::to_string(height) + ", " + std::to_string(width) +
         ")");
  }
}

void clamp_unit(FeatureMap& map) {
  for (float& v : map.values()) v = std::clamp(v, 0.0f, 1.0f);
}

}  // namespace

void HeadTensors::validate(const KeypointSchema& schema, const Grouping& grouping) const {
  std::size_t h = height(), w = width();
  require(h >= 1 && w >= 1, "head tensors have an empty grid");
  require_shape(center_heatmap, "center_heatmap", schema.num_classes(), h, w);
  require_shape(center_offset, "center_offset", 2, h, w);
  require_shape(object_size, "object_size", 2, h, w);
  require_shape(kp_regression, "kp_regression", 2 * static_cast<std::size_t>(grouping.m_reg), h, w);
  require_shape(kp_heatmap, "kp_heatmap", static_cast<std::size_t>(grouping.m_heat), h, w);
  require_shape(kp_offset, "kp_offset", 2, h, w);
}

HeadTensors load_heads(const HeadFiles& files) {
  HeadTensors heads;
  heads.center_heatmap = FeatureMap::from_tensor(read_tensor(files.center_heatmap), "center_heatmap");
  heads.center_offset = FeatureMap::from_tensor(read_tensor(files.center_offset), "center_offset");
  heads.object_size = FeatureMap::from_tensor(read_tensor(files.object_size), "object_size");
  heads.kp_regression = FeatureMap::from_tensor(read_tensor(files.kp_regression), "kp_regression");
  heads.kp_heatmap = FeatureMap::from_tensor(read_tensor(files.kp_heatmap), "kp_heatmap");
  heads.kp_offset = FeatureMap::from_tensor(read_tensor(files.kp_offset), "kp_offset");
  clamp_unit(heads.center_heatmap);
  clamp_unit(heads.kp_heatmap);
  return heads;
}

void save_heads(const HeadTensors& heads, const HeadFiles& files) {
  write_tensor(heads.center_heatmap.to_tensor(), files.center_heatmap);
  write_tensor(heads.center_offset.to_tensor(), files.center_offset);
  write_tensor(heads.object_size.to_tensor(), files.object_size);
  write_tensor(heads.kp_regression.to_tensor(), files.kp_regression);
  write_tensor(heads.kp_heatmap.to_tensor(), files.kp_heatmap);
  write_tensor(heads.kp_offset.to_tensor(), files.kp_offset);
}

// Peaks -------------------------------------------------------------------

std::vector<Peak> local_peaks(ChannelView channel, double threshold) {
  std::vector<Peak> peaks;
  const auto h = static_cast<long>(channel.height);
  const auto w = static_cast<long>(channel.width);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      float v = channel.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
      if (!(v > 0.0f) || v < threshold) continue;
      bool is_peak = true;
      for (long dy = -1; dy <= 1 && is_peak; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
          long ny = y + dy, nx = x + dx;
          if ((dy == 0 && dx == 0) || ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
          float u = channel.at(static_cast<std::size_t>(ny), static_cast<std::size_t>(nx));
          if (u > v || (u == v && std::tie(ny, nx) < std::tie(y, x))) {
            is_peak = false;
            break;
          }
        }
      }
      if (is_peak) peaks.push_back({static_cast<int>(x), static_cast<int>(y), v});
    }
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.y, a.x) < std::tie(b.y, b.x);
  });
  return peaks;
}

std::string_view to_string(RefineMode mode) { return mode == RefineMode::Base ? "base" : "rescore"; }

RefineMode parse_refine_mode(std::string_view text) {
  if (text == "base") return RefineMode::Base;
  if (text == "rescore") return RefineMode::Rescore;
  fail("unknown refinement '" + std::string(text) + "' (expected base or rescore)");
}

std::string_view to_string(KeypointSource source) {
  return source == KeypointSource::Coarse ? "coarse" : "refined";
}

// Boxes and coarse keypoints ----------------------------------------------

std::vector<Detection> decode_detections(const HeadTensors& heads, const KeypointSchema& schema,
                                         int top_k, double score_threshold) {
  require(top_k >= 1, "top_k must be >= 1");
  require(heads.center_heatmap.channels() == schema.num_classes(),
          "center_heatmap has " + std::to_string(heads.center_heatmap.channels()) +
              " channels, schema has " + std::to_string(schema.num_classes()) + " classes");
  std::size_t h = heads.height(), w = heads.width();
  require_shape(heads.center_offset, "center_offset", 2, h, w);
  require_shape(heads.object_size, "object_size", 2, h, w);

  struct Candidate {
    double score;
    std::size_t cls;
    Peak peak;
  };
  std::vector<Candidate> candidates;
  for (std::size_t c = 0; c < schema.num_classes(); ++c) {
    for (const Peak& p : local_peaks(heads.center_heatmap.channel(c), score_threshold)) {
      auto px = static_cast<std::size_t>(p.x), py = static_cast<std::size_t>(p.y);
      if (!(heads.object_size.at(0, py, px) > 0.0f) || !(heads.object_size.at(1, py, px) > 0.0f)) {
        continue;
      }
      candidates.push_back({p.score, c, p});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.cls, a.peak.y, a.peak.x) < std::tie(b.cls, b.peak.y, b.peak.x);
  });
  if (candidates.size() > static_cast<std::size_t>(top_k)) candidates.resize(static_cast<std::size_t>(top_k));

  std::vector<Detection> out;
  out.reserve(candidates.size());
  for (const auto& cand : candidates) {
    auto px = static_cast<std::size_t>(cand.peak.x), py = static_cast<std::size_t>(cand.peak.y);
    double cx = cand.peak.x + static_cast<double>(heads.center_offset.at(0, py, px));
    double cy = cand.peak.y + static_cast<double>(heads.center_offset.at(1, py, px));
    double bw = heads.object_size.at(0, py, px);
    double bh = heads.object_size.at(1, py, px);
    Detection d;
    d.class_id = schema.class_at(cand.cls).id;
    d.score = cand.score;
    d.box = {cx - bw / 2, cy - bh / 2, cx + bw / 2, cy + bh / 2};
    d.center_x = cand.peak.x;
    d.center_y = cand.peak.y;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Point2> coarse_keypoints(const Detection& detection, const HeadTensors& heads,
                                     const Grouping& grouping, const KeypointSchema& schema) {
  std::size_t cls = schema.class_index(detection.class_id);
  require(detection.center_x >= 0 && detection.center_y >= 0 &&
              static_cast<std::size_t>(detection.center_x) < heads.kp_regression.width() &&
              static_cast<std::size_t>(detection.center_y) < heads.kp_regression.height(),
          "detection center lies outside the grid");
  auto px = static_cast<std::size_t>(detection.center_x);
  auto py = static_cast<std::size_t>(detection.center_y);
  std::vector<Point2> coarse;
  const int count = schema.class_at(cls).kp_count;
  coarse.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    auto g = static_cast<std::size_t>(grouping.reg_labels[schema.global_index(cls, k)]);
    coarse.push_back({detection.center_x + static_cast<double>(heads.kp_regression.at(2 * g, py, px)),
                      detection.center_y + static_cast<double>(heads.kp_regression.at(2 * g + 1, py, px))});
  }
  return coarse;
}

// Gaussian mask and refinement --------------------------------------------

GaussianMask::GaussianMask(Point2 center, double sigma, std::size_t height, std::size_t width)
    : sigma_(sigma) {
  require(sigma > 0 && std::isfinite(sigma), "sigma must be positive");
  require(height >= 1 && width >= 1, "mask grid must be nonempty");
  require(std::isfinite(center.x) && std::isfinite(center.y), "mask center must be finite");
  double max_x = static_cast<double>(width - 1), max_y = static_cast<double>(height - 1);
  center_ = {std::clamp(center.x, 0.0, max_x), std::clamp(center.y, 0.0, max_y)};
  radius_ = static_cast<int>(std::min(std::ceil(3.0 * sigma), 1.0e9));
  nearest_x_ = static_cast<std::size_t>(std::clamp(std::floor(center_.x + 0.5), 0.0, max_x));
  nearest_y_ = static_cast<std::size_t>(std::clamp(std::floor(center_.y + 0.5), 0.0, max_y));

  double reach = 3.0 * sigma;
  auto lo = [](double v, std::size_t nearest) {
    return std::min(nearest, static_cast<std::size_t>(std::max(0.0, std::ceil(v))));
  };
  auto hi = [](double v, double limit, std::size_t nearest) {
    return std::max(nearest, static_cast<std::size_t>(std::min(limit, std::floor(v))));
  };
  x_begin_ = lo(center_.x - reach, nearest_x_);
  y_begin_ = lo(center_.y - reach, nearest_y_);
  x_end_ = hi(center_.x + reach, max_x, nearest_x_);
  y_end_ = hi(center_.y + reach, max_y, nearest_y_);
}

double GaussianMask::value(std::size_t y, std::size_t x) const {
  if (x == nearest_x_ && y == nearest_y_) return 1.0;
  double dx = static_cast<double>(x) - center_.x;
  double dy = static_cast<double>(y) - center_.y;
  double d2 = dx * dx + dy * dy;
  if (d2 > 9.0 * sigma_ * sigma_) return 0.0;
  return std::exp(-d2 / (2.0 * sigma_ * sigma_));
}

GaussianMask gaussian_mask(Point2 center, double sigma, std::size_t height, std::size_t width) {
  return GaussianMask(center, sigma, height, width);
}

std::vector<double> rescored_heatmap(ChannelView channel, const GaussianMask& mask) {
  std::vector<double> out(channel.height * channel.width, 0.0);
  for (std::size_t y = mask.y_begin(); y <= mask.y_end(); ++y) {
    for (std::size_t x = mask.x_begin(); x <= mask.x_end(); ++x) {
      out[y * channel.width + x] = static_cast<double>(channel.at(y, x)) * mask.value(y, x);
    }
  }
  return out;
}

namespace {

DecodedKeypoint with_offset(std::size_t x, std::size_t y, double score,
                            const FeatureMap* kp_offset) {
  DecodedKeypoint kp{static_cast<double>(x), static_cast<double>(y), score, KeypointSource::Refined};
  if (kp_offset) {
    kp.x += kp_offset->at(0, y, x);
    kp.y += kp_offset->at(1, y, x);
  }
  return kp;
}

}  // namespace

DecodedKeypoint rescore_refine(ChannelView channel, Point2 coarse, double sigma,
                               const FeatureMap* kp_offset) {
  GaussianMask mask(coarse, sigma, channel.height, channel.width);
  double best = 0.0;
  std::size_t best_x = 0, best_y = 0;
  for (std::size_t y = mask.y_begin(); y <= mask.y_end(); ++y) {
    for (std::size_t x = mask.x_begin(); x <= mask.x_end(); ++x) {
      double raw = channel.at(y, x);
      double m = mask.value(y, x);
      double v = raw * m;
      if (!(v <= raw) || (m == 0.0 && v != 0.0)) {
        throw Error(ErrorKind::Internal, "rescored heatmap exceeds the input heatmap");
      }
      if (v > best) {
        best = v;
        best_x = x;
        best_y = y;
      }
    }
  }
  if (!(best > 0.0)) return {coarse.x, coarse.y, 0.0, KeypointSource::Coarse};
  return with_offset(best_x, best_y, best, kp_offset);
}

DecodedKeypoint base_refine(std::span<const Peak> peaks, Point2 coarse, const Box& box,
                            const FeatureMap* kp_offset) {
  const Peak* best = nullptr;
  double best_d2 = 0.0;
  for (const Peak& p : peaks) {
    if (!box.contains(p.x, p.y)) continue;
    double dx = p.x - coarse.x, dy = p.y - coarse.y;
    double d2 = dx * dx + dy * dy;
    // Peaks arrive sorted by descending score, so a strict comparison keeps
    // the higher-scoring peak on distance ties.
    if (!best || d2 < best_d2) {
      best = &p;
      best_d2 = d2;
    }
  }
  if (!best) return {coarse.x, coarse.y, 0.0, KeypointSource::Coarse};
  return with_offset(static_cast<std::size_t>(best->x), static_cast<std::size_t>(best->y),
                     best->score, kp_offset);
}

DecodedKeypoint base_refine(ChannelView channel, Point2 coarse, const Box& box, double threshold,
                            const FeatureMap* kp_offset) {
  std::vector<Peak> peaks = local_peaks(channel, threshold);
  return base_refine(peaks, coarse, box, kp_offset);
}

void DecodeOptions::validate() const {
  require(sigma > 0 && std::isfinite(sigma), "sigma must be positive");
  require(top_k >= 1, "top_k must be >= 1");
  require(center_threshold >= 0 && center_threshold <= 1, "center threshold must lie in [0, 1]");
  require(kp_threshold >= 0 && kp_threshold <= 1, "keypoint threshold must lie in [0, 1]");
}

std::vector<Detection> decode_full(const HeadTensors& heads, const KeypointSchema& schema,
                                   const Grouping& grouping, const DecodeOptions& options) {
  options.validate();
  ValidityReport validity = check_grouping(schema, grouping, GroupingMode::Unrestricted);
  if (!validity.decodable()) {
    fail("grouping has " + std::to_string(validity.ambiguous_pairs_total) +
         " ambiguous keypoint pairs and cannot be decoded");
  }
  heads.validate(schema, grouping);

  std::vector<Detection> detections =
      decode_detections(heads, schema, options.top_k, options.center_threshold);

  std::vector<std::vector<Peak>> peak_cache;
  std::vector<char> cached;
  if (options.refine == RefineMode::Base) {
    peak_cache.resize(heads.kp_heatmap.channels());
    cached.assign(heads.kp_heatmap.channels(), 0);
  }

  for (Detection& det : detections) {
    std::size_t cls = schema.class_index(det.class_id);
    std::vector<Point2> coarse = coarse_keypoints(det, heads, grouping, schema);
    det.keypoints.clear();
    for (std::size_t k = 0; k < coarse.size(); ++k) {
      auto g = static_cast<std::size_t>(
          grouping.heat_labels[schema.global_index(cls, static_cast<int>(k))]);
      if (options.refine == RefineMode::Rescore) {
        det.keypoints.push_back(
            rescore_refine(heads.kp_heatmap.channel(g), coarse[k], options.sigma, &heads.kp_offset));
      } else {
        if (!cached[g]) {
          peak_cache[g] = local_peaks(heads.kp_heatmap.channel(g), options.kp_threshold);
          cached[g] = 1;
        }
        det.keypoints.push_back(base_refine(peak_cache[g], coarse[k], det.box, &heads.kp_offset));
      }
    }
  }
  return detections;
}

std::string detections_to_json(
    const std::vector<std::pair<std::string, std::vector<Detection>>>& images, int stride) {
  const double s = stride;
  Json list = Json::array();
  for (const auto& [id, detections] : images) {
    Json dets = Json::array();
    for (const auto& d : detections) {
      Json kps = Json::array();
      for (const auto& kp : d.keypoints) {
        kps.push_back(Json::array({kp.x * s, kp.y * s, kp.score, std::string(to_string(kp.source))}));
      }
      dets.push_back(Json{{"class_id", d.class_id},
                          {"score", d.score},
                          {"box", Json::array({d.box.x1 * s, d.box.y1 * s, d.box.x2 * s, d.box.y2 * s})},
                          {"keypoints", kps}});
    }
    list.push_back(Json{{"id", id}, {"detections", dets}});
  }
  return detail::dump_json(Json{{"stride", stride}, {"images", list}});
}

}  // namespace kpg
