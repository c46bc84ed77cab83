#include "kpg/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "io_util.hpp"
#include "kpg/error.hpp"

namespace kpg {

using detail::Json;

std::string ground_truth_to_json(const GroundTruth& truth) {
  Json objects = Json::array();
  for (const auto& o : truth.objects) {
    Json kps = Json::array();
    for (const auto& p : o.keypoints) kps.push_back(Json::array({p.x, p.y}));
    objects.push_back(Json{{"class_id", o.class_id},
                           {"box", Json::array({o.box.x1, o.box.y1, o.box.x2, o.box.y2})},
                           {"keypoints", kps}});
  }
  return detail::dump_json(Json{{"scene_id", truth.scene_id}, {"units", "grid"}, {"objects", objects}});
}

GroundTruth ground_truth_from_json(std::string_view text) {
  Json root = detail::parse_json(text, "ground truth");
  GroundTruth truth;
  truth.scene_id = detail::get_string(root, "scene_id", "ground truth");
  const Json& objects = detail::field(root, "objects", "ground truth");
  require(objects.is_array(), "ground truth: 'objects' must be an array");
  for (const Json& item : objects) {
    GroundTruthObject o;
    o.class_id = static_cast<int>(detail::get_int(item, "class_id", "ground truth object"));
    const Json& box = detail::field(item, "box", "ground truth object");
    require(box.is_array() && box.size() == 4, "ground truth: box must be [x1, y1, x2, y2]");
    o.box = {detail::get_number(box[0], "box"), detail::get_number(box[1], "box"),
             detail::get_number(box[2], "box"), detail::get_number(box[3], "box")};
    for (const Json& kp : detail::field(item, "keypoints", "ground truth object")) {
      require(kp.is_array() && kp.size() == 2, "ground truth: keypoints must be [x, y] pairs");
      o.keypoints.push_back({detail::get_number(kp[0], "keypoint"), detail::get_number(kp[1], "keypoint")});
    }
    truth.objects.push_back(std::move(o));
  }
  return truth;
}

GroundTruth read_ground_truth(const std::string& path) {
  return ground_truth_from_json(detail::read_text_file(path));
}

void write_ground_truth(const GroundTruth& truth, const std::string& path) {
  detail::write_text_file(path, ground_truth_to_json(truth));
}

double box_iou(const Box& a, const Box& b) {
  double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  double inter = ix * iy;
  double uni = a.width() * a.height() + b.width() * b.height() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

long long PckReport::correct_sum() const {
  return std::accumulate(correct.begin(), correct.end(), 0LL);
}

long long PckReport::total_sum() const { return std::accumulate(total.begin(), total.end(), 0LL); }

double PckReport::aggregate() const {
  long long t = total_sum();
  return t == 0 ? 0.0 : static_cast<double>(correct_sum()) / static_cast<double>(t);
}

double PckReport::per_type(std::size_t type) const {
  if (total.at(type) == 0) return -1.0;
  return static_cast<double>(correct[type]) / static_cast<double>(total[type]);
}

PckReport make_pck_report(const KeypointSchema& schema, double threshold) {
  require(threshold > 0, "PCK threshold must be positive");
  PckReport r;
  r.threshold = threshold;
  r.correct.assign(schema.num_keypoints(), 0);
  r.total.assign(schema.num_keypoints(), 0);
  return r;
}

void accumulate_pck(PckReport& report, std::span<const Detection> detections,
                    const GroundTruth& truth, const KeypointSchema& schema) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });

  std::vector<long> match(truth.objects.size(), -1);
  for (std::size_t d : order) {
    const Detection& det = detections[d];
    long best = -1;
    double best_iou = 0.5;
    for (std::size_t g = 0; g < truth.objects.size(); ++g) {
      if (match[g] >= 0 || truth.objects[g].class_id != det.class_id) continue;
      double iou = box_iou(det.box, truth.objects[g].box);
      if (iou >= best_iou) {
        best_iou = iou;
        best = static_cast<long>(g);
        if (iou == 1.0) break;
      }
    }
    if (best >= 0) match[static_cast<std::size_t>(best)] = static_cast<long>(d);
  }

  for (std::size_t g = 0; g < truth.objects.size(); ++g) {
    const GroundTruthObject& obj = truth.objects[g];
    std::size_t cls = schema.class_index(obj.class_id);
    require(obj.keypoints.size() == static_cast<std::size_t>(schema.class_at(cls).kp_count),
            "ground truth object has the wrong number of keypoints");
    double limit = report.threshold * std::max(obj.box.width(), obj.box.height());
    for (std::size_t k = 0; k < obj.keypoints.size(); ++k) {
      std::size_t type = schema.offset(cls) + k;
      ++report.total[type];
      if (match[g] < 0) continue;
      const Detection& det = detections[static_cast<std::size_t>(match[g])];
      if (k >= det.keypoints.size()) continue;
      double dist = std::hypot(det.keypoints[k].x - obj.keypoints[k].x,
                               det.keypoints[k].y - obj.keypoints[k].y);
      if (dist <= limit) ++report.correct[type];
    }
  }
}

PckReport evaluate(std::span<const Detection> detections, const GroundTruth& truth,
                   const KeypointSchema& schema, double threshold) {
  PckReport report = make_pck_report(schema, threshold);
  accumulate_pck(report, detections, truth, schema);
  return report;
}

SigmaSweep sweep_sigma(std::span<const LabeledScene> scenes, const KeypointSchema& schema,
                       const Grouping& grouping, std::span<const double> sigmas,
                       DecodeOptions options, double pck_threshold) {
  require(!sigmas.empty(), "sigma grid is empty");
  for (double s : sigmas) require(s > 0 && std::isfinite(s), "sigma values must be positive");
  options.refine = RefineMode::Rescore;

  std::vector<double> grid(sigmas.begin(), sigmas.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  SigmaSweep sweep;
  sweep.pck_threshold = pck_threshold;
  bool first = true;
  for (double sigma : grid) {
    options.sigma = sigma;
    PckReport report = make_pck_report(schema, pck_threshold);
    for (const LabeledScene& scene : scenes) {
      std::vector<Detection> dets = decode_full(scene.heads, schema, grouping, options);
      accumulate_pck(report, dets, scene.truth, schema);
    }
    double acc = report.aggregate();
    sweep.points.push_back({sigma, acc});
    // Ascending grid with a strict comparison keeps the smallest sigma on ties.
    if (first || acc > sweep.best_accuracy) {
      sweep.best_sigma = sigma;
      sweep.best_accuracy = acc;
      first = false;
    }
  }
  return sweep;
}

std::string sweep_to_json(const SigmaSweep& sweep) {
  Json points = Json::array();
  for (const auto& p : sweep.points) points.push_back(Json{{"sigma", p.sigma}, {"pck", p.accuracy}});
  return detail::dump_json(Json{{"metric", "pck"},
                                {"pck_threshold", sweep.pck_threshold},
                                {"points", points},
                                {"best_sigma", sweep.best_sigma},
                                {"best_pck", sweep.best_accuracy}});
}

std::string sweep_to_text(const SigmaSweep& sweep) {
  std::ostringstream out;
  out << "   sigma      PCK\n";
  char line[96];
  for (const auto& p : sweep.points) {
    std::snprintf(line, sizeof line, "%8.4g  %7.4f%s\n", p.sigma, p.accuracy,
                  p.sigma == sweep.best_sigma ? "  <- best" : "");
    out << line;
  }
  return out.str();
}

}  // namespace kpg
