#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kpg/decode.hpp"
#include "kpg/schema.hpp"

namespace kpg {

/// Ground truth of one scene, in feature-grid units.
struct GroundTruthObject {
  int class_id = 0;
  Box box;
  std::vector<Point2> keypoints;  // class-local order
};

struct GroundTruth {
  std::string scene_id;
  std::vector<GroundTruthObject> objects;
};

std::string ground_truth_to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(std::string_view text);
GroundTruth read_ground_truth(const std::string& path);
void write_ground_truth(const GroundTruth& truth, const std::string& path);

double box_iou(const Box& a, const Box& b);

/// PCK counts per global keypoint type.
struct PckReport {
  double threshold = 0.05;
  std::vector<long long> correct;
  std::vector<long long> total;

  long long correct_sum() const;
  long long total_sum() const;
  double aggregate() const;                 // 0 when nothing was evaluated
  double per_type(std::size_t type) const;  // -1 when the type never occurs
};

PckReport make_pck_report(const KeypointSchema& schema, double threshold = 0.05);

/// Adds one scene to `report`. Detections are matched to same-class ground
/// truth objects greedily by score at IoU >= 0.5; a keypoint is correct when
/// within threshold * max(box w, box h) of the truth. Unmatched objects count
/// all their keypoints as incorrect.
void accumulate_pck(PckReport& report, std::span<const Detection> detections,
                    const GroundTruth& truth, const KeypointSchema& schema);

PckReport evaluate(std::span<const Detection> detections, const GroundTruth& truth,
                   const KeypointSchema& schema, double threshold = 0.05);

struct LabeledScene {
  HeadTensors heads;
  GroundTruth truth;
};

struct SigmaPoint {
  double sigma;
  double accuracy;
};

struct SigmaSweep {
  double pck_threshold = 0.05;
  std::vector<SigmaPoint> points;
  double best_sigma = 0;
  double best_accuracy = 0;
};

/// Decodes every scene in rescore mode at each sigma and picks the sigma with
/// the highest aggregate PCK; ties go to the smaller sigma.
SigmaSweep sweep_sigma(std::span<const LabeledScene> scenes, const KeypointSchema& schema,
                       const Grouping& grouping, std::span<const double> sigmas,
                       DecodeOptions options = {}, double pck_threshold = 0.05);

std::string sweep_to_json(const SigmaSweep& sweep);
std::string sweep_to_text(const SigmaSweep& sweep);

}  // namespace kpg
