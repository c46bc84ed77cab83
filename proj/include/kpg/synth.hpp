#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "kpg/decode.hpp"
#include "kpg/evaluate.hpp"
#include "kpg/ingest.hpp"
#include "kpg/schema.hpp"

namespace kpg {

struct SceneKeypoint {
  Point2 position;
  double amplitude = 1.0;  // heatmap peak height
  Point2 reg_error;        // added to the regressed displacement
};

struct SceneObject {
  int class_id = 0;
  Point2 center;
  double width = 0;
  double height = 0;
  double score = 1.0;  // center heatmap peak height
  std::vector<SceneKeypoint> keypoints;  // class-local order
};

/// Extra peak on one keypoint heatmap channel.
struct Distractor {
  Point2 position;
  double amplitude = 0;
  int channel = 0;
};

/// Everything needed to render one image's head tensors, in grid units.
struct SceneSpec {
  std::string id = "scene";
  std::size_t height = 0;
  std::size_t width = 0;
  double sigma_center = 1.0;
  double sigma_keypoint = 1.0;
  std::vector<SceneObject> objects;
  std::vector<Distractor> distractors;
};

std::string scene_to_json(const SceneSpec& scene);
SceneSpec scene_from_json(std::string_view text);
/// Accepts a single scene object or {"scenes": [...]}.
std::vector<SceneSpec> scenes_from_json(std::string_view text);
std::vector<SceneSpec> read_scenes(const std::string& path);

struct RenderedScene {
  HeadTensors heads;
  GroundTruth truth;
};

/// Renders ground-truth-consistent head tensors.
///
/// Gaussians are drawn at integer pixels (floor of the position) with their
/// peak value at that pixel, composited by elementwise max. Offsets hold the
/// fractional parts. The regression channels of cluster g at an object's
/// center pixel hold the mean over the object's keypoints in g of
/// (keypoint + reg_error - center pixel).
RenderedScene render(const SceneSpec& scene, const KeypointSchema& schema,
                     const Grouping& grouping);

/// The closest-peak failure case: a weak distractor sits nearer the coarse
/// keypoint than the true peak.
struct ClosestPeakCase {
  KeypointSchema schema;
  Grouping grouping;
  SceneSpec scene;
  double sigma = 2.0;
  Point2 coarse;
  Point2 truth;
  Point2 distractor;
  double true_amplitude = 0.9;
  double distractor_amplitude = 0.15;

  /// Distractor amplitude at which both rescored values are equal:
  /// A_true * exp(-(d_true^2 - d_distractor^2) / (2 sigma^2)).
  double break_even_amplitude() const;
  /// Same scene with a different distractor amplitude.
  SceneSpec with_distractor_amplitude(double amplitude) const;
};

ClosestPeakCase closest_peak_case();

/// Random scenes with well-separated peaks, laid out so that every original
/// keypoint of an ambiguity-free grouping is recoverable. Objects occupy
/// disjoint blocks of `cells_per_block`^2 lattice cells; every regression
/// cluster of an object gets its own cell, and keypoints sharing that cluster
/// sit on distinct pixels around the cell's anchor.
struct RandomSceneParams {
  std::size_t grid = 128;
  double cell = 16.0;
  int cells_per_block = 3;
  int max_objects = 4;
  double sigma_center = 1.0;
  double sigma_keypoint = 1.0;
  double anchor_jitter = 1.0;
};

SceneSpec random_scene(const KeypointSchema& schema, const Grouping& grouping,
                       std::mt19937_64& rng, const RandomSceneParams& params = {},
                       std::string id = "scene");

/// Writes the six tensors and ground truth under `directory`/<scene id>/ and
/// returns the manifest entry (paths relative to `directory`).
ManifestImage write_rendered_scene(const RenderedScene& scene, const std::string& directory);

}  // namespace kpg
