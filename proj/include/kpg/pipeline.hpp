#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kpg/cluster.hpp"
#include "kpg/decode.hpp"
#include "kpg/dissim.hpp"
#include "kpg/evaluate.hpp"
#include "kpg/ingest.hpp"
#include "kpg/schema.hpp"
#include "kpg/synth.hpp"

namespace kpg {

/// Matrix, dendrogram and labels produced for one head.
struct HeadClustering {
  DissimilarityMatrix matrix;  // after restrictions, if any
  Dendrogram dendrogram;
  Labels labels;
};

/// Optionally restricts `matrix`, clusters it and cuts at `clusters`. With
/// `restrict` a cut that merges two same-class keypoints throws.
HeadClustering cluster_head(DissimilarityMatrix matrix, const KeypointSchema& schema,
                            Linkage linkage, int clusters, bool restrict);

using ImageDetections = std::pair<std::string, std::vector<Detection>>;

/// Decodes every manifest image with up to `jobs` worker threads. Output
/// order follows the manifest regardless of `jobs`.
std::vector<ImageDetections> decode_images(const DecodeManifest& manifest,
                                           const KeypointSchema& schema, const Grouping& grouping,
                                           const DecodeOptions& options, int jobs = 1);

/// Loads the heads and ground truth of every manifest image; images without
/// ground truth are rejected.
std::vector<LabeledScene> load_labeled_scenes(const DecodeManifest& manifest, int jobs = 1);

/// Renders the scenes into `directory` and writes schema.json, grouping.json
/// and manifest.json next to them. Returns the manifest path.
std::string write_scene_set(const std::vector<SceneSpec>& scenes, const KeypointSchema& schema,
                            const Grouping& grouping, const std::string& directory);

}  // namespace kpg
