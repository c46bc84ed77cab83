#include "kpg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

#include "kpg/error.hpp"

namespace kpg {

namespace {

// Runs body(i) for i in [0, count) on up to `jobs` threads. The first
// exception (lowest index) is rethrown after all workers finish.
template <typename Body>
void parallel_for(std::size_t count, int jobs, Body body) {
  std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

HeadClustering cluster_head(DissimilarityMatrix matrix, const KeypointSchema& schema,
                            Linkage linkage, int clusters, bool restrict) {
  require(matrix.n() == schema.num_keypoints(), "matrix size does not match the schema");
  require(clusters >= 1 && static_cast<std::size_t>(clusters) <= schema.num_keypoints(),
          "cluster count must be in [1, n]");
  if (restrict) {
    int floor_m = min_restricted_clusters(schema);
    require(clusters >= floor_m, "restricted grouping needs at least " + std::to_string(floor_m) +
                                     " clusters for this schema");
    matrix = apply_restrictions(std::move(matrix), schema);
  }
  HeadClustering out;
  out.dendrogram = agglomerate(matrix, linkage);
  out.labels = restrict ? restricted_cut(out.dendrogram, clusters, schema) : cut(out.dendrogram, clusters);
  out.matrix = std::move(matrix);
  return out;
}

std::vector<ImageDetections> decode_images(const DecodeManifest& manifest,
                                           const KeypointSchema& schema, const Grouping& grouping,
                                           const DecodeOptions& options, int jobs) {
  options.validate();
  require(jobs >= 1, "--jobs must be at least 1");
  validate_grouping(schema, grouping);
  std::vector<ImageDetections> out(manifest.images.size());
  parallel_for(manifest.images.size(), jobs, [&](std::size_t i) {
    const ManifestImage& image = manifest.images[i];
    HeadTensors heads = load_heads(image.heads);
    out[i] = {image.id, decode_full(heads, schema, grouping, options)};
  });
  return out;
}

std::vector<LabeledScene> load_labeled_scenes(const DecodeManifest& manifest, int jobs) {
  require(jobs >= 1, "--jobs must be at least 1");
  for (const ManifestImage& image : manifest.images) {
    require(!image.ground_truth.empty(), "manifest image '" + image.id + "' has no ground truth");
  }
  std::vector<LabeledScene> out(manifest.images.size());
  parallel_for(manifest.images.size(), jobs, [&](std::size_t i) {
    out[i].heads = load_heads(manifest.images[i].heads);
    out[i].truth = read_ground_truth(manifest.images[i].ground_truth);
  });
  return out;
}

std::string write_scene_set(const std::vector<SceneSpec>& scenes, const KeypointSchema& schema,
                            const Grouping& grouping, const std::string& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) fail_io("cannot create directory '" + directory + "'");

  for (std::size_t i = 0; i < scenes.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      require(scenes[i].id != scenes[j].id, "duplicate scene id '" + scenes[i].id + "'");
    }
  }
  DecodeManifest manifest;
  manifest.schema = "schema.json";
  manifest.grouping = "grouping.json";
  for (const SceneSpec& spec : scenes) {
    RenderedScene rendered = render(spec, schema, grouping);
    manifest.images.push_back(write_rendered_scene(rendered, directory));
  }
  write_schema(schema, (fs::path(directory) / "schema.json").string());
  write_grouping(grouping, (fs::path(directory) / "grouping.json").string());
  std::string path = (fs::path(directory) / "manifest.json").string();
  write_manifest(manifest, path);
  return path;
}

}  // namespace kpg
