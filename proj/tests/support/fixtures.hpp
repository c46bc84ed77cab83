#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "kpg/schema.hpp"

namespace fixtures {

/// Fresh scratch directory under the system temp dir.
inline std::string temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("kpg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline kpg::KeypointSchema schema_of(const std::vector<int>& counts) {
  std::vector<kpg::KeypointClass> classes;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    classes.push_back({static_cast<int>(i + 1), "class" + std::to_string(i + 1), counts[i]});
  }
  return kpg::KeypointSchema::create(classes);
}

/// Class index of every global keypoint.
inline std::vector<int> class_vector(const kpg::KeypointSchema& schema) {
  std::vector<int> out;
  for (std::size_t i = 0; i < schema.num_keypoints(); ++i) out.push_back(static_cast<int>(schema.class_of(i)));
  return out;
}

inline kpg::KeypointSchema random_schema(std::mt19937_64& rng, int max_classes, int max_kps) {
  std::uniform_int_distribution<int> nc(1, max_classes), nk(1, max_kps);
  std::vector<int> counts(static_cast<std::size_t>(nc(rng)));
  for (int& c : counts) c = nk(rng);
  return schema_of(counts);
}

}  // namespace fixtures
