#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kpg/schema.hpp"

namespace kpg {

enum class Dtype { F32, F64 };

std::string_view to_string(Dtype dtype);

/// Dense row-major array. Values are held as doubles; an F32 tensor only ever
/// holds values exactly representable as float, so F32 files round-trip
/// bit-for-bit.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<double> data, Dtype dtype = Dtype::F32);

  static Tensor zeros(std::vector<std::size_t> shape, Dtype dtype = Dtype::F32);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  Dtype dtype() const { return dtype_; }

  /// Leading dimension, and the flattened length of everything after it.
  std::size_t rows() const { return shape_.empty() ? 1 : shape_[0]; }
  std::size_t row_length() const { return rows() == 0 ? 0 : size() / rows(); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * row_length(), row_length());
  }

  std::span<const double> data() const { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  /// Stores `value`, rounded to float for F32 tensors.
  void set(std::size_t i, double value);

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
  Dtype dtype_ = Dtype::F32;
};

struct NpyReadOptions {
  bool allow_nonfinite = false;
};

/// NPY v1.0, little-endian '<f4' / '<f8', C order only.
Tensor decode_npy(std::string_view bytes, NpyReadOptions options = {});
std::string encode_npy(const Tensor& tensor);

Tensor read_tensor(const std::string& path, NpyReadOptions options = {});
void write_tensor(const Tensor& tensor, const std::string& path);

// Annotations -------------------------------------------------------------

struct ImageInfo {
  long long id = 0;
  double width = 0;
  double height = 0;
};

struct AnnotatedKeypoint {
  double x = 0;
  double y = 0;
  int v = 0;  // 0 absent, 1 labeled but occluded, 2 visible
  bool present() const { return v > 0; }
};

struct BBox {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;
  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }
};

struct AnnotatedObject {
  long long image_id = 0;
  int class_id = 0;
  BBox bbox;
  std::vector<AnnotatedKeypoint> keypoints;  // class-local order
};

struct AnnotationSet {
  std::vector<ImageInfo> images;
  std::vector<AnnotatedObject> objects;
};

AnnotationSet annotations_from_json(std::string_view text, const KeypointSchema& schema);
std::string annotations_to_json(const AnnotationSet& annotations);
AnnotationSet read_annotations(const std::string& path, const KeypointSchema& schema);

// Decode manifest ---------------------------------------------------------

/// File names of the six head tensors of one image.
struct HeadFiles {
  std::string center_heatmap;
  std::string center_offset;
  std::string object_size;
  std::string kp_regression;
  std::string kp_heatmap;
  std::string kp_offset;
};

struct ManifestImage {
  std::string id;
  HeadFiles heads;
  std::string ground_truth;  // optional; required by sigma sweeps
};

/// Paths are stored as written in the file; `resolve` makes them usable.
struct DecodeManifest {
  std::string schema;
  std::string grouping;
  int stride = 4;
  std::vector<ManifestImage> images;
};

DecodeManifest manifest_from_json(std::string_view text);
std::string manifest_to_json(const DecodeManifest& manifest);
/// Reads the manifest and rewrites every relative path against its directory.
DecodeManifest read_manifest(const std::string& path);
void write_manifest(const DecodeManifest& manifest, const std::string& path);

}  // namespace kpg
