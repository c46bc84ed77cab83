#include "kpg/ingest.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>

#include "io_util.hpp"
#include "kpg/error.hpp"

namespace kpg {

using detail::Json;

std::string_view to_string(Dtype dtype) { return dtype == Dtype::F32 ? "<f4" : "<f8"; }

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  return s + ")";
}

template <typename T>
T byteswap_if_needed(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }
}

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kAlign = 64;

// Minimal parser for the python-literal dict in an NPY v1.0 header.
class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : text_(text) {}

  std::string_view value_of(std::string_view key) {
    std::string quoted = "'" + std::string(key) + "'";
    auto pos = text_.find(quoted);
    if (pos == std::string_view::npos) fail("npy header: missing key " + quoted);
    pos = text_.find(':', pos + quoted.size());
    if (pos == std::string_view::npos) fail("npy header: malformed entry for " + quoted);
    ++pos;
    while (pos < text_.size() && text_[pos] == ' ') ++pos;
    std::size_t end = pos;
    if (pos < text_.size() && text_[pos] == '(') {
      end = text_.find(')', pos);
      if (end == std::string_view::npos) fail("npy header: unterminated shape tuple");
      ++end;
    } else if (pos < text_.size() && text_[pos] == '\'') {
      end = text_.find('\'', pos + 1);
      if (end == std::string_view::npos) fail("npy header: unterminated string");
      ++end;
    } else {
      while (end < text_.size() && text_[end] != ',' && text_[end] != '}') ++end;
    }
    return text_.substr(pos, end - pos);
  }

 private:
  std::string_view text_;
};

std::vector<std::size_t> parse_shape(std::string_view tuple) {
  // tuple is "(...)" including parentheses
  std::vector<std::size_t> shape;
  std::string_view inner = tuple.substr(1, tuple.size() - 2);
  std::size_t pos = 0;
  while (pos < inner.size()) {
    while (pos < inner.size() && (inner[pos] == ' ' || inner[pos] == ',')) ++pos;
    if (pos >= inner.size()) break;
    std::size_t value = 0;
    std::size_t start = pos;
    while (pos < inner.size() && inner[pos] >= '0' && inner[pos] <= '9') {
      value = value * 10 + static_cast<std::size_t>(inner[pos] - '0');
      ++pos;
    }
    if (pos == start) fail("npy header: malformed shape " + std::string(tuple));
    shape.push_back(value);
  }
  return shape;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data, Dtype dtype)
    : shape_(std::move(shape)), data_(std::move(data)), dtype_(dtype) {
  require(data_.size() == product(shape_),
          "tensor data length " + std::to_string(data_.size()) + " does not match shape " +
              shape_string(shape_));
  if (dtype_ == Dtype::F32) {
    for (double& v : data_) v = static_cast<double>(static_cast<float>(v));
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, Dtype dtype) {
  std::size_t count = product(shape);
  return Tensor(std::move(shape), std::vector<double>(count, 0.0), dtype);
}

void Tensor::set(std::size_t i, double value) {
  data_.at(i) = dtype_ == Dtype::F32 ? static_cast<double>(static_cast<float>(value)) : value;
}

Tensor decode_npy(std::string_view bytes, NpyReadOptions options) {
  if (bytes.size() < kMagicLen + 4 || bytes.substr(0, kMagicLen) != std::string_view(kMagic, kMagicLen)) {
    fail("npy: bad magic");
  }
  auto major = static_cast<unsigned char>(bytes[6]);
  auto minor = static_cast<unsigned char>(bytes[7]);
  if (major != 1 || minor != 0) {
    fail("npy: unsupported format version " + std::to_string(major) + "." + std::to_string(minor));
  }
  std::size_t header_len = static_cast<unsigned char>(bytes[8]) |
                           (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  if (bytes.size() < 10 + header_len) fail("npy: truncated header");
  HeaderParser header(bytes.substr(10, header_len));

  std::string_view descr = header.value_of("descr");
  Dtype dtype;
  if (descr == "'<f4'") {
    dtype = Dtype::F32;
  } else if (descr == "'<f8'") {
    dtype = Dtype::F64;
  } else {
    fail("npy: unsupported dtype " + std::string(descr));
  }
  std::string_view fortran = header.value_of("fortran_order");
  if (fortran == "True") fail("npy: fortran_order arrays are not supported");
  if (fortran != "False") fail("npy: malformed fortran_order value");
  std::string_view shape_text = header.value_of("shape");
  if (shape_text.empty() || shape_text.front() != '(') fail("npy: malformed shape");
  std::vector<std::size_t> shape = parse_shape(shape_text);

  std::size_t count = product(shape);
  std::size_t item = dtype == Dtype::F32 ? 4 : 8;
  std::string_view payload = bytes.substr(10 + header_len);
  if (payload.size() < count * item) {
    fail("npy: truncated payload (" + std::to_string(payload.size()) + " bytes, expected " +
         std::to_string(count * item) + ")");
  }
  if (payload.size() > count * item) fail("npy: trailing bytes after payload");

  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (dtype == Dtype::F32) {
      float v;
      std::memcpy(&v, payload.data() + i * 4, 4);
      data[i] = static_cast<double>(byteswap_if_needed(v));
    } else {
      double v;
      std::memcpy(&v, payload.data() + i * 8, 8);
      data[i] = byteswap_if_needed(v);
    }
    if (!options.allow_nonfinite && !std::isfinite(data[i])) {
      fail("npy: non-finite value at flat index " + std::to_string(i));
    }
  }
  return Tensor(std::move(shape), std::move(data), dtype);
}

std::string encode_npy(const Tensor& tensor) {
  std::string header = "{'descr': '" + std::string(to_string(tensor.dtype())) +
                       "', 'fortran_order': False, 'shape': " + shape_string(tensor.shape()) +
                       ", }";
  std::size_t hlen = header.size() + 1;
  std::size_t pad = kAlign - ((kMagicLen + 4 + hlen) % kAlign);
  header.append(pad, ' ');
  header.push_back('\n');

  std::string out(kMagic, kMagicLen);
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(header.size() & 0xff));
  out.push_back(static_cast<char>((header.size() >> 8) & 0xff));
  out += header;

  std::size_t item = tensor.dtype() == Dtype::F32 ? 4 : 8;
  std::size_t start = out.size();
  out.resize(start + tensor.size() * item);
  for (std::size_t i = 0; i < tensor.size(); ++i) {
    if (tensor.dtype() == Dtype::F32) {
      float v = byteswap_if_needed(static_cast<float>(tensor[i]));
      std::memcpy(out.data() + start + i * 4, &v, 4);
    } else {
      double v = byteswap_if_needed(tensor[i]);
      std::memcpy(out.data() + start + i * 8, &v, 8);
    }
  }
  return out;
}

Tensor read_tensor(const std::string& path, NpyReadOptions options) {
  std::string bytes = detail::read_text_file(path);
  try {
    return decode_npy(bytes, options);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Validation) fail(path + ": " + e.what());
    throw;
  }
}

void write_tensor(const Tensor& tensor, const std::string& path) {
  detail::write_text_file(path, encode_npy(tensor));
}

// Annotations -------------------------------------------------------------

AnnotationSet annotations_from_json(std::string_view text, const KeypointSchema& schema) {
  Json root = detail::parse_json(text, "annotations");
  AnnotationSet set;

  const Json& images = detail::field(root, "images", "annotations");
  require(images.is_array(), "annotations: 'images' must be an array");
  for (const Json& img : images) {
    ImageInfo info;
    info.id = detail::get_int(img, "id", "image");
    info.width = detail::get_number(img, "width", "image");
    info.height = detail::get_number(img, "height", "image");
    set.images.push_back(info);
  }

  const Json& objects = detail::field(root, "annotations", "annotations");
  require(objects.is_array(), "annotations: 'annotations' must be an array");
  std::size_t index = 0;
  for (const Json& obj : objects) {
    std::string where = "annotation #" + std::to_string(index++);
    AnnotatedObject o;
    o.image_id = detail::get_int(obj, "image_id", where);
    o.class_id = static_cast<int>(detail::get_int(obj, "category_id", where));
    std::size_t cls = schema.find_class(o.class_id);
    if (cls == KeypointSchema::npos) {
      fail(where + ": unknown category_id " + std::to_string(o.class_id));
    }

    const Json& bbox = detail::field(obj, "bbox", where);
    require(bbox.is_array() && bbox.size() == 4, where + ": bbox must be [x, y, w, h]");
    o.bbox = {detail::get_number(bbox[0], where), detail::get_number(bbox[1], where),
              detail::get_number(bbox[2], where), detail::get_number(bbox[3], where)};
    require(o.bbox.w > 0 && o.bbox.h > 0, where + ": bbox width and height must be positive");

    const Json& kps = detail::field(obj, "keypoints", where);
    require(kps.is_array(), where + ": keypoints must be an array");
    std::size_t expected = 3 * static_cast<std::size_t>(schema.class_at(cls).kp_count);
    if (kps.size() != expected) {
      fail(where + ": keypoints has " + std::to_string(kps.size()) + " values, class " +
           std::to_string(o.class_id) + " needs " + std::to_string(expected));
    }
    for (std::size_t k = 0; k < kps.size(); k += 3) {
      AnnotatedKeypoint kp;
      kp.x = detail::get_number(kps[k], where);
      kp.y = detail::get_number(kps[k + 1], where);
      double v = detail::get_number(kps[k + 2], where);
      require(v == 0 || v == 1 || v == 2, where + ": visibility flag must be 0, 1 or 2");
      kp.v = static_cast<int>(v);
      o.keypoints.push_back(kp);
    }
    set.objects.push_back(std::move(o));
  }
  return set;
}

std::string annotations_to_json(const AnnotationSet& annotations) {
  Json images = Json::array();
  for (const auto& img : annotations.images) {
    images.push_back(Json{{"id", img.id},
                          {"width", detail::number(img.width)},
                          {"height", detail::number(img.height)}});
  }
  Json objects = Json::array();
  for (const auto& o : annotations.objects) {
    Json kps = Json::array();
    for (const auto& kp : o.keypoints) {
      kps.push_back(detail::number(kp.x));
      kps.push_back(detail::number(kp.y));
      kps.push_back(kp.v);
    }
    objects.push_back(Json{{"image_id", o.image_id},
                           {"category_id", o.class_id},
                           {"bbox", Json::array({detail::number(o.bbox.x), detail::number(o.bbox.y),
                                                 detail::number(o.bbox.w),
                                                 detail::number(o.bbox.h)})},
                           {"keypoints", kps}});
  }
  return detail::dump_json(Json{{"images", images}, {"annotations", objects}});
}

AnnotationSet read_annotations(const std::string& path, const KeypointSchema& schema) {
  return annotations_from_json(detail::read_text_file(path), schema);
}

// Manifest ----------------------------------------------------------------

namespace {

constexpr const char* kHeadKeys[] = {"center_heatmap", "center_offset", "object_size",
                                     "kp_regression",  "kp_heatmap",    "kp_offset"};

std::string* head_slot(HeadFiles& files, int i) {
  std::string* slots[] = {&files.center_heatmap, &files.center_offset, &files.object_size,
                          &files.kp_regression,  &files.kp_heatmap,    &files.kp_offset};
  return slots[i];
}

}  // namespace

DecodeManifest manifest_from_json(std::string_view text) {
  Json root = detail::parse_json(text, "manifest");
  DecodeManifest m;
  m.schema = detail::get_string(root, "schema", "manifest");
  m.grouping = detail::get_string(root, "grouping", "manifest");
  if (root.contains("stride")) m.stride = static_cast<int>(detail::get_int(root, "stride", "manifest"));
  require(m.stride >= 1, "manifest: stride must be >= 1");
  const Json& images = detail::field(root, "images", "manifest");
  require(images.is_array(), "manifest: 'images' must be an array");
  for (const Json& img : images) {
    ManifestImage entry;
    const Json& id = detail::field(img, "id", "manifest image");
    entry.id = id.is_string() ? id.get<std::string>() : id.dump();
    const Json& heads = detail::field(img, "heads", "manifest image " + entry.id);
    for (int i = 0; i < 6; ++i) {
      *head_slot(entry.heads, i) = detail::get_string(heads, kHeadKeys[i], "manifest image " + entry.id);
    }
    if (img.contains("ground_truth")) {
      entry.ground_truth = detail::get_string(img, "ground_truth", "manifest image " + entry.id);
    }
    m.images.push_back(std::move(entry));
  }
  return m;
}

std::string manifest_to_json(const DecodeManifest& manifest) {
  Json images = Json::array();
  for (const auto& img : manifest.images) {
    Json heads = Json::object();
    HeadFiles files = img.heads;
    for (int i = 0; i < 6; ++i) heads[kHeadKeys[i]] = *head_slot(files, i);
    Json entry{{"id", img.id}, {"heads", heads}};
    if (!img.ground_truth.empty()) entry["ground_truth"] = img.ground_truth;
    images.push_back(entry);
  }
  return detail::dump_json(Json{{"schema", manifest.schema},
                                {"grouping", manifest.grouping},
                                {"stride", manifest.stride},
                                {"images", images}});
}

DecodeManifest read_manifest(const std::string& path) {
  DecodeManifest m = manifest_from_json(detail::read_text_file(path));
  m.schema = detail::resolve_relative(path, m.schema);
  m.grouping = detail::resolve_relative(path, m.grouping);
  for (auto& img : m.images) {
    for (int i = 0; i < 6; ++i) {
      std::string* slot = head_slot(img.heads, i);
      *slot = detail::resolve_relative(path, *slot);
    }
    if (!img.ground_truth.empty()) img.ground_truth = detail::resolve_relative(path, img.ground_truth);
  }
  return m;
}

void write_manifest(const DecodeManifest& manifest, const std::string& path) {
  detail::write_text_file(path, manifest_to_json(manifest));
}

}  // namespace kpg
