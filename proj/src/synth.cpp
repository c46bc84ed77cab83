#include "kpg/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "io_util.hpp"
#include "kpg/error.hpp"

namespace kpg {

using detail::Json;

namespace {

Json point_json(Point2 p) { return Json::array({detail::number(p.x), detail::number(p.y)}); }

Point2 point_from(const Json& v, std::string_view what) {
  require(v.is_array() && v.size() == 2, std::string(what) + " must be an [x, y] pair");
  return {detail::get_number(v[0], what), detail::get_number(v[1], what)};
}

Json scene_json(const SceneSpec& scene) {
  Json objects = Json::array();
  for (const SceneObject& o : scene.objects) {
    Json kps = Json::array();
    for (const SceneKeypoint& k : o.keypoints) {
      kps.push_back(Json{{"position", point_json(k.position)},
                         {"amplitude", detail::number(k.amplitude)},
                         {"reg_error", point_json(k.reg_error)}});
    }
    objects.push_back(Json{{"class_id", o.class_id},
                           {"center", point_json(o.center)},
                           {"size", Json::array({detail::number(o.width), detail::number(o.height)})},
                           {"score", detail::number(o.score)},
                           {"keypoints", kps}});
  }
  Json distractors = Json::array();
  for (const Distractor& d : scene.distractors) {
    distractors.push_back(Json{{"position", point_json(d.position)},
                               {"amplitude", detail::number(d.amplitude)},
                               {"channel", d.channel}});
  }
  return Json{{"id", scene.id},
              {"height", scene.height},
              {"width", scene.width},
              {"sigma_center", detail::number(scene.sigma_center)},
              {"sigma_keypoint", detail::number(scene.sigma_keypoint)},
              {"objects", objects},
              {"distractors", distractors}};
}

double optional_number(const Json& obj, const char* key, double fallback, std::string_view what) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : detail::get_number(*it, std::string(what) + "." + key);
}

SceneSpec scene_from(const Json& root) {
  const char* what = "scene";
  SceneSpec s;
  if (root.contains("id")) s.id = detail::get_string(root, "id", what);
  long long h = detail::get_int(root, "height", what);
  long long w = detail::get_int(root, "width", what);
  require(h >= 1 && w >= 1, "scene: grid dimensions must be positive");
  s.height = static_cast<std::size_t>(h);
  s.width = static_cast<std::size_t>(w);
  s.sigma_center = optional_number(root, "sigma_center", 1.0, what);
  s.sigma_keypoint = optional_number(root, "sigma_keypoint", 1.0, what);
  if (auto it = root.find("objects"); it != root.end()) {
    require(it->is_array(), "scene: 'objects' must be an array");
    for (const Json& item : *it) {
      SceneObject o;
      o.class_id = static_cast<int>(detail::get_int(item, "class_id", "scene object"));
      o.center = point_from(detail::field(item, "center", "scene object"), "scene object center");
      Point2 size = point_from(detail::field(item, "size", "scene object"), "scene object size");
      o.width = size.x;
      o.height = size.y;
      o.score = optional_number(item, "score", 1.0, "scene object");
      for (const Json& kp : detail::field(item, "keypoints", "scene object")) {
        SceneKeypoint k;
        if (kp.is_array()) {
          k.position = point_from(kp, "keypoint");
        } else {
          k.position = point_from(detail::field(kp, "position", "keypoint"), "keypoint position");
          k.amplitude = optional_number(kp, "amplitude", 1.0, "keypoint");
          if (kp.contains("reg_error")) k.reg_error = point_from(kp["reg_error"], "keypoint reg_error");
        }
        o.keypoints.push_back(k);
      }
      s.objects.push_back(std::move(o));
    }
  }
  if (auto it = root.find("distractors"); it != root.end()) {
    require(it->is_array(), "scene: 'distractors' must be an array");
    for (const Json& item : *it) {
      Distractor d;
      d.position = point_from(detail::field(item, "position", "distractor"), "distractor position");
      d.amplitude = detail::get_number(item, "amplitude", "distractor");
      d.channel = static_cast<int>(detail::get_int(item, "channel", "distractor"));
      s.distractors.push_back(d);
    }
  }
  return s;
}

void require_inside(const SceneSpec& s, Point2 p, const std::string& what) {
  require(std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0 && p.y >= 0 &&
              p.x < static_cast<double>(s.width) && p.y < static_cast<double>(s.height),
          "scene '" + s.id + "': " + what + " lies outside the grid");
}

void require_amplitude(double a, const std::string& what) {
  require(a > 0 && a <= 1, what + " amplitude must be in (0, 1]");
}

void validate_scene(const SceneSpec& s, const KeypointSchema& schema, const Grouping& grouping) {
  require(s.height >= 1 && s.width >= 1, "scene grid must be nonempty");
  require(s.sigma_center > 0 && std::isfinite(s.sigma_center), "sigma_center must be positive");
  require(s.sigma_keypoint > 0 && std::isfinite(s.sigma_keypoint), "sigma_keypoint must be positive");
  validate_grouping(schema, grouping);
  ValidityReport validity = check_grouping(schema, grouping, GroupingMode::Unrestricted);
  require(validity.decodable(), "cannot render with a grouping that has ambiguous pairs");
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    const SceneObject& o = s.objects[i];
    std::string tag = "object " + std::to_string(i);
    std::size_t cls = schema.find_class(o.class_id);
    require(cls != KeypointSchema::npos, tag + ": unknown class id " + std::to_string(o.class_id));
    require(o.keypoints.size() == static_cast<std::size_t>(schema.class_at(cls).kp_count),
            tag + ": keypoint count does not match its class");
    require(o.width > 0 && o.height > 0, tag + ": box size must be positive");
    require_amplitude(o.score, tag + " center");
    require_inside(s, o.center, tag + " center");
    for (std::size_t k = 0; k < o.keypoints.size(); ++k) {
      require_inside(s, o.keypoints[k].position, tag + " keypoint " + std::to_string(k));
      require_amplitude(o.keypoints[k].amplitude, tag + " keypoint");
      require(std::isfinite(o.keypoints[k].reg_error.x) && std::isfinite(o.keypoints[k].reg_error.y),
              tag + ": reg_error must be finite");
    }
  }
  for (const Distractor& d : s.distractors) {
    require_inside(s, d.position, "distractor");
    require_amplitude(d.amplitude, "distractor");
    require(d.channel >= 0 && d.channel < grouping.m_heat, "distractor channel out of range");
  }
}

void draw_gaussian(FeatureMap& map, std::size_t c, std::size_t px, std::size_t py, double amplitude,
                   double sigma) {
  long r = static_cast<long>(std::ceil(3 * sigma));
  long h = static_cast<long>(map.height()), w = static_cast<long>(map.width());
  long cx = static_cast<long>(px), cy = static_cast<long>(py);
  double limit = 9 * sigma * sigma;
  for (long y = std::max(0L, cy - r); y <= std::min(h - 1, cy + r); ++y) {
    for (long x = std::max(0L, cx - r); x <= std::min(w - 1, cx + r); ++x) {
      double d2 = static_cast<double>((x - cx) * (x - cx) + (y - cy) * (y - cy));
      if (d2 > limit) continue;
      float v = static_cast<float>(amplitude * std::exp(-d2 / (2 * sigma * sigma)));
      float& cell = map.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
      cell = std::max(cell, v);
    }
  }
}

std::size_t pixel(double v) { return static_cast<std::size_t>(std::floor(v)); }

}  // namespace

std::string scene_to_json(const SceneSpec& scene) { return detail::dump_json(scene_json(scene)); }

SceneSpec scene_from_json(std::string_view text) { return scene_from(detail::parse_json(text, "scene")); }

std::vector<SceneSpec> scenes_from_json(std::string_view text) {
  Json root = detail::parse_json(text, "scene");
  std::vector<SceneSpec> out;
  if (root.is_object() && root.contains("scenes")) {
    require(root["scenes"].is_array(), "scene file: 'scenes' must be an array");
    for (const Json& s : root["scenes"]) out.push_back(scene_from(s));
  } else {
    out.push_back(scene_from(root));
  }
  return out;
}

std::vector<SceneSpec> read_scenes(const std::string& path) {
  return scenes_from_json(detail::read_text_file(path));
}

RenderedScene render(const SceneSpec& scene, const KeypointSchema& schema, const Grouping& grouping) {
  validate_scene(scene, schema, grouping);
  const std::size_t h = scene.height, w = scene.width;
  RenderedScene out;
  HeadTensors& t = out.heads;
  t.center_heatmap = FeatureMap(schema.num_classes(), h, w);
  t.center_offset = FeatureMap(2, h, w);
  t.object_size = FeatureMap(2, h, w);
  t.kp_regression = FeatureMap(2 * static_cast<std::size_t>(grouping.m_reg), h, w);
  t.kp_heatmap = FeatureMap(static_cast<std::size_t>(grouping.m_heat), h, w);
  t.kp_offset = FeatureMap(2, h, w);
  out.truth.scene_id = scene.id;

  for (const SceneObject& o : scene.objects) {
    std::size_t cls = schema.class_index(o.class_id);
    std::size_t cx = pixel(o.center.x), cy = pixel(o.center.y);
    draw_gaussian(t.center_heatmap, cls, cx, cy, o.score, scene.sigma_center);
    t.center_offset.at(0, cy, cx) = static_cast<float>(o.center.x - static_cast<double>(cx));
    t.center_offset.at(1, cy, cx) = static_cast<float>(o.center.y - static_cast<double>(cy));
    t.object_size.at(0, cy, cx) = static_cast<float>(o.width);
    t.object_size.at(1, cy, cx) = static_cast<float>(o.height);

    // Mean displacement per regression cluster over this object's members.
    std::vector<double> sum_x(static_cast<std::size_t>(grouping.m_reg), 0.0);
    std::vector<double> sum_y(sum_x.size(), 0.0);
    std::vector<int> members(sum_x.size(), 0);
    for (std::size_t k = 0; k < o.keypoints.size(); ++k) {
      const SceneKeypoint& kp = o.keypoints[k];
      std::size_t global = schema.offset(cls) + k;
      auto g = static_cast<std::size_t>(grouping.reg_labels[global]);
      sum_x[g] += kp.position.x + kp.reg_error.x - static_cast<double>(cx);
      sum_y[g] += kp.position.y + kp.reg_error.y - static_cast<double>(cy);
      ++members[g];

      auto q = static_cast<std::size_t>(grouping.heat_labels[global]);
      std::size_t px = pixel(kp.position.x), py = pixel(kp.position.y);
      draw_gaussian(t.kp_heatmap, q, px, py, kp.amplitude, scene.sigma_keypoint);
      t.kp_offset.at(0, py, px) = static_cast<float>(kp.position.x - static_cast<double>(px));
      t.kp_offset.at(1, py, px) = static_cast<float>(kp.position.y - static_cast<double>(py));
    }
    for (std::size_t g = 0; g < members.size(); ++g) {
      if (members[g] == 0) continue;
      t.kp_regression.at(2 * g, cy, cx) = static_cast<float>(sum_x[g] / members[g]);
      t.kp_regression.at(2 * g + 1, cy, cx) = static_cast<float>(sum_y[g] / members[g]);
    }

    GroundTruthObject truth;
    truth.class_id = o.class_id;
    truth.box = {o.center.x - o.width / 2, o.center.y - o.height / 2, o.center.x + o.width / 2,
                 o.center.y + o.height / 2};
    for (const SceneKeypoint& kp : o.keypoints) truth.keypoints.push_back(kp.position);
    out.truth.objects.push_back(std::move(truth));
  }

  for (const Distractor& d : scene.distractors) {
    std::size_t px = pixel(d.position.x), py = pixel(d.position.y);
    draw_gaussian(t.kp_heatmap, static_cast<std::size_t>(d.channel), px, py, d.amplitude,
                  scene.sigma_keypoint);
    t.kp_offset.at(0, py, px) = static_cast<float>(d.position.x - static_cast<double>(px));
    t.kp_offset.at(1, py, px) = static_cast<float>(d.position.y - static_cast<double>(py));
  }
  return out;
}

double ClosestPeakCase::break_even_amplitude() const {
  double dt2 = std::pow(truth.x - coarse.x, 2) + std::pow(truth.y - coarse.y, 2);
  double dd2 = std::pow(distractor.x - coarse.x, 2) + std::pow(distractor.y - coarse.y, 2);
  return true_amplitude * std::exp(-(dt2 - dd2) / (2 * sigma * sigma));
}

SceneSpec ClosestPeakCase::with_distractor_amplitude(double amplitude) const {
  SceneSpec s = scene;
  s.distractors.at(0).amplitude = amplitude;
  return s;
}

ClosestPeakCase closest_peak_case() {
  ClosestPeakCase c{KeypointSchema::create({{1, "closest_peak", 1}}), {}, {}, 2.0, {13, 12}, {15, 12},
                {12, 12}, 0.9, 0.15};
  c.grouping = identity_grouping(c.schema);

  SceneObject obj;
  obj.class_id = 1;
  obj.center = {12, 12};
  obj.width = 12;
  obj.height = 12;
  // The regressed displacement lands two pixels short of the true keypoint.
  obj.keypoints.push_back({c.truth, c.true_amplitude, {c.coarse.x - c.truth.x, c.coarse.y - c.truth.y}});

  c.scene.id = "closest_peak";
  c.scene.height = 24;
  c.scene.width = 24;
  c.scene.sigma_center = 1.0;
  c.scene.sigma_keypoint = 1.0;
  c.scene.objects.push_back(obj);
  c.scene.distractors.push_back({c.distractor, c.distractor_amplitude, 0});
  return c;
}

SceneSpec random_scene(const KeypointSchema& schema, const Grouping& grouping, std::mt19937_64& rng,
                       const RandomSceneParams& params, std::string id) {
  validate_grouping(schema, grouping);
  require(params.cell >= 8 && params.cells_per_block >= 1 && params.max_objects >= 1,
          "random scene: invalid layout parameters");
  const int per_block = params.cells_per_block;
  const double block = per_block * params.cell;
  const double stride = block + params.cell;
  const auto slots_per_side = static_cast<int>(static_cast<double>(params.grid) / stride);
  require(slots_per_side >= 1, "random scene: grid too small for one object block");

  std::vector<int> slots(static_cast<std::size_t>(slots_per_side * slots_per_side));
  std::iota(slots.begin(), slots.end(), 0);
  std::shuffle(slots.begin(), slots.end(), rng);
  int max_objects = std::min<int>(params.max_objects, static_cast<int>(slots.size()));
  int count = std::uniform_int_distribution<int>(1, max_objects)(rng);

  // Distinct pixels around an anchor, nearest first.
  static const std::array<std::array<int, 2>, 25> spiral = {{
      {0, 0},  {1, 0},   {0, 1},   {-1, 0}, {0, -1}, {1, 1},  {-1, 1}, {1, -1}, {-1, -1},
      {2, 0},  {0, 2},   {-2, 0},  {0, -2}, {2, 1},  {1, 2},  {-1, 2}, {-2, 1}, {-2, -1},
      {-1, -2}, {1, -2}, {2, -1},  {2, 2},  {-2, 2}, {-2, -2}, {2, -2},
  }};

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-params.anchor_jitter, params.anchor_jitter);
  std::uniform_int_distribution<std::size_t> pick_class(0, schema.num_classes() - 1);

  SceneSpec s;
  s.id = std::move(id);
  s.height = params.grid;
  s.width = params.grid;
  s.sigma_center = params.sigma_center;
  s.sigma_keypoint = params.sigma_keypoint;

  for (int i = 0; i < count; ++i) {
    int slot = slots[static_cast<std::size_t>(i)];
    double ox = params.cell / 2 + (slot % slots_per_side) * stride;
    double oy = params.cell / 2 + (slot / slots_per_side) * stride;
    std::size_t cls = pick_class(rng);
    const KeypointClass& kc = schema.class_at(cls);

    std::vector<int> clusters;
    for (int k = 0; k < kc.kp_count; ++k) {
      int g = grouping.reg_labels[schema.offset(cls) + static_cast<std::size_t>(k)];
      if (std::find(clusters.begin(), clusters.end(), g) == clusters.end()) clusters.push_back(g);
    }
    require(clusters.size() <= static_cast<std::size_t>(per_block * per_block),
            "random scene: class has more regression clusters than block cells");
    std::vector<int> cells(static_cast<std::size_t>(per_block * per_block));
    std::iota(cells.begin(), cells.end(), 0);
    std::shuffle(cells.begin(), cells.end(), rng);

    SceneObject o;
    o.class_id = kc.id;
    o.center = {ox + block / 2 + unit(rng) - 0.5, oy + block / 2 + unit(rng) - 0.5};
    o.width = block - 2 + 2 * unit(rng);
    o.height = block - 2 + 2 * unit(rng);
    o.keypoints.resize(static_cast<std::size_t>(kc.kp_count));
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      int cell = cells[c];
      double ax = ox + (cell % per_block + 0.5) * params.cell + jitter(rng);
      double ay = oy + (cell / per_block + 0.5) * params.cell + jitter(rng);
      std::size_t used = 0;
      for (int k = 0; k < kc.kp_count; ++k) {
        if (grouping.reg_labels[schema.offset(cls) + static_cast<std::size_t>(k)] != clusters[c]) continue;
        require(used < spiral.size(), "random scene: regression cluster too large to place");
        const auto& off = spiral[used++];
        o.keypoints[static_cast<std::size_t>(k)].position = {
            std::floor(ax) + off[0] + unit(rng), std::floor(ay) + off[1] + unit(rng)};
      }
    }
    s.objects.push_back(std::move(o));
  }
  return s;
}

ManifestImage write_rendered_scene(const RenderedScene& scene, const std::string& directory) {
  const std::string& id = scene.truth.scene_id;
  require(!id.empty() && id.find('/') == std::string::npos && id.find('\\') == std::string::npos &&
              id != "." && id != "..",
          "scene id '" + id + "' is not usable as a directory name");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(directory) / id, ec);
  if (ec) fail_io("cannot create directory '" + (fs::path(directory) / id).string() + "'");

  ManifestImage entry;
  entry.id = id;
  auto rel = [&](const char* name) { return id + "/" + name; };
  entry.heads = {rel("center_heatmap.npy"), rel("center_offset.npy"), rel("object_size.npy"),
                 rel("kp_regression.npy"),  rel("kp_heatmap.npy"),    rel("kp_offset.npy")};
  entry.ground_truth = rel("ground_truth.json");

  auto abs = [&](const std::string& r) { return (fs::path(directory) / r).string(); };
  HeadFiles files{abs(entry.heads.center_heatmap), abs(entry.heads.center_offset),
                  abs(entry.heads.object_size),    abs(entry.heads.kp_regression),
                  abs(entry.heads.kp_heatmap),     abs(entry.heads.kp_offset)};
  save_heads(scene.heads, files);
  write_ground_truth(scene.truth, abs(entry.ground_truth));
  return entry;
}

}  // namespace kpg
