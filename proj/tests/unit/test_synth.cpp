#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "../support/fixtures.hpp"
#include "../support/roundtrip.hpp"
#include "kpg/error.hpp"
#include "kpg/pipeline.hpp"
#include "kpg/synth.hpp"

using namespace kpg;

namespace {

SceneSpec one_object_scene() {
  SceneSpec s;
  s.id = "one";
  s.height = 32;
  s.width = 32;
  SceneObject o;
  o.class_id = 1;
  o.center = {15.3, 12.7};
  o.width = 10;
  o.height = 8;
  o.keypoints = {{{11.25, 9.5}, 1.0, {}}, {{19.75, 15.125}, 0.8, {}}};
  s.objects.push_back(o);
  return s;
}

DecodeOptions options(RefineMode mode, double sigma = 2.0) {
  DecodeOptions o;
  o.refine = mode;
  o.sigma = sigma;
  return o;
}

}  // namespace

TEST_CASE("render writes ground-truth-consistent maps") {
  KeypointSchema s = fixtures::schema_of({2});
  SceneSpec spec = one_object_scene();
  RenderedScene r = render(spec, s, identity_grouping(s));
  const HeadTensors& h = r.heads;
  CHECK(h.center_heatmap.at(0, 12, 15) == 1.0f);
  CHECK(h.center_offset.at(0, 12, 15) == doctest::Approx(0.3));
  CHECK(h.center_offset.at(1, 12, 15) == doctest::Approx(0.7));
  CHECK(h.object_size.at(0, 12, 15) == 10.0f);
  CHECK(h.object_size.at(1, 12, 15) == 8.0f);
  CHECK(h.kp_regression.at(0, 12, 15) == doctest::Approx(11.25 - 15));
  CHECK(h.kp_regression.at(3, 12, 15) == doctest::Approx(15.125 - 12));
  CHECK(h.kp_heatmap.at(1, 15, 19) == 0.8f);
  CHECK(h.kp_offset.at(0, 9, 11) == 0.25f);
  CHECK(h.kp_offset.at(1, 15, 19) == 0.125f);
  CHECK(r.truth.objects.at(0).box.x1 == doctest::Approx(10.3));
  for (float v : h.kp_heatmap.values()) CHECK(v <= 1.0f);
  h.validate(s, identity_grouping(s));
}

TEST_CASE("overlapping gaussians compose by max") {
  KeypointSchema s = fixtures::schema_of({2});
  SceneSpec spec = one_object_scene();
  spec.objects[0].keypoints[1].position = {12.0, 9.0};
  Grouping shared{s.fingerprint(), 2, 1, {0, 1}, {0, 0}};
  RenderedScene r = render(spec, s, shared);
  CHECK(r.heads.kp_heatmap.at(0, 9, 11) == 1.0f);
  CHECK(r.heads.kp_heatmap.at(0, 9, 12) == 0.8f);
  CHECK(r.heads.kp_heatmap.at(0, 9, 13) == doctest::Approx(0.8 * std::exp(-0.5)));
  spec.objects[0].keypoints[1].position = {19.75, 15.125};
  RenderedScene apart = render(spec, s, shared);
  CHECK(local_peaks(apart.heads.kp_heatmap.channel(0), 0.1).size() == 2);
}

TEST_CASE("rendering is deterministic") {
  KeypointSchema s = fixtures::schema_of({2, 3});
  std::mt19937_64 a(5), b(5);
  SceneSpec sa = random_scene(s, identity_grouping(s), a), sb = random_scene(s, identity_grouping(s), b);
  CHECK(scene_to_json(sa) == scene_to_json(sb));
  RenderedScene ra = render(sa, s, identity_grouping(s)), rb = render(sb, s, identity_grouping(s));
  CHECK(encode_npy(ra.heads.kp_heatmap.to_tensor()) == encode_npy(rb.heads.kp_heatmap.to_tensor()));
  CHECK(scenes_from_json(scene_to_json(sa)).size() == 1);
  CHECK(scene_to_json(scene_from_json(scene_to_json(sa))) == scene_to_json(sa));
}

TEST_CASE("invalid scenes are rejected") {
  KeypointSchema s = fixtures::schema_of({2});
  SceneSpec spec = one_object_scene();
  spec.objects[0].keypoints[0].position = {40, 1};
  CHECK_THROWS_AS(render(spec, s, identity_grouping(s)), Error);
  spec = one_object_scene();
  spec.objects[0].keypoints[0].amplitude = 1.5;
  CHECK_THROWS_AS(render(spec, s, identity_grouping(s)), Error);
  spec = one_object_scene();
  spec.objects[0].keypoints.pop_back();
  CHECK_THROWS_AS(render(spec, s, identity_grouping(s)), Error);
  spec = one_object_scene();
  CHECK_THROWS_AS(render(spec, s, Grouping{s.fingerprint(), 1, 1, {0, 0}, {0, 0}}), Error);
  CHECK_THROWS_AS(scene_from_json("{}"), Error);
}

TEST_CASE("single object round trip in both modes") {
  KeypointSchema s = fixtures::schema_of({2});
  RenderedScene r = render(one_object_scene(), s, identity_grouping(s));
  for (RefineMode mode : {RefineMode::Base, RefineMode::Rescore}) {
    auto dets = decode_full(r.heads, s, identity_grouping(s), options(mode));
    roundtrip::Errors e = roundtrip::compare(dets, r.truth);
    CHECK(e.matched);
    CHECK(e.box <= 1e-5);
    CHECK(e.keypoint <= 1e-5);
  }
}

TEST_CASE("a heat channel shared by two same-class keypoints is disambiguated") {
  KeypointSchema s = fixtures::schema_of({2});
  Grouping g{s.fingerprint(), 2, 1, {0, 1}, {0, 0}};
  RenderedScene r = render(one_object_scene(), s, g);
  auto dets = decode_full(r.heads, s, g, options(RefineMode::Rescore));
  roundtrip::Errors e = roundtrip::compare(dets, r.truth);
  CHECK(e.matched);
  CHECK(e.keypoint <= 1e-5);
}

TEST_CASE("grouped random scenes recover every original keypoint") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    KeypointSchema s = fixtures::random_schema(rng, 3, 5);
    Grouping g = roundtrip::random_decodable_grouping(s, rng);
    SceneSpec spec = random_scene(s, g, rng);
    RenderedScene r = render(spec, s, g);
    roundtrip::Errors e = roundtrip::compare(decode_full(r.heads, s, g, options(RefineMode::Rescore, 3.0)), r.truth);
    CHECK(e.matched);
    CHECK(e.keypoint <= 0.5);
  }
}

TEST_CASE("closest-peak case") {
  ClosestPeakCase c = closest_peak_case();
  RenderedScene r = render(c.scene, c.schema, c.grouping);
  auto base = decode_full(r.heads, c.schema, c.grouping, options(RefineMode::Base, c.sigma));
  auto resc = decode_full(r.heads, c.schema, c.grouping, options(RefineMode::Rescore, c.sigma));
  REQUIRE(base.size() == 1);
  REQUIRE(resc.size() == 1);
  CHECK(base[0].keypoints[0].x == c.distractor.x);
  CHECK(base[0].keypoints[0].y == c.distractor.y);
  CHECK(resc[0].keypoints[0].x == c.truth.x);
  CHECK(resc[0].keypoints[0].y == c.truth.y);
  CHECK(resc[0].keypoints[0].score == doctest::Approx(0.9 * std::exp(-0.5)).epsilon(1e-6));
  CHECK(c.break_even_amplitude() == doctest::Approx(0.9 * std::exp(-3.0 / 8.0)).epsilon(1e-15));
}

TEST_CASE("PCK examples") {
  KeypointSchema s = fixtures::schema_of({2});
  GroundTruth t{"x", {{1, Box{0, 0, 20, 10}, {{2, 2}, {10, 5}}}}};
  Detection d;
  d.class_id = 1;
  d.score = 1;
  d.box = t.objects[0].box;
  d.keypoints = {{2, 2, 1, KeypointSource::Refined}, {10, 5, 1, KeypointSource::Refined}};
  CHECK(evaluate(std::vector<Detection>{d}, t, s).aggregate() == 1.0);
  Detection half = d;
  half.keypoints[1].x += 1.5;  // threshold is 0.05 * 20 = 1
  CHECK(evaluate(std::vector<Detection>{half}, t, s).aggregate() == 0.5);
  Detection off = d;
  for (auto& k : off.keypoints) k.y += 2;
  CHECK(evaluate(std::vector<Detection>{off}, t, s).aggregate() == 0.0);
  Detection elsewhere = d;
  elsewhere.box = Box{50, 50, 70, 60};
  CHECK(evaluate(std::vector<Detection>{elsewhere}, t, s).aggregate() == 0.0);
  CHECK(evaluate(std::vector<Detection>{}, t, s).total_sum() == 2);
  CHECK(box_iou(Box{0, 0, 2, 2}, Box{1, 0, 3, 2}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("sigma sweep") {
  KeypointSchema s = fixtures::schema_of({2});
  std::vector<LabeledScene> scenes;
  RenderedScene r = render(one_object_scene(), s, identity_grouping(s));
  scenes.push_back({r.heads, r.truth});
  std::vector<double> single{2.5};
  CHECK(sweep_sigma(scenes, s, identity_grouping(s), single).best_sigma == 2.5);
  std::vector<double> grid{4, 1, 2};
  SigmaSweep sweep = sweep_sigma(scenes, s, identity_grouping(s), grid);
  CHECK(sweep.best_sigma == 1.0);  // all perfect: smallest wins
  for (const auto& p : sweep.points) CHECK(p.accuracy <= sweep.best_accuracy);
  CHECK_THROWS_AS(sweep_sigma(scenes, s, identity_grouping(s), std::vector<double>{}), Error);
  CHECK_THROWS_AS(sweep_sigma(scenes, s, identity_grouping(s), std::vector<double>{-1}), Error);

  ClosestPeakCase c = closest_peak_case();
  RenderedScene f = render(c.scene, c.schema, c.grouping);
  std::vector<LabeledScene> hard{{f.heads, f.truth}};
  SigmaSweep fs = sweep_sigma(hard, c.schema, c.grouping, std::vector<double>{0.4, 2.0});
  CHECK(fs.best_sigma == 2.0);
}

TEST_CASE("scene sets decode identically with any number of jobs") {
  KeypointSchema s = fixtures::schema_of({3, 2});
  std::mt19937_64 rng(6);
  std::vector<SceneSpec> scenes;
  for (int i = 0; i < 6; ++i) scenes.push_back(random_scene(s, identity_grouping(s), rng, {}, "s" + std::to_string(i)));
  std::string dir = fixtures::temp_dir("scene_set");
  std::string manifest_path = write_scene_set(scenes, s, identity_grouping(s), dir);
  DecodeManifest m = read_manifest(manifest_path);
  CHECK(m.images.size() == 6);
  auto one = decode_images(m, s, identity_grouping(s), DecodeOptions{}, 1);
  auto four = decode_images(m, s, identity_grouping(s), DecodeOptions{}, 4);
  CHECK(detections_to_json(one, 4) == detections_to_json(four, 4));
  CHECK(load_labeled_scenes(m, 3).size() == 6);

  scenes.push_back(scenes[0]);
  CHECK_THROWS_AS(write_scene_set(scenes, s, identity_grouping(s), dir), Error);
}
