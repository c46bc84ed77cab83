#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "../support/fixtures.hpp"
#include "kpg/error.hpp"
#include "kpg/ingest.hpp"

using namespace kpg;

namespace {

std::string from_hex(const std::string& hex) {
  std::string out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
    out.push_back(static_cast<char>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  }
  return out;
}

// Produced by numpy.save.
const char* kNumpyF32x23 =
    "934e554d5059010076007b276465736372273a20273c6634272c2027666f727472616e5f6f72646572273a204661"
    "6c73652c20277368617065273a2028322c2033292c207d2020202020202020202020202020202020202020202020"
    "20202020202020202020202020202020202020202020202020202020202020202020200a0000803f000000400000"
    "4040000080400000a0400000c040";
const char* kNumpyF64x3 =
    "934e554d5059010076007b276465736372273a20273c6638272c2027666f727472616e5f6f72646572273a204661"
    "6c73652c20277368617065273a2028332c292c207d20202020202020202020202020202020202020202020202020"
    "20202020202020202020202020202020202020202020202020202020202020202020200a000000000000e03f0000"
    "00000000f4bf0000000000000840";

std::string clean(const char* hex) {
  std::string s;
  for (const char* p = hex; *p; ++p)
    if (*p != ' ') s.push_back(*p);
  return s;
}

}  // namespace

TEST_CASE("encode_npy matches numpy byte for byte") {
  Tensor a({2, 3}, {1, 2, 3, 4, 5, 6}, Dtype::F32);
  CHECK(encode_npy(a) == from_hex(clean(kNumpyF32x23)));
  Tensor b({3}, {0.5, -1.25, 3.0}, Dtype::F64);
  CHECK(encode_npy(b) == from_hex(clean(kNumpyF64x3)));
}

TEST_CASE("decode_npy reads numpy output") {
  Tensor a = decode_npy(from_hex(clean(kNumpyF32x23)));
  CHECK(a.shape() == std::vector<std::size_t>{2, 3});
  CHECK(a.dtype() == Dtype::F32);
  for (std::size_t i = 0; i < 6; ++i) CHECK(a[i] == static_cast<double>(i + 1));
  Tensor b = decode_npy(from_hex(clean(kNumpyF64x3)));
  CHECK(b.dtype() == Dtype::F64);
  CHECK(b[1] == -1.25);
}

TEST_CASE("write then read is the identity") {
  std::string dir = fixtures::temp_dir("ingest_roundtrip");
  Tensor a({2, 3}, {1, 2, 3, 4, 5, 6}, Dtype::F32);
  write_tensor(a, dir + "/a.npy");
  Tensor back = read_tensor(dir + "/a.npy");
  CHECK(back.shape() == a.shape());
  CHECK(std::vector<double>(back.data().begin(), back.data().end()) ==
        std::vector<double>(a.data().begin(), a.data().end()));

  Tensor w = Tensor::zeros({294, 32});
  CHECK(w.size() == 9408);
  write_tensor(w, dir + "/w.npy");
  CHECK(read_tensor(dir + "/w.npy").size() == 9408);

  Tensor f({4}, {0.1, 1e-30, -7.25, 3.0e38}, Dtype::F32);
  CHECK(encode_npy(decode_npy(encode_npy(f))) == encode_npy(f));
  Tensor d({2}, {0.1, std::nextafter(1.0, 2.0)}, Dtype::F64);
  CHECK(decode_npy(encode_npy(d))[1] == std::nextafter(1.0, 2.0));
}

TEST_CASE("decode_npy rejects malformed containers") {
  std::string good = encode_npy(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  std::string bad_magic = good;
  bad_magic[1] = 'X';
  CHECK_THROWS_AS(decode_npy(bad_magic), Error);

  std::string fortran = good;
  auto pos = fortran.find("False");
  fortran.replace(pos, 5, "True ");
  CHECK_THROWS_AS(decode_npy(fortran), Error);

  std::string dtype = good;
  dtype.replace(dtype.find("<f4"), 3, "<i4");
  CHECK_THROWS_AS(decode_npy(dtype), Error);

  CHECK_THROWS_AS(decode_npy(good.substr(0, good.size() - 1)), Error);
  CHECK_THROWS_AS(decode_npy(good.substr(0, 8)), Error);
  CHECK_THROWS_AS(decode_npy(good + "x"), Error);

  std::string version = good;
  version[6] = 2;
  CHECK_THROWS_AS(decode_npy(version), Error);
}

TEST_CASE("non-finite payloads need an explicit opt-in") {
  Tensor t({2}, {1.0, std::numeric_limits<double>::quiet_NaN()}, Dtype::F64);
  std::string bytes = encode_npy(t);
  CHECK_THROWS_AS(decode_npy(bytes), Error);
  NpyReadOptions allow;
  allow.allow_nonfinite = true;
  CHECK(std::isnan(decode_npy(bytes, allow)[1]));
}

TEST_CASE("missing tensor file is an I/O error") {
  try {
    read_tensor("/nonexistent/x.npy");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("annotations parse with visibility semantics") {
  KeypointSchema s = fixtures::schema_of({2});
  AnnotationSet a = annotations_from_json(R"({
    "images": [{"id": 1, "width": 640, "height": 480}],
    "annotations": [{"image_id": 1, "category_id": 1, "bbox": [0, 0, 100, 200],
                     "keypoints": [10, 20, 2, 30, 40, 0]}]})",
                                          s);
  REQUIRE(a.objects.size() == 1);
  CHECK(a.objects[0].keypoints.size() == 2);
  CHECK(a.objects[0].keypoints[0].present());
  CHECK_FALSE(a.objects[0].keypoints[1].present());
  CHECK(a.objects[0].bbox.center_x() == 50);

  std::string canonical = annotations_to_json(a);
  CHECK(annotations_to_json(annotations_from_json(canonical, s)) == canonical);
}

TEST_CASE("annotation errors") {
  KeypointSchema s = fixtures::schema_of({2});
  auto doc = [](const std::string& ann) {
    return R"({"images": [{"id": 1, "width": 10, "height": 10}], "annotations": [)" + ann + "]}";
  };
  CHECK_THROWS_AS(annotations_from_json(
                      doc(R"({"image_id":1,"category_id":1,"bbox":[0,0,5,5],"keypoints":[1,2,2,3,4]})"), s),
                  Error);
  CHECK_THROWS_AS(annotations_from_json(
                      doc(R"({"image_id":1,"category_id":9,"bbox":[0,0,5,5],"keypoints":[1,2,2,3,4,2]})"), s),
                  Error);
  CHECK_THROWS_AS(annotations_from_json(
                      doc(R"({"image_id":1,"category_id":1,"bbox":[0,0,0,5],"keypoints":[1,2,2,3,4,2]})"), s),
                  Error);
  CHECK_THROWS_AS(annotations_from_json(
                      doc(R"({"image_id":1,"category_id":1,"bbox":[0,0,5,5],"keypoints":[1,2,5,3,4,2]})"), s),
                  Error);
}

TEST_CASE("manifest paths resolve against the manifest directory") {
  std::string dir = fixtures::temp_dir("manifest");
  DecodeManifest m;
  m.schema = "schema.json";
  m.grouping = "/abs/grouping.json";
  m.images.push_back({"img", {"a/ch.npy", "a/co.npy", "a/os.npy", "a/kr.npy", "a/kh.npy", "a/ko.npy"}, ""});
  write_manifest(m, dir + "/manifest.json");
  DecodeManifest back = read_manifest(dir + "/manifest.json");
  CHECK(back.schema == (std::filesystem::path(dir) / "schema.json").string());
  CHECK(back.grouping == "/abs/grouping.json");
  CHECK(back.images.at(0).heads.kp_offset == (std::filesystem::path(dir) / "a/ko.npy").string());
  CHECK(back.images.at(0).ground_truth.empty());
  CHECK(back.stride == 4);
  CHECK(manifest_to_json(manifest_from_json(manifest_to_json(m))) == manifest_to_json(m));
}
