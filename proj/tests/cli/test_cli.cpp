#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kpg/kpg.h"
#include "support/fixtures.hpp"

namespace {

struct Run {
  int exit = -1;
  std::string out;
};

Run run(const std::string& args) {
  std::string cmd = std::string(KPG_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  int status = pclose(pipe);
  r.exit = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

const std::string kData = KPG_DATA_DIR;

void write_random_weights(const std::string& path, std::size_t rows, std::size_t cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = u(rng);
  std::size_t shape[] = {rows, cols};
  kpg_tensor* t = nullptr;
  REQUIRE(kpg_tensor_create(shape, 2, v.data(), 0, &t) == KPG_OK);
  REQUIRE(kpg_tensor_write(t, path.c_str()) == KPG_OK);
  kpg_tensor_free(t);
}

// Two classes of two keypoints with well-separated mean offsets.
const char* kSmallSchema =
    R"({"classes":[{"id":1,"name":"a","kp_count":2},{"id":2,"name":"b","kp_count":2}]})";
const char* kSmallAnnotations = R"({
  "images": [{"id": 1, "width": 100, "height": 100}],
  "annotations": [
    {"image_id": 1, "category_id": 1, "bbox": [0, 0, 40, 40], "keypoints": [5, 5, 2, 35, 35, 2]},
    {"image_id": 1, "category_id": 2, "bbox": [50, 50, 40, 40], "keypoints": [56, 54, 2, 84, 86, 2]}]})";

}  // namespace

TEST_CASE("help lists every subcommand and flag with units") {
  Run top = run("--help");
  CHECK(top.exit == 0);
  for (const char* sub : {"group", "consensus", "analyze", "budget", "decode", "synth", "sweep-sigma",
                          "init-weights"}) {
    CHECK(top.out.find(sub) != std::string::npos);
    Run h = run(std::string(sub) + " --help");
    CHECK(h.exit == 0);
  }
  Run decode = run("decode --help");
  for (const char* flag : {"--refine", "--sigma", "--topk", "--center-thresh", "--kp-thresh", "--jobs"})
    CHECK(decode.out.find(flag) != std::string::npos);
  CHECK(decode.out.find("feature-grid pixels") != std::string::npos);
  CHECK(run("budget --help").out.find("(bytes)") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(run("no-such-command").exit == 1);
  CHECK(run("").exit == 1);
  CHECK(run("group").exit == 1);  // missing required flags
  std::string dir = fixtures::temp_dir("cli_exit");
  CHECK(run("decode --manifest " + dir + "/missing.json -o " + dir + "/d.json").exit == 2);
  CHECK(run("budget --classes 13 --keypoints 294 --m-reg 62 --m-heat 62 --profiles " + dir + "/none.json").exit == 2);
  CHECK(run("decode --manifest x.json --sigma -1 -o y.json").exit == 1);
  CHECK(run("budget --classes 13 --keypoints 294 --m-reg 62 --m-heat 62 --resolution 510").exit == 1);
  write_text(dir + "/bad.json", "{not json");
  CHECK(run("analyze --schema " + dir + "/bad.json --grouping " + dir + "/bad.json").exit == 1);
  CHECK_FALSE(std::filesystem::exists(dir + "/d.json"));
}

TEST_CASE("budget reports 205 channels for a 62/62 grouping") {
  std::string dir = fixtures::temp_dir("cli_budget");
  int labels[294];
  for (int i = 0; i < 294; ++i) labels[i] = i % 62;
  // Build a 62/62 grouping over the reference schema through the C API.
  kpg_schema* s = nullptr;
  REQUIRE(kpg_schema_read((kData + "/deepfashion2_schema.json").c_str(), &s) == KPG_OK);
  kpg_grouping* g = nullptr;
  REQUIRE(kpg_grouping_from_labels(s, labels, labels, 294, &g) == KPG_OK);
  REQUIRE(kpg_grouping_write(g, (dir + "/g.json").c_str()) == KPG_OK);
  kpg_grouping_free(g);
  kpg_schema_free(s);

  Run r = run("budget --classes 13 --grouping " + dir + "/g.json --resolution 512");
  CHECK(r.exit == 0);
  CHECK(r.out.find("205") != std::string::npos);
  CHECK(r.out.find("901") != std::string::npos);
  CHECK(r.out.find("16.1") != std::string::npos);
  Run j = run("budget --classes 13 --keypoints 294 --m-reg 294 --m-heat 294 --format json");
  CHECK(j.exit == 0);
  CHECK(j.out.find("901") != std::string::npos);
}

TEST_CASE("group, consensus and analyze compose") {
  std::string dir = fixtures::temp_dir("cli_group");
  write_text(dir + "/s.json", kSmallSchema);
  write_text(dir + "/ann.json", kSmallAnnotations);
  Run g = run("group --schema " + dir + "/s.json --annotations " + dir +
              "/ann.json --clusters 2 --restrict --dendrogram-dir " + dir + " -o " + dir + "/g.json");
  CHECK(g.exit == 0);
  REQUIRE(std::filesystem::exists(dir + "/g.json"));
  std::string first = slurp(dir + "/g.json");
  CHECK(run("group --schema " + dir + "/s.json --annotations " + dir + "/ann.json --clusters 2 --restrict -o " +
            dir + "/g.json")
            .exit == 0);
  CHECK(slurp(dir + "/g.json") == first);

  Run c = run("consensus " + dir + "/g.json " + dir + "/g.json");
  CHECK(c.exit == 0);
  CHECK(c.out.find("1.0") != std::string::npos);

  Run a = run("analyze --schema " + dir + "/s.json --grouping " + dir + "/g.json --mode restricted --strict");
  CHECK(a.exit == 0);

  Run m = run("analyze --schema " + dir + "/s.json --grouping " + dir + "/g.json --reg-dendrogram " + dir +
              "/reg_dendrogram.json --heat-dendrogram " + dir + "/heat_dendrogram.json --reg-counts 1:4:1 "
              "--heat-counts 1:4:1 --format json");
  CHECK(m.exit == 0);
  CHECK(m.out.find("frontier") != std::string::npos);

  Run curve = run("consensus --dendrogram-a " + dir + "/reg_dendrogram.json --dendrogram-b " + dir +
                  "/heat_dendrogram.json --counts 1,2,3,4");
  CHECK(curve.exit == 0);

  Run too_few = run("group --schema " + dir + "/s.json --annotations " + dir +
                    "/ann.json --clusters 1 --restrict -o " + dir + "/g1.json");
  CHECK(too_few.exit == 1);
  CHECK_FALSE(std::filesystem::exists(dir + "/g1.json"));
}

TEST_CASE("conv grouping on the reference schema") {
  std::string dir = fixtures::temp_dir("cli_conv");
  write_random_weights(dir + "/w.npy", 294, 16, 1);
  std::string cmd = "group --schema " + kData + "/deepfashion2_schema.json --weights " + dir +
                    "/w.npy --head heat --method conv --clusters 62 --restrict -o " + dir + "/g.json";
  CHECK(run(cmd).exit == 0);
  std::string first = slurp(dir + "/g.json");
  CHECK(first.find("\"m_heat\": 62") != std::string::npos);
  CHECK(run(cmd).exit == 0);
  CHECK(slurp(dir + "/g.json") == first);

  Run init = run("init-weights --weights " + dir + "/w.npy --grouping " + dir + "/g.json --head heat -o " + dir +
                 "/w62.npy --map " + dir + "/map.json");
  CHECK(init.exit == 0);
  kpg_tensor* t = nullptr;
  REQUIRE(kpg_tensor_read((dir + "/w62.npy").c_str(), &t) == KPG_OK);
  size_t dims[2];
  kpg_tensor_shape(t, dims, 2);
  CHECK(dims[0] == 62);
  kpg_tensor_free(t);
}

TEST_CASE("synth, decode and sweep-sigma") {
  std::string dir = fixtures::temp_dir("cli_synth");
  CHECK(run("synth --closest-peak -o " + dir + "/closest").exit == 0);
  std::string manifest = dir + "/closest/manifest.json";
  REQUIRE(std::filesystem::exists(manifest));
  CHECK(run("decode --manifest " + manifest + " --refine base -o " + dir + "/base.json").exit == 0);
  CHECK(run("decode --manifest " + manifest + " --refine rescore --sigma 2 -o " + dir + "/rescore.json").exit == 0);
  CHECK(slurp(dir + "/base.json") != slurp(dir + "/rescore.json"));
  std::string once = slurp(dir + "/rescore.json");
  CHECK(run("decode --manifest " + manifest + " --refine rescore --sigma 2 --jobs 3 -o " + dir + "/rescore.json")
            .exit == 0);
  CHECK(slurp(dir + "/rescore.json") == once);

  Run sweep = run("sweep-sigma --manifest " + manifest + " --sigmas 0.5,2 --format json");
  CHECK(sweep.exit == 0);
  CHECK(sweep.out.find("\"best_sigma\": 2.0") != std::string::npos);

  write_text(dir + "/s.json", kSmallSchema);
  CHECK(run("synth --schema " + dir + "/s.json --random 3 --seed 4 -o " + dir + "/r").exit == 0);
  std::string a = slurp(dir + "/r/scene_0001/kp_heatmap.npy");
  CHECK(run("synth --schema " + dir + "/s.json --random 3 --seed 4 -o " + dir + "/r").exit == 0);
  CHECK(slurp(dir + "/r/scene_0001/kp_heatmap.npy") == a);
  CHECK(run("synth --schema " + dir + "/s.json -o " + dir + "/none").exit == 1);
}
