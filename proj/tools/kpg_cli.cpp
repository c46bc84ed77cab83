// kpg: command-line front end over the C API.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kpg/kpg.h"

namespace {

enum class LogLevel { Quiet = 0, Error = 1, Warn = 2, Info = 3, Debug = 4 };

LogLevel g_log = LogLevel::Warn;

void init_logging() {
  const char* env = std::getenv("KPG_LOG");
  if (env == nullptr) return;
  std::string v = env;
  if (v == "quiet" || v == "off" || v == "0") g_log = LogLevel::Quiet;
  else if (v == "error" || v == "1") g_log = LogLevel::Error;
  else if (v == "warn" || v == "2") g_log = LogLevel::Warn;
  else if (v == "info" || v == "3") g_log = LogLevel::Info;
  else if (v == "debug" || v == "4") g_log = LogLevel::Debug;
}

void log(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > static_cast<int>(g_log)) return;
  static const char* names[] = {"", "error", "warn", "info", "debug"};
  std::cerr << "kpg [" << names[static_cast<int>(level)] << "] " << message << "\n";
}

struct Failure {
  int exit_code;
  std::string message;
};

[[noreturn]] void usage_error(const std::string& message) { throw Failure{1, message}; }

void check(kpg_status status) {
  if (status == KPG_OK) return;
  throw Failure{status == KPG_ERR_IO ? 2 : 1, kpg_last_error()};
}

// RAII wrappers for handles and returned strings.
struct StringDeleter {
  void operator()(char* s) const { kpg_free_string(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

#define KPG_HANDLE(name)                                             \
  struct name##_deleter {                                            \
    void operator()(name* p) const { name##_free(p); }               \
  };                                                                 \
  using name##_ptr = std::unique_ptr<name, name##_deleter>;

KPG_HANDLE(kpg_schema)
KPG_HANDLE(kpg_grouping)
KPG_HANDLE(kpg_tensor)
KPG_HANDLE(kpg_matrix)
KPG_HANDLE(kpg_dendrogram)
#undef KPG_HANDLE

template <typename Ptr, typename F>
Ptr make(F&& fn) {
  typename Ptr::pointer raw = nullptr;
  check(fn(&raw));
  return Ptr(raw);
}

std::string take(char* raw) {
  OwnedString owned(raw);
  return raw == nullptr ? std::string() : std::string(raw);
}

kpg_schema_ptr load_schema(const std::string& path) {
  log(LogLevel::Debug, "reading schema " + path);
  return make<kpg_schema_ptr>([&](kpg_schema** out) { return kpg_schema_read(path.c_str(), out); });
}

kpg_grouping_ptr load_grouping(const std::string& path) {
  log(LogLevel::Debug, "reading grouping " + path);
  return make<kpg_grouping_ptr>([&](kpg_grouping** out) { return kpg_grouping_read(path.c_str(), out); });
}

kpg_tensor_ptr load_tensor(const std::string& path) {
  log(LogLevel::Debug, "reading tensor " + path);
  return make<kpg_tensor_ptr>([&](kpg_tensor** out) { return kpg_tensor_read(path.c_str(), out); });
}

kpg_dendrogram_ptr load_dendrogram(const std::string& path) {
  return make<kpg_dendrogram_ptr>(
      [&](kpg_dendrogram** out) { return kpg_dendrogram_read(path.c_str(), out); });
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure{2, "cannot open '" + path + "' for writing"};
  out << text;
  if (!out) throw Failure{2, "write error on '" + path + "'"};
}

kpg_format parse_format(const std::string& f) { return f == "json" ? KPG_FORMAT_JSON : KPG_FORMAT_TEXT; }

kpg_head parse_head(const std::string& h) { return h == "reg" ? KPG_HEAD_REG : KPG_HEAD_HEAT; }

/// "a,b,c" or "start:stop:step" (inclusive stop).
std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  auto number = [&](const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
      usage_error("invalid number '" + s + "' in '" + text + "'");
    }
    return v;
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) usage_error("range must be start:stop:step, got '" + text + "'");
    double start = number(parts[0]), stop = number(parts[1]), step = number(parts[2]);
    if (step <= 0 || stop < start) usage_error("range '" + text + "' is empty or has a nonpositive step");
    auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (count > 100000) usage_error("range '" + text + "' has too many values");
    for (long i = 0; i < count; ++i) out.push_back(start + static_cast<double>(i) * step);
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
  }
  if (out.empty()) usage_error("empty list '" + text + "'");
  return out;
}

// group ----------------------------------------------------------------------

struct GroupArgs {
  std::string schema, method = "offsets", annotations, weights, reg_weights, heat_weights, bias;
  std::string head, linkage, dendrogram_dir, matrix_dir, output;
  int clusters = 0, reg_clusters = 0, heat_clusters = 0;
  bool restrict = false, require_decodable = false;
};

void run_group(const GroupArgs& a) {
  if (a.method != "conv" && a.annotations.empty()) usage_error("--annotations is required for --method " + a.method);
  if (a.method == "conv" && (!a.annotations.empty())) usage_error("--annotations is not used with --method conv");
  if (a.method != "conv" && (!a.weights.empty() || !a.reg_weights.empty() || !a.heat_weights.empty())) {
    usage_error("weight files require --method conv");
  }
  if (!a.bias.empty() && a.weights.empty()) usage_error("--bias applies to --weights only");

  // Which heads get clustered, and from which weight file.
  std::string reg_w = a.reg_weights, heat_w = a.heat_weights;
  bool do_reg = false, do_heat = false;
  if (a.method == "conv") {
    if (!a.weights.empty()) {
      if (a.head == "reg") {
        if (!reg_w.empty()) usage_error("--weights with --head reg conflicts with --reg-weights");
        reg_w = a.weights;
      } else if (a.head == "heat") {
        if (!heat_w.empty()) usage_error("--weights with --head heat conflicts with --heat-weights");
        heat_w = a.weights;
      } else {
        usage_error("--weights needs --head reg or --head heat");
      }
    }
    do_reg = !reg_w.empty();
    do_heat = !heat_w.empty();
    if (!do_reg && !do_heat) usage_error("--method conv needs --weights, --reg-weights or --heat-weights");
  } else {
    std::string h = a.head.empty() ? "both" : a.head;
    do_reg = h == "reg" || h == "both";
    do_heat = h == "heat" || h == "both";
  }
  int m_reg = a.reg_clusters > 0 ? a.reg_clusters : a.clusters;
  int m_heat = a.heat_clusters > 0 ? a.heat_clusters : a.clusters;
  if (do_reg && m_reg <= 0) usage_error("regression head needs --clusters or --reg-clusters");
  if (do_heat && m_heat <= 0) usage_error("heatmap head needs --clusters or --heat-clusters");
  kpg_linkage linkage = KPG_LINKAGE_AVERAGE;
  std::string link = a.linkage.empty() ? (a.method == "anti-offsets" ? "complete" : "average") : a.linkage;
  if (link == "complete") linkage = KPG_LINKAGE_COMPLETE;

  auto schema = load_schema(a.schema);
  const size_t n = kpg_schema_num_keypoints(schema.get());
  if (a.restrict) {
    int floor_m = kpg_schema_min_restricted_clusters(schema.get());
    if ((do_reg && m_reg < floor_m) || (do_heat && m_heat < floor_m)) {
      usage_error("--restrict needs at least " + std::to_string(floor_m) + " clusters for this schema");
    }
  }

  auto cluster_one = [&](bool reg, const std::string& weights_path, int m) {
    const char* name = reg ? "reg" : "heat";
    kpg_matrix_ptr matrix;
    if (a.method == "conv") {
      auto weights = load_tensor(weights_path);
      kpg_tensor_ptr bias;
      if (!a.bias.empty() && weights_path == a.weights) bias = load_tensor(a.bias);
      matrix = make<kpg_matrix_ptr>([&](kpg_matrix** out) {
        return kpg_matrix_from_weights(schema.get(), weights.get(), reg ? KPG_HEAD_REG : KPG_HEAD_HEAT,
                                       bias.get(), out);
      });
    } else {
      matrix = make<kpg_matrix_ptr>([&](kpg_matrix** out) {
        return kpg_matrix_from_annotations(schema.get(), a.annotations.c_str(),
                                           a.method == "anti-offsets" ? 1 : 0, out);
      });
    }
    if (a.restrict) check(kpg_matrix_restrict(matrix.get(), schema.get()));
    if (!a.matrix_dir.empty()) {
      auto t = make<kpg_tensor_ptr>([&](kpg_tensor** out) { return kpg_matrix_to_tensor(matrix.get(), out); });
      check(kpg_tensor_write(t.get(), (a.matrix_dir + "/" + name + "_matrix.npy").c_str()));
    }
    auto dendrogram = make<kpg_dendrogram_ptr>(
        [&](kpg_dendrogram** out) { return kpg_dendrogram_build(matrix.get(), linkage, out); });
    if (!a.dendrogram_dir.empty()) {
      check(kpg_dendrogram_write(dendrogram.get(), (a.dendrogram_dir + "/" + name + "_dendrogram.json").c_str()));
    }
    std::vector<int> labels(n);
    if (a.restrict) {
      check(kpg_dendrogram_restricted_cut(dendrogram.get(), m, schema.get(), labels.data(), n));
    } else {
      check(kpg_dendrogram_cut(dendrogram.get(), m, labels.data(), n));
    }
    log(LogLevel::Info, std::string("clustered ") + name + " head into " + std::to_string(m) + " groups");
    return labels;
  };

  std::vector<int> reg_labels(n), heat_labels(n);
  for (size_t i = 0; i < n; ++i) reg_labels[i] = heat_labels[i] = static_cast<int>(i);
  if (do_reg) reg_labels = cluster_one(true, reg_w, m_reg);
  if (do_heat) heat_labels = cluster_one(false, heat_w, m_heat);

  auto grouping = make<kpg_grouping_ptr>([&](kpg_grouping** out) {
    return kpg_grouping_from_labels(schema.get(), reg_labels.data(), heat_labels.data(), n, out);
  });
  char* report_raw = nullptr;
  int ok = 0;
  check(kpg_grouping_check(schema.get(), grouping.get(), a.restrict ? 1 : 0, &report_raw, &ok));
  std::string report = take(report_raw);
  int decodable = 0;
  check(kpg_grouping_check(schema.get(), grouping.get(), 0, nullptr, &decodable));
  if (!decodable) {
    if (a.require_decodable) throw Failure{1, "grouping has ambiguous pairs and cannot be decoded"};
    log(LogLevel::Warn, "grouping has ambiguous pairs; decode will reject it");
  }
  check(kpg_grouping_write(grouping.get(), a.output.c_str()));
  int r = 0, h = 0;
  kpg_grouping_clusters(grouping.get(), &r, &h);
  std::cout << "grouping (" << r << "," << h << ") over " << n << " keypoints written to " << a.output
            << "\n"
            << "decodable: " << (decodable ? "yes" : "no") << "\n";
}

// main -----------------------------------------------------------------------

int run(int argc, char** argv) {
  CLI::App app{"kpg: keypoint grouping, analysis, budgeting and CenterNet decoding"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kpg_version()));
  const auto heads = CLI::IsMember({"reg", "heat"});
  const auto formats = CLI::IsMember({"text", "json"});

  // group
  GroupArgs g;
  auto* group = app.add_subcommand("group", "Cluster keypoint types into a grouping file");
  group->add_option("--schema", g.schema, "Schema JSON path")->required();
  group->add_option("--method", g.method, "Dissimilarity source: offsets | anti-offsets | conv")
      ->check(CLI::IsMember({"offsets", "anti-offsets", "conv"}))
      ->capture_default_str();
  group->add_option("--annotations", g.annotations,
                    "COCO-style annotation JSON (pixel coordinates) for offsets methods")
      ;
  group->add_option("--weights", g.weights, "Last-layer weight NPY for --head (rows: n heat, 2n reg)")
      ;
  group->add_option("--bias", g.bias, "Bias NPY for --weights, one value per row; appended as a feature")
      ;
  group->add_option("--reg-weights", g.reg_weights, "Regression-head weight NPY (2n rows)")
      ;
  group->add_option("--heat-weights", g.heat_weights, "Heatmap-head weight NPY (n rows)")
      ;
  group->add_option("--head", g.head, "Head to cluster: reg | heat | both (offsets default: both)")
      ->check(CLI::IsMember({"reg", "heat", "both"}));
  group->add_option("--linkage", g.linkage, "average | complete (default: complete for anti-offsets, else average)")
      ->check(CLI::IsMember({"average", "complete"}));
  group->add_option("--clusters", g.clusters, "Cluster count m for every clustered head (count)")
      ->check(CLI::PositiveNumber);
  group->add_option("--reg-clusters", g.reg_clusters, "Regression cluster count m_reg (count)")
      ->check(CLI::PositiveNumber);
  group->add_option("--heat-clusters", g.heat_clusters, "Heatmap cluster count m_heat (count)")
      ->check(CLI::PositiveNumber);
  group->add_flag("--restrict", g.restrict, "Forbid same-class keypoints from sharing a cluster");
  group->add_flag("--require-decodable", g.require_decodable, "Fail (exit 1) if the result has ambiguous pairs");
  group->add_option("--dendrogram-dir", g.dendrogram_dir, "Directory for <head>_dendrogram.json audit files")
      ;
  group->add_option("--matrix-dir", g.matrix_dir, "Directory for <head>_matrix.npy (n x n f64)")
      ;
  group->add_option("-o,--output", g.output, "Output grouping JSON path")->required();

  // consensus
  std::vector<std::string> cons_files;
  std::string cons_da, cons_db, cons_counts, cons_format = "text", cons_out;
  auto* consensus = app.add_subcommand("consensus", "Adjusted Rand Index between two groupings or dendrograms");
  consensus->add_option("groupings", cons_files, "Two grouping JSON files")->expected(0, 2);
  consensus->add_option("--dendrogram-a", cons_da, "First dendrogram JSON for a consensus curve");
  consensus->add_option("--dendrogram-b", cons_db, "Second dendrogram JSON for a consensus curve");
  consensus->add_option("--counts", cons_counts, "Cluster counts for the curve: a,b,c or start:stop:step (counts)");
  consensus->add_option("--format", cons_format, "stdout format: text | json")->check(formats)->capture_default_str();
  consensus->add_option("-o,--output", cons_out, "Also write the JSON report here");

  // analyze
  std::string an_schema, an_grouping, an_mode = "unrestricted", an_dreg, an_dheat, an_creg, an_cheat,
                                      an_format = "text", an_out;
  bool an_strict = false;
  auto* analyze = app.add_subcommand("analyze", "Validity, inconsistent pairs and the ambiguity matrix");
  analyze->add_option("--schema", an_schema, "Schema JSON path")->required();
  analyze->add_option("--grouping", an_grouping, "Grouping JSON path")->required();
  analyze->add_option("--mode", an_mode, "Validity mode: restricted | unrestricted")
      ->check(CLI::IsMember({"restricted", "unrestricted"}))
      ->capture_default_str();
  analyze->add_option("--reg-dendrogram", an_dreg, "Regression dendrogram JSON for the ambiguity matrix")
      ;
  analyze->add_option("--heat-dendrogram", an_dheat, "Heatmap dendrogram JSON for the ambiguity matrix")
      ;
  analyze->add_option("--reg-counts", an_creg, "Regression cluster counts: a,b or start:stop:step (counts)");
  analyze->add_option("--heat-counts", an_cheat, "Heatmap cluster counts: a,b or start:stop:step (counts)");
  analyze->add_flag("--strict", an_strict, "Exit 1 when the grouping fails the chosen mode");
  analyze->add_option("--format", an_format, "stdout format: text | json")->check(formats)->capture_default_str();
  analyze->add_option("-o,--output", an_out, "Also write the JSON report here");

  // budget
  long long b_classes = 0, b_keypoints = 0, b_mreg = 0, b_mheat = 0, b_bpv = 4, b_stride = 4;
  std::string b_schema, b_grouping, b_profiles, b_format = "text", b_out;
  std::vector<long long> b_res;
  auto* budget = app.add_subcommand("budget", "Output channel and memory accounting");
  budget->add_option("--classes", b_classes, "Object classes C (count); default from --schema")->check(CLI::PositiveNumber);
  budget->add_option("--schema", b_schema, "Schema JSON supplying C and n");
  budget->add_option("--grouping", b_grouping, "Grouping JSON supplying m_reg, m_heat and n");
  budget->add_option("--keypoints", b_keypoints, "Ungrouped keypoint types n (count)")->check(CLI::PositiveNumber);
  budget->add_option("--m-reg", b_mreg, "Regression clusters m_reg (count)")->check(CLI::PositiveNumber);
  budget->add_option("--m-heat", b_mheat, "Heatmap clusters m_heat (count)")->check(CLI::PositiveNumber);
  budget->add_option("--resolution", b_res, "Square input resolution (pixels); repeatable; default: all profiles")
      ->check(CLI::PositiveNumber);
  budget->add_option("--profiles", b_profiles, "Encoder profile JSON (weights/activations in MiB); default: bundled table")
      ;
  budget->add_option("--bytes-per-value", b_bpv, "Bytes per output value (bytes)")->check(CLI::PositiveNumber)->capture_default_str();
  budget->add_option("--stride", b_stride, "Output stride (input pixels per grid cell)")->check(CLI::PositiveNumber)->capture_default_str();
  budget->add_option("--format", b_format, "stdout format: text | json")->check(formats)->capture_default_str();
  budget->add_option("-o,--output", b_out, "Also write the JSON report here");

  // decode options shared by decode and sweep-sigma
  kpg_decode_options dopt;
  kpg_decode_options_default(&dopt);
  std::string refine = "rescore";
  int jobs = 1;
  auto add_decode_flags = [&](CLI::App* cmd, bool with_refine) {
    if (with_refine) {
      cmd->add_option("--refine", refine, "Keypoint refinement: base | rescore")
          ->check(CLI::IsMember({"base", "rescore"}))
          ->capture_default_str();
      cmd->add_option("--sigma", dopt.sigma, "Rescoring Gaussian std dev (feature-grid pixels)")
          ->check(CLI::PositiveNumber)
          ->capture_default_str();
    }
    cmd->add_option("--topk", dopt.top_k, "Maximum detections per image (count)")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--center-thresh", dopt.center_threshold, "Center heatmap score threshold (score in [0,1])")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--kp-thresh", dopt.kp_threshold, "Keypoint peak threshold for base refinement (score in [0,1])")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--jobs", jobs, "Worker threads for manifest images (count)")->check(CLI::PositiveNumber)->capture_default_str();
  };

  // decode
  std::string d_manifest, d_schema, d_grouping, d_out;
  auto* decode = app.add_subcommand("decode", "Decode head tensors listed in a manifest into detections");
  decode->add_option("--manifest", d_manifest, "Decode manifest JSON")->required();
  decode->add_option("--schema", d_schema, "Override the manifest's schema");
  decode->add_option("--grouping", d_grouping, "Override the manifest's grouping");
  add_decode_flags(decode, true);
  decode->add_option("-o,--output", d_out, "Detections JSON (input-pixel units)")->required();

  // synth
  std::string s_schema, s_grouping, s_scene, s_out;
  std::size_t s_random = 0, s_grid = 128;
  std::uint64_t s_seed = 0;
  bool s_closest = false;
  double s_amp = 0;
  auto* synth = app.add_subcommand("synth", "Render synthetic scenes into NPY heads plus a manifest");
  synth->add_option("--schema", s_schema, "Schema JSON path");
  synth->add_option("--grouping", s_grouping, "Grouping JSON path (default: identity)");
  synth->add_option("--scene", s_scene, "Scene spec JSON (grid units), one scene or {\"scenes\": [...]}")
      ;
  synth->add_option("--random", s_random, "Number of random well-separated scenes (count)")->check(CLI::PositiveNumber);
  synth->add_option("--seed", s_seed, "Random seed")->capture_default_str();
  synth->add_option("--grid", s_grid, "Random scene grid side (feature-grid pixels)")->capture_default_str();
  synth->add_flag("--closest-peak", s_closest, "Render the closest-peak failure case");
  synth->add_option("--distractor-amplitude", s_amp, "Closest-peak case distractor peak height (in (0,1])")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("-o,--output", s_out, "Output directory")->required();

  // sweep-sigma
  std::string w_manifest, w_grouping, w_sigmas, w_format = "text", w_out;
  double w_pck = 0.05;
  auto* sweep = app.add_subcommand("sweep-sigma", "Pick the rescoring sigma by PCK over labelled scenes");
  sweep->add_option("--manifest", w_manifest, "Manifest whose images carry ground truth")->required();
  sweep->add_option("--grouping", w_grouping, "Override the manifest's grouping");
  sweep->add_option("--sigmas", w_sigmas, "Sigma grid: a,b,c or start:stop:step (feature-grid pixels)")->required();
  sweep->add_option("--pck", w_pck, "PCK threshold as a fraction of max(box w, box h)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_decode_flags(sweep, false);
  sweep->add_option("--format", w_format, "stdout format: text | json")->check(formats)->capture_default_str();
  sweep->add_option("-o,--output", w_out, "Also write the JSON report here");

  // init-weights
  std::string i_weights, i_grouping, i_head, i_out, i_map;
  auto* init = app.add_subcommand("init-weights", "Average last-layer weights per cluster");
  init->add_option("--weights", i_weights, "Ungrouped weight NPY (rows: n heat, 2n reg)")->required();
  init->add_option("--grouping", i_grouping, "Grouping JSON path")->required();
  init->add_option("--head", i_head, "Head: reg | heat")->required()->check(heads);
  init->add_option("-o,--output", i_out, "Grouped weight NPY (rows: m_heat heat, 2 m_reg reg)")->required();
  init->add_option("--map", i_map, "Also write the cluster membership JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*group) {
    run_group(g);
  } else if (*consensus) {
    kpg_format fmt = parse_format(cons_format);
    bool curve = !cons_da.empty() || !cons_db.empty();
    std::string text, json;
    if (curve) {
      if (cons_da.empty() || cons_db.empty() || cons_counts.empty()) {
        usage_error("a consensus curve needs --dendrogram-a, --dendrogram-b and --counts");
      }
      if (!cons_files.empty()) usage_error("give either two groupings or two dendrograms, not both");
      auto da = load_dendrogram(cons_da), db = load_dendrogram(cons_db);
      char* raw = nullptr;
      check(kpg_consensus_curve(da.get(), db.get(), cons_counts.c_str(), fmt, &raw));
      text = take(raw);
      if (!cons_out.empty()) {
        check(kpg_consensus_curve(da.get(), db.get(), cons_counts.c_str(), KPG_FORMAT_JSON, &raw));
        json = take(raw);
      }
    } else {
      if (cons_files.size() != 2) usage_error("consensus needs two grouping files");
      auto a = load_grouping(cons_files[0]), b = load_grouping(cons_files[1]);
      char* raw = nullptr;
      check(kpg_consensus(a.get(), b.get(), fmt, &raw));
      text = take(raw);
      if (!cons_out.empty()) {
        check(kpg_consensus(a.get(), b.get(), KPG_FORMAT_JSON, &raw));
        json = take(raw);
      }
    }
    if (!cons_out.empty()) write_file(cons_out, json);
    std::cout << text;
  } else if (*analyze) {
    bool matrix = !an_dreg.empty() || !an_dheat.empty();
    if (matrix && (an_dreg.empty() || an_dheat.empty() || an_creg.empty() || an_cheat.empty())) {
      usage_error("the ambiguity matrix needs both dendrograms and both count lists");
    }
    auto schema = load_schema(an_schema);
    auto grouping = load_grouping(an_grouping);
    kpg_dendrogram_ptr dreg, dheat;
    if (matrix) {
      dreg = load_dendrogram(an_dreg);
      dheat = load_dendrogram(an_dheat);
    }
    int restricted = an_mode == "restricted" ? 1 : 0;
    auto report = [&](kpg_format fmt, int* ok) {
      char* raw = nullptr;
      check(kpg_analyze(schema.get(), grouping.get(), restricted, dreg.get(), dheat.get(),
                        matrix ? an_creg.c_str() : nullptr, matrix ? an_cheat.c_str() : nullptr, fmt, &raw, ok));
      return take(raw);
    };
    int ok = 0;
    std::string text = report(parse_format(an_format), &ok);
    if (!an_out.empty()) write_file(an_out, report(KPG_FORMAT_JSON, nullptr));
    std::cout << text;
    if (an_strict && !ok) throw Failure{1, "grouping fails " + an_mode + " validity"};
  } else if (*budget) {
    kpg_budget_request req{};
    if (!b_schema.empty()) {
      auto schema = load_schema(b_schema);
      if (b_classes == 0) b_classes = static_cast<long long>(kpg_schema_num_classes(schema.get()));
      if (b_keypoints == 0) b_keypoints = static_cast<long long>(kpg_schema_num_keypoints(schema.get()));
    }
    if (!b_grouping.empty()) {
      auto grouping = load_grouping(b_grouping);
      int r = 0, h = 0;
      kpg_grouping_clusters(grouping.get(), &r, &h);
      if (b_mreg == 0) b_mreg = r;
      if (b_mheat == 0) b_mheat = h;
      if (b_keypoints == 0) b_keypoints = static_cast<long long>(kpg_grouping_size(grouping.get()));
    }
    if (b_classes == 0) usage_error("budget needs --classes or --schema");
    if (b_keypoints == 0) usage_error("budget needs --keypoints, --schema or --grouping");
    if (b_mreg == 0) b_mreg = b_keypoints;
    if (b_mheat == 0) b_mheat = b_keypoints;
    std::vector<int64_t> res(b_res.begin(), b_res.end());
    req = {b_classes, b_keypoints, b_mreg, b_mheat, res.data(), res.size(), b_bpv, b_stride};
    const char* profiles = b_profiles.empty() ? nullptr : b_profiles.c_str();
    char* raw = nullptr;
    check(kpg_budget_report(&req, profiles, parse_format(b_format), &raw));
    std::string text = take(raw);
    if (!b_out.empty()) {
      check(kpg_budget_report(&req, profiles, KPG_FORMAT_JSON, &raw));
      write_file(b_out, take(raw));
    }
    std::cout << text;
  } else if (*decode) {
    dopt.refine = refine == "base" ? KPG_REFINE_BASE : KPG_REFINE_RESCORE;
    kpg_schema_ptr schema;
    kpg_grouping_ptr grouping;
    if (!d_schema.empty()) schema = load_schema(d_schema);
    if (!d_grouping.empty()) grouping = load_grouping(d_grouping);
    char* raw = nullptr;
    size_t count = 0;
    check(kpg_decode_manifest(d_manifest.c_str(), schema.get(), grouping.get(), &dopt, jobs, &raw, &count));
    write_file(d_out, take(raw));
    std::cout << "decoded " << count << " detections (" << refine << " refinement) into " << d_out << "\n";
  } else if (*synth) {
    int modes = (s_scene.empty() ? 0 : 1) + (s_random > 0 ? 1 : 0) + (s_closest ? 1 : 0);
    if (modes != 1) usage_error("synth needs exactly one of --scene, --random or --closest-peak");
    if (s_amp != 0 && !s_closest) usage_error("--distractor-amplitude applies to --closest-peak only");
    if (s_closest && s_amp < 0) usage_error("--distractor-amplitude must be positive");
    char* raw = nullptr;
    if (s_closest) {
      if (!s_schema.empty() || !s_grouping.empty()) usage_error("--closest-peak uses its own schema and grouping");
      check(kpg_synth_closest_peak(s_amp, s_out.c_str(), &raw));
    } else {
      if (s_schema.empty()) usage_error("--schema is required for --scene and --random");
      auto schema = load_schema(s_schema);
      auto grouping = s_grouping.empty()
                          ? make<kpg_grouping_ptr>([&](kpg_grouping** out) { return kpg_grouping_identity(schema.get(), out); })
                          : load_grouping(s_grouping);
      if (!s_scene.empty()) {
        check(kpg_synth_from_file(schema.get(), grouping.get(), s_scene.c_str(), s_out.c_str(), &raw));
      } else {
        check(kpg_synth_random(schema.get(), grouping.get(), s_random, s_seed, s_grid, s_out.c_str(), &raw));
      }
    }
    std::cout << "manifest: " << take(raw) << "\n";
  } else if (*sweep) {
    std::vector<double> sigmas = parse_real_list(w_sigmas);
    for (double s : sigmas) {
      if (!(s > 0)) usage_error("sigma values must be positive");
    }
    kpg_grouping_ptr grouping;
    if (!w_grouping.empty()) grouping = load_grouping(w_grouping);
    kpg_format fmt = parse_format(w_format);
    char* raw = nullptr;
    double best = 0;
    check(kpg_sweep_sigma(w_manifest.c_str(), grouping.get(), sigmas.data(), sigmas.size(), &dopt, w_pck,
                          jobs, fmt, &raw, &best));
    std::string text = take(raw);
    if (!w_out.empty()) {
      check(kpg_sweep_sigma(w_manifest.c_str(), grouping.get(), sigmas.data(), sigmas.size(), &dopt, w_pck,
                            jobs, KPG_FORMAT_JSON, &raw, nullptr));
      write_file(w_out, take(raw));
    }
    std::cout << text;
    if (fmt == KPG_FORMAT_TEXT) std::cout << "best sigma: " << best << "\n";
  } else if (*init) {
    auto weights = load_tensor(i_weights);
    auto grouping = load_grouping(i_grouping);
    kpg_tensor* raw_t = nullptr;
    char* raw_map = nullptr;
    check(kpg_init_weights(weights.get(), grouping.get(), parse_head(i_head), &raw_t, &raw_map));
    kpg_tensor_ptr grouped(raw_t);
    std::string map = take(raw_map);
    check(kpg_tensor_write(grouped.get(), i_out.c_str()));
    if (!i_map.empty()) write_file(i_map, map);
    size_t dims[8] = {};
    size_t rank = kpg_tensor_shape(grouped.get(), dims, 8);
    std::cout << "grouped " << i_head << " weights (";
    for (size_t i = 0; i < rank && i < 8; ++i) std::cout << (i ? ", " : "") << dims[i];
    std::cout << ") written to " << i_out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  try {
    return run(argc, argv);
  } catch (const Failure& f) {
    log(LogLevel::Error, f.message);
    return f.exit_code;
  } catch (const std::exception& e) {
    log(LogLevel::Error, e.what());
    return 1;
  }
}
