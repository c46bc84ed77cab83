// Prints one PASS/FAIL line per acceptance criterion and exits nonzero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kpg/budget.hpp"
#include "kpg/cluster.hpp"
#include "kpg/decode.hpp"
#include "kpg/error.hpp"
#include "kpg/metrics.hpp"
#include "kpg/synth.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/roundtrip.hpp"

using namespace kpg;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& check) {
  auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("AC%-2d %-4s %s: %s (%.2fs)\n", id, v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(), secs);
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

Verdict channel_accounting() {
  auto a = head_channels(13, 294, 294).total, b = head_channels(13, 62, 62).total;
  std::ostringstream s;
  s << "(13,294,294) -> " << a << ", (13,62,62) -> " << b;
  return {a == 901 && b == 205, s.str()};
}

Verdict memory_table() {
  const double outputs[] = {3.5, 14.1, 56.3};
  const double shares[] = {3.8, 9.8, 16.1, 2.7, 7.7, 14.5, 0.4, 1.5, 4.0};
  bool ok = true;
  std::ostringstream s;
  for (int i = 0; i < 3; ++i) {
    double mib = output_tensor_bytes(128 << i, 128 << i, 901).mib;
    ok = ok && std::abs(mib - outputs[i]) <= 0.05;
    s << mib << " ";
  }
  s << "MiB; shares";
  auto profiles = reference_encoder_profiles();
  ok = ok && profiles.size() == 9;
  for (std::size_t i = 0; i < profiles.size() && i < 9; ++i) {
    const auto& p = profiles[i];
    double pct = output_share_percent(output_tensor_bytes(p.resolution, p.resolution, 901).mib, p.weights_mib,
                                      p.activations_mib, p.resolution, p.resolution);
    ok = ok && std::abs(pct - shares[i]) <= 0.1;
    char buf[16];
    std::snprintf(buf, sizeof buf, " %.2f", pct);
    s << buf;
  }
  return {ok, s.str()};
}

Verdict clustering_oracle() {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> size(2, 12);
  int matrices = 0, mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    int n = size(rng);
    auto d = oracle::random_matrix(rng, n, trial % 2 == 0);
    auto m = DissimilarityMatrix::from_values(static_cast<std::size_t>(n), d);
    for (auto [link, olink] : {std::pair{Linkage::Average, oracle::Link::Average},
                               std::pair{Linkage::Complete, oracle::Link::Complete}}) {
      Dendrogram g = agglomerate(m, link);
      auto states = oracle::agglomerate(d, n, olink);
      for (int k = 1; k <= n; ++k)
        if (cut(g, k) != oracle::labels_of(states[static_cast<std::size_t>(n - k)], n)) ++mismatches;
    }
    ++matrices;
  }
  std::ostringstream s;
  s << matrices << " matrices (half with tied integer distances), both linkages, " << mismatches
    << " mismatched cuts";
  return {matrices >= 1000 && mismatches == 0, s.str()};
}

Verdict restriction_property() {
  std::mt19937_64 rng(4);
  int instances = 0, clean = 0, raised = 0, silent = 0;
  for (int trial = 0; trial < 200; ++trial) {
    KeypointSchema s = fixtures::random_schema(rng, 6, 8);
    int n = static_cast<int>(s.num_keypoints());
    if (n < 2) {
      --trial;
      continue;
    }
    auto d = oracle::random_matrix(rng, n, trial % 2 == 0);
    DissimilarityMatrix m = apply_restrictions(DissimilarityMatrix::from_values(static_cast<std::size_t>(n), d), s);
    Dendrogram g = agglomerate(m, trial % 4 == 1 ? Linkage::Complete : Linkage::Average);
    auto cls = fixtures::class_vector(s);
    for (int k = min_restricted_clusters(s); k <= n; ++k) {
      ++instances;
      try {
        Labels labels = restricted_cut(g, k, s);
        Grouping grouping = make_grouping(s, labels, labels);
        bool confirmed = check_grouping(s, grouping, GroupingMode::Restricted).restricted_ok;
        if (confirmed && oracle::inconsistent(cls, labels) == 0) ++clean;
        else ++silent;
      } catch (const Error&) {
        ++raised;
      }
    }
  }
  std::ostringstream s;
  s << clean << "/" << instances << " cuts at m >= min clean (" << 100.0 * clean / instances << "%), " << raised
    << " raised a violation error, " << silent << " silent violations";
  return {clean == instances, s.str()};
}

Verdict ari_correctness() {
  auto parts = oracle::set_partitions(5);
  double worst = 0;
  bool ones = true;
  for (const auto& a : parts)
    for (const auto& b : parts) {
      double v = adjusted_rand_index(a, b);
      worst = std::max(worst, std::abs(v - oracle::ari_contingency(a, b)));
      if (a == b && v != 1.0) ones = false;
    }
  double example = adjusted_rand_index(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 0, 1});
  std::ostringstream s;
  s << parts.size() << "x" << parts.size() << " pairs, max deviation " << worst << ", [0,0,1,1]/[0,1,0,1] -> "
    << example;
  return {parts.size() == 52 && worst <= 1e-12 && ones && example == -0.5, s.str()};
}

Verdict decode_roundtrip() {
  std::mt19937_64 rng(6);
  double worst_box = 0, worst_kp = 0, worst_grouped = 0;
  int unmatched = 0, grouped_scenes = 0;
  for (int i = 0; i < 100; ++i) {
    KeypointSchema s = fixtures::random_schema(rng, 3, 6);
    Grouping id = identity_grouping(s);
    RenderedScene r = render(random_scene(s, id, rng), s, id);
    for (RefineMode mode : {RefineMode::Base, RefineMode::Rescore}) {
      DecodeOptions o;
      o.refine = mode;
      auto e = roundtrip::compare(decode_full(r.heads, s, id, o), r.truth);
      if (!e.matched) ++unmatched;
      worst_box = std::max(worst_box, e.box);
      worst_kp = std::max(worst_kp, e.keypoint);
    }
    Grouping g = roundtrip::random_decodable_grouping(s, rng);
    RenderedScene rg = render(random_scene(s, g, rng), s, g);
    DecodeOptions o;
    o.sigma = 3.0;
    auto e = roundtrip::compare(decode_full(rg.heads, s, g, o), rg.truth);
    if (!e.matched) ++unmatched;
    worst_grouped = std::max(worst_grouped, e.keypoint);
    ++grouped_scenes;
  }
  std::ostringstream s;
  s << "100 identity scenes x 2 modes: max box err " << worst_box << ", max kp err " << worst_kp << "; "
    << grouped_scenes << " grouped scenes (rescore, sigma 3): max kp err " << worst_grouped << "; unmatched "
    << unmatched;
  return {unmatched == 0 && worst_box <= 0.5 && worst_kp <= 0.5 && worst_grouped <= 0.5, s.str()};
}

Verdict closest_peak() {
  ClosestPeakCase c = closest_peak_case();
  auto decode = [&](const SceneSpec& scene, RefineMode mode) {
    DecodeOptions o;
    o.refine = mode;
    o.sigma = c.sigma;
    auto d = decode_full(render(scene, c.schema, c.grouping).heads, c.schema, c.grouping, o);
    return d.at(0).keypoints.at(0);
  };
  auto at = [](const DecodedKeypoint& k, Point2 p) { return k.x == p.x && k.y == p.y; };
  bool base_ok = at(decode(c.scene, RefineMode::Base), c.distractor);
  bool rescore_ok = at(decode(c.scene, RefineMode::Rescore), c.truth);
  double a = c.break_even_amplitude();
  bool below = at(decode(c.with_distractor_amplitude(a * 0.99), RefineMode::Rescore), c.truth);
  bool above = at(decode(c.with_distractor_amplitude(a * 1.01), RefineMode::Rescore), c.distractor);
  bool base_above = at(decode(c.with_distractor_amplitude(a * 1.01), RefineMode::Base), c.distractor);
  std::ostringstream s;
  s << "base -> distractor " << base_ok << ", rescore -> truth " << rescore_ok << ", break-even " << a
    << " (0.99x keeps truth " << below << ", 1.01x flips " << above << ")";
  return {base_ok && rescore_ok && below && above && base_above, s.str()};
}

Verdict rescoring_invariants() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::uniform_real_distribution<double> sig(0.3, 6.0);
  long long calls = 0, violations = 0;
  bool limits = true;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t h = 12 + static_cast<std::size_t>(trial % 9), w = 10 + static_cast<std::size_t>(trial % 13);
    FeatureMap m(1, h, w);
    for (float& v : m.values()) v = u(rng) < 0.7f ? 0.0f : u(rng);
    Point2 coarse{u(rng) * static_cast<double>(w - 1), u(rng) * static_cast<double>(h - 1)};
    double sigma = sig(rng);
    GaussianMask mask = gaussian_mask(coarse, sigma, h, w);
    auto r = rescored_heatmap(m.channel(0), mask);
    ++calls;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double v = r[y * w + x];
        double d = std::hypot(static_cast<double>(x) - coarse.x, static_cast<double>(y) - coarse.y);
        bool nearest = x == mask.nearest_x() && y == mask.nearest_y();
        if (v > m.at(0, y, x) || (d > 3 * sigma && !nearest && v != 0.0)) ++violations;
      }

    for (float& v : m.values()) v = 0.01f + 0.89f * u(rng);
    DecodedKeypoint tiny = rescore_refine(m.channel(0), coarse, 1e-3);
    if (tiny.x != std::round(coarse.x) || tiny.y != std::round(coarse.y)) limits = false;
    std::size_t gx = static_cast<std::size_t>(u(rng) * static_cast<float>(w - 1));
    std::size_t gy = static_cast<std::size_t>(u(rng) * static_cast<float>(h - 1));
    m.at(0, gy, gx) = 1.0f;
    double diag = std::hypot(static_cast<double>(h), static_cast<double>(w));
    DecodedKeypoint wide = rescore_refine(m.channel(0), coarse, 10 * diag);
    if (wide.x != static_cast<double>(gx) || wide.y != static_cast<double>(gy)) limits = false;
  }
  std::ostringstream s;
  s << calls << " rescored maps, " << violations << " invariant violations; sigma limits exact: " << limits;
  return {violations == 0 && limits, s.str()};
}

Verdict weight_averaging() {
  Tensor heat({3, 2}, {2, 4, 4, 8, 1, 1});
  auto h = average_weights(heat, std::vector<int>{0, 0, 1}, Head::Heatmap);
  bool means = h.weights[0] == 3 && h.weights[1] == 6 && h.weights[2] == 1 && h.weights[3] == 1;
  Tensor reg({4, 2}, {1, 1, 10, 10, 3, 3, 30, 30});
  auto r = average_weights(reg, std::vector<int>{0, 0}, Head::Regression);
  bool channels = r.weights[0] == 2 && r.weights[1] == 2 && r.weights[2] == 20 && r.weights[3] == 20;
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> small(-8, 8);
  bool idempotent = true;
  for (int t = 0; t < 100; ++t) {
    for (Head head : {Head::Heatmap, Head::Regression}) {
      std::size_t rows = head == Head::Regression ? 16 : 8;
      std::vector<double> v(rows * 4);
      // Multiples of 1/8 average exactly over clusters of at most 8 members.
      for (auto& x : v) x = small(rng) / 8.0;
      std::vector<int> labels{0, 1, 0, 2, 1, 0, 3, 2};
      auto first = average_weights(Tensor({rows, 4}, v, Dtype::F64), labels, head);
      auto second = average_weights(expand_weights(first.weights, labels, head), labels, head);
      for (std::size_t i = 0; i < first.weights.size(); ++i)
        if (first.weights[i] != second.weights[i]) idempotent = false;
    }
  }
  std::ostringstream s;
  s << "hand means " << means << ", dx/dy separation " << channels << ", expand+re-average idempotent " << idempotent;
  return {means && channels && idempotent, s.str()};
}

}  // namespace

int main() {
  report(1, "channel accounting", channel_accounting);
  report(2, "memory table", memory_table);
  report(3, "clustering oracle equivalence", clustering_oracle);
  report(4, "restriction property", restriction_property);
  report(5, "ARI correctness", ari_correctness);
  report(6, "decode roundtrip", decode_roundtrip);
  report(7, "closest-peak pathology", closest_peak);
  report(8, "rescoring invariants", rescoring_invariants);
  report(9, "weight averaging", weight_averaging);
  std::printf(
      "AC10 N/A  training-dependent results: not reproducible at desk scale (mAP/AP values, "
      "inconsistent-pair counts of trained weights, the minimal trained grouping, accuracy curves, "
      "latency and memory measurements); covered by AC3-AC9 instead\n");
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
