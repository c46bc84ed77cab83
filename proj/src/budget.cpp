#include "kpg/budget.hpp"

#include <cstdio>
#include <sstream>

#include "io_util.hpp"
#include "kpg/error.hpp"

namespace kpg {

using detail::Json;

HeadBudget head_channels(std::int64_t classes, std::int64_t m_reg, std::int64_t m_heat) {
  require(classes >= 1 && m_reg >= 1 && m_heat >= 1,
          "class and cluster counts must be >= 1");
  HeadBudget b;
  b.center_heatmap = classes;
  b.kp_regression = 2 * m_reg;
  b.kp_heatmap = m_heat;
  b.total = b.center_heatmap + b.center_offset + b.object_size + b.kp_regression + b.kp_heatmap +
            b.kp_offset;
  return b;
}

TensorBytes output_tensor_bytes(std::int64_t input_h, std::int64_t input_w,
                                std::int64_t total_channels, std::int64_t bytes_per_value,
                                std::int64_t stride) {
  require(input_h > 0 && input_w > 0 && total_channels > 0 && bytes_per_value > 0 && stride > 0,
          "tensor dimensions must be positive");
  require(input_h % stride == 0 && input_w % stride == 0,
          "input " + std::to_string(input_h) + "x" + std::to_string(input_w) +
              " is not divisible by stride " + std::to_string(stride));
  TensorBytes out;
  out.bytes = static_cast<std::uint64_t>(input_h / stride) *
              static_cast<std::uint64_t>(input_w / stride) *
              static_cast<std::uint64_t>(total_channels) *
              static_cast<std::uint64_t>(bytes_per_value);
  out.mib = static_cast<double>(out.bytes) / kBytesPerMiB;
  return out;
}

double input_tensor_mib(std::int64_t input_h, std::int64_t input_w) {
  return static_cast<double>(input_h * input_w * 3 * 4) / kBytesPerMiB;
}

double output_share_percent(double output_mib, double encoder_weights_mib,
                            double encoder_activations_mib, std::int64_t input_h,
                            std::int64_t input_w) {
  require(output_mib > 0 && encoder_weights_mib > 0 && encoder_activations_mib > 0 &&
              input_h > 0 && input_w > 0,
          "memory figures must be positive");
  return 100.0 * output_mib /
         (encoder_weights_mib + encoder_activations_mib + input_tensor_mib(input_h, input_w));
}

std::vector<EncoderProfile> reference_encoder_profiles() {
  return {
      {"DLA-34", 128, 74.4, 17.0},      {"DLA-34", 256, 74.4, 68.1},
      {"DLA-34", 512, 74.4, 272.6},     {"ResNet-50", 128, 115.2, 16.9},
      {"ResNet-50", 256, 115.2, 67.8},  {"ResNet-50", 512, 115.2, 271.1},
      {"Hourglass", 128, 743.4, 42.4},  {"Hourglass", 256, 743.4, 169.5},
      {"Hourglass", 512, 743.4, 677.9},
  };
}

std::vector<EncoderProfile> encoder_profiles_from_json(std::string_view text) {
  Json root = detail::parse_json(text, "encoder profiles");
  const Json& list = detail::field(root, "profiles", "encoder profiles");
  require(list.is_array(), "encoder profiles: 'profiles' must be an array");
  std::vector<EncoderProfile> out;
  for (const Json& item : list) {
    EncoderProfile p;
    p.encoder = detail::get_string(item, "encoder", "profile");
    p.resolution = detail::get_int(item, "resolution", "profile");
    p.weights_mib = detail::get_number(item, "weights_mib", "profile");
    p.activations_mib = detail::get_number(item, "activations_mib", "profile");
    require(p.resolution > 0 && p.weights_mib > 0 && p.activations_mib > 0,
            "profile " + p.encoder + ": values must be positive");
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<EncoderProfile> read_encoder_profiles(const std::string& path) {
  return encoder_profiles_from_json(detail::read_text_file(path));
}

std::string encoder_profiles_to_json(const std::vector<EncoderProfile>& profiles) {
  Json list = Json::array();
  for (const auto& p : profiles) {
    list.push_back(Json{{"encoder", p.encoder},
                        {"resolution", p.resolution},
                        {"weights_mib", p.weights_mib},
                        {"activations_mib", p.activations_mib}});
  }
  return detail::dump_json(Json{{"profiles", list}});
}

BudgetReport budget_report(const BudgetRequest& request,
                           const std::vector<EncoderProfile>& profiles) {
  BudgetReport report;
  report.baseline = head_channels(request.classes, request.keypoints, request.keypoints);
  report.grouped = head_channels(request.classes, request.m_reg, request.m_heat);
  for (const auto& p : profiles) {
    if (!request.resolutions.empty()) {
      bool wanted = false;
      for (auto r : request.resolutions) wanted = wanted || r == p.resolution;
      if (!wanted) continue;
    }
    BudgetRow row;
    row.profile = p;
    row.baseline_output_mib = output_tensor_bytes(p.resolution, p.resolution, report.baseline.total,
                                                  request.bytes_per_value, request.stride)
                                  .mib;
    row.grouped_output_mib = output_tensor_bytes(p.resolution, p.resolution, report.grouped.total,
                                                 request.bytes_per_value, request.stride)
                                 .mib;
    row.baseline_share = output_share_percent(row.baseline_output_mib, p.weights_mib,
                                              p.activations_mib, p.resolution, p.resolution);
    row.grouped_share = output_share_percent(row.grouped_output_mib, p.weights_mib,
                                             p.activations_mib, p.resolution, p.resolution);
    report.rows.push_back(row);
  }
  for (auto r : request.resolutions) {
    bool found = false;
    for (const auto& row : report.rows) found = found || row.profile.resolution == r;
    require(found, "no encoder profile for resolution " + std::to_string(r));
  }
  return report;
}

namespace {

Json budget_json(const HeadBudget& b) {
  return Json{{"center_heatmap", b.center_heatmap}, {"center_offset", b.center_offset},
              {"object_size", b.object_size},       {"kp_regression", b.kp_regression},
              {"kp_heatmap", b.kp_heatmap},         {"kp_offset", b.kp_offset},
              {"total", b.total}};
}

std::string breakdown(const HeadBudget& b) {
  std::ostringstream out;
  out << b.total << " = " << b.center_heatmap << " + " << b.center_offset << " + "
      << b.object_size << " + " << b.kp_regression << " + " << b.kp_heatmap << " + "
      << b.kp_offset;
  return out.str();
}

}  // namespace

std::string budget_to_json(const BudgetReport& report) {
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    rows.push_back(Json{{"encoder", r.profile.encoder},
                        {"resolution", r.profile.resolution},
                        {"weights_mib", r.profile.weights_mib},
                        {"activations_mib", r.profile.activations_mib},
                        {"baseline_output_mib", r.baseline_output_mib},
                        {"baseline_output_percent", r.baseline_share},
                        {"grouped_output_mib", r.grouped_output_mib},
                        {"grouped_output_percent", r.grouped_share}});
  }
  return detail::dump_json(Json{{"channels", Json{{"baseline", budget_json(report.baseline)},
                                                  {"grouped", budget_json(report.grouped)}}},
                                {"memory", rows}});
}

std::string budget_to_text(const BudgetReport& report) {
  std::ostringstream out;
  out << "output channels (classes + center offset + size + kp regression + kp heatmap + kp "
         "offset)\n";
  out << "  ungrouped: " << breakdown(report.baseline) << "\n";
  out << "  grouped:   " << breakdown(report.grouped) << "\n\n";
  out << "memory (MiB, FP32; share = output / (weights + activations + input))\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %9s %12s %11s %8s %11s %8s\n", "encoder", "weights",
                "activations", "out(base)", "%", "out(group)", "%");
  out << line;
  for (const auto& r : report.rows) {
    std::string name = r.profile.encoder + " " + std::to_string(r.profile.resolution) + "x" +
                       std::to_string(r.profile.resolution);
    std::snprintf(line, sizeof line, "%-18s %9.1f %12.1f %11.1f %8.1f %11.1f %8.1f\n",
                  name.c_str(), r.profile.weights_mib, r.profile.activations_mib,
                  r.baseline_output_mib, r.baseline_share, r.grouped_output_mib, r.grouped_share);
    out << line;
  }
  return out.str();
}

}  // namespace kpg
