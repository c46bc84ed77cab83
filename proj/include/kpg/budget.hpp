#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kpg {

/// Output channels of the six CenterNet heads.
struct HeadBudget {
  std::int64_t center_heatmap = 0;  // one per class
  std::int64_t center_offset = 2;
  std::int64_t object_size = 2;
  std::int64_t kp_regression = 0;   // 2 per regression cluster
  std::int64_t kp_heatmap = 0;      // 1 per heatmap cluster
  std::int64_t kp_offset = 2;
  std::int64_t total = 0;
};

HeadBudget head_channels(std::int64_t classes, std::int64_t m_reg, std::int64_t m_heat);

inline constexpr double kBytesPerMiB = 1024.0 * 1024.0;

struct TensorBytes {
  std::uint64_t bytes = 0;
  double mib = 0;
};

/// (h / stride) * (w / stride) * channels * bytes_per_value.
TensorBytes output_tensor_bytes(std::int64_t input_h, std::int64_t input_w,
                                std::int64_t total_channels, std::int64_t bytes_per_value = 4,
                                std::int64_t stride = 4);

/// FP32 RGB input tensor, in MiB.
double input_tensor_mib(std::int64_t input_h, std::int64_t input_w);

/// Output share of total memory (encoder weights + activations + input).
double output_share_percent(double output_mib, double encoder_weights_mib,
                            double encoder_activations_mib, std::int64_t input_h,
                            std::int64_t input_w);

/// Encoder memory totals measured for one input resolution.
struct EncoderProfile {
  std::string encoder;
  std::int64_t resolution = 0;  // square input side
  double weights_mib = 0;
  double activations_mib = 0;
};

/// The nine DLA-34 / ResNet-50 / Hourglass profiles shipped with the library.
std::vector<EncoderProfile> reference_encoder_profiles();
std::vector<EncoderProfile> encoder_profiles_from_json(std::string_view text);
std::vector<EncoderProfile> read_encoder_profiles(const std::string& path);
std::string encoder_profiles_to_json(const std::vector<EncoderProfile>& profiles);

struct BudgetRequest {
  std::int64_t classes = 0;
  std::int64_t keypoints = 0;  // n, for the ungrouped baseline
  std::int64_t m_reg = 0;
  std::int64_t m_heat = 0;
  std::vector<std::int64_t> resolutions;  // empty: every profile resolution
  std::int64_t bytes_per_value = 4;
  std::int64_t stride = 4;
};

struct BudgetRow {
  EncoderProfile profile;
  double baseline_output_mib = 0;
  double baseline_share = 0;
  double grouped_output_mib = 0;
  double grouped_share = 0;
};

struct BudgetReport {
  HeadBudget baseline;
  HeadBudget grouped;
  std::vector<BudgetRow> rows;
};

BudgetReport budget_report(const BudgetRequest& request,
                           const std::vector<EncoderProfile>& profiles);
std::string budget_to_text(const BudgetReport& report);
std::string budget_to_json(const BudgetReport& report);

}  // namespace kpg
