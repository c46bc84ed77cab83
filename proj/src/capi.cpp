#include "kpg/kpg.h"

#include <cstring>
#include <new>
#include <random>
#include <string>
#include <utility>

#include "kpg/budget.hpp"
#include "kpg/cluster.hpp"
#include "kpg/decode.hpp"
#include "kpg/dissim.hpp"
#include "kpg/error.hpp"
#include "kpg/evaluate.hpp"
#include "kpg/ingest.hpp"
#include "kpg/metrics.hpp"
#include "kpg/pipeline.hpp"
#include "kpg/schema.hpp"
#include "kpg/synth.hpp"

struct kpg_schema {
  kpg::KeypointSchema value;
};
struct kpg_grouping {
  kpg::Grouping value;
};
struct kpg_tensor {
  kpg::Tensor value;
};
struct kpg_matrix {
  kpg::DissimilarityMatrix value;
};
struct kpg_dendrogram {
  kpg::Dendrogram value;
};

namespace {

thread_local std::string g_last_error;

kpg_status set_error(kpg_status status, const char* message) {
  g_last_error = message;
  return status;
}

template <typename F>
kpg_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return KPG_OK;
  } catch (const kpg::Error& e) {
    switch (e.kind()) {
      case kpg::ErrorKind::Validation: return set_error(KPG_ERR_INVALID, e.what());
      case kpg::ErrorKind::Io: return set_error(KPG_ERR_IO, e.what());
      case kpg::ErrorKind::Internal: return set_error(KPG_ERR_INTERNAL, e.what());
    }
    return set_error(KPG_ERR_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(KPG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(KPG_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(KPG_ERR_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) kpg::fail(std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out, const std::string& s) {
  if (out != nullptr) *out = dup_string(s);
}

kpg::Head to_head(kpg_head head) {
  if (head == KPG_HEAD_REG) return kpg::Head::Regression;
  if (head == KPG_HEAD_HEAT) return kpg::Head::Heatmap;
  kpg::fail("unknown head value");
}

kpg::Linkage to_linkage(kpg_linkage linkage) {
  if (linkage == KPG_LINKAGE_AVERAGE) return kpg::Linkage::Average;
  if (linkage == KPG_LINKAGE_COMPLETE) return kpg::Linkage::Complete;
  kpg::fail("unknown linkage value");
}

void check_format(kpg_format format) {
  if (format != KPG_FORMAT_JSON && format != KPG_FORMAT_TEXT) kpg::fail("unknown output format");
}

kpg::DecodeOptions to_options(const kpg_decode_options* options) {
  kpg::DecodeOptions o;
  if (options != nullptr) {
    if (options->refine == KPG_REFINE_BASE) {
      o.refine = kpg::RefineMode::Base;
    } else if (options->refine == KPG_REFINE_RESCORE) {
      o.refine = kpg::RefineMode::Rescore;
    } else {
      kpg::fail("unknown refinement mode");
    }
    o.sigma = options->sigma;
    o.top_k = options->top_k;
    o.center_threshold = options->center_threshold;
    o.kp_threshold = options->kp_threshold;
  }
  o.validate();
  return o;
}

template <typename T, typename Handle>
void make_handle(Handle** out, T value) {
  need(out, "output handle");
  *out = new Handle{std::move(value)};
}

void write_labels(const kpg::Labels& labels, int* out, std::size_t n) {
  need(out, "labels");
  if (n != labels.size()) kpg::fail("label buffer length does not match the leaf count");
  std::copy(labels.begin(), labels.end(), out);
}

}  // namespace

extern "C" {

const char* kpg_version(void) { return "1.0.0"; }

const char* kpg_last_error(void) { return g_last_error.c_str(); }

void kpg_free_string(char* text) { delete[] text; }

// Schema ------------------------------------------------------------------

kpg_status kpg_schema_read(const char* path, kpg_schema** out) {
  return guarded([&] {
    need(path, "path");
    make_handle(out, kpg::read_schema(path));
  });
}

kpg_status kpg_schema_from_json(const char* json, kpg_schema** out) {
  return guarded([&] {
    need(json, "json");
    make_handle(out, kpg::schema_from_json(json));
  });
}

kpg_status kpg_schema_builtin(const char* name, kpg_schema** out) {
  return guarded([&] {
    need(name, "name");
    std::string n = name;
    if (n == "deepfashion2") {
      make_handle(out, kpg::deepfashion2_schema());
    } else if (n == "coco-person") {
      make_handle(out, kpg::coco_person_schema());
    } else {
      kpg::fail("unknown built-in schema '" + n + "' (expected deepfashion2 or coco-person)");
    }
  });
}

kpg_status kpg_schema_write(const kpg_schema* schema, const char* path) {
  return guarded([&] {
    need(schema, "schema");
    need(path, "path");
    kpg::write_schema(schema->value, path);
  });
}

kpg_status kpg_schema_to_json(const kpg_schema* schema, char** out) {
  return guarded([&] {
    need(schema, "schema");
    need(out, "out");
    emit(out, kpg::schema_to_json(schema->value));
  });
}

size_t kpg_schema_num_classes(const kpg_schema* schema) {
  return schema == nullptr ? 0 : schema->value.num_classes();
}

size_t kpg_schema_num_keypoints(const kpg_schema* schema) {
  return schema == nullptr ? 0 : schema->value.num_keypoints();
}

int kpg_schema_min_restricted_clusters(const kpg_schema* schema) {
  return schema == nullptr ? 0 : kpg::min_restricted_clusters(schema->value);
}

void kpg_schema_free(kpg_schema* schema) { delete schema; }

// Grouping ------------------------------------------------------------------

kpg_status kpg_grouping_read(const char* path, kpg_grouping** out) {
  return guarded([&] {
    need(path, "path");
    make_handle(out, kpg::read_grouping(path));
  });
}

kpg_status kpg_grouping_identity(const kpg_schema* schema, kpg_grouping** out) {
  return guarded([&] {
    need(schema, "schema");
    make_handle(out, kpg::identity_grouping(schema->value));
  });
}

kpg_status kpg_grouping_from_labels(const kpg_schema* schema, const int* reg_labels,
                                    const int* heat_labels, size_t n, kpg_grouping** out) {
  return guarded([&] {
    need(schema, "schema");
    need(reg_labels, "reg_labels");
    need(heat_labels, "heat_labels");
    kpg::Labels reg(reg_labels, reg_labels + n), heat(heat_labels, heat_labels + n);
    make_handle(out, kpg::make_grouping(schema->value, std::move(reg), std::move(heat)));
  });
}

kpg_status kpg_grouping_write(const kpg_grouping* grouping, const char* path) {
  return guarded([&] {
    need(grouping, "grouping");
    need(path, "path");
    kpg::write_grouping(grouping->value, path);
  });
}

kpg_status kpg_grouping_to_json(const kpg_grouping* grouping, char** out) {
  return guarded([&] {
    need(grouping, "grouping");
    need(out, "out");
    emit(out, kpg::grouping_to_json(grouping->value));
  });
}

void kpg_grouping_clusters(const kpg_grouping* grouping, int* m_reg, int* m_heat) {
  if (m_reg != nullptr) *m_reg = grouping == nullptr ? 0 : grouping->value.m_reg;
  if (m_heat != nullptr) *m_heat = grouping == nullptr ? 0 : grouping->value.m_heat;
}

size_t kpg_grouping_size(const kpg_grouping* grouping) {
  return grouping == nullptr ? 0 : grouping->value.size();
}

size_t kpg_grouping_labels(const kpg_grouping* grouping, kpg_head head, int* labels, size_t n) {
  if (grouping == nullptr || labels == nullptr) return 0;
  const kpg::Labels& src =
      head == KPG_HEAD_REG ? grouping->value.reg_labels : grouping->value.heat_labels;
  std::size_t count = std::min(n, src.size());
  std::copy_n(src.begin(), count, labels);
  return count;
}

kpg_status kpg_grouping_validate(const kpg_schema* schema, const kpg_grouping* grouping) {
  return guarded([&] {
    need(schema, "schema");
    need(grouping, "grouping");
    kpg::validate_grouping(schema->value, grouping->value);
  });
}

kpg_status kpg_grouping_check(const kpg_schema* schema, const kpg_grouping* grouping, int restricted,
                              char** report_json, int* ok) {
  return guarded([&] {
    need(schema, "schema");
    need(grouping, "grouping");
    auto mode = restricted ? kpg::GroupingMode::Restricted : kpg::GroupingMode::Unrestricted;
    kpg::ValidityReport r = kpg::check_grouping(schema->value, grouping->value, mode);
    if (ok != nullptr) *ok = r.ok() ? 1 : 0;
    emit(report_json, kpg::validity_to_json(r));
  });
}

void kpg_grouping_free(kpg_grouping* grouping) { delete grouping; }

// Tensors -------------------------------------------------------------------

kpg_status kpg_tensor_read(const char* path, kpg_tensor** out) {
  return guarded([&] {
    need(path, "path");
    make_handle(out, kpg::read_tensor(path));
  });
}

kpg_status kpg_tensor_create(const size_t* shape, size_t rank, const double* values, int is_f64,
                             kpg_tensor** out) {
  return guarded([&] {
    if (rank > 0) need(shape, "shape");
    std::vector<std::size_t> dims(shape, shape + rank);
    std::size_t count = 1;
    for (std::size_t d : dims) count *= d;
    if (count > 0) need(values, "values");
    std::vector<double> data(values, values + count);
    make_handle(out, kpg::Tensor(std::move(dims), std::move(data),
                                 is_f64 ? kpg::Dtype::F64 : kpg::Dtype::F32));
  });
}

kpg_status kpg_tensor_write(const kpg_tensor* tensor, const char* path) {
  return guarded([&] {
    need(tensor, "tensor");
    need(path, "path");
    kpg::write_tensor(tensor->value, path);
  });
}

size_t kpg_tensor_rank(const kpg_tensor* tensor) { return tensor == nullptr ? 0 : tensor->value.rank(); }

size_t kpg_tensor_shape(const kpg_tensor* tensor, size_t* dims, size_t capacity) {
  if (tensor == nullptr) return 0;
  const auto& shape = tensor->value.shape();
  if (dims != nullptr) std::copy_n(shape.begin(), std::min(capacity, shape.size()), dims);
  return shape.size();
}

size_t kpg_tensor_size(const kpg_tensor* tensor) { return tensor == nullptr ? 0 : tensor->value.size(); }

const double* kpg_tensor_values(const kpg_tensor* tensor) {
  return tensor == nullptr ? nullptr : tensor->value.data().data();
}

void kpg_tensor_free(kpg_tensor* tensor) { delete tensor; }

// Matrices ------------------------------------------------------------------

kpg_status kpg_matrix_from_annotations(const kpg_schema* schema, const char* annotations_path,
                                       int anti, kpg_matrix** out) {
  return guarded([&] {
    need(schema, "schema");
    need(annotations_path, "annotations_path");
    kpg::AnnotationSet ann = kpg::read_annotations(annotations_path, schema->value);
    std::vector<kpg::Vec2> means = kpg::mean_offsets(ann, schema->value);
    make_handle(out, anti ? kpg::anti_offsets_distance(means) : kpg::offsets_distance(means));
  });
}

kpg_status kpg_matrix_from_weights(const kpg_schema* schema, const kpg_tensor* weights, kpg_head head,
                                   const kpg_tensor* bias, kpg_matrix** out) {
  return guarded([&] {
    need(schema, "schema");
    need(weights, "weights");
    make_handle(out, kpg::conv_weight_distance(weights->value, to_head(head), schema->value,
                                               bias == nullptr ? nullptr : &bias->value));
  });
}

kpg_status kpg_matrix_from_values(size_t n, const double* values, kpg_matrix** out) {
  return guarded([&] {
    need(values, "values");
    std::vector<double> v(values, values + n * n);
    make_handle(out, kpg::DissimilarityMatrix::from_values(n, std::move(v)));
  });
}

kpg_status kpg_matrix_restrict(kpg_matrix* matrix, const kpg_schema* schema) {
  return guarded([&] {
    need(matrix, "matrix");
    need(schema, "schema");
    matrix->value = kpg::apply_restrictions(std::move(matrix->value), schema->value);
  });
}

size_t kpg_matrix_size(const kpg_matrix* matrix) { return matrix == nullptr ? 0 : matrix->value.n(); }

double kpg_matrix_at(const kpg_matrix* matrix, size_t i, size_t j) {
  if (matrix == nullptr || i >= matrix->value.n() || j >= matrix->value.n()) return 0.0;
  return matrix->value.at(i, j);
}

int kpg_matrix_is_restricted(const kpg_matrix* matrix, size_t i, size_t j) {
  if (matrix == nullptr || i >= matrix->value.n() || j >= matrix->value.n()) return 0;
  return matrix->value.restricted(i, j) ? 1 : 0;
}

kpg_status kpg_matrix_to_tensor(const kpg_matrix* matrix, kpg_tensor** out) {
  return guarded([&] {
    need(matrix, "matrix");
    make_handle(out, matrix->value.to_tensor());
  });
}

void kpg_matrix_free(kpg_matrix* matrix) { delete matrix; }

// Dendrograms ---------------------------------------------------------------

kpg_status kpg_dendrogram_build(const kpg_matrix* matrix, kpg_linkage linkage, kpg_dendrogram** out) {
  return guarded([&] {
    need(matrix, "matrix");
    make_handle(out, kpg::agglomerate(matrix->value, to_linkage(linkage)));
  });
}

kpg_status kpg_dendrogram_read(const char* path, kpg_dendrogram** out) {
  return guarded([&] {
    need(path, "path");
    make_handle(out, kpg::read_dendrogram(path));
  });
}

kpg_status kpg_dendrogram_write(const kpg_dendrogram* dendrogram, const char* path) {
  return guarded([&] {
    need(dendrogram, "dendrogram");
    need(path, "path");
    kpg::write_dendrogram(dendrogram->value, path);
  });
}

kpg_status kpg_dendrogram_to_json(const kpg_dendrogram* dendrogram, char** out) {
  return guarded([&] {
    need(dendrogram, "dendrogram");
    need(out, "out");
    emit(out, kpg::dendrogram_to_json(dendrogram->value));
  });
}

size_t kpg_dendrogram_leaves(const kpg_dendrogram* dendrogram) {
  return dendrogram == nullptr ? 0 : dendrogram->value.n;
}

kpg_status kpg_dendrogram_cut(const kpg_dendrogram* dendrogram, int m, int* labels, size_t n) {
  return guarded([&] {
    need(dendrogram, "dendrogram");
    write_labels(kpg::cut(dendrogram->value, m), labels, n);
  });
}

kpg_status kpg_dendrogram_restricted_cut(const kpg_dendrogram* dendrogram, int m,
                                         const kpg_schema* schema, int* labels, size_t n) {
  return guarded([&] {
    need(dendrogram, "dendrogram");
    need(schema, "schema");
    write_labels(kpg::restricted_cut(dendrogram->value, m, schema->value), labels, n);
  });
}

void kpg_dendrogram_free(kpg_dendrogram* dendrogram) { delete dendrogram; }

// Analysis ------------------------------------------------------------------

kpg_status kpg_adjusted_rand_index(const int* labels_a, const int* labels_b, size_t n, double* out) {
  return guarded([&] {
    need(labels_a, "labels_a");
    need(labels_b, "labels_b");
    need(out, "out");
    *out = kpg::adjusted_rand_index(std::span<const int>(labels_a, n), std::span<const int>(labels_b, n));
  });
}

kpg_status kpg_consensus(const kpg_grouping* a, const kpg_grouping* b, kpg_format format, char** out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    check_format(format);
    kpg::ConsensusReport r = kpg::compare_groupings(a->value, b->value);
    emit(out, format == KPG_FORMAT_JSON ? kpg::consensus_to_json(r) : kpg::consensus_to_text(r));
  });
}

kpg_status kpg_consensus_curve(const kpg_dendrogram* a, const kpg_dendrogram* b, const char* counts,
                               kpg_format format, char** out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(counts, "counts");
    need(out, "out");
    check_format(format);
    std::vector<int> c = kpg::parse_counts(counts);
    auto curve = kpg::consensus_curve(a->value, b->value, c);
    emit(out, format == KPG_FORMAT_JSON ? kpg::curve_to_json(curve) : kpg::curve_to_text(curve));
  });
}

kpg_status kpg_analyze(const kpg_schema* schema, const kpg_grouping* grouping, int restricted,
                       const kpg_dendrogram* reg, const kpg_dendrogram* heat, const char* counts_reg,
                       const char* counts_heat, kpg_format format, char** out, int* ok) {
  return guarded([&] {
    need(schema, "schema");
    need(grouping, "grouping");
    need(out, "out");
    check_format(format);
    auto mode = restricted ? kpg::GroupingMode::Restricted : kpg::GroupingMode::Unrestricted;
    kpg::AnalysisReport r;
    r.validity = kpg::check_grouping(schema->value, grouping->value, mode);
    r.reg = kpg::inconsistent_pairs(schema->value, grouping->value.reg_labels);
    r.heat = kpg::inconsistent_pairs(schema->value, grouping->value.heat_labels);
    if ((reg == nullptr) != (heat == nullptr)) {
      kpg::fail("the ambiguity matrix needs both a regression and a heatmap dendrogram");
    }
    if (reg != nullptr) {
      need(counts_reg, "counts_reg");
      need(counts_heat, "counts_heat");
      std::vector<int> cr = kpg::parse_counts(counts_reg), ch = kpg::parse_counts(counts_heat);
      r.matrix = kpg::ambiguity_matrix(schema->value, reg->value, heat->value, cr, ch);
      r.has_matrix = true;
    }
    if (ok != nullptr) *ok = r.validity.ok() ? 1 : 0;
    emit(out, format == KPG_FORMAT_JSON ? kpg::analysis_to_json(r) : kpg::analysis_to_text(r));
  });
}

// Budget --------------------------------------------------------------------

kpg_status kpg_head_channels(int64_t classes, int64_t m_reg, int64_t m_heat, kpg_head_budget* out) {
  return guarded([&] {
    need(out, "out");
    kpg::HeadBudget b = kpg::head_channels(classes, m_reg, m_heat);
    *out = {b.center_heatmap, b.center_offset, b.object_size, b.kp_regression,
            b.kp_heatmap,     b.kp_offset,     b.total};
  });
}

kpg_status kpg_output_tensor_bytes(int64_t input_h, int64_t input_w, int64_t channels,
                                   int64_t bytes_per_value, int64_t stride, int64_t* bytes,
                                   double* mib) {
  return guarded([&] {
    kpg::TensorBytes t = kpg::output_tensor_bytes(input_h, input_w, channels, bytes_per_value, stride);
    if (bytes != nullptr) *bytes = t.bytes;
    if (mib != nullptr) *mib = t.mib;
  });
}

kpg_status kpg_output_share_percent(double output_mib, double weights_mib, double activations_mib,
                                    int64_t input_h, int64_t input_w, double* percent) {
  return guarded([&] {
    need(percent, "percent");
    *percent = kpg::output_share_percent(output_mib, weights_mib, activations_mib, input_h, input_w);
  });
}

kpg_status kpg_budget_report(const kpg_budget_request* request, const char* profiles_path,
                             kpg_format format, char** out) {
  return guarded([&] {
    need(request, "request");
    need(out, "out");
    check_format(format);
    kpg::BudgetRequest r;
    r.classes = request->classes;
    r.keypoints = request->keypoints;
    r.m_reg = request->m_reg;
    r.m_heat = request->m_heat;
    if (request->num_resolutions > 0) {
      need(request->resolutions, "resolutions");
      r.resolutions.assign(request->resolutions, request->resolutions + request->num_resolutions);
    }
    if (request->bytes_per_value != 0) r.bytes_per_value = request->bytes_per_value;
    if (request->stride != 0) r.stride = request->stride;
    auto profiles = profiles_path == nullptr ? kpg::reference_encoder_profiles()
                                             : kpg::read_encoder_profiles(profiles_path);
    kpg::BudgetReport report = kpg::budget_report(r, profiles);
    emit(out, format == KPG_FORMAT_JSON ? kpg::budget_to_json(report) : kpg::budget_to_text(report));
  });
}

kpg_status kpg_init_weights(const kpg_tensor* weights, const kpg_grouping* grouping, kpg_head head,
                            kpg_tensor** out, char** map_json) {
  return guarded([&] {
    need(weights, "weights");
    need(grouping, "grouping");
    need(out, "out");
    kpg::Head h = to_head(head);
    kpg::WeightInitMap map = kpg::average_weights(weights->value, grouping->value.labels(h), h);
    emit(map_json, kpg::weight_map_to_json(map));
    make_handle(out, std::move(map.weights));
  });
}

// Decoding ------------------------------------------------------------------

void kpg_decode_options_default(kpg_decode_options* options) {
  if (options == nullptr) return;
  kpg::DecodeOptions d;
  options->refine = d.refine == kpg::RefineMode::Base ? KPG_REFINE_BASE : KPG_REFINE_RESCORE;
  options->sigma = d.sigma;
  options->top_k = d.top_k;
  options->center_threshold = d.center_threshold;
  options->kp_threshold = d.kp_threshold;
}

kpg_status kpg_decode_manifest(const char* manifest_path, const kpg_schema* schema,
                               const kpg_grouping* grouping, const kpg_decode_options* options,
                               int jobs, char** json, size_t* num_detections) {
  return guarded([&] {
    need(manifest_path, "manifest_path");
    kpg::DecodeOptions o = to_options(options);
    kpg::DecodeManifest m = kpg::read_manifest(manifest_path);
    kpg::KeypointSchema s = schema != nullptr ? schema->value : kpg::read_schema(m.schema);
    kpg::Grouping g = grouping != nullptr ? grouping->value : kpg::read_grouping(m.grouping);
    auto images = kpg::decode_images(m, s, g, o, jobs);
    if (num_detections != nullptr) {
      std::size_t total = 0;
      for (const auto& img : images) total += img.second.size();
      *num_detections = total;
    }
    emit(json, kpg::detections_to_json(images, m.stride));
  });
}

kpg_status kpg_sweep_sigma(const char* manifest_path, const kpg_grouping* grouping, const double* sigmas,
                           size_t num_sigmas, const kpg_decode_options* options, double pck_threshold,
                           int jobs, kpg_format format, char** out, double* best_sigma) {
  return guarded([&] {
    need(manifest_path, "manifest_path");
    if (num_sigmas > 0) need(sigmas, "sigmas");
    check_format(format);
    kpg::DecodeOptions o = to_options(options);
    kpg::DecodeManifest m = kpg::read_manifest(manifest_path);
    kpg::KeypointSchema s = kpg::read_schema(m.schema);
    kpg::Grouping g = grouping != nullptr ? grouping->value : kpg::read_grouping(m.grouping);
    auto scenes = kpg::load_labeled_scenes(m, jobs);
    kpg::SigmaSweep sweep = kpg::sweep_sigma(scenes, s, g, std::span<const double>(sigmas, num_sigmas),
                                             o, pck_threshold);
    if (best_sigma != nullptr) *best_sigma = sweep.best_sigma;
    emit(out, format == KPG_FORMAT_JSON ? kpg::sweep_to_json(sweep) : kpg::sweep_to_text(sweep));
  });
}

// Synthetic scenes ----------------------------------------------------------

kpg_status kpg_synth_from_file(const kpg_schema* schema, const kpg_grouping* grouping,
                               const char* scene_path, const char* out_dir, char** manifest_path) {
  return guarded([&] {
    need(schema, "schema");
    need(grouping, "grouping");
    need(scene_path, "scene_path");
    need(out_dir, "out_dir");
    auto scenes = kpg::read_scenes(scene_path);
    emit(manifest_path, kpg::write_scene_set(scenes, schema->value, grouping->value, out_dir));
  });
}

kpg_status kpg_synth_random(const kpg_schema* schema, const kpg_grouping* grouping, size_t count,
                            uint64_t seed, size_t grid, const char* out_dir, char** manifest_path) {
  return guarded([&] {
    need(schema, "schema");
    need(grouping, "grouping");
    need(out_dir, "out_dir");
    if (count == 0) kpg::fail("scene count must be at least 1");
    kpg::RandomSceneParams params;
    if (grid != 0) params.grid = grid;
    std::mt19937_64 rng(seed);
    std::vector<kpg::SceneSpec> scenes;
    for (std::size_t i = 0; i < count; ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "scene_%04zu", i);
      scenes.push_back(kpg::random_scene(schema->value, grouping->value, rng, params, id));
    }
    emit(manifest_path, kpg::write_scene_set(scenes, schema->value, grouping->value, out_dir));
  });
}

kpg_status kpg_synth_closest_peak(double distractor_amplitude, const char* out_dir, char** manifest_path) {
  return guarded([&] {
    need(out_dir, "out_dir");
    kpg::ClosestPeakCase c = kpg::closest_peak_case();
    kpg::SceneSpec scene =
        distractor_amplitude > 0 ? c.with_distractor_amplitude(distractor_amplitude) : c.scene;
    emit(manifest_path, kpg::write_scene_set({scene}, c.schema, c.grouping, out_dir));
  });
}

}  // extern "C"
