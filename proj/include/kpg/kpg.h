/* C interface to the keypoint grouping library.
 *
 * Every fallible call returns a kpg_status; on failure kpg_last_error()
 * describes the problem for the calling thread. Strings returned through
 * char** outputs are owned by the caller and released with kpg_free_string.
 * Handles are released with their matching *_free function; passing NULL to a
 * free function is a no-op. Coordinates are feature-grid units unless noted.
 */
#ifndef KPG_KPG_H
#define KPG_KPG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define KPG_API __declspec(dllexport)
#else
#define KPG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kpg_status {
  KPG_OK = 0,
  KPG_ERR_INVALID = 1, /* validation or parse error */
  KPG_ERR_IO = 2,
  KPG_ERR_INTERNAL = 3
} kpg_status;

typedef enum kpg_head { KPG_HEAD_REG = 0, KPG_HEAD_HEAT = 1 } kpg_head;
typedef enum kpg_linkage { KPG_LINKAGE_AVERAGE = 0, KPG_LINKAGE_COMPLETE = 1 } kpg_linkage;
typedef enum kpg_refine { KPG_REFINE_BASE = 0, KPG_REFINE_RESCORE = 1 } kpg_refine;
typedef enum kpg_format { KPG_FORMAT_JSON = 0, KPG_FORMAT_TEXT = 1 } kpg_format;

typedef struct kpg_schema kpg_schema;
typedef struct kpg_grouping kpg_grouping;
typedef struct kpg_tensor kpg_tensor;
typedef struct kpg_matrix kpg_matrix;
typedef struct kpg_dendrogram kpg_dendrogram;

KPG_API const char* kpg_version(void);
/* Message of the last failed call on this thread; "" if none. */
KPG_API const char* kpg_last_error(void);
KPG_API void kpg_free_string(char* text);

/* Schema */
KPG_API kpg_status kpg_schema_read(const char* path, kpg_schema** out);
KPG_API kpg_status kpg_schema_from_json(const char* json, kpg_schema** out);
/* name: "deepfashion2" or "coco-person" */
KPG_API kpg_status kpg_schema_builtin(const char* name, kpg_schema** out);
KPG_API kpg_status kpg_schema_write(const kpg_schema* schema, const char* path);
KPG_API kpg_status kpg_schema_to_json(const kpg_schema* schema, char** out);
KPG_API size_t kpg_schema_num_classes(const kpg_schema* schema);
KPG_API size_t kpg_schema_num_keypoints(const kpg_schema* schema);
KPG_API int kpg_schema_min_restricted_clusters(const kpg_schema* schema);
KPG_API void kpg_schema_free(kpg_schema* schema);

/* Grouping */
KPG_API kpg_status kpg_grouping_read(const char* path, kpg_grouping** out);
KPG_API kpg_status kpg_grouping_identity(const kpg_schema* schema, kpg_grouping** out);
/* Label arrays of length n; ids are renumbered by first occurrence. */
KPG_API kpg_status kpg_grouping_from_labels(const kpg_schema* schema, const int* reg_labels,
                                            const int* heat_labels, size_t n, kpg_grouping** out);
KPG_API kpg_status kpg_grouping_write(const kpg_grouping* grouping, const char* path);
KPG_API kpg_status kpg_grouping_to_json(const kpg_grouping* grouping, char** out);
KPG_API void kpg_grouping_clusters(const kpg_grouping* grouping, int* m_reg, int* m_heat);
KPG_API size_t kpg_grouping_size(const kpg_grouping* grouping);
/* Copies min(n, size) labels of `head` into `labels`. */
KPG_API size_t kpg_grouping_labels(const kpg_grouping* grouping, kpg_head head, int* labels, size_t n);
/* Fingerprint, lengths, label ranges and surjectivity. */
KPG_API kpg_status kpg_grouping_validate(const kpg_schema* schema, const kpg_grouping* grouping);
/* Validity report as JSON; *ok is 1 when the grouping passes the chosen mode. */
KPG_API kpg_status kpg_grouping_check(const kpg_schema* schema, const kpg_grouping* grouping,
                                      int restricted, char** report_json, int* ok);
KPG_API void kpg_grouping_free(kpg_grouping* grouping);

/* Tensors (NPY v1.0, f32/f64, C order) */
KPG_API kpg_status kpg_tensor_read(const char* path, kpg_tensor** out);
KPG_API kpg_status kpg_tensor_create(const size_t* shape, size_t rank, const double* values,
                                     int is_f64, kpg_tensor** out);
KPG_API kpg_status kpg_tensor_write(const kpg_tensor* tensor, const char* path);
KPG_API size_t kpg_tensor_rank(const kpg_tensor* tensor);
/* Copies min(capacity, rank) dimensions; returns the rank. */
KPG_API size_t kpg_tensor_shape(const kpg_tensor* tensor, size_t* dims, size_t capacity);
KPG_API size_t kpg_tensor_size(const kpg_tensor* tensor);
KPG_API const double* kpg_tensor_values(const kpg_tensor* tensor);
KPG_API void kpg_tensor_free(kpg_tensor* tensor);

/* Dissimilarity matrices */
/* Mean bbox-normalised offsets from a COCO-style annotation file; anti != 0
 * negates the distances. */
KPG_API kpg_status kpg_matrix_from_annotations(const kpg_schema* schema, const char* annotations_path,
                                               int anti, kpg_matrix** out);
/* Last-layer weights: n rows (heat) or 2n rows (reg). bias may be NULL. */
KPG_API kpg_status kpg_matrix_from_weights(const kpg_schema* schema, const kpg_tensor* weights,
                                           kpg_head head, const kpg_tensor* bias, kpg_matrix** out);
/* Row-major n*n values; must be symmetric with a zero diagonal. */
KPG_API kpg_status kpg_matrix_from_values(size_t n, const double* values, kpg_matrix** out);
/* Same-class entries become 1e6 * (1 + max unrestricted entry). */
KPG_API kpg_status kpg_matrix_restrict(kpg_matrix* matrix, const kpg_schema* schema);
KPG_API size_t kpg_matrix_size(const kpg_matrix* matrix);
KPG_API double kpg_matrix_at(const kpg_matrix* matrix, size_t i, size_t j);
KPG_API int kpg_matrix_is_restricted(const kpg_matrix* matrix, size_t i, size_t j);
KPG_API kpg_status kpg_matrix_to_tensor(const kpg_matrix* matrix, kpg_tensor** out);
KPG_API void kpg_matrix_free(kpg_matrix* matrix);

/* Agglomerative clustering */
KPG_API kpg_status kpg_dendrogram_build(const kpg_matrix* matrix, kpg_linkage linkage,
                                        kpg_dendrogram** out);
KPG_API kpg_status kpg_dendrogram_read(const char* path, kpg_dendrogram** out);
KPG_API kpg_status kpg_dendrogram_write(const kpg_dendrogram* dendrogram, const char* path);
KPG_API kpg_status kpg_dendrogram_to_json(const kpg_dendrogram* dendrogram, char** out);
KPG_API size_t kpg_dendrogram_leaves(const kpg_dendrogram* dendrogram);
/* Writes n labels (n must equal the leaf count) for a cut at m clusters. */
KPG_API kpg_status kpg_dendrogram_cut(const kpg_dendrogram* dendrogram, int m, int* labels, size_t n);
/* As above but fails if the cut merges two keypoints of one class. */
KPG_API kpg_status kpg_dendrogram_restricted_cut(const kpg_dendrogram* dendrogram, int m,
                                                 const kpg_schema* schema, int* labels, size_t n);
KPG_API void kpg_dendrogram_free(kpg_dendrogram* dendrogram);

/* Analysis */
KPG_API kpg_status kpg_adjusted_rand_index(const int* labels_a, const int* labels_b, size_t n,
                                           double* out);
/* Per-head ARI between two groupings. */
KPG_API kpg_status kpg_consensus(const kpg_grouping* a, const kpg_grouping* b, kpg_format format,
                                 char** out);
/* counts: "a,b,c" or "start:stop:step". */
KPG_API kpg_status kpg_consensus_curve(const kpg_dendrogram* a, const kpg_dendrogram* b,
                                       const char* counts, kpg_format format, char** out);
/* Validity and inconsistent pairs; with both dendrograms (else NULL) and both
 * count lists also the ambiguity matrix. *ok follows kpg_grouping_check. */
KPG_API kpg_status kpg_analyze(const kpg_schema* schema, const kpg_grouping* grouping, int restricted,
                               const kpg_dendrogram* reg, const kpg_dendrogram* heat,
                               const char* counts_reg, const char* counts_heat, kpg_format format,
                               char** out, int* ok);

/* Budget */
typedef struct kpg_head_budget {
  int64_t center_heatmap, center_offset, object_size, kp_regression, kp_heatmap, kp_offset, total;
} kpg_head_budget;

KPG_API kpg_status kpg_head_channels(int64_t classes, int64_t m_reg, int64_t m_heat,
                                     kpg_head_budget* out);
/* Bytes of all output maps at input resolution h x w. */
KPG_API kpg_status kpg_output_tensor_bytes(int64_t input_h, int64_t input_w, int64_t channels,
                                           int64_t bytes_per_value, int64_t stride, int64_t* bytes,
                                           double* mib);
KPG_API kpg_status kpg_output_share_percent(double output_mib, double weights_mib,
                                            double activations_mib, int64_t input_h, int64_t input_w,
                                            double* percent);

typedef struct kpg_budget_request {
  int64_t classes;
  int64_t keypoints; /* ungrouped baseline n */
  int64_t m_reg;
  int64_t m_heat;
  const int64_t* resolutions; /* NULL or empty: every profile resolution */
  size_t num_resolutions;
  int64_t bytes_per_value; /* 0: 4 */
  int64_t stride;          /* 0: 4 */
} kpg_budget_request;

/* profiles_path NULL: bundled reference encoder profiles. */
KPG_API kpg_status kpg_budget_report(const kpg_budget_request* request, const char* profiles_path,
                                     kpg_format format, char** out);

/* Weight initialisation: cluster-averaged last-layer weights. map_json may be NULL. */
KPG_API kpg_status kpg_init_weights(const kpg_tensor* weights, const kpg_grouping* grouping,
                                    kpg_head head, kpg_tensor** out, char** map_json);

/* Decoding */
typedef struct kpg_decode_options {
  kpg_refine refine;
  double sigma;
  int top_k;
  double center_threshold;
  double kp_threshold;
} kpg_decode_options;

KPG_API void kpg_decode_options_default(kpg_decode_options* options);

/* Decodes every image of a manifest. schema/grouping override the files named
 * by the manifest when non-NULL. Output JSON is in input-pixel units. */
KPG_API kpg_status kpg_decode_manifest(const char* manifest_path, const kpg_schema* schema,
                                       const kpg_grouping* grouping,
                                       const kpg_decode_options* options, int jobs, char** json,
                                       size_t* num_detections);

/* Rescore-mode sigma selection by PCK over labelled manifest images. */
KPG_API kpg_status kpg_sweep_sigma(const char* manifest_path, const kpg_grouping* grouping,
                                   const double* sigmas, size_t num_sigmas,
                                   const kpg_decode_options* options, double pck_threshold,
                                   int jobs, kpg_format format, char** out, double* best_sigma);

/* Synthetic scenes. Each writes NPY heads, ground truth, schema.json,
 * grouping.json and manifest.json under out_dir and returns the manifest
 * path through manifest_path (may be NULL). */
KPG_API kpg_status kpg_synth_from_file(const kpg_schema* schema, const kpg_grouping* grouping,
                                       const char* scene_path, const char* out_dir,
                                       char** manifest_path);
KPG_API kpg_status kpg_synth_random(const kpg_schema* schema, const kpg_grouping* grouping,
                                    size_t count, uint64_t seed, size_t grid, const char* out_dir,
                                    char** manifest_path);
/* The closest-peak failure case; distractor_amplitude <= 0 keeps the default. */
KPG_API kpg_status kpg_synth_closest_peak(double distractor_amplitude, const char* out_dir,
                                     char** manifest_path);

#ifdef __cplusplus
}
#endif

#endif /* KPG_KPG_H */
