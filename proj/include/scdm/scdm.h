/* C interface to the localization library. Every function that can fail
 * returns an scdm_status; scdm_last_error() holds the message of the most
 * recent failure on the calling thread. Handles are opaque and owned by the
 * caller once returned. */
#ifndef SCDM_SCDM_H
#define SCDM_SCDM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SCDM_API __declspec(dllexport)
#else
#define SCDM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum scdm_status {
  SCDM_OK = 0,
  SCDM_ERROR_INVALID_ARGUMENT = 1,
  SCDM_ERROR_DIMENSION_MISMATCH = 2,
  SCDM_ERROR_NOT_POSITIVE_DEFINITE = 3,
  SCDM_ERROR_RANK_DEFICIENT = 4,
  SCDM_ERROR_ILL_CONDITIONED = 5,
  SCDM_ERROR_NOT_ORTHONORMAL = 6,
  SCDM_ERROR_INFEASIBLE = 7,
  SCDM_ERROR_IO = 8,
  SCDM_ERROR_CORRUPT = 9,
  SCDM_ERROR_INTERNAL = 100
} scdm_status;

#define SCDM_HISTOGRAM_BINS 20

SCDM_API const char* scdm_last_error(void);
SCDM_API const char* scdm_status_name(scdm_status status);
SCDM_API const char* scdm_version(void);

/* Thread count from SCDM_THREADS, or 1 when unset or invalid. */
SCDM_API int scdm_default_threads(void);

/* ---- fields: a grid plus an N x k column-major array ---- */

typedef struct scdm_field scdm_field;

SCDM_API scdm_status scdm_field_load(const char* path, scdm_field** out);
SCDM_API scdm_status scdm_field_save(const scdm_field* field, const char* path);
/* n_weights is 1 (uniform) or N. data holds N * columns values. */
SCDM_API scdm_status scdm_field_create(const uint32_t dims[3], const double spacing[3], const double* weights,
                                       size_t n_weights, const double* data, size_t columns, scdm_field** out);
SCDM_API void scdm_field_free(scdm_field* field);
SCDM_API size_t scdm_field_points(const scdm_field* field);
SCDM_API size_t scdm_field_columns(const scdm_field* field);
SCDM_API void scdm_field_dims(const scdm_field* field, uint32_t dims[3]);
SCDM_API void scdm_field_spacing(const scdm_field* field, double spacing[3]);
SCDM_API const double* scdm_field_data(const scdm_field* field);
/* 1 when both fields live on the same grid with the same weights. */
SCDM_API int scdm_field_same_grid(const scdm_field* a, const scdm_field* b);
/* max |A^T A - I| of the array. */
SCDM_API double scdm_field_orthonormality_defect(const scdm_field* field);

/* ---- synthetic instances ---- */

typedef enum scdm_layout { SCDM_LAYOUT_RANDOM = 0, SCDM_LAYOUT_LATTICE = 1, SCDM_LAYOUT_CLUSTERED = 2 } scdm_layout;
typedef enum scdm_gauge { SCDM_GAUGE_IDENTITY = 0, SCDM_GAUGE_HAAR = 1 } scdm_gauge;

typedef struct scdm_synth_params {
  size_t n_e;
  uint32_t dims[3];
  double spacing[3];
  double decay_rate;
  double min_separation;
  scdm_layout layout;
  scdm_gauge gauge;
  int periodic;
  size_t cluster_size;
  uint64_t seed;
} scdm_synth_params;

SCDM_API void scdm_synth_params_default(scdm_synth_params* params);
/* Any of reference, density and centers (3 * n_e doubles) may be NULL. */
SCDM_API scdm_status scdm_synth_generate(const scdm_synth_params* params, scdm_field** psi, scdm_field** reference,
                                         scdm_field** density, double* centers);
SCDM_API scdm_status scdm_density_compute(const scdm_field* psi, scdm_field** out);

/* ---- localization ---- */

typedef enum scdm_method { SCDM_METHOD_FULL = 0, SCDM_METHOD_RANDOMIZED = 1, SCDM_METHOD_TWO_STAGE = 2 } scdm_method;

typedef struct scdm_run_config {
  scdm_method method;
  double gamma;
  double delta;
  double epsilon;
  double tau;
  uint64_t seed;
  int threads;
  size_t merge_limit;
} scdm_run_config;

typedef struct scdm_timings {
  double sampling;
  double full_qrcp;
  double restricted_qrcp;
  double support;
  double local_qrcp;
  double final_qrcp;
  double gemm;
  double randomized_stage;
  double total;
  double wall;
} scdm_timings;

typedef struct scdm_result scdm_result;

SCDM_API void scdm_run_config_default(scdm_run_config* config);
SCDM_API scdm_status scdm_method_parse(const char* name, scdm_method* out);
/* density may be NULL; it is then computed from psi. */
SCDM_API scdm_status scdm_localize(const scdm_field* psi, const scdm_field* density, const scdm_run_config* config,
                                   scdm_result** out);
SCDM_API void scdm_result_free(scdm_result* result);
SCDM_API const scdm_field* scdm_result_basis(const scdm_result* result);
/* 0-based grid indices in pivot order; returns the count. */
SCDM_API size_t scdm_result_selection(const scdm_result* result, const uint64_t** indices);
SCDM_API void scdm_result_timings(const scdm_result* result, scdm_timings* out);
SCDM_API scdm_status scdm_result_save_selection(const scdm_result* result, const char* path);
SCDM_API scdm_status scdm_result_save_timings(const scdm_result* result, const char* path);

/* ---- metrics ---- */

typedef struct scdm_locality {
  double median;
  double max;
  double tau;
  double bin_edges[SCDM_HISTOGRAM_BINS + 1];
  uint64_t bin_counts[SCDM_HISTOGRAM_BINS];
} scdm_locality;

/* fractions may be NULL or hold one entry per column. */
SCDM_API scdm_status scdm_metric_locality(const scdm_field* phi, double tau, double* fractions, scdm_locality* out);
/* spreads and centers (3 per column) may be NULL. */
SCDM_API scdm_status scdm_metric_spread(const scdm_field* phi, double* spreads, double* centers, double* total);
SCDM_API scdm_status scdm_metric_selection_condition(const scdm_field* psi, const uint64_t* selection, size_t count,
                                                     double* kappa);
SCDM_API scdm_status scdm_metric_span_residual(const scdm_field* psi, const scdm_field* phi, double* residual);
/* permutation[i] is the column of b matched to column i of a. */
SCDM_API scdm_status scdm_metric_match(const scdm_field* a, const scdm_field* b, uint64_t* permutation,
                                       double* correlations);
/* Writes locality.csv, histogram.csv and report.json. psi, selection and
 * compare are optional (NULL / 0). */
SCDM_API scdm_status scdm_metrics_report(const scdm_field* phi, const scdm_field* psi, const uint64_t* selection,
                                         size_t count, const scdm_field* compare, double tau, const char* out_dir);

/* Reads a selection file; free the array with scdm_indices_free. */
SCDM_API scdm_status scdm_selection_load(const char* path, uint64_t** indices, size_t* count);
SCDM_API void scdm_indices_free(uint64_t* indices);

/* ---- benchmark ---- */

typedef struct scdm_bench_config {
  const uint32_t* edges;
  size_t n_edges;
  const size_t* orbitals;
  size_t n_orbitals;
  size_t repeats;
  double decay_rate;
  double min_separation;
  uint64_t seed;
  int threads;
  scdm_run_config run;
} scdm_bench_config;

typedef struct scdm_bench_row {
  uint32_t dims[3];
  size_t points;
  size_t orbitals;
  scdm_method method;
  int threads;
  size_t repeats;
  scdm_timings timings;
  double speedup;
} scdm_bench_row;

typedef void (*scdm_bench_callback)(const scdm_bench_row* row, void* user);

/* edges/orbitals NULL keep the default ladder. */
SCDM_API void scdm_bench_config_default(scdm_bench_config* config);
/* csv_path may be NULL. The callback, if any, sees rows as they finish. */
SCDM_API scdm_status scdm_bench_run(const scdm_bench_config* config, const char* csv_path, scdm_bench_callback callback,
                                    void* user);

#ifdef __cplusplus
}
#endif

#endif /* SCDM_SCDM_H */
