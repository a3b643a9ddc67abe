#ifndef TRIFOCAL_TRIFOCAL_H
#define TRIFOCAL_TRIFOCAL_H

/* C interface to the calibrated trifocal solver library.
 *
 * Every fallible call returns a trf_status; on failure a message is kept per
 * thread and returned by trf_last_error(). Objects are opaque handles that
 * the caller releases with the matching *_free function (NULL is accepted).
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(TRIFOCAL_BUILDING_LIBRARY)
#define TRF_API __declspec(dllexport)
#else
#define TRF_API __declspec(dllimport)
#endif
#else
#define TRF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum trf_status {
  TRF_OK = 0,
  TRF_ERR_INVALID_ARGUMENT = 1,
  TRF_ERR_DEGENERATE = 2,
  TRF_ERR_NUMERICAL = 3,
  TRF_ERR_IO = 4,
  TRF_ERR_PARSE = 5,
  TRF_ERR_UNCERTIFIED = 6,
  TRF_ERR_UNRELIABLE = 7,
  TRF_ERR_INTERNAL = 100
} trf_status;

#define TRF_STAGE_COUNT 7

typedef struct trf_witness trf_witness;
typedef struct trf_instance trf_instance;
typedef struct trf_solution_set trf_solution_set;

typedef void (*trf_log_fn)(const char* line, void* user);

typedef struct trf_options {
  /* path tracking */
  double initial_step;
  double min_step;
  double max_step;
  double newton_tol;
  double refine_tol;
  double divergence_radius;
  double endgame_radius; /* 0 disables the singular endpoint endgame */
  double endgame_tol;
  int max_newton_iterations;
  int max_steps;
  /* witness sets */
  double trace_tol;
  double dedup_tol;
  int initial_edges;
  int max_edges;
  /* filters */
  double membership_tol;
  double physical_tol;
  double rank_ratio;
  double relative_singular_value; /* <= 0: use the rank ratio rule */
  double epipole_tol;
  double solution_dedup_tol;
  double calibration_tol;
  double failure_budget;
  /* execution */
  int threads; /* 0: hardware width */
  trf_log_fn log;
  void* log_user;
  /* Free text copied into the meta block of every file written with these
   * options (NULL: none). */
  const char* run_config;
} trf_options;

TRF_API void trf_default_options(trf_options* opts);
TRF_API const char* trf_last_error(void);
TRF_API const char* trf_status_string(trf_status status);
TRF_API const char* trf_stage_name(int stage);

/* Minimal problems: index 0..65 in degree-table order. */
TRF_API int trf_problem_count(void);
TRF_API trf_status trf_problem_weights(int index, int weights[5], int* expected_degree);
/* Parses "w1,w2,w3,w4,w5"; rejects non-minimal weights. */
TRF_API trf_status trf_parse_problem(const char* text, int weights[5]);

/* Witness sets. locus is "cal", "01", "10" or "00". */
TRF_API trf_status trf_witness_build(const char* locus, uint64_t seed, const trf_options* opts, trf_witness** out);
TRF_API trf_status trf_witness_load(const char* path, trf_witness** out);
TRF_API trf_status trf_witness_save(const trf_witness* w, const trf_options* opts, const char* path);
TRF_API trf_status trf_witness_degree(const trf_witness* w, size_t* degree);
TRF_API size_t trf_witness_point_count(const trf_witness* w);
TRF_API int trf_witness_certified(const trf_witness* w);
TRF_API double trf_witness_trace_deviation(const trf_witness* w);
TRF_API const char* trf_witness_locus(const trf_witness* w);
TRF_API uint64_t trf_witness_seed(const trf_witness* w);
/* Hash of the patches and slice: identifies the cached computation. */
TRF_API const char* trf_witness_content_hash(const trf_witness* w);
/* Re-runs the trace test with the stored chart and updates the certificate. */
TRF_API trf_status trf_witness_trace_test(trf_witness* w, const trf_options* opts, int* passed, double* deviation);

/* Instances. */
TRF_API trf_status trf_instance_random(const int weights[5], uint64_t seed, int complex_data, trf_instance** out);
TRF_API trf_status trf_instance_load(const char* path, trf_instance** out);
TRF_API trf_status trf_instance_save(const trf_instance* inst, const char* path);
TRF_API void trf_instance_free(trf_instance* inst);

/* Solving. The solution set keeps a copy of its instance. */
TRF_API trf_status trf_solve(const trf_witness* w, const trf_instance* inst, uint64_t seed, const trf_options* opts,
                             trf_solution_set** out);
TRF_API trf_status trf_solve_problem(const trf_witness* w, const int weights[5], uint64_t seed,
                                     const trf_options* opts, trf_solution_set** out);
TRF_API trf_status trf_solution_stage_counts(const trf_solution_set* s, size_t counts[TRF_STAGE_COUNT]);
TRF_API size_t trf_solution_count(const trf_solution_set* s);
TRF_API size_t trf_solution_real_count(const trf_solution_set* s);
TRF_API size_t trf_solution_failed_paths(const trf_solution_set* s);
/* Degree-table TSV header and the row of a solved problem. */
TRF_API const char* trf_table_header(void);
TRF_API trf_status trf_solution_table_row(const trf_solution_set* s, char* buffer, size_t size);
TRF_API trf_status trf_solution_save(const trf_solution_set* s, const char* path);
TRF_API trf_status trf_solution_load(const char* path, trf_solution_set** out);
TRF_API void trf_solution_free(trf_solution_set* s);

/* Re-checks physicality, independent centers, multi-view rank drops and
 * epipole avoidance of solution `index` against `inst` (NULL: the stored
 * instance). *passed is 1 or 0; on failure the failing check's name is
 * copied into failed_check when it is non-NULL. */
TRF_API trf_status trf_verify_solution(const trf_solution_set* s, size_t index, const trf_instance* inst,
                                       const trf_options* opts, int* passed, char* failed_check, size_t size);

TRF_API void trf_witness_free(trf_witness* w);

#ifdef __cplusplus
}
#endif

#endif
