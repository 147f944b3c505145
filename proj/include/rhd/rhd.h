#ifndef RHD_H
#define RHD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef RHD_BUILDING
#    define RHD_API __declspec(dllexport)
#  else
#    define RHD_API __declspec(dllimport)
#  endif
#else
#  define RHD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
enum {
  RHD_OK = 0,
  RHD_E_MATH = 1,  /* named invariant, inequality or residual failed */
  RHD_E_INPUT = 2  /* malformed or out-of-range input */
};

typedef struct rhd_model rhd_model;
typedef struct rhd_result rhd_result;

typedef struct rhd_sim_options {
  int has_seed;
  uint64_t seed;
  int has_paths;
  uint64_t paths;
  int has_dt;
  double dt;
  unsigned workers; /* 0: hardware concurrency */
} rhd_sim_options;

RHD_API const char* rhd_version(void);
/* Message of the last failed call on this thread; empty if none. */
RHD_API const char* rhd_last_error(void);

RHD_API int rhd_model_parse(const char* json, rhd_model** out);
RHD_API void rhd_model_free(rhd_model* model);
RHD_API size_t rhd_model_outcomes(const rhd_model* model);
RHD_API size_t rhd_model_horizon(const rhd_model* model);
/* Canonical JSON; the string lives as long as the model. */
RHD_API const char* rhd_model_json(rhd_model* model);

/* Each command stores its outcome in *out (also on status 1 or 2) and returns the status.
   params_json, route and options may be NULL. */
RHD_API int rhd_verify(const rhd_model* model, double tol, rhd_result** out);
RHD_API int rhd_deflate(const rhd_model* model, const char* params_json, const char* route, double tol,
                        rhd_result** out);
RHD_API int rhd_decompose(const rhd_model* model, const char* table_csv, double tol, rhd_result** out);
RHD_API int rhd_simulate(const char* scenario_json, const rhd_sim_options* options, rhd_result** out);

RHD_API int rhd_result_status(const rhd_result* r);
RHD_API const char* rhd_result_message(const rhd_result* r);
RHD_API size_t rhd_result_artifact_count(const rhd_result* r);
RHD_API const char* rhd_result_artifact_name(const rhd_result* r, size_t i);
RHD_API const char* rhd_result_artifact_data(const rhd_result* r, size_t i, size_t* len);
RHD_API void rhd_result_free(rhd_result* r);

#ifdef __cplusplus
}
#endif

#endif
