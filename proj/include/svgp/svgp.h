#ifndef SVGP_SVGP_H
#define SVGP_SVGP_H

/* Sparse variational GP engine: C interface.
 *
 * Every function returns an svgp_status. On failure the message of the most
 * recent error on the calling thread is available from svgp_last_error().
 * Matrices cross the boundary as row-major double buffers. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SVGP_API __declspec(dllexport)
#else
#define SVGP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum svgp_status {
  SVGP_OK = 0,
  SVGP_ERR_INTERNAL = 1,
  SVGP_ERR_CONFIG = 2,
  SVGP_ERR_VERSION = 3,
  SVGP_ERR_DATA = 4,
  SVGP_ERR_SHAPE = 5,
  SVGP_ERR_ARITY = 6,
  SVGP_ERR_MISSING_LATENT_ROW = 7,
  SVGP_ERR_UNSUPPORTED_MEAN = 8,
  SVGP_ERR_FACTORIZATION = 9,
  SVGP_ERR_NON_FINITE = 10,
  SVGP_ERR_DIVERGENCE = 11,
  SVGP_ERR_INVALID_ARGUMENT = 12
} svgp_status;

typedef struct svgp_dataset svgp_dataset;
typedef struct svgp_model svgp_model;
typedef struct svgp_prediction svgp_prediction;

SVGP_API const char* svgp_last_error(void);
SVGP_API const char* svgp_status_name(svgp_status status);
/* Process exit code for a status: 0 ok, 2 config, 3 data, 4 numerical, 1 other. */
SVGP_API int svgp_exit_code(svgp_status status);
SVGP_API const char* svgp_version(void);

/* Datasets: N rows, x columns x0.., target columns y0.. */
SVGP_API svgp_status svgp_dataset_read(const char* path, svgp_dataset** out);
SVGP_API svgp_status svgp_dataset_write(const svgp_dataset* data, const char* path);
SVGP_API svgp_status svgp_dataset_create(size_t rows, size_t x_cols, size_t y_cols, const double* x,
                                         const double* y, svgp_dataset** out);
SVGP_API size_t svgp_dataset_rows(const svgp_dataset* data);
SVGP_API size_t svgp_dataset_x_cols(const svgp_dataset* data);
SVGP_API size_t svgp_dataset_y_cols(const svgp_dataset* data);
SVGP_API svgp_status svgp_dataset_copy_x(const svgp_dataset* data, double* buf, size_t len);
SVGP_API svgp_status svgp_dataset_copy_y(const svgp_dataset* data, double* buf, size_t len);
SVGP_API void svgp_dataset_free(svgp_dataset* data);

/* kind: "steps", "mixture", "letters" or "prior-draw". params_json is a
 * JSON object overriding the kind's defaults; NULL or "" keeps them. */
SVGP_API svgp_status svgp_gen_data(const char* kind, const char* params_json, uint64_t seed,
                                   svgp_dataset** out);

/* Trains from a JSON run config, writes the checkpoint and the trace CSV.
 * out_path (may be NULL) overrides the checkpoint path; model_out (may be
 * NULL) receives the trained model. */
SVGP_API svgp_status svgp_fit(const char* config_path, const char* out_path, svgp_model** model_out);

SVGP_API svgp_status svgp_model_read(const char* path, svgp_model** out);
SVGP_API svgp_status svgp_model_write(const svgp_model* model, const char* path);
SVGP_API void svgp_model_free(svgp_model* model);
SVGP_API size_t svgp_model_data_dim(const svgp_model* model);
SVGP_API size_t svgp_model_latent_dim(const svgp_model* model);
SVGP_API size_t svgp_model_depth(const svgp_model* model);
/* Width of the predictive mean: target columns the likelihood scores. */
SVGP_API size_t svgp_model_outputs(const svgp_model* model);
SVGP_API size_t svgp_model_param_count(const svgp_model* model);
SVGP_API svgp_status svgp_model_copy_raw(const svgp_model* model, double* buf, size_t len);

typedef struct svgp_predict_options {
  size_t paths; /* Monte Carlo paths through the layers; 0 means 1 */
  uint64_t seed;
  int joint; /* nonzero: sample each path jointly across rows */
} svgp_predict_options;

/* Pooled predictive mean and variance per row of inputs. When targets is
 * not NULL its y columns are scored and a log density per row is kept. */
SVGP_API svgp_status svgp_predict(const svgp_model* model, const svgp_dataset* inputs,
                                  const svgp_dataset* targets, const svgp_predict_options* opts,
                                  svgp_prediction** out);
SVGP_API size_t svgp_prediction_rows(const svgp_prediction* p);
SVGP_API size_t svgp_prediction_outputs(const svgp_prediction* p);
SVGP_API int svgp_prediction_has_density(const svgp_prediction* p);
SVGP_API svgp_status svgp_prediction_copy_mean(const svgp_prediction* p, double* buf, size_t len);
SVGP_API svgp_status svgp_prediction_copy_var(const svgp_prediction* p, double* buf, size_t len);
SVGP_API svgp_status svgp_prediction_copy_log_density(const svgp_prediction* p, double* buf, size_t len);
SVGP_API void svgp_prediction_free(svgp_prediction* p);

typedef struct svgp_objective_options {
  const char* objective; /* "elbo", "deep", "lv" or "iw_lv" */
  size_t samples;        /* importance samples S; 0 means 1 */
  size_t mc;             /* repetitions averaged for the estimate; 0 means 1 */
  uint64_t seed;
  int sampled_latent_kl; /* lv only: nonzero uses ln p(h) - ln q(h) at the draw */
} svgp_objective_options;

/* Mean over repetitions and its standard error (NaN when mc = 1). */
SVGP_API svgp_status svgp_objective(const svgp_model* model, const svgp_dataset* data,
                                    const svgp_objective_options* opts, double* mean, double* se);

/* Minimum level of diagnostics: "error", "warn", "info" or "debug". The
 * SVGP_LOG environment variable sets the initial level. */
SVGP_API svgp_status svgp_set_log_level(const char* level);

#ifdef __cplusplus
}
#endif

#endif
