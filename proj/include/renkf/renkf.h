/*
 * C interface to the renkf data-assimilation library.
 *
 * Every function returns a renkf_status. On failure a description of the
 * most recent error on the calling thread is available from
 * renkf_last_error(). Objects are opaque handles created by *_create,
 * *_parse, *_load or *_preset functions and released with the matching
 * *_free function; passing NULL to a *_free function is a no-op.
 *
 * Matrices are passed as dense row-major arrays of doubles.
 */
#ifndef RENKF_H
#define RENKF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(RENKF_BUILDING_LIBRARY)
#define RENKF_API __declspec(dllexport)
#else
#define RENKF_API __declspec(dllimport)
#endif
#else
#define RENKF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum renkf_status {
  RENKF_OK = 0,
  RENKF_ERR_INVALID_INPUT = 1,
  RENKF_ERR_UNDEFINED_RATIO = 2,
  RENKF_ERR_DIVERGENCE = 3,
  RENKF_ERR_UNSUPPORTED = 4,
  RENKF_ERR_CONFIG = 5,
  RENKF_ERR_IO = 6,
  RENKF_ERR_INTERNAL = 7
} renkf_status;

typedef struct renkf_config renkf_config;
typedef struct renkf_model renkf_model;
typedef struct renkf_trajectory renkf_trajectory;
typedef struct renkf_buffer renkf_buffer;

RENKF_API const char* renkf_version(void);
RENKF_API const char* renkf_status_name(renkf_status status);
/* Message of the last failed call on this thread; "" if none. */
RENKF_API const char* renkf_last_error(void);

/* ---- text buffers ------------------------------------------------------ */

RENKF_API const char* renkf_buffer_data(const renkf_buffer* buffer);
RENKF_API size_t renkf_buffer_size(const renkf_buffer* buffer);
RENKF_API void renkf_buffer_free(renkf_buffer* buffer);

/* ---- experiment configurations ----------------------------------------- */

RENKF_API renkf_status renkf_config_parse(const char* text, renkf_config** out);
RENKF_API renkf_status renkf_config_load(const char* path, renkf_config** out);
/* Presets: table2, table5, fig2, fig3, fig4, audit. */
RENKF_API renkf_status renkf_config_preset(const char* name, renkf_config** out);
RENKF_API void renkf_config_free(renkf_config* config);
RENKF_API renkf_status renkf_config_series_count(const renkf_config* config, size_t* out);
/* Overrides the seed of every series. */
RENKF_API renkf_status renkf_config_set_seed(renkf_config* config, uint64_t seed);
RENKF_API renkf_status renkf_config_format(const renkf_config* config, renkf_buffer** out);

/* ---- experiment commands (CSV output) ----------------------------------- */

/* Truth/observation CSV for a single-series configuration without a sweep. */
RENKF_API renkf_status renkf_simulate(const renkf_config* config, renkf_buffer** out);
/* Per-step filter records. truth_csv is a simulate CSV, or NULL to simulate
 * the truth from the configuration. */
RENKF_API renkf_status renkf_filter(const renkf_config* config, const char* truth_csv, renkf_buffer** out);
RENKF_API renkf_status renkf_experiment(const renkf_config* config, unsigned threads, renkf_buffer** out);
/* *passed is set to 1 when every slope window and monotonicity check holds. */
RENKF_API renkf_status renkf_audit_rates(const renkf_config* config, unsigned threads, renkf_buffer** out,
                                         int* passed);

/* ---- models and filters ------------------------------------------------- */

/* A: d x d, H: k x d, Xi: d x d, Gamma: k x k, prior_mean: d, prior_cov: d x d. */
RENKF_API renkf_status renkf_model_create_linear(size_t d, size_t k, const double* A, const double* H,
                                                 const double* Xi, const double* Gamma, const double* prior_mean,
                                                 const double* prior_cov, renkf_model** out);
RENKF_API renkf_status renkf_model_create_lorenz96(size_t d, double forcing, double dt_obs, int substeps, size_t k,
                                                   const double* H, const double* Xi, const double* Gamma,
                                                   const double* prior_mean, const double* prior_cov,
                                                   renkf_model** out);
RENKF_API void renkf_model_free(renkf_model* model);
RENKF_API renkf_status renkf_model_dims(const renkf_model* model, size_t* d, size_t* k);

RENKF_API renkf_status renkf_model_simulate(const renkf_model* model, size_t horizon, uint64_t seed,
                                            renkf_trajectory** out);
RENKF_API void renkf_trajectory_free(renkf_trajectory* traj);
RENKF_API renkf_status renkf_trajectory_horizon(const renkf_trajectory* traj, size_t* out);
/* State u_j for 0 <= j <= horizon, written to d doubles. */
RENKF_API renkf_status renkf_trajectory_state(const renkf_trajectory* traj, size_t j, double* out);
/* Observation y_j for 1 <= j <= horizon, written to k doubles. */
RENKF_API renkf_status renkf_trajectory_observation(const renkf_trajectory* traj, size_t j, double* out);

/* Runs algorithm ("kf", "enkf", "renkf", "renkf-sqrt") on horizon x k
 * observations. Writes horizon x d analysis means and, if covs_out is not
 * NULL, horizon x d x d analysis covariances. ensemble_size and seed are
 * ignored for "kf". */
RENKF_API renkf_status renkf_run(const renkf_model* model, const double* observations, size_t horizon,
                                 const char* algorithm, size_t ensemble_size, uint64_t seed, double* means_out,
                                 double* covs_out);

/* ---- matrix utilities --------------------------------------------------- */

RENKF_API renkf_status renkf_effective_dimension(const double* q, size_t d, double* out);
RENKF_API renkf_status renkf_operator_norm(const double* q, size_t d, double* out);
/* K = C H^T (H C H^T + Gamma)^{-1}; K_out holds d x k doubles. */
RENKF_API renkf_status renkf_kalman_gain(const double* C, const double* H, const double* Gamma, size_t d, size_t k,
                                         double* K_out);

#ifdef __cplusplus
}
#endif

#endif /* RENKF_H */
