/*
 * uwbcal: UWB two-way-ranging simulation and calibration toolkit.
 *
 * C interface of the shared library. All heap objects are opaque handles
 * created and destroyed here; every fallible call returns a uwbcal_status
 * (0 on success) and leaves a human-readable detail string in
 * uwbcal_last_error() (thread-local). Status codes match the CLI exit codes.
 */
#ifndef UWBCAL_H
#define UWBCAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define UWBCAL_API __declspec(dllexport)
#else
#define UWBCAL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
  UWBCAL_OK = 0,
  UWBCAL_ERR_CONFIG = 1,
  UWBCAL_ERR_IO = 2,
  UWBCAL_ERR_FORMAT = 3,
  UWBCAL_ERR_VERSION_MISMATCH = 4,
  UWBCAL_ERR_INSUFFICIENT_TAGS = 5,
  UWBCAL_ERR_MISSING_TRUTH = 6,
  UWBCAL_ERR_RANK_DEFICIENT = 7,
  UWBCAL_ERR_NON_CONVERGENCE = 8,
  UWBCAL_ERR_INSUFFICIENT_DATA = 9,
  UWBCAL_ERR_DEGENERATE_DOMAIN = 10,
  UWBCAL_ERR_DEGENERATE_INTERVAL = 11,
  UWBCAL_ERR_DEGENERATE_SIGMA = 12,
  UWBCAL_ERR_SINGULAR_GEOMETRY = 13,
  UWBCAL_ERR_EMPTY_DATASET = 14,
  UWBCAL_ERR_NO_POSITIVE_ROOT = 15,
  UWBCAL_ERR_USAGE = 16,
  UWBCAL_ERR_INTERNAL = 17
};
typedef int32_t uwbcal_status;

typedef struct uwbcal_config uwbcal_config;
typedef struct uwbcal_dataset uwbcal_dataset;
typedef struct uwbcal_delays uwbcal_delays;
typedef struct uwbcal_powercal uwbcal_powercal;

UWBCAL_API const char* uwbcal_version(void);
UWBCAL_API const char* uwbcal_status_name(uwbcal_status status);
UWBCAL_API const char* uwbcal_last_error(void);

/* ---- configuration ---- */

UWBCAL_API uwbcal_status uwbcal_config_load(const char* path,
                                            uwbcal_config** out);
UWBCAL_API uwbcal_status uwbcal_config_parse(const char* text,
                                             uwbcal_config** out);
UWBCAL_API void uwbcal_config_free(uwbcal_config* cfg);

/* ---- datasets ---- */

/* Simulates a dataset from the config; writes it to out_path when that is
 * non-NULL. The handle and the file carry bit-identical values. */
UWBCAL_API uwbcal_status uwbcal_simulate(const uwbcal_config* cfg,
                                         const char* out_path,
                                         uwbcal_dataset** out);
UWBCAL_API uwbcal_status uwbcal_dataset_load(const char* path,
                                             uwbcal_dataset** out);
UWBCAL_API uwbcal_status uwbcal_dataset_save(const uwbcal_dataset* ds,
                                             const char* path);
UWBCAL_API size_t uwbcal_dataset_size(const uwbcal_dataset* ds);
UWBCAL_API uint64_t uwbcal_dataset_dropped(const uwbcal_dataset* ds);
UWBCAL_API void uwbcal_dataset_free(uwbcal_dataset* ds);

/* ---- antenna-delay calibration ---- */

/* loss is "l2", "cauchy", or NULL to take the config (or default). cfg may
 * be NULL for defaults. out_delays/out_report paths may be NULL. */
UWBCAL_API uwbcal_status uwbcal_calibrate_delays(const uwbcal_dataset* ds,
                                                 const uwbcal_config* cfg,
                                                 const char* loss,
                                                 const char* out_delays,
                                                 const char* out_report,
                                                 uwbcal_delays** out);
UWBCAL_API uwbcal_status uwbcal_delays_load(const char* path,
                                            uwbcal_delays** out);
UWBCAL_API uwbcal_status uwbcal_delays_save(const uwbcal_delays* d,
                                            const char* path);
UWBCAL_API uwbcal_status uwbcal_delays_get(const uwbcal_delays* d,
                                           int32_t tag_id, double* delay_ns);
UWBCAL_API size_t uwbcal_delays_count(const uwbcal_delays* d);
UWBCAL_API void uwbcal_delays_free(uwbcal_delays* d);

/* ---- power-correlated calibration ---- */

UWBCAL_API uwbcal_status uwbcal_calibrate_power(const uwbcal_dataset* ds,
                                                const uwbcal_delays* delays,
                                                const uwbcal_config* cfg,
                                                const char* out_cal,
                                                const char* out_report,
                                                uwbcal_powercal** out);
UWBCAL_API uwbcal_status uwbcal_powercal_load(const char* path,
                                              uwbcal_powercal** out);
UWBCAL_API uwbcal_status uwbcal_powercal_save(const uwbcal_powercal* cal,
                                              const char* path);
UWBCAL_API uwbcal_status uwbcal_powercal_apply(const uwbcal_powercal* cal,
                                               double raw_range_m,
                                               double fpp2_dbm,
                                               double fpp4_dbm,
                                               double* corrected_m,
                                               double* sigma_m);
UWBCAL_API void uwbcal_powercal_free(uwbcal_powercal* cal);

/* ---- dataset correction and evaluation ---- */

UWBCAL_API uwbcal_status uwbcal_apply(const uwbcal_dataset* ds,
                                      const uwbcal_delays* delays,
                                      const uwbcal_powercal* cal,
                                      const char* out_corrected,
                                      const char* out_report);

/* Runs the range-only EKF over scenarios x focus robots x modes and writes
 * the RMSE table. Each scenario is (name, config that generated the
 * dataset, dataset). modes is a comma list of
 * raw|calibrated|calibrated_with_variance, or NULL for all three. delays
 * and cal may be NULL when only raw mode is requested. traj_dir, when
 * non-NULL, receives one trajectory CSV per run. */
UWBCAL_API uwbcal_status uwbcal_localize(
    const char* const* scenario_names, const uwbcal_config* const* configs,
    const uwbcal_dataset* const* datasets, size_t n_scenarios,
    const uwbcal_delays* delays, const uwbcal_powercal* cal,
    const char* modes, const char* out_rmse, const char* traj_dir);

/* Merges previously produced artifact files into one summary. */
UWBCAL_API uwbcal_status uwbcal_report(const char* const* artifact_paths,
                                       size_t n, const char* out_path);

/* ---- protocol and model scalars ---- */

UWBCAL_API double uwbcal_ss_twr_tof(double dt41_ns, double dt32_ns);
UWBCAL_API uwbcal_status uwbcal_ds_twr_tof(double dt41_ns, double dt32_ns,
                                           double dt53_ns, double dt64_ns,
                                           double* tof_ns);
UWBCAL_API uwbcal_status uwbcal_optimal_delay(double T_s, double dt32_s,
                                              double* dt53_s);
UWBCAL_API uwbcal_status uwbcal_chi2_threshold(double confidence, int32_t dof,
                                               double* gamma);
UWBCAL_API double uwbcal_lift(double fpp_dbm, double alpha_dbm);

#ifdef __cplusplus
}
#endif

#endif /* UWBCAL_H */
