/*
 * lsad — location-security anomaly detection
 *
 * C interface to the detection library and its Monte Carlo evaluation
 * harness. All objects are opaque handles created and destroyed through
 * these functions; every fallible call returns an lsad_status, with a
 * thread-local message available via lsad_last_error().
 */
#ifndef LSAD_H
#define LSAD_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lsad_status {
    LSAD_OK = 0,
    LSAD_ERR_ARGUMENT = 1,   /* bad pointer, size, or enum value */
    LSAD_ERR_DEGENERATE = 2, /* window too degenerate for ML fitting */
    LSAD_ERR_CONFIG = 3,     /* malformed config/scenario input */
    LSAD_ERR_IO = 4,         /* file could not be read or written */
    LSAD_ERR_FAULT = 5       /* internal failure */
} lsad_status;

typedef struct lsad_window lsad_window;
typedef struct lsad_scenario lsad_scenario;
typedef struct lsad_outcome lsad_outcome;
typedef struct lsad_result lsad_result; /* tabular harness output */

/* Message describing the most recent failure on this thread. */
const char* lsad_last_error(void);

/* ---- measurement windows ------------------------------------------------ */

/* data is column-major: K measurement vectors of length N back to back. */
lsad_status lsad_window_create(const double* data, int n_dims, int n_samples,
                               lsad_window** out);
void lsad_window_free(lsad_window* w);
int lsad_window_dims(const lsad_window* w);
int lsad_window_samples(const lsad_window* w);

/* ---- scenarios ----------------------------------------------------------- */

lsad_status lsad_scenario_load(const char* path, lsad_scenario** out);
lsad_status lsad_scenario_parse(const char* text, lsad_scenario** out);
void lsad_scenario_free(lsad_scenario* s);

/* Seeded draw; identical (scenario, K, seed, trial) reproduce the window. */
lsad_status lsad_scenario_generate(const lsad_scenario* s, int n_samples,
                                   uint64_t seed, uint64_t trial, lsad_window** out);

/* ---- detectors ------------------------------------------------------------
 * Detector ids: "nlj-um", "nlj-cm", "nlj-lvm", "sp-um", "sp-cm", "sp-lvm".
 * omega0_lo/omega0_hi select the change-point search range (0/0 = default).
 * threshold may be NaN when only the statistic is wanted.
 */
typedef struct lsad_detect_opts {
    int omega0_lo;
    int omega0_hi;
    int em_iters;           /* 0 = default (10) */
    int cm_paper_mean;      /* nonzero: one-shot closed-form mean estimate */
} lsad_detect_opts;

lsad_status lsad_detect(const char* detector, const lsad_window* w,
                        const lsad_detect_opts* opts, double threshold,
                        lsad_outcome** out);
void lsad_outcome_free(lsad_outcome* o);
double lsad_outcome_statistic(const lsad_outcome* o);
/* Estimated change point (pre-attack segment length), or 0 when absent. */
int lsad_outcome_changepoint(const lsad_outcome* o);
int lsad_outcome_decision(const lsad_outcome* o);
int lsad_outcome_em_collapsed(const lsad_outcome* o);

/* ---- Monte Carlo harness -------------------------------------------------
 * Results are tables; lsad_result_csv yields the exact CSV text the CLI
 * writes, and numeric columns are reachable by name for programmatic use.
 */
lsad_status lsad_calibrate(const char* detector, const lsad_scenario* h0, int n_samples,
                           double pfa, int trials, uint64_t seed, int threads,
                           const lsad_detect_opts* opts, double* threshold_out,
                           lsad_result** result_out);

lsad_status lsad_validate_pfa(const char* detector, const lsad_scenario* h0,
                              int n_samples, double threshold, int trials, uint64_t seed,
                              int threads, const lsad_detect_opts* opts,
                              double* pfa_out, int* error_trials_out);

/* grid: strictly increasing attack levels in dB. */
lsad_status lsad_pd_curve(const char* detector, const lsad_scenario* attack,
                          int n_samples, const double* grid_db, int grid_len,
                          double threshold, int trials, uint64_t seed, int threads,
                          const lsad_detect_opts* opts, lsad_result** out);

/* mismatch: "mean" or "cov". */
lsad_status lsad_pfa_sweep(const char* detector, const lsad_scenario* h0, int n_samples,
                           const char* mismatch, const double* grid_db, int grid_len,
                           double threshold, int trials, uint64_t seed, int threads,
                           const lsad_detect_opts* opts, lsad_result** out);

lsad_status lsad_em_convergence(const char* detector, const lsad_scenario* scenario,
                                int n_samples, int trials, int max_iters, uint64_t seed,
                                int threads, lsad_result** out);

void lsad_result_free(lsad_result* r);
const char* lsad_result_csv(const lsad_result* r);
int lsad_result_rows(const lsad_result* r);
/* Numeric cell by column name; returns LSAD_ERR_ARGUMENT for unknown names. */
lsad_status lsad_result_cell(const lsad_result* r, int row, const char* column,
                             double* value_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LSAD_H */
