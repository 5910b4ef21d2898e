/* C API for the structural-break regression engine.
 *
 * All analysis entry points take a JSON options string and return a
 * heap-allocated JSON report that the caller releases with sb_string_free.
 * Functions return SB_OK (0) on success; on failure they return a nonzero
 * code and sb_last_error() describes the problem (thread local).
 */
#ifndef SBREAK_H
#define SBREAK_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define SB_OK 0
#define SB_ERR_CONFIG 2
#define SB_ERR_DATA 3
#define SB_ERR_NUMERIC 4

typedef struct sb_dataset sb_dataset;

/* Last error message for the calling thread; empty string if none. */
const char* sb_last_error(void);

/* Releases a string returned by any sb_* function. NULL is a no-op. */
void sb_string_free(char* s);

/* --- datasets ----------------------------------------------------------- */

/* Loads a CSV file. schema_json: {"date_column":bool, "intercept":bool,
 * "shift_columns":[...], "response_column":"y"}; pass NULL or "" for
 * defaults. */
int sb_dataset_read_csv(const char* path, const char* schema_json,
                        sb_dataset** out);

/* Builds a dataset from dense column-major-free row arrays: y (length T),
 * X (T*d_x, row major), R (d_x*d_z, row major). */
int sb_dataset_create(const double* y, const double* X, const double* R, int T,
                      int d_x, int d_z, sb_dataset** out);

int sb_dataset_write_csv(const sb_dataset* ds, const char* path);

int sb_dataset_dims(const sb_dataset* ds, int* T, int* d_x, int* d_z);

void sb_dataset_free(sb_dataset* ds);

/* --- analyses ------------------------------------------------------------ */

/* Full fit: least-squares pipeline (break estimate, slope CIs, simulated
 * break-limit CI, inverted-LR set) and exact Bayesian pipeline (tau
 * posterior, slope credible intervals, HPD set). */
int sb_fit(const sb_dataset* ds, const char* options_json, char** report_json);

/* Marginal break-date posterior only; truth_json (optional, may be NULL)
 * adds the large-sample profile comparison. */
int sb_posterior(const sb_dataset* ds, const char* options_json,
                 const char* truth_json, char** report_json);

/* Monte Carlo study over a list of (T, tau0, delta0) cells. */
int sb_simulate(const char* options_json, char** report_json);

/* Simulates the two-sided break limit process and reports its argmax
 * distribution. */
int sb_wstar(const char* config_json, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* SBREAK_H */
