/* C interface to the regmvst shared library.
 *
 * All functions return a regmvst_status; on failure the thread-local message
 * from regmvst_last_error() describes the problem.  Objects returned through
 * out-parameters are owned by the caller and released with the matching
 * _free function; strings with regmvst_string_free.  Configuration crosses
 * the boundary as JSON text (schemas documented in the project README).
 */
#ifndef REGMVST_H
#define REGMVST_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum regmvst_status {
    REGMVST_OK = 0,
    REGMVST_ERR_DOMAIN = 1,      /* invalid argument or out-of-domain input */
    REGMVST_ERR_PARSE = 2,       /* malformed CSV/JSON */
    REGMVST_ERR_DECOMPOSE = 3,   /* a required matrix factorization failed */
    REGMVST_ERR_ESTIMATION = 4,  /* estimation cannot proceed */
    REGMVST_ERR_IO = 5,          /* file system failure */
    REGMVST_ERR_INTERNAL = 6
} regmvst_status;

typedef struct regmvst_dataset regmvst_dataset;
typedef struct regmvst_theta regmvst_theta;
typedef struct regmvst_fit_result regmvst_fit_result;

const char* regmvst_version(void);

/* Thread-local message for the most recent failure on this thread. */
const char* regmvst_last_error(void);

void regmvst_string_free(char* s);

/* ---- datasets ---- */
regmvst_status regmvst_dataset_read_csv(const char* path, regmvst_dataset** out);
regmvst_status regmvst_dataset_parse_csv(const char* text, regmvst_dataset** out);
regmvst_status regmvst_dataset_write_csv(const regmvst_dataset* data, const char* path);
regmvst_status regmvst_dataset_to_csv(const regmvst_dataset* data, char** csv_out);
int64_t regmvst_dataset_num_subjects(const regmvst_dataset* data);
int64_t regmvst_dataset_total_rows(const regmvst_dataset* data);
void regmvst_dataset_free(regmvst_dataset* data);

/* ---- parameter vectors ---- */
regmvst_status regmvst_theta_from_json(const char* json_text, regmvst_theta** out);
regmvst_status regmvst_theta_to_json(const regmvst_theta* theta, char** json_out);
void regmvst_theta_free(regmvst_theta* theta);

/* ---- simulation ----
 * config JSON: {"scheme": 1|3, "n": int, "seed": uint}
 */
regmvst_status regmvst_simulate(const char* config_json, regmvst_dataset** data_out,
                                regmvst_theta** truth_out);

/* ---- fitting ----
 * config JSON (all fields optional unless noted):
 *   {"engine": "ecme"|"pecme"|"adecme", "epsilon": num, "max_iter": int,
 *    "workers": int, "gamma": num, "zeta": num, "seed": uint,
 *    "init": "default"|"random"|"explicit", "init_theta": {...},
 *    "trace_loglik": bool,
 *    "delay": {"kind": "none"|"uniform"|"one-slow", "lo_ms": num,
 *              "hi_ms": num, "base_ms": num, "slow_factor": num}}
 */
regmvst_status regmvst_fit(const regmvst_dataset* data, const char* config_json,
                           regmvst_fit_result** out);
regmvst_status regmvst_fit_result_to_json(const regmvst_fit_result* result, char** json_out);
regmvst_status regmvst_fit_result_timings_csv(const regmvst_fit_result* result, char** csv_out);
regmvst_status regmvst_fit_result_theta(const regmvst_fit_result* result, regmvst_theta** out);
int regmvst_fit_result_converged(const regmvst_fit_result* result);
int64_t regmvst_fit_result_iterations(const regmvst_fit_result* result);
int64_t regmvst_fit_result_comm_rounds(const regmvst_fit_result* result);
void regmvst_fit_result_free(regmvst_fit_result* result);

/* ---- model evaluation ---- */
regmvst_status regmvst_observed_loglik(const regmvst_dataset* data, const regmvst_theta* theta,
                                       double* out);
regmvst_status regmvst_residuals_csv(const regmvst_dataset* data, const regmvst_theta* theta,
                                     char** csv_out);

/* ---- bootstrap ----
 * config JSON: {"b": int, "level": num, "seed": uint, "fit": {fit config}}
 * Emits the interval table as JSON and CSV.
 */
regmvst_status regmvst_bootstrap(const regmvst_dataset* data, const char* config_json,
                                 char** table_json_out, char** table_csv_out);

/* ---- information-matrix analysis ----
 * params JSON: {"n": int, "p": int, "q": int, "x": [n*q row-major],
 *               "beta": [q*p row-major], "a": [p], "sigma": [n*n row-major],
 *               "psi": [p*p row-major], "nu": num}
 * config JSON: {"draws": int, "seed": uint}
 * Output JSON carries I_complete, I_observed (row-major), r_max, s_min.
 */
regmvst_status regmvst_info_analysis(const char* params_json, const char* config_json,
                                     char** result_json_out);

#ifdef __cplusplus
}
#endif

#endif /* REGMVST_H */
