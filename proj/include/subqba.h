/* subqba: committee-sampling Byzantine agreement simulator.
 *
 * C interface to the experiment runner. All functions are synchronous and a
 * handle may only be used from one thread at a time. Errors are reported
 * through sq_status plus an optional caller-provided message buffer.
 */
#ifndef SUBQBA_H
#define SUBQBA_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sq_status {
  SQ_OK = 0,
  SQ_ERR_INVALID_ARG = 1,
  SQ_ERR_CONFIG = 2,
  SQ_ERR_IO = 3,
  SQ_ERR_CAPABILITY = 4,
  SQ_ERR_INTERNAL = 5
} sq_status;

typedef struct sq_config sq_config;
typedef struct sq_result sq_result;

const char* sq_version(void);

/* Configuration: defaults match the documented config file format. */
sq_config* sq_config_new(void);
void sq_config_free(sq_config* cfg);

/* Load a flat key = value config file. */
sq_status sq_config_load_file(sq_config* cfg, const char* path, char* errbuf, size_t errlen);

/* Set one field by key, same names as the config file. */
sq_status sq_config_set(sq_config* cfg, const char* key, const char* value, char* errbuf,
                        size_t errlen);

sq_status sq_config_validate(const sq_config* cfg, char* errbuf, size_t errlen);

/* Run the configured Monte Carlo experiment. On success *out owns the
 * per-trial table and aggregate summary. */
sq_status sq_run_experiment(const sq_config* cfg, sq_result** out, char* errbuf, size_t errlen);

void sq_result_free(sq_result* res);

/* Borrowed pointers, valid until sq_result_free. */
const char* sq_result_trials_csv(const sq_result* res);
const char* sq_result_summary_json(const sq_result* res);
const char* sq_result_trace_jsonl(const sq_result* res); /* "" unless trace_seed was set */

uint64_t sq_result_trial_count(const sq_result* res);
uint64_t sq_result_violation_count(const sq_result* res);

/* Write trials.csv, summary.json and (when traced) trace-<seed>.jsonl. */
sq_status sq_result_write(const sq_result* res, const char* out_dir, char* errbuf, size_t errlen);

#ifdef __cplusplus
}
#endif

#endif /* SUBQBA_H */
