/* nst — nonholonomic spacetime transformations of point-mass systems.
 *
 * C interface to the scenario runner.  All entry points are thread-safe as
 * long as each nst_scenario object is confined to one thread; the error
 * message returned by nst_last_error() is thread-local.
 */
#ifndef NST_H
#define NST_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nst_status {
  NST_OK = 0,
  NST_ERR_RUNTIME = 1,    /* numerical failure while running (domain exit, ...) */
  NST_ERR_VALIDATION = 2, /* malformed or inconsistent scenario document */
  NST_ERR_INTERNAL = 3    /* filesystem or environment trouble */
} nst_status;

/* Library version, e.g. "0.1.0". Static storage; do not free. */
const char* nst_version(void);

/* Message for the most recent failure on this thread ("" if none). The
 * pointer stays valid until the next failing call on the same thread. */
const char* nst_last_error(void);

typedef struct nst_scenario nst_scenario;

/* Parse a scenario document. On success stores a handle in *out (release
 * with nst_scenario_free). Validation problems are reported as
 * NST_ERR_VALIDATION with the full issue list in nst_last_error(). */
nst_status nst_scenario_load_string(const char* text, nst_scenario** out);
nst_status nst_scenario_load_file(const char* path, nst_scenario** out);

const char* nst_scenario_name(const nst_scenario* sc);
void nst_scenario_free(nst_scenario* sc);

typedef struct nst_run_options {
  const char* output_dir; /* NULL or "": use the scenario's own output_dir */
  double tolerance_scale; /* <= 0 means 1.0 */
  double grid_scale;      /* <= 0 means 1.0 */
  uint64_t seed;          /* seeds the probe-point generator */
} nst_run_options;

typedef struct nst_run_result {
  int exit_code;      /* 0: every experiment gate passed; 1: some failed */
  char* summary_json; /* machine-readable run summary */
  char* report_text;  /* human-readable per-experiment report */
} nst_run_result;

/* Run every experiment, write CSVs plus summary.json and report.txt to the
 * output directory, and fill *out. Experiment-level numerical failures do
 * not abort the run; they surface as exit_code 1 inside a successful call.
 * Pass opts = NULL for defaults (seed 2024). Release with
 * nst_run_result_free. */
nst_status nst_scenario_run(const nst_scenario* sc, const nst_run_options* opts,
                            nst_run_result* out);

void nst_run_result_free(nst_run_result* res);

#ifdef __cplusplus
}
#endif

#endif /* NST_H */
