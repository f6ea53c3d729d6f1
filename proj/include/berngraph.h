/* C interface to the berngraph engine.
 *
 * All functions return BG_OK (0) on success; on failure they return an error
 * code and leave a human-readable message retrievable with bg_last_error()
 * (thread-local, valid until the next failing call on the same thread).
 *
 * Workflow functions take an optional key=value config file plus an optional
 * override block in the same format (newline-separated key=value lines).
 * Precedence: overrides > file > built-in defaults. The resolved config is
 * echoed into the output directory for exact replay.
 */
#ifndef BERNGRAPH_H
#define BERNGRAPH_H

#include <stdint.h>

#if defined(_WIN32)
#define BG_API __declspec(dllexport)
#else
#define BG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bg_status {
    BG_OK = 0,
    BG_ERR_IO = 1,       /* file missing / unreadable / unwritable */
    BG_ERR_PARSE = 2,    /* malformed manifest, config, CSV or checkpoint */
    BG_ERR_INVALID = 3,  /* invalid argument or configuration value */
    BG_ERR_STATE = 4,    /* operation not valid for the given inputs */
    BG_ERR_INTERNAL = 5  /* unexpected failure */
} bg_status;

BG_API const char* bg_version(void);
BG_API const char* bg_last_error(void);

/* ---- cohort handle ---- */

typedef struct bg_cohort bg_cohort;

BG_API bg_status bg_cohort_open(const char* manifest_path, bg_cohort** out);
BG_API void bg_cohort_close(bg_cohort* cohort);
BG_API bg_status bg_cohort_dims(const bg_cohort* cohort, int64_t* n_patients,
                                int64_t* n_events, int64_t* n_drugs);

#define BG_MATRIX_EVENTS 0
#define BG_MATRIX_LABELS 1
BG_API bg_status bg_cohort_sparsity(const bg_cohort* cohort, int matrix, double* out);

/* ---- workflows ---- */

/* Writes cohort.json + events.csv + labels.csv + ground_truth.json. */
BG_API bg_status bg_run_simulate(const char* config_path, const char* overrides,
                                 const char* out_dir);

/* Statistics file for the configured split (see docs for the format). */
BG_API bg_status bg_run_stats(const bg_cohort* cohort, const char* config_path,
                              const char* overrides, const char* out_path);

/* One patient graph as JSON; the row comes from the `row` config key. */
BG_API bg_status bg_run_graph_dump(const bg_cohort* cohort, const char* config_path,
                                   const char* overrides, const char* out_path);

/* Trains the configured model (gnn | lr | mlp); writes checkpoint.bin,
 * history.csv and resolved.cfg into out_dir. */
BG_API bg_status bg_run_train(const bg_cohort* cohort, const char* config_path,
                              const char* overrides, const char* out_dir);

/* Bootstrap evaluation of a checkpoint on the configured test split;
 * writes metrics.json and metrics.csv. */
BG_API bg_status bg_run_eval(const bg_cohort* cohort, const char* checkpoint_path,
                             const char* config_path, const char* overrides,
                             const char* out_dir);

/* Full embedding/backbone grid; writes ablate.csv (one row per arm). */
BG_API bg_status bg_run_ablate(const bg_cohort* cohort, const char* config_path,
                               const char* overrides, const char* out_dir);

/* Per-node activations with a top-k flag plus edge weights, as JSON.
 * Row and k come from the `row` and `top_k` config keys. */
BG_API bg_status bg_run_export_viz(const bg_cohort* cohort, const char* checkpoint_path,
                                   const char* config_path, const char* overrides,
                                   const char* out_path);

#ifdef __cplusplus
}
#endif

#endif /* BERNGRAPH_H */
