/* SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
 * SPDX-License-Identifier: Apache-2.0 */

/* Stable C interface to e2egrec. All functions return an e2eg_status; on
 * failure e2eg_last_error() describes the problem (thread-local, valid until
 * the next call on the same thread). Strings handed out by a handle remain
 * valid until that handle is modified or freed. */

#ifndef E2EGREC_H
#define E2EGREC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define E2EG_API __declspec(dllexport)
#else
#define E2EG_API __attribute__((visibility("default")))
#endif

/* Values double as process exit codes for the command-line tool. */
typedef enum e2eg_status {
  E2EG_OK = 0,
  E2EG_ERR_INVALID_ARGUMENT = 1,
  E2EG_ERR_CONFIG = 2,
  E2EG_ERR_IO = 3,
  E2EG_ERR_CHECK_FAILED = 4,
  E2EG_ERR_UNDEFINED_AUC = 5,
  E2EG_ERR_NUMERIC = 6,
  E2EG_ERR_SHAPE = 7,
  E2EG_ERR_PARSE = 8,
  E2EG_ERR_INTERNAL = 9
} e2eg_status;

typedef struct e2eg_config e2eg_config; /* run configuration */
typedef struct e2eg_report e2eg_report; /* metric report with provenance */

E2EG_API const char* e2eg_version(void);
E2EG_API const char* e2eg_last_error(void);
E2EG_API const char* e2eg_status_name(e2eg_status status);

/* ---- configuration ------------------------------------------------------ */

E2EG_API e2eg_status e2eg_config_new(e2eg_config** out);
/* Parses a key = value document (one pair per line, '#' comments). */
E2EG_API e2eg_status e2eg_config_parse(const char* text, e2eg_config** out);
E2EG_API e2eg_status e2eg_config_load(const char* path, e2eg_config** out);
E2EG_API e2eg_status e2eg_config_set(e2eg_config* cfg, const char* key, const char* value);
E2EG_API e2eg_status e2eg_config_get(const e2eg_config* cfg, const char* key, const char** value);
/* Sorted key = value lines covering every field. */
E2EG_API e2eg_status e2eg_config_canonical(const e2eg_config* cfg, const char** text);
E2EG_API e2eg_status e2eg_config_hash(const e2eg_config* cfg, const char** hex);
E2EG_API void e2eg_config_free(e2eg_config* cfg);

/* ---- data and graph ----------------------------------------------------- */

/* Writes the synthetic stream (history, day logs, features) into out_dir. */
E2EG_API e2eg_status e2eg_gen_data(const e2eg_config* cfg, const char* out_dir);
/* Builds the Swing item graph from a log; num_items 0 infers it from the log. */
E2EG_API e2eg_status e2eg_build_graph(const char* log_path, double alpha, size_t top_k, uint64_t num_items,
                                      const char* out_path, size_t* num_edges);
/* Samples the subgraph for `sources` with the configured sampler and writes a
 * tab-separated dump (hop, dst, src, weight) to out_path. */
E2EG_API e2eg_status e2eg_sample(const char* graph_path, const uint64_t* sources, size_t num_sources,
                                 const e2eg_config* cfg, const char* out_path);

/* ---- training and evaluation ------------------------------------------- */

/* mode: e2e | cascaded | e2e-no-gradnorm | cascaded-naive; NULL keeps the
 * configured train.mode. data_dir is a gen-data output directory. */
E2EG_API e2eg_status e2eg_train(const e2eg_config* cfg, const char* data_dir, const char* graph_path,
                                const char* mode, e2eg_report** out);
/* Generates data and graph in memory from the config, then trains. */
E2EG_API e2eg_status e2eg_run(const e2eg_config* cfg, e2eg_report** out);
/* Writes out_dir/report.txt and out_dir/report.jsonl. */
E2EG_API e2eg_status e2eg_report_write(const e2eg_report* report, const char* out_dir);
E2EG_API e2eg_status e2eg_report_load(const char* jsonl_path, e2eg_report** out);
E2EG_API e2eg_status e2eg_report_text(const e2eg_report* report, const char** text);
E2EG_API size_t e2eg_report_num_days(const e2eg_report* report);
E2EG_API double e2eg_report_day_auc(const e2eg_report* report, size_t day_index);
E2EG_API double e2eg_report_mean_auc(const e2eg_report* report);
/* Paired per-day relative lift table of treatment over baseline. */
E2EG_API e2eg_status e2eg_lift_table(const e2eg_report* treatment, const e2eg_report* baseline,
                                     const char** text);
E2EG_API void e2eg_report_free(e2eg_report* report);

/* ---- verification and sweeps ------------------------------------------- */

/* Runs the gradient-coupling and subspace checks; writes report.txt under
 * out_dir (may be NULL) and returns E2EG_ERR_CHECK_FAILED if any check fails. */
E2EG_API e2eg_status e2eg_verify_theorems(const e2eg_config* cfg, uint64_t seed, const char* out_dir,
                                          const char** text);
/* grid_text: key = v1 | v2 | ... lines. Runs every combination and writes
 * out_dir/trial_NNN/ reports plus out_dir/summary.tsv. */
E2EG_API e2eg_status e2eg_sweep(const e2eg_config* cfg, const char* grid_text, const char* out_dir,
                                const char** summary);

#ifdef __cplusplus
}
#endif

#endif /* E2EGREC_H */
