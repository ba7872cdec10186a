#ifndef PAR_H
#define PAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  PAR_STATUS_OK = 0,
  PAR_STATUS_NULL_ARGUMENT = 1,
  PAR_STATUS_INVALID_UTF8 = 2,
  PAR_STATUS_INVALID_ARGUMENT = 3,
  PAR_STATUS_PARSE_ERROR = 4,
  PAR_STATUS_CONFIG_ERROR = 5,
  PAR_STATUS_CORPUS_ERROR = 6,
  PAR_STATUS_SIMILARITY_ERROR = 7,
  PAR_STATUS_PROMPT_ERROR = 8,
  PAR_STATUS_JUDGE_ERROR = 9,
  PAR_STATUS_GATEWAY_ERROR = 10,
  PAR_STATUS_IO_ERROR = 11,
  PAR_STATUS_NOT_FOUND = 12,
  PAR_STATUS_PANIC = 13,
} ParStatus;

typedef enum {
  PAR_CLASSIFICATION_PASS = 0,
  PAR_CLASSIFICATION_PARTIAL_REPAIR = 1,
  PAR_CLASSIFICATION_FAIL = 2,
  PAR_CLASSIFICATION_COMPILE_ERROR = 3,
  PAR_CLASSIFICATION_NO_CODE = 4,
} ParClassification;

/**
 * Analysis results for one C source file.
 */
typedef struct ParFeatures ParFeatures;

/**
 * A pipeline config with its loaded corpus.
 */
typedef struct ParWorkspace ParWorkspace;

/**
 * Component similarity scores; `bt` is read only when `has_bt` is nonzero.
 */
typedef struct {
  double tc;
  double df;
  double ast;
  double bm25;
  double bt;
  int32_t has_bt;
} ParComponentScores;

/**
 * PSM coefficients; `eta` is read only when `has_eta` is nonzero.
 */
typedef struct {
  double alpha;
  double beta;
  double gamma;
  double delta;
  double eta;
  int32_t has_eta;
} ParWeights;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *par_last_error(void);

/**
 * Library version as a static string.
 */
const char *par_version(void);

/**
 * # Safety
 * `s` is null or was returned by this library and not yet freed.
 */
void par_string_free(char *s);

/**
 * Tokenizes, parses and analyses `source` with the bundled identifier list.
 *
 * # Safety
 * `source` is a nul-terminated string; `out` is valid for writes.
 */
ParStatus par_features_compute(const char *source, ParFeatures **out);

/**
 * # Safety
 * `f` is null or was returned by [`par_features_compute`] and not yet freed.
 */
void par_features_free(ParFeatures *f);

/**
 * Number of anonymized tokens, or 0 for a null handle.
 *
 * # Safety
 * `f` is null or a live handle.
 */
size_t par_features_token_count(const ParFeatures *f);

/**
 * Number of subtrees (one per internal syntax node), or 0 for a null handle.
 *
 * # Safety
 * `f` is null or a live handle.
 */
size_t par_features_subtree_count(const ParFeatures *f);

/**
 * Number of def-use edges, or 0 for a null handle.
 *
 * # Safety
 * `f` is null or a live handle.
 */
size_t par_features_dataflow_count(const ParFeatures *f);

/**
 * Share of the buggy program's subtrees found in the peer.
 *
 * # Safety
 * Both handles are live; `out` is valid for writes.
 */
ParStatus par_score_ast(const ParFeatures *buggy, const ParFeatures *peer, double *out);

/**
 * Share of the buggy program's def-use edges found in the peer.
 *
 * # Safety
 * Both handles are live; `out` is valid for writes.
 */
ParStatus par_score_df(const ParFeatures *buggy, const ParFeatures *peer, double *out);

/**
 * Test-case overlap of two pass vectors written as bit strings like `"10110"`.
 *
 * # Safety
 * `a` and `b` are nul-terminated strings; `out` is valid for writes.
 */
ParStatus par_score_tc(const char *a, const char *b, double *out);

/**
 * Weighted PSM score.
 *
 * # Safety
 * `scores` and `weights` point to initialized structs; `out` is valid for writes.
 */
ParStatus par_psm(const ParComponentScores *scores, const ParWeights *weights, double *out);

/**
 * Classifies a candidate's pass vector against the buggy program's.
 *
 * # Safety
 * `baseline` and `candidate` are nul-terminated strings; `out` is valid for writes.
 */
ParStatus par_classify(const char *baseline, const char *candidate, ParClassification *out);

/**
 * Loads a TOML pipeline config and its corpus.
 *
 * # Safety
 * `config_path` is a nul-terminated string; `out` is valid for writes.
 */
ParStatus par_workspace_open(const char *config_path, ParWorkspace **out);

/**
 * # Safety
 * `w` is null or was returned by [`par_workspace_open`] and not yet freed.
 */
void par_workspace_free(ParWorkspace *w);

/**
 * Number of submissions in the corpus, or 0 for a null handle.
 *
 * # Safety
 * `w` is null or a live handle.
 */
size_t par_workspace_submission_count(const ParWorkspace *w);

/**
 * Renders the configured prompt for one submission. `pass_vectors_json` maps
 * submission ids to bit strings; when null, the buggy programs are compiled
 * and run to compute them.
 *
 * # Safety
 * `w` is live; strings are nul-terminated (`pass_vectors_json` may be null);
 * `out` is valid for writes.
 */
ParStatus par_workspace_prompt(const ParWorkspace *w,
                               const char *submission,
                               const char *pass_vectors_json,
                               char **out);

/**
 * Runs the whole pipeline with the configured provider, writes the output
 * tree to the configured directory and returns the metrics as JSON.
 *
 * # Safety
 * `w` is live; `metrics_json` is valid for writes.
 */
ParStatus par_workspace_repair(const ParWorkspace *w, char **metrics_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAR_H */
