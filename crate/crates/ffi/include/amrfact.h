#ifndef AMRFACT_H
#define AMRFACT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result codes shared by every entry point.
typedef enum AmrfactStatus {
  AMRFACT_STATUS_OK = 0,
  // A required pointer argument was null.
  AMRFACT_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  AMRFACT_STATUS_INVALID_UTF8 = 2,
  // PENMAN text could not be parsed into a valid graph.
  AMRFACT_STATUS_PARSE_ERROR = 3,
  // An argument was out of range or inconsistent.
  AMRFACT_STATUS_INVALID_ARGUMENT = 4,
  // The library failed internally; see the last error message.
  AMRFACT_STATUS_INTERNAL_ERROR = 5,
  // A Rust panic was caught at the boundary.
  AMRFACT_STATUS_PANIC = 6,
} AmrfactStatus;

// Parsed AMR graph. Only ever handled through pointers.
typedef struct AmrfactGraph AmrfactGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread, or null.
// The pointer stays valid until the next call into the library on the
// same thread.
const char *amrfact_last_error(void);

// Library version as a static NUL-terminated string.
const char *amrfact_version(void);

// Parses one PENMAN graph. On success `*out` receives a new handle.
//
// # Safety
// `penman` must be a NUL-terminated string and `out` a valid pointer.
enum AmrfactStatus amrfact_graph_parse(const char *penman, struct AmrfactGraph **out);

// Releases a graph handle. Null is ignored.
//
// # Safety
// `graph` must come from this library and not be used afterwards.
void amrfact_graph_free(struct AmrfactGraph *graph);

// Writes the single-line PENMAN form of `graph` to `*out`.
//
// # Safety
// `graph` must be a live handle and `out` a valid pointer.
enum AmrfactStatus amrfact_graph_to_penman(const struct AmrfactGraph *graph, char **out);

// Number of nodes in `graph`.
//
// # Safety
// `graph` must be a live handle and `out` a valid pointer.
enum AmrfactStatus amrfact_graph_node_count(const struct AmrfactGraph *graph, size_t *out);

// Applies every applicable perturbation to `graph` with the bundled
// lexicons and writes a JSON array of `{family, variant, site, penman}`
// objects to `*out`.
//
// `families` is a comma-separated list of family names, or null for all
// five. `document_text` (nullable) marks values already present in the
// source document, which out-of-article substitution avoids.
//
// # Safety
// Pointer arguments must be valid; strings must be NUL-terminated.
enum AmrfactStatus amrfact_perturb(const struct AmrfactGraph *graph,
                                   const char *families,
                                   const char *document_text,
                                   uint64_t seed,
                                   char **out);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void amrfact_string_free(char *s);

// Filter decision: `*out` is true when `entailment < tau1` and
// `relevance > tau2`.
//
// # Safety
// `out` must be a valid pointer.
enum AmrfactStatus amrfact_filter_decide(double entailment,
                                         double relevance,
                                         double tau1,
                                         double tau2,
                                         bool *out);

// Balanced accuracy of `preds` against `golds` (true = inconsistent).
//
// # Safety
// `preds` and `golds` must point to `len` values; `out` must be valid.
enum AmrfactStatus amrfact_balanced_accuracy(const bool *preds,
                                             const bool *golds,
                                             size_t len,
                                             double *out);

// Threshold maximizing balanced accuracy of `score >= threshold` as a
// predictor of inconsistency. The threshold may be infinite.
//
// # Safety
// `scores` and `golds` must point to `len` values; out-pointers must be
// valid.
enum AmrfactStatus amrfact_tune_threshold(const double *scores,
                                          const bool *golds,
                                          size_t len,
                                          double *out_threshold,
                                          double *out_balanced_accuracy);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AMRFACT_H */
