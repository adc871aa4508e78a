#ifndef WEPKIT_H
#define WEPKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum WepStatus {
  WEP_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  WEP_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  WEP_STATUS_INVALID_UTF8 = 2,
  /**
   * A value lies outside its domain (probability, token count, ...).
   */
  WEP_STATUS_DOMAIN = 3,
  /**
   * Formula text is malformed.
   */
  WEP_STATUS_SYNTAX = 4,
  /**
   * A data file is malformed.
   */
  WEP_STATUS_PARSE = 5,
  /**
   * A size limit was exceeded.
   */
  WEP_STATUS_CAPACITY = 6,
  /**
   * A formula shape is not supported by the requested engine.
   */
  WEP_STATUS_STRUCTURE = 7,
  /**
   * A configuration or argument was rejected.
   */
  WEP_STATUS_VALIDATION = 8,
  /**
   * Records do not match the expected schema.
   */
  WEP_STATUS_SCHEMA = 9,
  /**
   * A file could not be read or written.
   */
  WEP_STATUS_IO = 10,
  /**
   * An internal panic was caught.
   */
  WEP_STATUS_PANIC = 11,
} WepStatus;

/**
 * Inference engine for [`wep_formula_infer`].
 */
typedef enum WepEngine {
  /**
   * Exact possible-worlds enumeration; any formula up to the atom limit.
   */
  WEP_ENGINE_ENUMERATION = 0,
  /**
   * Bottom-up combination; formulas whose siblings share no atoms.
   */
  WEP_ENGINE_COMPOSITIONAL = 1,
} WepEngine;

/**
 * Opaque parsed-formula handle.
 */
typedef struct WepFormulaHandle WepFormulaHandle;

/**
 * Opaque example-generator handle.
 */
typedef struct WepGeneratorHandle WepGeneratorHandle;

/**
 * Opaque WEP scale handle.
 */
typedef struct WepScaleHandle WepScaleHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failed call on this thread ("" after a
 * success). The pointer stays valid until the next call on this thread.
 */
const char *wep_last_error_message(void);

/**
 * Library version string (static; do not free).
 */
const char *wep_version(void);

/**
 * Release a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void wep_string_free(char *s);

/**
 * Create a handle for the built-in scale.
 *
 * # Safety
 * `out` must be valid for writing a pointer.
 */
enum WepStatus wep_scale_new_default(struct WepScaleHandle **out);

/**
 * Load a tab-separated scale override file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writing a pointer.
 */
enum WepStatus wep_scale_load(const char *path, struct WepScaleHandle **out);

/**
 * Release a scale handle. NULL is ignored.
 *
 * # Safety
 * `scale` must be NULL or a handle from this library not yet freed.
 */
void wep_scale_free(struct WepScaleHandle *scale);

/**
 * Number of entries in the scale (0 for NULL).
 *
 * # Safety
 * `scale` must be NULL or a live handle.
 */
size_t wep_scale_len(const struct WepScaleHandle *scale);

/**
 * Name of the WEP nearest to `p`; ties are broken by a generator seeded
 * with `seed`.
 *
 * # Safety
 * `scale` must be a live handle; `out_name` must be valid for writing a pointer.
 */
enum WepStatus wep_scale_nearest(const struct WepScaleHandle *scale,
                                 double p,
                                 uint64_t seed,
                                 char **out_name);

/**
 * Number of distractor WEPs for `p`, written to `out_count`.
 *
 * # Safety
 * `scale` must be a live handle; `out_count` must be valid for writing.
 */
enum WepStatus wep_scale_distractor_count(const struct WepScaleHandle *scale,
                                          double p,
                                          size_t *out_count);

/**
 * Sentence stating `fact` with the WEP named `wep`.
 *
 * # Safety
 * `scale` must be a live handle; `wep` and `fact` NUL-terminated strings;
 * `out_sentence` valid for writing a pointer.
 */
enum WepStatus wep_verbalize(const struct WepScaleHandle *scale,
                             const char *wep,
                             const char *fact,
                             char **out_sentence);

/**
 * Recover the WEP name and fact text from a verbalized sentence.
 *
 * # Safety
 * `scale` must be a live handle; `sentence` a NUL-terminated string;
 * `out_wep` and `out_fact` valid for writing a pointer.
 */
enum WepStatus wep_extract(const struct WepScaleHandle *scale,
                           const char *sentence,
                           char **out_wep,
                           char **out_fact);

/**
 * Parse formula text such as `((f0 & f1) ^ (f2 | f3))`.
 *
 * # Safety
 * `text_in` must be a NUL-terminated string; `out` valid for writing a pointer.
 */
enum WepStatus wep_formula_parse(const char *text_in, struct WepFormulaHandle **out);

/**
 * Release a formula handle. NULL is ignored.
 *
 * # Safety
 * `formula` must be NULL or a handle from this library not yet freed.
 */
void wep_formula_free(struct WepFormulaHandle *formula);

/**
 * Canonical text of a formula.
 *
 * # Safety
 * `formula` must be a live handle; `out_text` valid for writing a pointer.
 */
enum WepStatus wep_formula_to_string(const struct WepFormulaHandle *formula, char **out_text);

/**
 * Probability that the formula holds, where atom `fi` is true independently
 * with probability `probs[i]`.
 *
 * # Safety
 * `formula` must be a live handle; `probs` must point to `n_probs` doubles
 * (may be NULL when `n_probs` is 0); `out_p` valid for writing.
 */
enum WepStatus wep_formula_infer(const struct WepFormulaHandle *formula,
                                 const double *probs,
                                 size_t n_probs,
                                 enum WepEngine engine,
                                 double *out_p);

/**
 * Create a generator for `hops` (1 or 2) reasoning steps, `n_examples`
 * records and run seed `seed`, with default vocabulary, scale and splits.
 *
 * # Safety
 * `out` must be valid for writing a pointer.
 */
enum WepStatus wep_generator_new(uint32_t hops,
                                 size_t n_examples,
                                 uint64_t seed,
                                 struct WepGeneratorHandle **out);

/**
 * Release a generator handle. NULL is ignored.
 *
 * # Safety
 * `generator` must be NULL or a handle from this library not yet freed.
 */
void wep_generator_free(struct WepGeneratorHandle *generator);

/**
 * The record at `index` as one line of dataset JSON (no trailing newline).
 *
 * # Safety
 * `generator` must be a live handle; `out_json` valid for writing a pointer.
 */
enum WepStatus wep_generator_example_json(const struct WepGeneratorHandle *generator,
                                          size_t index,
                                          char **out_json);

/**
 * Generate all records and write one JSONL file per split into `dir`.
 *
 * # Safety
 * `generator` must be a live handle; `dir` a NUL-terminated string.
 */
enum WepStatus wep_generator_write_dataset(const struct WepGeneratorHandle *generator,
                                           const char *dir);

/**
 * Evaluate score files against a dataset directory and write the report as
 * JSON. `method` is "raw", "per-token", "calibrated", or NULL / "auto" to
 * select on the validation split; `eval_split` NULL means "test".
 *
 * # Safety
 * `dataset_dir` must be a NUL-terminated string; `score_paths` must point to
 * `n_paths` NUL-terminated strings; `method` and `eval_split` NULL or
 * NUL-terminated; `out_json` valid for writing a pointer.
 */
enum WepStatus wep_score_files(const char *dataset_dir,
                               const char *const *score_paths,
                               size_t n_paths,
                               const char *method,
                               const char *eval_split,
                               char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WEPKIT_H */
