#ifndef SHARDVALUE_H
#define SHARDVALUE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible `sv_` function.
 */
typedef enum SvStatus {
  SV_STATUS_OK = 0,
  SV_STATUS_NULL_POINTER = 1,
  SV_STATUS_INVALID_UTF8 = 2,
  SV_STATUS_IO = 3,
  SV_STATUS_MALFORMED = 4,
  SV_STATUS_INVALID_INPUT = 5,
  SV_STATUS_NUMERICAL = 6,
  SV_STATUS_OUT_OF_RANGE = 7,
  SV_STATUS_PANIC = 8,
} SvStatus;

/**
 * Outcome of ledger verification.
 */
typedef enum SvVerdict {
  SV_VERDICT_ACCEPT = 0,
  SV_VERDICT_REJECT_DATA = 1,
  SV_VERDICT_REJECT_CHAIN = 2,
  SV_VERDICT_REJECT_CONTINUITY = 3,
  SV_VERDICT_REJECT_METRICS = 4,
  SV_VERDICT_REJECT_MALFORMED = 5,
} SvVerdict;

/**
 * Opaque corpus handle.
 */
typedef struct SvCorpus SvCorpus;

/**
 * Opaque valuation handle.
 */
typedef struct SvValuation SvValuation;

/**
 * Per-source valuation signals.
 */
typedef struct SvSourceScores {
  uint64_t doc_count;
  uint64_t token_count;
  double dqs_mean;
  double proxy_gain;
  double influence;
  double shapley;
} SvSourceScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next `sv_` call on the same thread.
 */
const char *sv_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sv_version(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from an `sv_` function that documents ownership transfer.
 */
void sv_string_free(char *s);

/**
 * Loads a JSONL corpus from `path`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SvStatus sv_corpus_load(const char *path, struct SvCorpus **out);

/**
 * Parses a corpus from an in-memory JSONL string.
 *
 * # Safety
 * `jsonl` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SvStatus sv_corpus_from_jsonl(const char *jsonl, struct SvCorpus **out);

/**
 * # Safety
 * `corpus` must be null or a handle from `sv_corpus_load`/`sv_corpus_from_jsonl`.
 */
void sv_corpus_free(struct SvCorpus *corpus);

/**
 * Number of documents and sources in the corpus.
 *
 * # Safety
 * `corpus` must be a live handle; the out pointers may be null.
 */
enum SvStatus sv_corpus_counts(const struct SvCorpus *corpus, size_t *documents, size_t *sources);

/**
 * Runs DQS, leave-one-source-out proxy gain, influence and Monte Carlo
 * Shapley. `target_domain` may be null to use the stored labels.
 *
 * # Safety
 * `corpus` must be a live handle, `target_domain` null or NUL-terminated,
 * `out` a valid pointer.
 */
enum SvStatus sv_valuation_run(const struct SvCorpus *corpus,
                               const char *target_domain,
                               size_t shapley_permutations,
                               uint64_t seed,
                               struct SvValuation **out);

/**
 * # Safety
 * `v` must be a live valuation handle and `out` a valid pointer.
 */
enum SvStatus sv_valuation_source_count(const struct SvValuation *v, size_t *out);

/**
 * Source name at `index`, borrowed from the handle.
 *
 * # Safety
 * `v` must be a live valuation handle. Returns null on error.
 */
const char *sv_valuation_source_name(const struct SvValuation *v, size_t index);

/**
 * Signals for the source at `index`.
 *
 * # Safety
 * `v` must be a live valuation handle and `out` a valid pointer.
 */
enum SvStatus sv_valuation_get(const struct SvValuation *v,
                               size_t index,
                               struct SvSourceScores *out);

/**
 * Full valuation as JSON. Free the result with `sv_string_free`.
 *
 * # Safety
 * `v` must be a live valuation handle and `out` a valid pointer.
 */
enum SvStatus sv_valuation_to_json(const struct SvValuation *v, char **out);

/**
 * # Safety
 * `v` must be null or a handle from `sv_valuation_run`.
 */
void sv_valuation_free(struct SvValuation *v);

/**
 * Merkle root over `count` NUL-terminated document ids, written to `out`
 * (32 bytes). `count` must be at least 1.
 *
 * # Safety
 * `ids` must point to `count` valid strings (may be null when `count` is 0)
 * and `out` to 32 writable bytes.
 */
enum SvStatus sv_merkle_root(const char *const *ids, size_t count, uint8_t *out);

/**
 * Verifies a ledger from its files. The status reports whether the files
 * could be checked at all; `verdict` carries the outcome, with the reject
 * reason in `sv_last_error`. `claimed_gain` and `opening_path` may be null.
 *
 * # Safety
 * Path arguments must be NUL-terminated strings; `verdict` must be valid.
 */
enum SvStatus sv_ledger_verify_files(const char *fingerprint_path,
                                     const char *ledger_path,
                                     const char *doc_ids_path,
                                     const double *claimed_gain,
                                     const char *opening_path,
                                     enum SvVerdict *verdict);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHARDVALUE_H */
