/* C interface to the baire prefix-tree clustering toolkit. Generated by cbindgen; do not edit. */

#ifndef BAIRE_H
#define BAIRE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum BaireStatus {
  BAIRE_STATUS_OK = 0,
  /**
   * Input outside an operation's domain (bad digit, bad base, k > n, ...).
   */
  BAIRE_STATUS_DOMAIN = 1,
  /**
   * Text is not a plain non-negative decimal numeral.
   */
  BAIRE_STATUS_PARSE = 2,
  /**
   * Keys with mismatched base, precision, or digit convention.
   */
  BAIRE_STATUS_CONVENTION = 3,
  /**
   * Level or depth out of range.
   */
  BAIRE_STATUS_RANGE = 4,
  /**
   * Unknown item id.
   */
  BAIRE_STATUS_NOT_FOUND = 5,
  /**
   * Incompatible shapes.
   */
  BAIRE_STATUS_SHAPE = 6,
  /**
   * Input too large for a demo-scale operation.
   */
  BAIRE_STATUS_SCALE = 7,
  /**
   * Malformed input file.
   */
  BAIRE_STATUS_FORMAT = 8,
  /**
   * Bad data row.
   */
  BAIRE_STATUS_ROW = 9,
  /**
   * Invalid configuration.
   */
  BAIRE_STATUS_CONFIG = 10,
  /**
   * I/O failure.
   */
  BAIRE_STATUS_IO = 11,
  /**
   * A required pointer argument was null.
   */
  BAIRE_STATUS_NULL_ARGUMENT = 12,
  /**
   * A string argument was not valid UTF-8.
   */
  BAIRE_STATUS_INVALID_UTF8 = 13,
  /**
   * The caller-provided buffer is too small; the length out-parameter
   * holds the required capacity.
   */
  BAIRE_STATUS_BUFFER_TOO_SMALL = 14,
  /**
   * An internal panic was caught at the boundary.
   */
  BAIRE_STATUS_PANIC = 15,
} BaireStatus;

/**
 * Opaque digit-key handle.
 */
typedef struct BaireKey BaireKey;

/**
 * Opaque prefix-tree handle.
 */
typedef struct BaireTree BaireTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null if none.
 * Valid until the next failing call on the same thread; do not free.
 */
const char *baire_last_error_message(void);

/**
 * Encodes decimal text as a digit key. On success writes a new handle to
 * `out_key`; release it with `baire_key_free`.
 *
 * # Safety
 * `text` must be null or a valid NUL-terminated string; `out_key` must be
 * null or valid for one pointer write.
 */
enum BaireStatus baire_key_encode(const char *text,
                                  uint32_t base,
                                  size_t precision,
                                  bool include_integer_digit,
                                  struct BaireKey **out_key);

/**
 * Releases a key handle. Null is a no-op.
 *
 * # Safety
 * `key` must be null or a handle from `baire_key_encode` not yet freed.
 */
void baire_key_free(struct BaireKey *key);

/**
 * Copies the key's digits into `buffer` (at most `capacity` bytes) and
 * writes the digit count to `out_len`. With a null `buffer` only the count
 * is reported.
 *
 * # Safety
 * `key` must be a live key handle or null; `buffer` must be null or valid
 * for `capacity` byte writes; `out_len` must be null or writable.
 */
enum BaireStatus baire_key_digits(const struct BaireKey *key,
                                  uint8_t *buffer,
                                  size_t capacity,
                                  size_t *out_len);

/**
 * Longest-common-prefix length of two keys sharing one convention.
 *
 * # Safety
 * `a` and `b` must be live key handles or null; `out_length` must be null
 * or writable.
 */
enum BaireStatus baire_lcp_length(const struct BaireKey *a,
                                  const struct BaireKey *b,
                                  size_t *out_length);

/**
 * Baire distance of two keys: writes the shared-prefix exponent `p` and the
 * value `base^(-p)`.
 *
 * # Safety
 * `a` and `b` must be live key handles or null; the out-pointers must be
 * null or writable.
 */
enum BaireStatus baire_distance(const struct BaireKey *a,
                                const struct BaireKey *b,
                                uint32_t *out_exponent,
                                double *out_value);

/**
 * Builds a prefix tree from `count` keys with caller-chosen item ids.
 * On success writes a new handle to `out_tree`; release it with
 * `baire_tree_free`.
 *
 * # Safety
 * `keys` and `item_ids` must be null or valid for `count` reads, with every
 * key entry a live handle; `out_tree` must be null or writable.
 */
enum BaireStatus baire_tree_build(const struct BaireKey *const *keys,
                                  const uint64_t *item_ids,
                                  size_t count,
                                  size_t max_depth,
                                  struct BaireTree **out_tree);

/**
 * Releases a tree handle. Null is a no-op.
 *
 * # Safety
 * `tree` must be null or a handle from `baire_tree_build` not yet freed.
 */
void baire_tree_free(struct BaireTree *tree);

/**
 * Number of items inserted into the tree.
 *
 * # Safety
 * `tree` must be a live tree handle or null; `out` must be null or writable.
 */
enum BaireStatus baire_tree_item_count(const struct BaireTree *tree, size_t *out);

/**
 * Number of materialized nodes below the root.
 *
 * # Safety
 * `tree` must be a live tree handle or null; `out` must be null or writable.
 */
enum BaireStatus baire_tree_node_count(const struct BaireTree *tree, size_t *out);

/**
 * Number of occupied clusters at one level (1-based).
 *
 * # Safety
 * `tree` must be a live tree handle or null; `out` must be null or writable.
 */
enum BaireStatus baire_tree_cluster_count(const struct BaireTree *tree, size_t level, size_t *out);

/**
 * Tree-induced distance of two inserted items: the exponent is the depth of
 * the deepest shared node, the value `base^(-depth)`.
 *
 * # Safety
 * `tree` must be a live tree handle or null; the out-pointers must be null
 * or writable.
 */
enum BaireStatus baire_tree_cophenetic(const struct BaireTree *tree,
                                       uint64_t item_a,
                                       uint64_t item_b,
                                       uint32_t *out_exponent,
                                       double *out_value);

/**
 * Ids of all items whose key starts with `prefix` (`prefix_len` digits),
 * in ascending order. Two-call protocol: pass a null `out_ids` to get the
 * required capacity in `out_len`; with a buffer too small the status is
 * `BAIRE_STATUS_BUFFER_TOO_SMALL` and `out_len` still holds the requirement.
 *
 * # Safety
 * `tree` must be a live tree handle or null; `prefix` must be null or valid
 * for `prefix_len` reads; `out_ids` must be null or valid for `capacity`
 * writes; `out_len` must be null or writable.
 */
enum BaireStatus baire_tree_retrieve(const struct BaireTree *tree,
                                     const uint8_t *prefix,
                                     size_t prefix_len,
                                     uint64_t *out_ids,
                                     size_t capacity,
                                     size_t *out_len);

/**
 * Share (in percent) of key pairs whose spectroscopic and photometric keys
 * agree on at least `digits` leading digits.
 *
 * # Safety
 * `spec_keys` and `phot_keys` must be null or valid for `count` reads with
 * every entry a live key handle; `out_percent` must be null or writable.
 */
enum BaireStatus baire_confidence_at_least(const struct BaireKey *const *spec_keys,
                                           const struct BaireKey *const *phot_keys,
                                           size_t count,
                                           size_t digits,
                                           double *out_percent);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BAIRE_H */
