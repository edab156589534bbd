#ifndef CROSSTALK_H
#define CROSSTALK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CtStatus {
  CT_STATUS_OK = 0,
  CT_STATUS_INVALID_ARGUMENT = 1,
  CT_STATUS_RESOURCE_LIMIT = 2,
  CT_STATUS_NUMERICAL_FAILURE = 3,
  CT_STATUS_OUT_OF_DOMAIN = 4,
  CT_STATUS_NULL_POINTER = 5,
  CT_STATUS_PANIC = 6,
} CtStatus;

/**
 * Opaque encoder/decoder tables.
 */
typedef struct CtCodec CtCodec;

/**
 * Opaque forbidden transition pair.
 */
typedef struct CtPair CtPair;

typedef struct CtRateBounds {
  double alpha;
  double lower;
  double upper;
  double comparison_stateless;
} CtRateBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Free with
 * [`ct_string_free`].
 */
char *ct_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void ct_string_free(char *s);

/**
 * Parses two equal-length '0'/'1' patterns.
 *
 * # Safety
 * `p` and `q` must be nul-terminated strings; `out` must be writable.
 */
enum CtStatus ct_pair_new(const char *p, const char *q, struct CtPair **out);

/**
 * # Safety
 * `pair` must be null or a handle from [`ct_pair_new`], not yet freed.
 */
void ct_pair_free(struct CtPair *pair);

/**
 * Pattern length `k`, or 0 for a null handle.
 *
 * # Safety
 * `pair` must be null or a live handle.
 */
uint32_t ct_pair_k(const struct CtPair *pair);

/**
 * Whether the transition `a -> b` between `n`-bit words (given by their
 * low `n` bits, first bus line most significant) avoids the pair.
 *
 * # Safety
 * `pair` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_is_transition_free(const struct CtPair *pair,
                                    uint64_t a,
                                    uint64_t b,
                                    uint32_t n,
                                    bool *out);

/**
 * Exact `N(p,q,n)` as a decimal string. Free with [`ct_string_free`].
 *
 * # Safety
 * `pair` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_count_pairs(const struct CtPair *pair, uint32_t n, char **out);

/**
 * Perron root of the pair transfer matrix.
 *
 * # Safety
 * `pair` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_spectral_radius(const struct CtPair *pair, double tol, double *out);

/**
 * Edge-density growth rate `log2(lambda / 2)`.
 *
 * # Safety
 * `pair` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_alpha(const struct CtPair *pair, double tol, double *out);

/**
 * Rate bounds `alpha <= R <= (1 + alpha) / 2`; needs `alpha > 0`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CtStatus ct_rate_bounds(double alpha, struct CtRateBounds *out);

/**
 * Builds `G(p,q,n)`, partitions it (exactly, or with the seeded heuristic)
 * and synthesizes the codec.
 *
 * # Safety
 * `pair` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_codec_synthesize(const struct CtPair *pair,
                                  uint32_t n,
                                  bool exact,
                                  uint64_t seed,
                                  struct CtCodec **out);

/**
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum CtStatus ct_codec_from_json(const char *json, struct CtCodec **out);

/**
 * Codec JSON. Free with [`ct_string_free`].
 *
 * # Safety
 * `codec` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_codec_to_json(const struct CtCodec *codec, char **out);

/**
 * # Safety
 * `codec` must be null or a handle from this library, not yet freed.
 */
void ct_codec_free(struct CtCodec *codec);

/**
 * Next bus word for `message` (1-based) from `state`.
 *
 * # Safety
 * `codec` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_codec_encode(const struct CtCodec *codec,
                              uint32_t message,
                              uint64_t state,
                              uint64_t *out);

/**
 * Message carried by `word`, or 0 when `word` is not a codeword.
 *
 * # Safety
 * `codec` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_codec_decode(const struct CtCodec *codec, uint64_t word_bits, uint32_t *out);

/**
 * Exhaustive table check: every encoded transition is allowed and decodes
 * back to its message.
 *
 * # Safety
 * `codec` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_codec_verify(const struct CtCodec *codec, bool *out);

/**
 * Smallest state, a valid start for the bus.
 *
 * # Safety
 * `codec` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_codec_initial_state(const struct CtCodec *codec, uint64_t *out);

/**
 * Number of messages `M`, or 0 for a null handle.
 *
 * # Safety
 * `codec` must be null or a live handle.
 */
uint32_t ct_codec_message_count(const struct CtCodec *codec);

/**
 * Bus width `n`, or 0 for a null handle.
 *
 * # Safety
 * `codec` must be null or a live handle.
 */
uint32_t ct_codec_word_length(const struct CtCodec *codec);

/**
 * Number of encoder states, or 0 for a null handle.
 *
 * # Safety
 * `codec` must be null or a live handle.
 */
uint32_t ct_codec_state_count(const struct CtCodec *codec);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CROSSTALK_H */
