#ifndef FASTDUAL_H
#define FASTDUAL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FdStatus {
  FD_STATUS_OK = 0,
  FD_STATUS_NULL_POINTER = 1,
  FD_STATUS_INVALID_ARGUMENT = 2,
  FD_STATUS_DIMENSION_MISMATCH = 3,
  FD_STATUS_CAP_EXCEEDED = 4,
  FD_STATUS_PARSE = 5,
  FD_STATUS_NO_CONVERGENCE = 6,
  FD_STATUS_INTERNAL = 7,
  FD_STATUS_PANIC = 8,
} FdStatus;

/**
 * Which chain of a pair to use.
 */
typedef enum FdSide {
  FD_SIDE_PRIMAL = 0,
  FD_SIDE_DUAL = 1,
} FdSide;

typedef enum FdFamily {
  FD_FAMILY_RA = 0,
  FD_FAMILY_RAD = 1,
  FD_FAMILY_RDA = 2,
} FdFamily;

/**
 * Opaque handle to a sampled primal/dual pair.
 */
typedef struct FdPair FdPair;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the thread's last failed call, or an empty string. Valid until the
 * next call on the same thread.
 */
const char *fd_last_error(void);

/**
 * Samples the pair of block length `n` with `m` rounds from `seed`. Free with `fd_pair_free`.
 */
enum FdStatus fd_pair_sample(size_t n, size_t m, uint64_t seed, struct FdPair **out_pair);

/**
 * Releases a handle from `fd_pair_sample`; null is ignored.
 */
void fd_pair_free(struct FdPair *pair);

/**
 * Block length and message length of the pair's chains.
 */
enum FdStatus fd_pair_shape(const struct FdPair *pair, size_t *out_n, size_t *out_k);

/**
 * Encodes a packed `k`-bit message into a packed `n`-bit codeword.
 */
enum FdStatus fd_encode(const struct FdPair *pair,
                        enum FdSide side,
                        const uint8_t *msg,
                        size_t msg_len,
                        uint8_t *codeword,
                        size_t codeword_len);

/**
 * Sets `*out_ok` to whether every dual generator column is orthogonal to every primal one.
 */
enum FdStatus fd_dual_check(const struct FdPair *pair, bool *out_ok);

/**
 * Exact minimum distance of one chain (`k ≤ 28` unless raised via FASTDUAL_MAX_K).
 */
enum FdStatus fd_min_distance(const struct FdPair *pair, enum FdSide side, size_t *out_distance);

/**
 * Critical-point estimate of the distance threshold for `2 ≤ m ≤ 6` rounds.
 */
enum FdStatus fd_delta_m(size_t m, size_t r, double tol, double *out_delta);

/**
 * Preimage of `y ∈ [0, 1]` under binary entropy on `[0, 1/2]`.
 */
enum FdStatus fd_entropy_inverse(double y, double *out_x);

/**
 * Expected number of codewords of weight `1..=d` over the code ensemble.
 */
enum FdStatus fd_markov_bound(enum FdFamily family,
                              size_t n,
                              size_t m,
                              size_t d,
                              double *out_bound);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FASTDUAL_H */
