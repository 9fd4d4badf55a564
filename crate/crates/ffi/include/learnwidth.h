#ifndef LEARNWIDTH_H
#define LEARNWIDTH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LwStatus {
  LW_STATUS_OK = 0,
  LW_STATUS_NULL_POINTER = 1,
  /**
   * Argument outside the documented domain (bad k, non-positive tolerance).
   */
  LW_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Malformed JSON, edge list or UTF-8.
   */
  LW_STATUS_PARSE = 3,
  LW_STATUS_NOT_PSD = 4,
  LW_STATUS_DIMENSION = 5,
  /**
   * Subset enumeration would exceed the configured cap.
   */
  LW_STATUS_CAP_EXCEEDED = 6,
  /**
   * The numerical solver could not reach the requested precision.
   */
  LW_STATUS_SOLVER = 7,
  LW_STATUS_UNKNOWN_FIXTURE = 8,
  /**
   * A bug: the library panicked. The message holds the panic payload.
   */
  LW_STATUS_INTERNAL = 9,
} LwStatus;

typedef enum LwAnswer {
  LW_ANSWER_INSIDE = 0,
  LW_ANSWER_OUTSIDE = 1,
  LW_ANSWER_BOUNDARY = 2,
} LwAnswer;

typedef enum LwVerdict {
  LW_VERDICT_LEARNABLE = 0,
  LW_VERDICT_NOT_LEARNABLE = 1,
  LW_VERDICT_UNDECIDED = 2,
} LwVerdict;

typedef enum LwCliqueMethod {
  LW_CLIQUE_METHOD_ORACLE = 0,
  LW_CLIQUE_METHOD_SDP = 1,
} LwCliqueMethod;

/**
 * Hermitian matrix handle.
 */
typedef struct LwMatrix LwMatrix;

/**
 * State list handle.
 */
typedef struct LwStates LwStates;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a matrix document `{"n": .., "entries": [[..]]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out_matrix` a valid pointer.
 */
enum LwStatus lw_matrix_from_json(const char *json, struct LwMatrix **out_matrix);

/**
 * Builds an `n x n` Hermitian matrix from row-major real and imaginary
 * parts. `im` may be null for a real matrix.
 *
 * # Safety
 * `re` (and `im` when non-null) must point to `n * n` doubles.
 */
enum LwStatus lw_matrix_new(size_t n,
                            const double *re,
                            const double *im,
                            struct LwMatrix **out_matrix);

/**
 * Dimension of a matrix handle, 0 for null.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t lw_matrix_dim(const struct LwMatrix *m);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void lw_matrix_free(struct LwMatrix *m);

/**
 * Parses a state list document `{"d": .., "states": [[..]]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out_states` a valid pointer.
 */
enum LwStatus lw_states_from_json(const char *json, struct LwStates **out_states);

/**
 * Builds a fixture ensemble by name (`trine`, `tetrahedral`, `basis(n)`,
 * `repeated_basis(k,n)`, `random(n,d)`); `seed` feeds `random(n,d)`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out_states` a valid pointer.
 */
enum LwStatus lw_states_fixture(const char *name, uint64_t seed, struct LwStates **out_states);

/**
 * Number of states in the list, 0 for null.
 *
 * # Safety
 * `s` must be null or a live handle.
 */
size_t lw_states_len(const struct LwStates *s);

/**
 * # Safety
 * `s` must be null or a handle not yet freed.
 */
void lw_states_free(struct LwStates *s);

/**
 * The normalized Gram matrix `G / n` of a state list.
 *
 * # Safety
 * `s` must be a live handle and `out_matrix` a valid pointer.
 */
enum LwStatus lw_states_gram(const struct LwStates *s, struct LwMatrix **out_matrix);

/**
 * Smallest k for which the PSD matrix is k-incoherent. `cap` bounds the
 * subset enumeration (0 for the default).
 *
 * # Safety
 * `m` must be a live handle and `out_width` a valid pointer.
 */
enum LwStatus lw_factor_width(const struct LwMatrix *m,
                              double eps,
                              uint64_t cap,
                              size_t *out_width);

/**
 * Weak membership of `m` in the trace-bounded k-incoherent set at radius
 * `delta`. `out_distance` may be null.
 *
 * # Safety
 * `m` must be a live handle and `out_answer` a valid pointer.
 */
enum LwStatus lw_wmem(const struct LwMatrix *m,
                      size_t k,
                      double delta,
                      enum LwAnswer *out_answer,
                      double *out_distance);

/**
 * Zero-error k-learnability. A non-positive `delta` selects the default
 * radius.
 *
 * # Safety
 * `s` must be a live handle and `out_verdict` a valid pointer.
 */
enum LwStatus lw_is_k_learnable(const struct LwStates *s,
                                size_t k,
                                double delta,
                                enum LwVerdict *out_verdict);

/**
 * Learning width as the interval `[lo, hi]`; `lo == hi` when exact.
 *
 * # Safety
 * `s` must be a live handle; `out_lo` and `out_hi` valid pointers.
 */
enum LwStatus lw_learning_width(const struct LwStates *s,
                                double delta,
                                size_t *out_lo,
                                size_t *out_hi);

/**
 * `max_{|S| ≤ k} λ_max(C_S)` floored at 0, by enumeration.
 *
 * # Safety
 * `m` must be a live handle and `out_value` a valid pointer.
 */
enum LwStatus lw_mu_oracle(const struct LwMatrix *m, size_t k, double *out_value);

/**
 * Decides whether the graph in edge-list text (`n m` header, then `u v`
 * lines, 1-based) has a k-clique.
 *
 * # Safety
 * `edge_list` must be a NUL-terminated string and `out_clique` valid.
 */
enum LwStatus lw_clique_decide(const char *edge_list,
                               size_t k,
                               enum LwCliqueMethod method,
                               bool *out_clique);

/**
 * Zero-error POVM over k-subsets as JSON, or null in `*out_json` when the
 * Gram matrix admits no k-incoherent decomposition.
 *
 * # Safety
 * `s` must be a live handle and `out_json` a valid pointer.
 */
enum LwStatus lw_povm_json(const struct LwStates *s, size_t k, char **out_json);

/**
 * Carathéodory certificate for a k-incoherent matrix as JSON, or null when
 * no decomposition is found at precision `eps`.
 *
 * # Safety
 * `m` must be a live handle and `out_json` a valid pointer.
 */
enum LwStatus lw_certificate_json(const struct LwMatrix *m, size_t k, double eps, char **out_json);

/**
 * Checks a certificate document against `m`; `out_valid` receives the
 * verdict. A rejected certificate is not an error; its reason is left in
 * [`lw_last_error`].
 *
 * # Safety
 * `m` must be a live handle, `json` a NUL-terminated string, `out_valid` valid.
 */
enum LwStatus lw_certificate_verify(const struct LwMatrix *m,
                                    const char *json,
                                    double tol,
                                    bool *out_valid);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void lw_string_free(char *s);

/**
 * Message for the last failed call on this thread; empty after success.
 * The pointer stays valid until the next library call on this thread.
 */
const char *lw_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lw_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEARNWIDTH_H */
