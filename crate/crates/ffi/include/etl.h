#ifndef ETL_H
#define ETL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes.
typedef enum EtlStatus {
  ETL_STATUS_OK = 0,
  ETL_STATUS_NULL_POINTER = 1,
  ETL_STATUS_INVALID_PARAMETER = 2,
  ETL_STATUS_SINGULAR = 3,
  ETL_STATUS_UNKNOWN_SUITE = 4,
  ETL_STATUS_CONFIG = 5,
  ETL_STATUS_UTF8 = 6,
  ETL_STATUS_INTERNAL = 7,
} EtlStatus;

// Opaque parameter set.
typedef struct EtlContext EtlContext;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Owned by the library and valid
// until the next failing call on the same thread.
const char *etl_last_error(void);

// Library version as a static string.
const char *etl_version(void);

// Builds a context for rank `n` with modulus `tau`, step `hbar` and coupling `c`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one pointer.
enum EtlStatus etl_context_new(size_t n,
                               double tau_re,
                               double tau_im,
                               double hbar_re,
                               double hbar_im,
                               double c_re,
                               double c_im,
                               struct EtlContext **out);

// Builds a context with the library defaults for rank `n`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one pointer.
enum EtlStatus etl_context_default(size_t n, struct EtlContext **out);

// Sets the series window and the seed used by [`etl_run_suite`].
//
// # Safety
// `ctx` must come from `etl_context_new` or `etl_context_default` and not be freed.
enum EtlStatus etl_context_set_run(struct EtlContext *ctx, size_t trunc, uint64_t seed);

// Releases a context. Null is ignored.
//
// # Safety
// `ctx` must be null or a pointer from `etl_context_new`/`etl_context_default` not yet freed.
void etl_context_free(struct EtlContext *ctx);

// Rank of the context, or 0 for null.
//
// # Safety
// `ctx` must be null or a live context.
size_t etl_context_rank(const struct EtlContext *ctx);

// Odd Jacobi theta function at `u`.
//
// # Safety
// `ctx` must be a live context; `out_re` and `out_im` must be writable.
enum EtlStatus etl_theta(const struct EtlContext *ctx,
                         double u_re,
                         double u_im,
                         double *out_re,
                         double *out_im);

// Entries `R(u)^{ij}_{i'j'}` at index `((i*n + j)*n + i')*n + j'`, as interleaved
// real and imaginary parts. `out` must hold `len >= 2*n^4` doubles.
//
// # Safety
// `ctx` must be a live context; `out` must point to `len` writable doubles.
enum EtlStatus etl_r_matrix(const struct EtlContext *ctx,
                            double u_re,
                            double u_im,
                            double *out,
                            size_t len);

// Relative Yang-Baxter residual at the spectral triple `(u, v, w)`.
//
// # Safety
// `ctx` must be a live context; `out` must be writable.
enum EtlStatus etl_ybe_residual(const struct EtlContext *ctx,
                                double u_re,
                                double u_im,
                                double v_re,
                                double v_im,
                                double w_re,
                                double w_im,
                                double *out);

// Runs one verification suite at the context's rank and writes its JSON report to
// `*out_json`. `*out_pass` is set to 1 when every case passes. Release the string with
// [`etl_string_free`].
//
// # Safety
// `ctx` must be a live context, `suite` a NUL-terminated string, `out_json` and
// `out_pass` writable.
enum EtlStatus etl_run_suite(const struct EtlContext *ctx,
                             const char *suite,
                             char **out_json,
                             int32_t *out_pass);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must be null or a string from [`etl_run_suite`] not yet freed.
void etl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ETL_H */
