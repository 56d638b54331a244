#ifndef COLOMBEAU_H
#define COLOMBEAU_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ColombeauStatus {
  COLOMBEAU_STATUS_OK = 0,
  COLOMBEAU_STATUS_NULL_POINTER = 1,
  COLOMBEAU_STATUS_INVALID_UTF8 = 2,
  COLOMBEAU_STATUS_PARSE = 3,
  COLOMBEAU_STATUS_UNRESOLVED = 4,
  COLOMBEAU_STATUS_DOMAIN = 5,
  COLOMBEAU_STATUS_NUMERICAL = 6,
  COLOMBEAU_STATUS_CONFIG = 7,
  COLOMBEAU_STATUS_IO = 8,
  COLOMBEAU_STATUS_BUFFER_TOO_SMALL = 9,
  COLOMBEAU_STATUS_INTERNAL = 10,
} ColombeauStatus;

// A loaded experiment spec: manifold, names in scope, kernels and grid.
typedef struct ColombeauContext ColombeauContext;

// A parsed representative.
typedef struct ColombeauRepresentative ColombeauRepresentative;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the next call.
const char *colombeau_last_error(void);

// Load a spec from TOML text.
//
// # Safety
// `spec` must be a NUL-terminated string and `out` a valid pointer.
enum ColombeauStatus colombeau_context_new(const char *spec, struct ColombeauContext **out);

// # Safety
// `ctx` must come from [`colombeau_context_new`] or be null.
void colombeau_context_free(struct ColombeauContext *ctx);

// Parse a representative expression in the scope of `ctx`.
//
// # Safety
// Pointers must be valid; `expr` NUL-terminated.
enum ColombeauStatus colombeau_parse(const struct ColombeauContext *ctx,
                                     const char *expr,
                                     struct ColombeauRepresentative **out);

// # Safety
// `rep` must come from [`colombeau_parse`] or be null.
void colombeau_representative_free(struct ColombeauRepresentative *rep);

// `R(Φ(ε, p), p)` for the named kernel of `ctx`.
//
// # Safety
// Pointers must be valid; `p` holds `dim` values.
enum ColombeauStatus colombeau_evaluate(const struct ColombeauContext *ctx,
                                        const struct ColombeauRepresentative *rep,
                                        const char *kernel,
                                        double eps,
                                        const double *p,
                                        uintptr_t dim,
                                        double *out);

// Sample `sup_{p∈K} |R(Φ(ε, p), p)|` over the grid of `ctx`.
//
// `K` is the box `[lo, hi]` (`dim` values each) or the default compact when
// both are null. `eps_out` and `values_out` hold `*len` entries on input;
// `*len` is set to the number of grid points. A short buffer returns
// `BufferTooSmall` with `*len` set to the required size.
//
// # Safety
// Pointers must be valid for the stated lengths.
enum ColombeauStatus colombeau_sweep(const struct ColombeauContext *ctx,
                                     const struct ColombeauRepresentative *rep,
                                     const char *kernel,
                                     const double *lo,
                                     const double *hi,
                                     uintptr_t dim,
                                     double *eps_out,
                                     double *values_out,
                                     uintptr_t *len);

// Fitted exponent `a` of `|v(ε)| ≈ c·ε^a`; `+∞` for identically-zero samples.
//
// # Safety
// `eps` and `values` hold `len` entries; `slope` is valid.
enum ColombeauStatus colombeau_estimate_order(const double *eps,
                                              const double *values,
                                              uintptr_t len,
                                              double *slope);

// Run every experiment of a spec and write the reports into `out_dir`.
//
// `exit_code` receives 0 when every experiment matched its expectation and 1 otherwise.
//
// # Safety
// Strings must be NUL-terminated; `exit_code` valid.
enum ColombeauStatus colombeau_run_spec(const char *spec, const char *out_dir, int32_t *exit_code);

// Number of ε grid points of `ctx`.
//
// # Safety
// `ctx` must be a valid handle.
enum ColombeauStatus colombeau_grid_points(const struct ColombeauContext *ctx, uintptr_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLOMBEAU_H */
