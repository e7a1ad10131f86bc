#ifndef PDQLS_H
#define PDQLS_H

/* Generated by cbindgen from crates/pdqls-ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define PDQLS_OK 0

/**
 * A required pointer argument was null.
 */
#define PDQLS_ERR_NULL 1

/**
 * Bad input: parameters, JSON, dimensions or promises.
 */
#define PDQLS_ERR_INVALID 2

/**
 * A numerical self-check failed.
 */
#define PDQLS_ERR_NUMERICAL 3

/**
 * A string argument was not valid UTF-8.
 */
#define PDQLS_ERR_UTF8 4

/**
 * The library panicked; this is a bug.
 */
#define PDQLS_ERR_PANIC 5

#define PDQLS_MODE_POSTSELECT 0

#define PDQLS_MODE_AMPLIFY 1

/**
 * A generated or loaded linear-system instance.
 */
typedef struct PdqlsInstance PdqlsInstance;

/**
 * Output state of a solver run together with its JSON report.
 */
typedef struct PdqlsSolution PdqlsSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null if none.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *pdqls_last_error(void);

void pdqls_clear_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pdqls_version(void);

/**
 * Generates an instance of `family` with parameters given as a JSON object
 * (null means `{}`).
 *
 * # Safety
 * `family` and `params_json` must be NUL-terminated strings or null, `out`
 * a valid pointer.
 */
int32_t pdqls_instance_generate(const char *family,
                                uint64_t seed,
                                const char *params_json,
                                struct PdqlsInstance **out);

/**
 * Loads an instance from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string, `out` a valid pointer.
 */
int32_t pdqls_instance_from_json(const char *json, struct PdqlsInstance **out);

/**
 * Serializes an instance. The string is released with `pdqls_string_free`.
 *
 * # Safety
 * `inst` must come from this library, `out` must be a valid pointer.
 */
int32_t pdqls_instance_to_json(const struct PdqlsInstance *inst, char **out);

/**
 * Dimension N of the instance, 0 for a null handle.
 *
 * # Safety
 * `inst` must come from this library or be null.
 */
uintptr_t pdqls_instance_dim(const struct PdqlsInstance *inst);

/**
 * Declared condition number, NaN for a null handle.
 *
 * # Safety
 * `inst` must come from this library or be null.
 */
double pdqls_instance_kappa(const struct PdqlsInstance *inst);

/**
 * # Safety
 * `inst` must come from this library and not be used afterwards. Null is
 * ignored.
 */
void pdqls_instance_free(struct PdqlsInstance *inst);

/**
 * Inverse approximant solve; `mode` is `PDQLS_MODE_POSTSELECT` or
 * `PDQLS_MODE_AMPLIFY`.
 *
 * # Safety
 * `inst` must come from this library, `out` must be a valid pointer.
 */
int32_t pdqls_solve(const struct PdqlsInstance *inst,
                    double eta,
                    double eps,
                    int32_t mode,
                    struct PdqlsSolution **out);

/**
 * Variable-time amplified solve.
 *
 * # Safety
 * `inst` must come from this library, `out` must be a valid pointer.
 */
int32_t pdqls_vtaa(const struct PdqlsInstance *inst,
                   double eta,
                   double eps,
                   struct PdqlsSolution **out);

/**
 * Sum-QLS solve; the instance must be a sum of local terms.
 *
 * # Safety
 * `inst` must come from this library, `out` must be a valid pointer.
 */
int32_t pdqls_sumqls(const struct PdqlsInstance *inst, double eps, struct PdqlsSolution **out);

/**
 * Number of amplitudes in the output state, 0 for a null handle.
 *
 * # Safety
 * `sol` must come from this library or be null.
 */
uintptr_t pdqls_solution_dim(const struct PdqlsSolution *sol);

/**
 * Copies the output amplitudes into `re` and `im`, each of length `len`,
 * which must equal `pdqls_solution_dim`.
 *
 * # Safety
 * `re` and `im` must point to `len` writable doubles.
 */
int32_t pdqls_solution_amplitudes(const struct PdqlsSolution *sol,
                                  double *re,
                                  double *im,
                                  uintptr_t len);

/**
 * JSON report of the run, owned by the solution handle.
 *
 * # Safety
 * `sol` must come from this library or be null.
 */
const char *pdqls_solution_report(const struct PdqlsSolution *sol);

/**
 * # Safety
 * `sol` must come from this library and not be used afterwards. Null is
 * ignored.
 */
void pdqls_solution_free(struct PdqlsSolution *sol);

/**
 * Evaluates P_{2ell-1,kappa} at `n` points and writes K to `k_norm` when
 * it is not null.
 *
 * # Safety
 * `xs` must point to `n` readable and `ys` to `n` writable doubles.
 */
int32_t pdqls_approx_eval(double kappa,
                          uintptr_t ell,
                          const double *xs,
                          double *ys,
                          uintptr_t n,
                          double *k_norm);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards. Null is
 * ignored.
 */
void pdqls_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PDQLS_H */
