#ifndef KEPLER_CZ_H
#define KEPLER_CZ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KczOrbitKind {
  KCZ_ORBIT_KIND_RETROGRADE = 0,
  KCZ_ORBIT_KIND_DIRECT = 1,
  KCZ_ORBIT_KIND_COLLISION_PLUS = 2,
  KCZ_ORBIT_KIND_COLLISION_MINUS = 3,
  KCZ_ORBIT_KIND_FAMILY = 4,
} KczOrbitKind;

typedef enum KczStatus {
  KCZ_STATUS_OK = 0,
  KCZ_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Input outside the model: above the critical value, off the chart.
   */
  KCZ_STATUS_DOMAIN = 2,
  /**
   * The Jacobi constant or energy sits on a bifurcation or resonance.
   */
  KCZ_STATUS_NOT_GENERIC = 3,
  /**
   * Integration or crossing detection failed.
   */
  KCZ_STATUS_NUMERICAL = 4,
  /**
   * A numeric result disagrees with its closed form.
   */
  KCZ_STATUS_VERIFICATION = 5,
  KCZ_STATUS_NULL_POINTER = 6,
  KCZ_STATUS_PANIC = 7,
} KczStatus;

/**
 * Opaque list of catalog rows.
 */
typedef struct KczCatalog KczCatalog;

/**
 * One catalog row. `k` and `l` are zero for isolated orbits.
 */
typedef struct KczOrbit {
  enum KczOrbitKind kind;
  uint64_t k;
  uint64_t l;
  uint32_t cover;
  double kepler_energy;
  double period;
  /**
   * Twice the index.
   */
  int64_t index_doubled;
  int8_t l3_sign;
} KczOrbit;

/**
 * Energy, angular momentum and Laplace-Runge-Lenz vector of a state.
 */
typedef struct KczInvariants {
  double energy;
  double angular_momentum[3];
  double lrl[3];
} KczInvariants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next call into this library from the same thread.
 */
const char *kcz_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *kcz_version(void);

/**
 * Builds the orbit catalog at Jacobi constant `c` with covers up to `n_max`
 * and families with `k <= k_max`. Free the result with `kcz_catalog_free`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one pointer.
 */
enum KczStatus kcz_catalog_new(double c, uint32_t n_max, uint64_t k_max, struct KczCatalog **out);

/**
 * Number of rows, or 0 for a null handle.
 *
 * # Safety
 * `cat` must be null or a handle from `kcz_catalog_new` not yet freed.
 */
size_t kcz_catalog_len(const struct KczCatalog *cat);

/**
 * Copies row `i` into `out`.
 *
 * # Safety
 * `cat` must be a live handle and `out` valid for one `KczOrbit`.
 */
enum KczStatus kcz_catalog_get(const struct KczCatalog *cat, size_t i, struct KczOrbit *out);

/**
 * Releases a catalog. Null is ignored.
 *
 * # Safety
 * `cat` must be null or a handle from `kcz_catalog_new`, freed at most once.
 */
void kcz_catalog_free(struct KczCatalog *cat);

/**
 * Invariants of the state `(q1, q2, q3, p1, p2, p3)`.
 *
 * # Safety
 * `state` must point to six doubles and `out` to one `KczInvariants`.
 */
enum KczStatus kcz_invariants(const double *state, struct KczInvariants *out);

/**
 * Closed-form index (doubled) of the `cover`-fold isolated orbit at `c`.
 *
 * # Safety
 * `index_doubled` must be valid for one `int64_t`.
 */
enum KczStatus kcz_cz_closed_form(double c,
                                  enum KczOrbitKind kind,
                                  uint32_t cover,
                                  int64_t *index_doubled);

/**
 * Index (doubled) of the torus family `(k, l)`, which must be coprime.
 *
 * # Safety
 * `index_doubled` must be valid for one `int64_t`.
 */
enum KczStatus kcz_rs_family(uint64_t k, uint64_t l, int64_t *index_doubled);

/**
 * Index recomputed from the integrated linearized flow. Both outputs are
 * written whenever the computation finishes; the status is
 * `Verification` when they differ.
 *
 * # Safety
 * Both output pointers must be valid for one `int64_t`.
 */
enum KczStatus kcz_cz_numeric(double c,
                              enum KczOrbitKind kind,
                              uint32_t cover,
                              int64_t *numeric_doubled,
                              int64_t *closed_form_doubled);

/**
 * Degree-by-degree comparison with the reference ranks as a JSON string.
 * Free it with `kcz_string_free`.
 *
 * # Safety
 * `out` must be valid for one pointer.
 */
enum KczStatus kcz_ledger_json(double c, int64_t degree_cap, char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library, freed at most once.
 */
void kcz_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KEPLER_CZ_H */
