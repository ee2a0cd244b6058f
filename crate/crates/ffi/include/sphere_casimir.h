#ifndef SPHERE_CASIMIR_H
#define SPHERE_CASIMIR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Return code of every `sc_*` call.
 */
typedef enum ScStatus {
  SC_STATUS_OK = 0,
  SC_STATUS_NULL_POINTER = 1,
  /**
   * Invalid argument: non-physical material, gap, truncation or tolerance.
   */
  SC_STATUS_DOMAIN = 2,
  /**
   * Numerical failure: non-finite matrix, QL non-convergence or a pole.
   */
  SC_STATUS_NUMERICAL = 3,
  /**
   * A Rust panic was caught at the boundary.
   */
  SC_STATUS_INTERNAL = 4,
} ScStatus;

typedef enum ScForceMethod {
  SC_FORCE_METHOD_HELLMANN_FEYNMAN = 0,
  SC_FORCE_METHOD_FINITE_DIFFERENCE = 1,
} ScForceMethod;

/**
 * Opaque material pair.
 */
typedef struct ScContext ScContext;

typedef struct ScEnergy {
  double z_over_r;
  /**
   * In units of hbar*omega_p.
   */
  double energy;
  double energy_ev;
  size_t l_used;
  size_t m_used;
  size_t overdamped_count;
  bool converged;
} ScEnergy;

typedef struct ScForce {
  double z_nm;
  double z_over_r;
  /**
   * In units of hbar*omega_p / R; negative is attractive.
   */
  double force;
  double force_ev_per_nm;
  double force_newton;
  size_t l_used;
  size_t m_used;
  bool converged;
} ScForce;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a context for a Drude sphere on a dielectric substrate.
 *
 * # Safety
 * `out` must be null or valid for a pointer write.
 */
enum ScStatus sc_context_new(double omega_p_ev,
                             double gamma_ratio,
                             double epsilon,
                             struct ScContext **out);

/**
 * Aluminium sphere (15.80 eV, gamma = 0.04 omega_p) on sapphire (epsilon = 3.13).
 *
 * # Safety
 * `out` must be null or valid for a pointer write.
 */
enum ScStatus sc_context_default(struct ScContext **out);

/**
 * Release a context. Null is ignored.
 *
 * # Safety
 * `ctx` must be null or a pointer from `sc_context_new`/`sc_context_default`
 * that has not been freed.
 */
void sc_context_free(struct ScContext *ctx);

/**
 * Substrate contrast factor f_c = (1 - epsilon) / (1 + epsilon) of the context.
 *
 * # Safety
 * `ctx` must be null or a live context; `out` null or writable.
 */
enum ScStatus sc_context_contrast(const struct ScContext *ctx, double *out);

/**
 * Interaction energy at gap ratio `z_over_r`, all m blocks up to `l_max`.
 *
 * # Safety
 * `ctx` must be null or a live context; `out` null or writable.
 */
enum ScStatus sc_energy(const struct ScContext *ctx,
                        double z_over_r,
                        size_t l_max,
                        struct ScEnergy *out);

/**
 * Energy with `L` doubled until the relative change is at most `tol`
 * (or `l_cap` is reached, reported as `converged = false`).
 *
 * # Safety
 * `ctx` must be null or a live context; `out` null or writable.
 */
enum ScStatus sc_energy_converged(const struct ScContext *ctx,
                                  double z_over_r,
                                  double tol,
                                  size_t l_cap,
                                  struct ScEnergy *out);

/**
 * Force for a sphere of radius `radius_nm` at gap `gap_nm`, all m blocks
 * up to `l_max`.
 *
 * # Safety
 * `ctx` must be null or a live context; `out` null or writable.
 */
enum ScStatus sc_force(const struct ScContext *ctx,
                       double radius_nm,
                       double gap_nm,
                       size_t l_max,
                       enum ScForceMethod method,
                       struct ScForce *out);

/**
 * Force at the truncation that converges the energy to `tol`.
 *
 * # Safety
 * `ctx` must be null or a live context; `out` null or writable.
 */
enum ScStatus sc_force_converged(const struct ScContext *ctx,
                                 double radius_nm,
                                 double gap_nm,
                                 double tol,
                                 size_t l_cap,
                                 enum ScForceMethod method,
                                 struct ScForce *out);

/**
 * Message of the last failing call on this thread, or null if none.
 * Valid until the next failing call on the same thread.
 */
const char *sc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPHERE_CASIMIR_H */
