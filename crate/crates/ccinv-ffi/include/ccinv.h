/* C interface to the ccinv stochastic matrix inversion library. */

#ifndef CCINV_H
#define CCINV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Noise family selector for the stochastic estimators.
 */
typedef enum CcxNoise {
  Z2 = 0,
  Gaussian = 1,
} CcxNoise;

/**
 * Status codes returned by every fallible function.
 */
typedef enum CcxStatus {
  Ok = 0,
  InvalidInput = 1,
  Diverged = 2,
  NoConvergence = 3,
  Io = 4,
  NullPointer = 5,
} CcxStatus;

/**
 * Opaque matrix handle.
 */
typedef struct CcxMatrix CcxMatrix;

/**
 * One stochastic (or exact) trace estimate.
 */
typedef struct CcxEstimate {
  double value_re;
  double value_im;
  double mc_std_error;
  double sample_variance;
  double effective_length;
  uint64_t burn_in_cycles;
  uint64_t samples;
  /**
   * 1 when the stopping rule fired, 0 when the cycle cap did.
   */
  int32_t converged;
} CcxEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the most recent failure on this thread. Valid until
 * the next ccx call on the thread; never null.
 */
const char *ccx_last_error_message(void);

/**
 * Read a Matrix Market file. Returns null on failure; see
 * [`ccx_last_error_message`].
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
struct CcxMatrix *ccx_matrix_read(const char *path);

/**
 * Write the matrix in Matrix Market format.
 *
 * # Safety
 * `m` must be a live handle; `path` a valid NUL-terminated string.
 */
enum CcxStatus ccx_matrix_write(const struct CcxMatrix *m, const char *path);

/**
 * Free lattice fermion operator on a periodic 4-torus; complex valued.
 * Returns null on invalid extents.
 */
struct CcxMatrix *ccx_matrix_generate_dirac(uint64_t n0,
                                            uint64_t n1,
                                            uint64_t n2,
                                            uint64_t n3,
                                            double hopping);

/**
 * Mixed-model coefficient matrix over a simulated pedigree; real
 * valued, order herds + animals. Returns null on invalid parameters.
 */
struct CcxMatrix *ccx_matrix_generate_wu_schaeffer(uint64_t animals,
                                                   uint64_t herds,
                                                   uint64_t generations,
                                                   double unknown_fraction,
                                                   double lambda,
                                                   double variance_ratio,
                                                   uint64_t seed);

/**
 * # Safety
 * `m` must be a live handle.
 */
uint64_t ccx_matrix_order(const struct CcxMatrix *m);

/**
 * # Safety
 * `m` must be a live handle.
 */
uint64_t ccx_matrix_nnz(const struct CcxMatrix *m);

/**
 * # Safety
 * `m` must be a live handle.
 */
int32_t ccx_matrix_is_complex(const struct CcxMatrix *m);

/**
 * Release a handle. Null is a no-op.
 *
 * # Safety
 * `m` must come from a ccx constructor and not be freed twice.
 */
void ccx_matrix_free(struct CcxMatrix *m);

/**
 * Coupled-chain estimate of `tr C^-1`.
 *
 * # Safety
 * `m` must be a live handle and `out` a valid pointer.
 */
enum CcxStatus ccx_cc_trace(const struct CcxMatrix *m,
                            enum CcxNoise noise,
                            uint64_t seed,
                            double rel_tolerance,
                            double burn_in_tolerance,
                            uint64_t max_cycles,
                            struct CcxEstimate *out);

/**
 * Independent-sampler estimate of `tr C^-1` with a BiCG inner solve.
 *
 * # Safety
 * `m` must be a live handle and `out` a valid pointer.
 */
enum CcxStatus ccx_se_trace(const struct CcxMatrix *m,
                            enum CcxNoise noise,
                            uint64_t seed,
                            double rel_tolerance,
                            double inner_tolerance,
                            uint64_t max_systems,
                            struct CcxEstimate *out);

/**
 * Exact `tr C^-1` by dense factorization; refuses orders above 4096.
 *
 * # Safety
 * `m` must be a live handle; `out_re` and `out_im` valid pointers.
 */
enum CcxStatus ccx_oracle_trace(const struct CcxMatrix *m, double *out_re, double *out_im);

/**
 * Power-iteration estimates of the sweep operator spectral radii.
 * Values below 1 predict convergence of the coupled chains.
 *
 * # Safety
 * `m` must be a live handle; `out_sp_t` and `out_sp_s` valid pointers.
 */
enum CcxStatus ccx_precheck(const struct CcxMatrix *m, double *out_sp_t, double *out_sp_s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CCINV_H */
