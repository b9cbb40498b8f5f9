#ifndef GBLAB_H
#define GBLAB_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GbStatus {
  GB_STATUS_OK = 0,
  GB_STATUS_NULL_POINTER = 1,
  GB_STATUS_INVALID_ARGUMENT = 2,
  GB_STATUS_SINGULAR = 3,
  GB_STATUS_COMPUTATION = 4,
  GB_STATUS_BUFFER_TOO_SMALL = 5,
  GB_STATUS_PANIC = 6,
} GbStatus;

/**
 * Result of a rank-one diagonalization.
 */
typedef struct GbDiagonalization GbDiagonalization;

/**
 * Fundamental cycle of the double complex.
 */
typedef struct GbDoubleChain GbDoubleChain;

/**
 * Flat symmetric bilinear tensor `h[λ][i][j]`.
 */
typedef struct GbFlatTensor GbFlatTensor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *gb_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gb_version(void);

/**
 * Pfaffian of the `dim × dim` skew matrix stored row-major in `entries`.
 *
 * # Safety
 * `entries` must point to `dim * dim` doubles and `out` to one double.
 */
enum GbStatus gb_pfaffian(const double *entries, size_t dim, double *out);

/**
 * Builds a tensor from `n³` values ordered `h[λ][i][j]`.
 *
 * # Safety
 * `h` must point to `n * n * n` doubles and `out` to a writable pointer.
 */
enum GbStatus gb_flat_tensor_new(const double *h, size_t n, struct GbFlatTensor **out);

/**
 * # Safety
 * `t` must be null or come from [`gb_flat_tensor_new`] and not be freed twice.
 */
void gb_flat_tensor_free(struct GbFlatTensor *t);

/**
 * Rank-one diagonalization of a flat tensor.
 *
 * # Safety
 * `t` must be a live tensor handle and `out` a writable pointer.
 */
enum GbStatus gb_diagonalize(const struct GbFlatTensor *t,
                             uint64_t seed,
                             struct GbDiagonalization **out);

/**
 * Dimension `n` of a diagonalization; 0 for a null handle.
 *
 * # Safety
 * `d` must be null or a live handle.
 */
size_t gb_diagonalization_dim(const struct GbDiagonalization *d);

/**
 * Unit rank-one directions, row `k` holding `v_k`; `n²` values.
 *
 * # Safety
 * `d` must be a live handle and `out` must hold `len` doubles.
 */
enum GbStatus gb_diagonalization_basis(const struct GbDiagonalization *d, double *out, size_t len);

/**
 * One-forms `φ_k` as rows; `n²` values.
 *
 * # Safety
 * `d` must be a live handle and `out` must hold `len` doubles.
 */
enum GbStatus gb_diagonalization_phi(const struct GbDiagonalization *d, double *out, size_t len);

/**
 * Coefficients `a[λ][k]` row-major; `n²` values.
 *
 * # Safety
 * `d` must be a live handle and `out` must hold `len` doubles.
 */
enum GbStatus gb_diagonalization_a(const struct GbDiagonalization *d, double *out, size_t len);

/**
 * Reconstruction residual `max |h - Σ a φ φᵀ|`; NaN for a null handle.
 *
 * # Safety
 * `d` must be null or a live handle.
 */
double gb_diagonalization_residual(const struct GbDiagonalization *d);

/**
 * # Safety
 * `d` must be null or come from [`gb_diagonalize`] and not be freed twice.
 */
void gb_diagonalization_free(struct GbDiagonalization *d);

/**
 * Monte Carlo solid-angle fractions of the `2n` dual cells of an `n × n`
 * row-major coframe, ordered `+1, -1, +2, -2, ...`.
 *
 * # Safety
 * `coframe` must hold `n * n` doubles and `out` must hold `len >= 2n` doubles.
 */
enum GbStatus gb_solid_angles(const double *coframe,
                              size_t n,
                              size_t samples,
                              uint64_t seed,
                              double *out,
                              size_t len);

/**
 * `1 - Σ fractions`, correctly rounded.
 *
 * # Safety
 * `fractions` must hold `len` doubles and `out` one double.
 */
enum GbStatus gb_hazzidakis(const double *fractions, size_t len, double *out);

/**
 * Builds the fundamental cycle in dimension `n >= 2`.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum GbStatus gb_fundamental_cycle_new(size_t n, struct GbDoubleChain **out);

/**
 * Number of nonzero terms; 0 for a null handle.
 *
 * # Safety
 * `z` must be null or a live handle.
 */
size_t gb_fundamental_cycle_len(const struct GbDoubleChain *z);

/**
 * Writes 1 to `closed` when the total boundary vanishes, else 0.
 *
 * # Safety
 * `z` must be a live handle and `closed` writable.
 */
enum GbStatus gb_fundamental_cycle_is_closed(const struct GbDoubleChain *z, int32_t *closed);

/**
 * JSON terms `[{simplex: {I, g}, cube: {I, g}, coeff}]`, NUL-terminated.
 * `needed` receives the size including the terminator; pass a null `buf`
 * to query it.
 *
 * # Safety
 * `z` must be a live handle, `buf` null or `cap` bytes, `needed` writable.
 */
enum GbStatus gb_fundamental_cycle_json(const struct GbDoubleChain *z,
                                        char *buf,
                                        size_t cap,
                                        size_t *needed);

/**
 * # Safety
 * `z` must be null or come from [`gb_fundamental_cycle_new`] and not be freed twice.
 */
void gb_fundamental_cycle_free(struct GbDoubleChain *z);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GBLAB_H */
