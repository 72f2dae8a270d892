#ifndef GMVAE_H
#define GMVAE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum GmvaeStatus {
  GMVAE_STATUS_OK = 0,
  GMVAE_STATUS_NULL_POINTER = 1,
  GMVAE_STATUS_INVALID_ARGUMENT = 2,
  GMVAE_STATUS_IO = 3,
  GMVAE_STATUS_FORMAT = 4,
  GMVAE_STATUS_MISMATCH = 5,
  GMVAE_STATUS_NON_FINITE = 6,
  GMVAE_STATUS_UNSUPPORTED = 7,
  GMVAE_STATUS_PANIC = 8,
} GmvaeStatus;

/**
 * A loaded model. Only ever handled through a pointer.
 */
typedef struct GmvaeModel GmvaeModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *gmvae_version(void);

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *gmvae_last_error_message(void);

/**
 * Loads a checkpoint. On success `*out` owns a new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum GmvaeStatus gmvae_model_load(const char *path, struct GmvaeModel **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `model` must come from [`gmvae_model_load`] and not be used afterwards.
 */
void gmvae_model_free(struct GmvaeModel *model);

/**
 * Architecture of a model. `is_gm` is 1 for the Gaussian-manifold model
 * and 0 for the Euclidean baseline. Any output pointer may be NULL.
 *
 * # Safety
 * `model` must be a live handle; non-NULL outputs must be writable.
 */
enum GmvaeStatus gmvae_model_info(const struct GmvaeModel *model,
                                  size_t *n_factors,
                                  size_t *input_dim,
                                  double *curvature,
                                  int32_t *is_gm);

/**
 * Encodes `rows` inputs of `input_dim` pixels into per-factor posterior
 * parameters, each output holding `rows · n_factors` values.
 *
 * # Safety
 * Buffers must hold the stated number of doubles.
 */
enum GmvaeStatus gmvae_model_encode(const struct GmvaeModel *model,
                                    const double *x,
                                    size_t rows,
                                    double *alpha,
                                    double *ln_beta,
                                    double *ln_gamma2);

/**
 * Decodes latent points `(mu, sigma)`, each `rows · n_factors` values, to
 * pixel probabilities, `rows · input_dim` values.
 *
 * # Safety
 * Buffers must hold the stated number of doubles.
 */
enum GmvaeStatus gmvae_model_decode(const struct GmvaeModel *model,
                                    const double *mu,
                                    const double *sigma,
                                    size_t rows,
                                    double *probs);

/**
 * Fisher–Rao distance between `(mu1, sigma1)` and `(mu2, sigma2)` on the
 * Gaussian manifold of curvature `-c`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GmvaeStatus gmvae_fisher_rao_distance(double mu1,
                                           double sigma1,
                                           double mu2,
                                           double sigma2,
                                           double c,
                                           double *out);

/**
 * Closed-form KL divergence between two single-factor PGM normals given
 * as `(alpha, ln beta, ln gamma²)`.
 *
 * # Safety
 * `p` and `q` must point to 3 doubles; `out` must be writable.
 */
enum GmvaeStatus gmvae_pgm_kl(const double *p, const double *q, double c, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GMVAE_H */
