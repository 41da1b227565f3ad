#ifndef SDGC_H
#define SDGC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Denoiser selection for [`sdgc_bundle_run_clip`].
 */
typedef enum SdgcDenoiser {
  SDGC_DENOISER_NONE = 0,
  SDGC_DENOISER_MMSE_ONLY = 1,
  SDGC_DENOISER_SD = 2,
  SDGC_DENOISER_MSD = 3,
  SDGC_DENOISER_PSD = 4,
} SdgcDenoiser;

/**
 * Status codes. Zero is success; everything else is a failure.
 */
typedef enum SdgcStatus {
  SDGC_STATUS_OK = 0,
  SDGC_STATUS_NULL_POINTER = 1,
  SDGC_STATUS_INVALID_ARGUMENT = 2,
  SDGC_STATUS_SHAPE_MISMATCH = 3,
  SDGC_STATUS_NON_FINITE = 4,
  SDGC_STATUS_DIVERGENCE = 5,
  SDGC_STATUS_INFEASIBLE = 6,
  SDGC_STATUS_CONFIG = 7,
  SDGC_STATUS_FORMAT = 8,
  SDGC_STATUS_IO = 9,
  SDGC_STATUS_BUFFER_TOO_SMALL = 10,
  SDGC_STATUS_PANIC = 11,
} SdgcStatus;

/**
 * Opaque trained-bundle handle.
 */
typedef struct SdgcBundle SdgcBundle;

/**
 * Opaque network handle.
 */
typedef struct SdgcModel SdgcModel;

/**
 * Scalar outputs of one end-to-end run.
 */
typedef struct SdgcClipResult {
  double mse;
  double psnr_db;
  double t_exe;
  double h_true;
  double h_hat;
  uintptr_t keyframes;
} SdgcClipResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message into `buf` (NUL
 * terminated, truncated to fit). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t sdgc_last_error(char *buf, uintptr_t len);

/**
 * Create a network with Glorot-uniform weights. `activation` is 0 relu,
 * 1 tanh, 2 identity, 3 sigmoid and applies to every layer.
 *
 * # Safety
 * `widths` must point to `n_widths` values; `out` must be writable.
 */
enum SdgcStatus sdgc_model_new(const uintptr_t *widths,
                               uintptr_t n_widths,
                               uint8_t activation,
                               uint64_t seed,
                               struct SdgcModel **out);

/**
 * Load a network checkpoint.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SdgcStatus sdgc_model_load(const char *path, struct SdgcModel **out);

/**
 * Write a network checkpoint with an empty tag.
 *
 * # Safety
 * `model` must come from this library; `path` must be NUL-terminated.
 */
enum SdgcStatus sdgc_model_save(const struct SdgcModel *model, const char *path);

/**
 * Input and output widths.
 *
 * # Safety
 * `model` must come from this library; the out pointers must be writable.
 */
enum SdgcStatus sdgc_model_dims(const struct SdgcModel *model,
                                uintptr_t *inputs,
                                uintptr_t *outputs);

/**
 * Forward `rows` packed input rows into `output` (`rows × outputs`).
 *
 * # Safety
 * `input` must hold `rows × inputs` values and `output` `output_len`.
 */
enum SdgcStatus sdgc_model_forward(const struct SdgcModel *model,
                                   const double *input,
                                   uintptr_t rows,
                                   double *output,
                                   uintptr_t output_len);

/**
 * Release a network. Null is ignored.
 *
 * # Safety
 * `model` must be null or come from this library and not be used again.
 */
void sdgc_model_free(struct SdgcModel *model);

/**
 * Denoise a received latent with a known gain, using `model` as the noise
 * estimator on a linear schedule and noise-matched guidance.
 *
 * # Safety
 * `received` and `output` must hold `dim` values.
 */
enum SdgcStatus sdgc_sd_denoise(const struct SdgcModel *model,
                                const double *received,
                                uintptr_t dim,
                                double gain,
                                double noise_power,
                                uintptr_t steps,
                                double beta_start,
                                double beta_end,
                                uint64_t seed,
                                double *output);

/**
 * Elementwise MMSE equalization `ĥ·y / (ĥ² + σ²/p)`.
 *
 * # Safety
 * `received` and `output` must hold `len` values.
 */
enum SdgcStatus sdgc_mmse_equalize(const double *received,
                                   uintptr_t len,
                                   double gain,
                                   double noise_power,
                                   double power,
                                   double *output);

/**
 * PSNR in dB for an 8-bit MSE; infinite for zero.
 *
 * # Safety
 * `out` must be writable.
 */
enum SdgcStatus sdgc_psnr(double mse, double *out);

/**
 * Load a trained bundle directory.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum SdgcStatus sdgc_bundle_load(const char *path, struct SdgcBundle **out);

/**
 * Frame geometry the bundle was trained for.
 *
 * # Safety
 * `bundle` must come from this library; out pointers must be writable.
 */
enum SdgcStatus sdgc_bundle_geometry(const struct SdgcBundle *bundle,
                                     uintptr_t *frames,
                                     uintptr_t *height,
                                     uintptr_t *width);

/**
 * Send one RGB clip (`frames × height × width × 3` bytes) through the
 * link and write the reconstruction into `output` (same size).
 *
 * # Safety
 * `pixels` must hold the clip, `output` `output_len` bytes and `result`
 * must be writable.
 */
enum SdgcStatus sdgc_bundle_run_clip(const struct SdgcBundle *bundle,
                                     const uint8_t *pixels,
                                     uintptr_t frames,
                                     uintptr_t height,
                                     uintptr_t width,
                                     enum SdgcDenoiser denoiser,
                                     double snr_db,
                                     double t_max,
                                     uint64_t seed,
                                     uint8_t *output,
                                     uintptr_t output_len,
                                     struct SdgcClipResult *result);

/**
 * Release a bundle. Null is ignored.
 *
 * # Safety
 * `bundle` must be null or come from this library and not be used again.
 */
void sdgc_bundle_free(struct SdgcBundle *bundle);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SDGC_H */
