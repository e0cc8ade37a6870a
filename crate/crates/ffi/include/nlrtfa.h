#ifndef NLRTFA_H
#define NLRTFA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status code returned by every fallible function.
 */
typedef enum NlrtfaStatus {
  NLRTFA_STATUS_OK = 0,
  NLRTFA_STATUS_NULL_POINTER = 1,
  NLRTFA_STATUS_INVALID_ARGUMENT = 2,
  NLRTFA_STATUS_DIMENSION_MISMATCH = 3,
  NLRTFA_STATUS_NUMERICAL = 4,
  NLRTFA_STATUS_IO = 5,
  NLRTFA_STATUS_FORMAT = 6,
  NLRTFA_STATUS_PANIC = 7,
} NlrtfaStatus;

/*
 Grayscale image of `f64` pixels, row-major.
 */
typedef struct NlrtfaImage NlrtfaImage;

/*
 Measurement vector produced by an operator.
 */
typedef struct NlrtfaMeasurement NlrtfaMeasurement;

/*
 Sensing operator: partial Fourier with a radial mask, or dense Gaussian.
 */
typedef struct NlrtfaOperator NlrtfaOperator;

/*
 Solver parameters. Obtain defaults with [`nlrtfa_config_default`].
 */
typedef struct NlrtfaConfig {
  double eta;
  double beta;
  size_t outer_iters;
  size_t inner_iters;
  size_t rank;
  size_t refine_sweeps;
  size_t patch_rows;
  size_t patch_cols;
  size_t group_size;
  size_t stride;
  /*
   0 searches the whole image.
   */
  size_t search_window;
  double noise_eta_scale;
} NlrtfaConfig;

/*
 Outcome of [`nlrtfa_reconstruct`]. PSNR fields are NaN without a reference.
 */
typedef struct NlrtfaRunSummary {
  size_t outer_iters_run;
  double initial_psnr;
  double final_psnr;
  size_t degenerate_groups;
  double seconds;
} NlrtfaRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL after a success.
 The pointer stays valid until the next library call on the same thread.
 */
const char *nlrtfa_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *nlrtfa_version(void);

/*
 Creates a `height` x `width` image from `height * width` row-major values.
 `data` may be NULL for an all-zero image.

 # Safety
 `data`, when non-NULL, must point to `height * width` readable doubles;
 `out` must be a valid pointer.
 */
enum NlrtfaStatus nlrtfa_image_new(size_t height,
                                   size_t width,
                                   const double *data,
                                   struct NlrtfaImage **out);

/*
 Loads an 8-bit grayscale (or colour, converted to luma) image file.

 # Safety
 `path` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum NlrtfaStatus nlrtfa_image_load(const char *path, struct NlrtfaImage **out);

/*
 Writes `image`, clamped to [0, 255] and rounded, as an 8-bit PNG.

 # Safety
 `image` must come from this library; `path` must be NUL-terminated.
 */
enum NlrtfaStatus nlrtfa_image_save(const struct NlrtfaImage *image, const char *path);

/*
 Releases an image. NULL is ignored.

 # Safety
 `image` must be NULL or a handle not yet freed.
 */
void nlrtfa_image_free(struct NlrtfaImage *image);

/*
 # Safety
 `image` must come from this library; `height` and `width` must be valid.
 */
enum NlrtfaStatus nlrtfa_image_dims(const struct NlrtfaImage *image, size_t *height, size_t *width);

/*
 Copies the pixels row-major into `out`, which holds `len` doubles.

 # Safety
 `out` must point to `len` writable doubles.
 */
enum NlrtfaStatus nlrtfa_image_copy_data(const struct NlrtfaImage *image, double *out, size_t len);

/*
 Partial Fourier operator with a pseudo-radial mask of sampling ratio `csr`.

 # Safety
 `out` must be a valid pointer.
 */
enum NlrtfaStatus nlrtfa_operator_radial(size_t height,
                                         size_t width,
                                         double csr,
                                         struct NlrtfaOperator **out);

/*
 Dense Gaussian operator with `round(csr * height * width)` rows.

 # Safety
 `out` must be a valid pointer.
 */
enum NlrtfaStatus nlrtfa_operator_gaussian(size_t height,
                                           size_t width,
                                           double csr,
                                           uint64_t seed,
                                           struct NlrtfaOperator **out);

/*
 Releases an operator. NULL is ignored.

 # Safety
 `op` must be NULL or a handle not yet freed.
 */
void nlrtfa_operator_free(struct NlrtfaOperator *op);

/*
 Number of measurements and the achieved sampling ratio.

 # Safety
 All pointers must be valid.
 */
enum NlrtfaStatus nlrtfa_operator_info(const struct NlrtfaOperator *op,
                                       size_t *measurements,
                                       double *csr);

/*
 `y = Phi x + e` with Gaussian noise of standard deviation `sigma`.

 # Safety
 All pointers must be valid handles or out-pointers.
 */
enum NlrtfaStatus nlrtfa_measure(const struct NlrtfaOperator *op,
                                 const struct NlrtfaImage *image,
                                 double sigma,
                                 uint64_t noise_seed,
                                 struct NlrtfaMeasurement **out);

/*
 Releases a measurement. NULL is ignored.

 # Safety
 `y` must be NULL or a handle not yet freed.
 */
void nlrtfa_measurement_free(struct NlrtfaMeasurement *y);

/*
 Number of entries, and whether they are complex.

 # Safety
 All pointers must be valid.
 */
enum NlrtfaStatus nlrtfa_measurement_info(const struct NlrtfaMeasurement *y,
                                          size_t *len,
                                          bool *is_complex);

/*
 Fills `out` with the default solver parameters.

 # Safety
 `out` must be a valid pointer.
 */
enum NlrtfaStatus nlrtfa_config_default(struct NlrtfaConfig *out);

/*
 Reconstructs an image from `y`. `config` NULL means defaults; `sigma` is the
 measurement noise level used to scale `eta`. `reference` and `summary` may
 be NULL. The result is clamped to [0, 255].

 # Safety
 Non-NULL pointers must be valid handles or out-pointers.
 */
enum NlrtfaStatus nlrtfa_reconstruct(const struct NlrtfaOperator *op,
                                     const struct NlrtfaMeasurement *y,
                                     const struct NlrtfaConfig *config,
                                     double sigma,
                                     uint64_t seed,
                                     const struct NlrtfaImage *reference,
                                     struct NlrtfaImage **out,
                                     struct NlrtfaRunSummary *summary);

/*
 PSNR in dB with peak 255; identical images give +infinity.

 # Safety
 All pointers must be valid.
 */
enum NlrtfaStatus nlrtfa_psnr(const struct NlrtfaImage *a,
                              const struct NlrtfaImage *b,
                              double *out);

/*
 Mean SSIM over 11x11 Gaussian windows.

 # Safety
 All pointers must be valid.
 */
enum NlrtfaStatus nlrtfa_ssim(const struct NlrtfaImage *a,
                              const struct NlrtfaImage *b,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NLRTFA_H */
