#ifndef GSTK_H
#define GSTK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum GstkBoundary {
  GSTK_BOUNDARY_REPLICATE = 0,
  GSTK_BOUNDARY_REFLECT = 1,
  GSTK_BOUNDARY_ZERO = 2,
} GstkBoundary;

typedef enum GstkBuiltinKernel {
  // One-quadrant template, anchor at its bottom-right cell.
  GSTK_BUILTIN_KERNEL_QUADRANT = 0,
  // Symmetric 5x5 smoothing template.
  GSTK_BUILTIN_KERNEL_SMOOTH5 = 1,
  // 3x3 eight-neighbour Laplacian.
  GSTK_BUILTIN_KERNEL_LAPLACIAN3 = 2,
} GstkBuiltinKernel;

typedef enum GstkDtype {
  GSTK_DTYPE_U8 = 0,
  GSTK_DTYPE_U16 = 1,
} GstkDtype;

typedef enum GstkStatus {
  GSTK_STATUS_OK = 0,
  GSTK_STATUS_NULL_POINTER = 1,
  GSTK_STATUS_INVALID_ARGUMENT = 2,
  GSTK_STATUS_IO = 3,
  GSTK_STATUS_DOMAIN = 4,
  GSTK_STATUS_PANIC = 5,
} GstkStatus;

typedef enum GstkStretch {
  GSTK_STRETCH_ABS_LINEAR = 0,
  GSTK_STRETCH_SIGNED_LINEAR = 1,
} GstkStretch;

// Opaque single band.
typedef struct GstkBand GstkBand;

// Opaque multiband image.
typedef struct GstkImage GstkImage;

// Opaque integer template.
typedef struct GstkKernel GstkKernel;

// Opaque signed convolution response.
typedef struct GstkResponse GstkResponse;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until the
// next `gstk_*` call on the same thread.
const char *gstk_last_error_message(void);

// Frees a string returned by this library. NULL is ignored.
void gstk_string_free(char *s);

// Frees a byte buffer returned by this library. NULL is ignored.
void gstk_bytes_free(uint8_t *data, uintptr_t len);

enum GstkStatus gstk_kernel_builtin(enum GstkBuiltinKernel which, struct GstkKernel **out);

// Builds a kernel from `rows * cols` row-major coefficients.
enum GstkStatus gstk_kernel_new(uintptr_t rows,
                                uintptr_t cols,
                                uintptr_t anchor_row,
                                uintptr_t anchor_col,
                                const int32_t *coeffs,
                                struct GstkKernel **out);

// Parses kernel text (NUL-terminated UTF-8).
enum GstkStatus gstk_kernel_parse(const char *text, struct GstkKernel **out);

// Canonical kernel text; release with `gstk_string_free`.
enum GstkStatus gstk_kernel_format(const struct GstkKernel *k, char **out);

enum GstkStatus gstk_kernel_shape(const struct GstkKernel *k,
                                  uintptr_t *rows,
                                  uintptr_t *cols,
                                  uintptr_t *anchor_row,
                                  uintptr_t *anchor_col);

// Copies the row-major coefficients into `buf` (capacity `len`).
enum GstkStatus gstk_kernel_coeffs(const struct GstkKernel *k, int32_t *buf, uintptr_t len);

// `Σ k(i,j)·i^p·j^q` over anchor-relative `(dcol, drow)`.
enum GstkStatus gstk_kernel_moment(const struct GstkKernel *k,
                                   uint32_t p,
                                   uint32_t q,
                                   int64_t *out);

// Reflects a one-quadrant template into a full symmetric template.
enum GstkStatus gstk_kernel_symmetrize(const struct GstkKernel *k, struct GstkKernel **out);

void gstk_kernel_free(struct GstkKernel *k);

// Builds a band from `width * height` row-major samples.
enum GstkStatus gstk_band_new(uintptr_t width,
                              uintptr_t height,
                              enum GstkDtype dt,
                              const uint16_t *samples,
                              struct GstkBand **out);

enum GstkStatus gstk_band_read_pgm(const uint8_t *data, uintptr_t len, struct GstkBand **out);

// Encodes a band as binary PGM; release with `gstk_bytes_free(*out, *out_len)`.
enum GstkStatus gstk_band_write_pgm(const struct GstkBand *b, uint8_t **out, uintptr_t *out_len);

enum GstkStatus gstk_band_shape(const struct GstkBand *b,
                                uintptr_t *width,
                                uintptr_t *height,
                                enum GstkDtype *dt);

enum GstkStatus gstk_band_samples(const struct GstkBand *b, uint16_t *buf, uintptr_t len);

void gstk_band_free(struct GstkBand *b);

// Loads a GSTK1 image from `<stem>.hdr` / `<stem>.bsq`.
enum GstkStatus gstk_image_load(const char *path, struct GstkImage **out);

enum GstkStatus gstk_image_band_count(const struct GstkImage *img, uintptr_t *out);

// Copies band `index` (0-based) into a new band handle.
enum GstkStatus gstk_image_band(const struct GstkImage *img,
                                uintptr_t index,
                                struct GstkBand **out);

// Best Optimum Index Factor triple as 1-based band numbers. An infinite
// score (all three correlations zero) is reported as `INFINITY`.
enum GstkStatus gstk_image_oif_top(const struct GstkImage *img, uintptr_t *bands, double *score);

void gstk_image_free(struct GstkImage *img);

// Correlates `kernel` over `band`. `workers == 0` uses one thread per core.
enum GstkStatus gstk_convolve(const struct GstkBand *band,
                              const struct GstkKernel *kernel,
                              enum GstkBoundary boundary,
                              uintptr_t workers,
                              struct GstkResponse **out);

enum GstkStatus gstk_response_shape(const struct GstkResponse *r,
                                    uintptr_t *width,
                                    uintptr_t *height);

enum GstkStatus gstk_response_samples(const struct GstkResponse *r, int32_t *buf, uintptr_t len);

// Maps a response to an 8-bit display band with percentile clipping.
enum GstkStatus gstk_response_stretch(const struct GstkResponse *r,
                                      enum GstkStretch mode,
                                      double lo_pct,
                                      double hi_pct,
                                      struct GstkBand **out);

void gstk_response_free(struct GstkResponse *r);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* GSTK_H */
