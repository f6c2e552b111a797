#ifndef BERGMAN_LAB_H
#define BERGMAN_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define BL_OK 0

// Null pointer, invalid UTF-8 or an output buffer that is too small.
#define BL_ERR_ARGUMENT 1

// A Rust panic was caught at the boundary.
#define BL_ERR_INTERNAL 99

// Experiment configuration.
typedef struct BlConfig BlConfig;

// Kernel engine built from a configuration.
typedef struct BlEngine BlEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL terminated,
// truncated to `cap - 1` bytes). Returns the full message length.
//
// # Safety
// `buf` must be null or point to `cap` writable bytes.
size_t bl_last_error(char *buf, size_t cap);

// Parses a flat TOML configuration; a null `toml` gives the defaults.
//
// # Safety
// `toml` must be null or a NUL-terminated string; `out` must be writable.
int32_t bl_config_new(const char *toml, struct BlConfig **out);

// # Safety
// `cfg` must be null or a handle from [`bl_config_new`] not yet freed.
void bl_config_free(struct BlConfig *cfg);

// Writes the 64 hex digit configuration hash and a NUL into `buf`, which
// must hold at least 65 bytes.
//
// # Safety
// `cfg` must be a live handle and `buf` must point to `cap` writable bytes.
int32_t bl_config_hash(const struct BlConfig *cfg, char *buf, size_t cap);

// Runs one harness command (`"kernel"`, `"hankel"`, `"omega-scan"`, ...)
// and writes its files into `out_dir`.
//
// # Safety
// `cfg` must be a live handle; `command` and `out_dir` NUL-terminated strings.
int32_t bl_run(const struct BlConfig *cfg, const char *command, const char *out_dir);

// Builds the kernel engine selected by the configuration.
//
// # Safety
// `cfg` must be a live handle and `out` writable.
int32_t bl_engine_new(const struct BlConfig *cfg, struct BlEngine **out);

// # Safety
// `engine` must be null or a handle from [`bl_engine_new`] not yet freed.
void bl_engine_free(struct BlEngine *engine);

// Complex dimension of the engine's domain, 0 for a null handle.
//
// # Safety
// `engine` must be null or a live handle.
size_t bl_engine_dim(const struct BlEngine *engine);

// Evaluates `B(z, w)` into `out[0] + i out[1]`.
//
// # Safety
// `z` and `w` must hold `2 * dim` doubles and `out` two.
int32_t bl_kernel(const struct BlEngine *engine, const double *z, const double *w, double *out);

// Bergman metric at `z`: `g` receives the `dim x dim` complex matrix in
// row-major order (interleaved, `2 * dim * dim` doubles), `det` its
// determinant. Either output may be null.
//
// # Safety
// `z` must hold `2 * dim` doubles; non-null outputs must be large enough.
int32_t bl_metric(const struct BlEngine *engine, const double *z, double *g, double *det);

// Singular values of the Hankel operator with the configured symbol,
// truncated at `degree`, in decreasing order. At most `cap` values are
// written; `len` receives the total count.
//
// # Safety
// `cfg` must be a live handle, `out` must hold `cap` doubles (or be null
// when `cap` is 0) and `len` must be writable.
int32_t bl_hankel_singular_values(const struct BlConfig *cfg,
                                  size_t degree,
                                  double *out,
                                  size_t cap,
                                  size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BERGMAN_LAB_H */
