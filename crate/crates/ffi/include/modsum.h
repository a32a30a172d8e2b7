#ifndef MODSUM_H
#define MODSUM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every entry point.
 */
typedef enum {
  MODSUM_STATUS_OK = 0,
  MODSUM_STATUS_NULL_POINTER = 1,
  MODSUM_STATUS_INVALID_UTF8 = 2,
  MODSUM_STATUS_PARSE_ERROR = 3,
  MODSUM_STATUS_VALIDATION_ERROR = 4,
  MODSUM_STATUS_DOMAIN_ERROR = 5,
  MODSUM_STATUS_DIMENSION_ERROR = 6,
  MODSUM_STATUS_GUARD_EXCEEDED = 7,
  MODSUM_STATUS_PRECONDITION_FAILED = 8,
  MODSUM_STATUS_NON_CONVERGED = 9,
  MODSUM_STATUS_BUFFER_TOO_SMALL = 10,
  MODSUM_STATUS_INTERNAL_ERROR = 11,
} ModsumStatus;

/**
 * How a capacity value was obtained.
 */
typedef enum {
  MODSUM_METHOD_ALTERNATING = 0,
  MODSUM_METHOD_GRID = 1,
  MODSUM_METHOD_CLOSED_FORM = 2,
} ModsumMethod;

/**
 * Decoder selector for the simulator.
 */
typedef enum {
  MODSUM_DECODER_MAX_LIKELIHOOD = 0,
  MODSUM_DECODER_TYPICALITY = 1,
} ModsumDecoder;

/**
 * Opaque handle to a validated relay channel spec.
 */
typedef struct ModsumSpec ModsumSpec;

/**
 * Capacity value plus the optimizing quantizer's operating point.
 */
typedef struct {
  double capacity;
  double r0;
  double quantizer_rate;
  double quantizer_distortion;
  double constraint_slack;
  uint64_t restarts;
  ModsumMethod method;
  bool converged;
} ModsumCapacityResult;

/**
 * Outcome of the exhaustive converse verification.
 */
typedef struct {
  double min_conditional_entropy;
  double bound;
  uint64_t encoder_count;
  bool pass;
} ModsumConverseResult;

/**
 * Simulation parameters. `typ_tol < 0` selects the default
 * 0.05 + 1/sqrt(n).
 */
typedef struct {
  uint32_t n;
  double rate;
  uint64_t trials;
  uint64_t seed;
  ModsumDecoder decoder;
  double typ_tol;
  double u_rate_margin;
  /**
   * Nonzero replaces the optimized quantizer with a constant U.
   */
  bool use_constant_u;
  bool enforce_pipe_rate;
} ModsumSimParams;

/**
 * Monte Carlo block-error estimates.
 */
typedef struct {
  double block_error_rate;
  double ci_low;
  double ci_high;
  uint64_t quantize_failures;
  uint64_t decode_errors;
  uint64_t atypical_source;
  uint64_t trials;
} ModsumSimResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message for this thread; empty string when no error has
 * occurred. Valid until the next failing call on the same thread.
 */
const char *modsum_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *modsum_status_name(ModsumStatus status);

/**
 * Build the binary instance: Z ~ Ber(p), Y1 = Z xor Ber(delta), and a
 * BSC(epsilon) relay link.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
ModsumStatus modsum_spec_bsc(double p, double delta, double epsilon, ModsumSpec **out);

/**
 * Build the binary instance with an explicit relay link rate.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
ModsumStatus modsum_spec_bsc_rate(double p, double delta, double r0, ModsumSpec **out);

/**
 * Parse a JSON channel spec document.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out` valid for writing.
 */
ModsumStatus modsum_spec_parse_json(const char *text, ModsumSpec **out);

/**
 * Render the canonical JSON form into a caller buffer. On success,
 * `*written` holds the length excluding the trailing NUL; when the buffer
 * is too small (or null), `*written` holds the required capacity including
 * the NUL and the call returns `BufferTooSmall`.
 *
 * # Safety
 * `buf` must be valid for `cap` bytes when non-null; `written` valid for
 * writing.
 */
ModsumStatus modsum_spec_canonical_json(const ModsumSpec *spec,
                                        char *buf,
                                        size_t cap,
                                        size_t *written);

/**
 * Release a spec handle. Null is a no-op.
 *
 * # Safety
 * `spec` must be a handle returned by a `modsum_spec_*` constructor, not
 * yet freed.
 */
void modsum_spec_free(ModsumSpec *spec);

/**
 * Capacity of the relay link alone (the stored rate, or the link DMC
 * capacity to within `tol`).
 *
 * # Safety
 * Valid `spec` handle; `out` valid for writing.
 */
ModsumStatus modsum_relay_link_capacity(const ModsumSpec *spec, double tol, double *out);

/**
 * No-relay baseline log2(m) - H(Z).
 *
 * # Safety
 * Valid `spec` handle; `out` valid for writing.
 */
ModsumStatus modsum_direct_link_capacity(const ModsumSpec *spec, double *out);

/**
 * Relay channel capacity by the quantizer optimizer (deterministic for a
 * fixed seed).
 *
 * # Safety
 * Valid `spec` handle; `out` valid for writing.
 */
ModsumStatus modsum_capacity(const ModsumSpec *spec, uint64_t seed, ModsumCapacityResult *out);

/**
 * Closed-form capacity of the binary uniform-noise instance.
 *
 * # Safety
 * `out` must be valid for writing.
 */
ModsumStatus modsum_capacity_closed_form(double r0, double delta, double *out);

/**
 * Cut-set bound min(r0, 1 - h(delta)) of the binary uniform-noise
 * instance.
 *
 * # Safety
 * `out` must be valid for writing.
 */
ModsumStatus modsum_cutset_bound(double r0, double delta, double *out);

/**
 * Conditional entropy-power lower bound h(h^-1(alpha) * delta).
 *
 * # Safety
 * `out` must be valid for writing.
 */
ModsumStatus modsum_mgl_bound(double alpha, double delta, double *out);

/**
 * Exhaustively verify the converse inequality at blocklength `n`.
 *
 * # Safety
 * Valid `spec` handle; `out` valid for writing.
 */
ModsumStatus modsum_verify_converse(const ModsumSpec *spec, uint32_t n, ModsumConverseResult *out);

/**
 * Monte Carlo simulation of the quantize-and-forward scheme. The quantizer
 * is the optimizer's output unless `params.use_constant_u` is set.
 *
 * # Safety
 * Valid `spec` handle; `params` and `out` valid for reads/writes.
 */
ModsumStatus modsum_simulate(const ModsumSpec *spec,
                             const ModsumSimParams *params,
                             ModsumSimResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MODSUM_H */
