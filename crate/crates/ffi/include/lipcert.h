#ifndef LIPCERT_H
#define LIPCERT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum LipcertStatus {
  LIPCERT_STATUS_OK = 0,
  LIPCERT_STATUS_NULL_POINTER = 1,
  LIPCERT_STATUS_INVALID_INPUT = 2,
  LIPCERT_STATUS_PARSE = 3,
  LIPCERT_STATUS_UNSUPPORTED_NORM = 4,
  LIPCERT_STATUS_NOT_APPLICABLE = 5,
  LIPCERT_STATUS_BUDGET = 6,
  LIPCERT_STATUS_INTERNAL = 7,
} LipcertStatus;

/**
 * Which bound `lipcert_certify` computes.
 */
typedef enum LipcertMethod {
  LIPCERT_METHOD_AUTO = 0,
  LIPCERT_METHOD_PRODUCT = 1,
  LIPCERT_METHOD_THETA = 2,
  LIPCERT_METHOD_VARTHETA = 3,
  LIPCERT_METHOD_POSITIVE = 4,
  LIPCERT_METHOD_ABSOLUTE = 5,
} LipcertMethod;

/**
 * Individual values of a report, for `lipcert_report_value`.
 */
typedef enum LipcertBound {
  LIPCERT_BOUND_PRODUCT = 0,
  LIPCERT_BOUND_LINEAR = 1,
  LIPCERT_BOUND_THETA = 2,
  LIPCERT_BOUND_VARTHETA = 3,
  LIPCERT_BOUND_VARTHETA_SAMPLE_LOWER = 4,
  LIPCERT_BOUND_POSITIVE_COLLAPSE = 5,
  LIPCERT_BOUND_ABSOLUTE = 6,
  LIPCERT_BOUND_CERTIFIED = 7,
} LipcertBound;

/**
 * Opaque network handle.
 */
typedef struct LipcertNetwork LipcertNetwork;

/**
 * Opaque certificate report handle.
 */
typedef struct LipcertReport LipcertReport;

/**
 * Certification settings. Null norm strings mean the Euclidean norm; a zero
 * budget means the library default.
 */
typedef struct LipcertOptions {
  enum LipcertMethod method;
  const char *norm_in;
  const char *norm_out;
  uint64_t budget;
  uint32_t sample_trials;
  uint64_t seed;
} LipcertOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a lipnet document.
 *
 * # Safety
 * `text` must be a nul-terminated string and `out` a valid pointer.
 */
enum LipcertStatus lipcert_network_parse(const char *text, struct LipcertNetwork **out);

/**
 * Reads and parses a lipnet file.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum LipcertStatus lipcert_network_load(const char *path, struct LipcertNetwork **out);

/**
 * Releases a network. Null is ignored.
 *
 * # Safety
 * `net` must come from this library and not be used afterwards.
 */
void lipcert_network_free(struct LipcertNetwork *net);

/**
 * Input dimension, or 0 for a null handle.
 *
 * # Safety
 * `net` must be null or a live handle.
 */
size_t lipcert_network_input_dim(const struct LipcertNetwork *net);

/**
 * Output dimension, or 0 for a null handle.
 *
 * # Safety
 * `net` must be null or a live handle.
 */
size_t lipcert_network_output_dim(const struct LipcertNetwork *net);

/**
 * Number of layers, or 0 for a null handle.
 *
 * # Safety
 * `net` must be null or a live handle.
 */
size_t lipcert_network_depth(const struct LipcertNetwork *net);

/**
 * Evaluates the network at `x` (length `x_len`) into `y` (length `y_len`).
 *
 * # Safety
 * `x` and `y` must point to at least `x_len` and `y_len` doubles.
 */
enum LipcertStatus lipcert_network_forward(const struct LipcertNetwork *net,
                                           const double *x,
                                           size_t x_len,
                                           double *y,
                                           size_t y_len);

/**
 * Defaults: automatic method, Euclidean norms, default budget, 64 sample
 * trials, seed 0.
 */
struct LipcertOptions lipcert_options_default(void);

/**
 * Computes a certificate report. `options` may be null for the defaults.
 *
 * # Safety
 * `net` must be a live handle, `options` null or valid, `out` valid.
 */
enum LipcertStatus lipcert_certify(const struct LipcertNetwork *net,
                                   const struct LipcertOptions *options,
                                   struct LipcertReport **out);

/**
 * Releases a report. Null is ignored.
 *
 * # Safety
 * `report` must come from this library and not be used afterwards.
 */
void lipcert_report_free(struct LipcertReport *report);

/**
 * Reads one value of a report. Returns `NotApplicable` when the bound was
 * not computed.
 *
 * # Safety
 * `report` must be a live handle and `out` valid.
 */
enum LipcertStatus lipcert_report_value(const struct LipcertReport *report,
                                        enum LipcertBound which,
                                        double *out);

/**
 * Whether the reported ϑ comes from exhaustive enumeration.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
bool lipcert_report_vartheta_exact(const struct LipcertReport *report);

/**
 * The report as JSON. Free with `lipcert_string_free`; null on failure.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
char *lipcert_report_json(const struct LipcertReport *report);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void lipcert_string_free(char *s);

/**
 * Declared averagedness constant of a catalog activation spec such as
 * `"elu(beta=0.5)"`.
 *
 * # Safety
 * `spec` must be a nul-terminated string and `out` valid.
 */
enum LipcertStatus lipcert_activation_alpha(const char *spec, double *out);

/**
 * Message for the last failure on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *lipcert_last_error(void);

/**
 * Library version, a static string.
 */
const char *lipcert_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIPCERT_H */
