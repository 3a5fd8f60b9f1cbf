#ifndef PINV_H
#define PINV_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PinvStatus {
  PINV_STATUS_OK = 0,
  PINV_STATUS_NULL_POINTER = 1,
  PINV_STATUS_INVALID_UTF8 = 2,
  PINV_STATUS_PARSE = 3,
  PINV_STATUS_SORT = 4,
  PINV_STATUS_NOT_SYMMETRIC = 5,
  PINV_STATUS_UNKNOWN_NAME = 6,
  PINV_STATUS_UNSUPPORTED_THEORY = 7,
  PINV_STATUS_SOLVER = 8,
  PINV_STATUS_IO = 9,
  PINV_STATUS_OUT_OF_RANGE = 10,
  PINV_STATUS_INTERNAL = 11,
} PinvStatus;

/**
 * A parsed proof graph.
 */
typedef struct PinvGraph PinvGraph;

/**
 * A parsed program.
 */
typedef struct PinvProgram PinvProgram;

/**
 * A parsed specification, bound to the program it was parsed against.
 */
typedef struct PinvSpec PinvSpec;

/**
 * Generated verification conditions.
 */
typedef struct PinvVcSet PinvVcSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call on the same thread.
 */
const char *pinv_last_error(void);

/**
 * Library version as a static string.
 */
const char *pinv_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void pinv_string_free(char *s);

/**
 * # Safety
 * `src` and `origin` must be NUL-terminated; `out` must be writable.
 */
enum PinvStatus pinv_program_parse(const char *src, const char *origin, struct PinvProgram **out);

/**
 * # Safety
 * `p` must be null or a handle from `pinv_program_parse`, freed once.
 */
void pinv_program_free(struct PinvProgram *p);

/**
 * Number of transitions of the program.
 *
 * # Safety
 * `p` must be a live program handle.
 */
enum PinvStatus pinv_program_transition_count(const struct PinvProgram *p, size_t *out);

/**
 * # Safety
 * `program` must be a live handle; strings NUL-terminated; `out` writable.
 */
enum PinvStatus pinv_spec_parse(const struct PinvProgram *program,
                                const char *src,
                                const char *origin,
                                struct PinvSpec **out);

/**
 * # Safety
 * `s` must be null or a handle from `pinv_spec_parse`, freed once.
 */
void pinv_spec_free(struct PinvSpec *s);

/**
 * # Safety
 * Strings NUL-terminated; `out` writable.
 */
enum PinvStatus pinv_graph_parse(const char *src, const char *origin, struct PinvGraph **out);

/**
 * # Safety
 * `g` must be null or a handle from `pinv_graph_parse`, freed once.
 */
void pinv_graph_free(struct PinvGraph *g);

/**
 * Generates VCs for a proof graph, or for `invariant` under p-inv when
 * `graph` is null.
 *
 * # Safety
 * Handles must be live; `invariant` null or NUL-terminated; `out` writable.
 */
enum PinvStatus pinv_vcs_generate(const struct PinvProgram *program,
                                  const struct PinvSpec *spec,
                                  const struct PinvGraph *graph,
                                  const char *invariant,
                                  struct PinvVcSet **out);

/**
 * # Safety
 * `v` must be null or a handle from `pinv_vcs_generate`, freed once.
 */
void pinv_vcs_free(struct PinvVcSet *v);

/**
 * # Safety
 * `v` must be a live handle; `out` writable.
 */
enum PinvStatus pinv_vcs_len(const struct PinvVcSet *v, size_t *out);

/**
 * Identifier of VC `i`; release with `pinv_string_free`.
 *
 * # Safety
 * `v` must be a live handle; `out` writable.
 */
enum PinvStatus pinv_vcs_id(const struct PinvVcSet *v, size_t i, char **out);

/**
 * SMT-LIB2 script of VC `i`; release with `pinv_string_free`.
 *
 * # Safety
 * `v` must be a live handle; `out` writable.
 */
enum PinvStatus pinv_vcs_smt(const struct PinvVcSet *v, size_t i, char **out);

/**
 * Decides every VC and returns the JSON report. `solver_cmd` may be null
 * for the default; `exit_code` receives 0 (all valid), 1 (some invalid)
 * or 2 (unknown or timeout left).
 *
 * # Safety
 * `v` must be a live handle; `solver_cmd` null or NUL-terminated;
 * `report` and `exit_code` writable.
 */
enum PinvStatus pinv_vcs_verify(const struct PinvVcSet *v,
                                const char *solver_cmd,
                                uint64_t timeout_s,
                                size_t jobs,
                                char **report,
                                int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PINV_H */
