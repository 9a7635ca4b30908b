/* qbnf: C API for the commuting-Hamiltonian normal-form engine.
 *
 * Usage pattern:
 *   1. qbnf_session_create() with config JSON text (plus optional
 *      "dotted.path=value" scalar overrides, applied in order).
 *   2. qbnf_command() with one of: divisors | radii | run | validate |
 *      generate.  For validate, pass the result.json text as `extra`.
 *   3. Read the returned envelope (JSON), write its artifacts wherever
 *      they should live, free everything, destroy the session.
 *
 * The envelope is a JSON object:
 *   {
 *     "artifacts": [{"content": "...", "filename": "records.csv"}, ...],
 *     "exit_code": 0,
 *     "summary": "...",
 *     "warnings": ["...", ...]
 *   }
 * Identical sessions and commands produce byte-identical envelopes.
 *
 * Every char* returned through an out-parameter is heap-allocated and must
 * be released with qbnf_free().  Strings returned as const char* (version,
 * last error) are owned by the library/session and must not be freed.
 */

#ifndef QBNF_H
#define QBNF_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define QBNF_API __declspec(dllexport)
#else
#define QBNF_API __attribute__((visibility("default")))
#endif

/* Status codes; the CLI maps them 1:1 to process exit codes. */
enum {
  QBNF_OK = 0,             /* command succeeded */
  QBNF_NOT_CONVERGED = 1,  /* run finished but missed the target norm */
  QBNF_CONFIG_ERROR = 2,   /* invalid config, schema or input artifact */
  QBNF_INTERNAL_ERROR = 3  /* a verified invariant failed; results void */
};

typedef struct qbnf_session qbnf_session;

/* Library version, static storage. */
QBNF_API const char* qbnf_version(void);

/* Releases any out-parameter string returned by this library. */
QBNF_API void qbnf_free(char* p);

/* Parses and validates the config; resolves frequencies and perturbation.
 * overrides may be NULL when n_overrides is 0.  On failure returns a
 * nonzero code, leaves *session_out NULL and, when error_out is non-NULL,
 * stores a malloc'd message there. */
QBNF_API int qbnf_session_create(const char* config_json,
                                 const char* const* overrides,
                                 size_t n_overrides,
                                 qbnf_session** session_out,
                                 char** error_out);

QBNF_API void qbnf_session_destroy(qbnf_session* s);

/* Message from the most recent failed qbnf_command on this session; empty
 * string if the last command succeeded.  Owned by the session. */
QBNF_API const char* qbnf_session_last_error(const qbnf_session* s);

/* The resolved output directory (config "output.dir" after overrides).
 * Owned by the session. */
QBNF_API const char* qbnf_session_output_dir(const qbnf_session* s);

/* Executes one command.  `extra` is the result.json text for validate and
 * ignored (may be NULL) otherwise.  On QBNF_OK / QBNF_NOT_CONVERGED the
 * envelope JSON is stored in *envelope_out (malloc'd).  On error codes >= 2
 * *envelope_out stays NULL and qbnf_session_last_error() describes the
 * failure. */
QBNF_API int qbnf_command(qbnf_session* s, const char* command,
                          const char* extra, char** envelope_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* QBNF_H */
