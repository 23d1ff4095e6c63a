#ifndef MINIHIVE_H
#define MINIHIVE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MhStatus {
  MH_STATUS_OK = 0,
  MH_STATUS_NULL_ARGUMENT = 1,
  MH_STATUS_INVALID_UTF8 = 2,
  MH_STATUS_PARSE = 3,
  MH_STATUS_SCHEMA = 4,
  MH_STATUS_RESOLUTION = 5,
  MH_STATUS_TYPE = 6,
  MH_STATUS_EXECUTION = 7,
  MH_STATUS_IO = 8,
  MH_STATUS_NOT_FOUND = 9,
  MH_STATUS_INVALID_OPTION = 10,
  MH_STATUS_UNSUPPORTED = 11,
  MH_STATUS_OUT_OF_RANGE = 12,
  MH_STATUS_PANIC = 13,
} MhStatus;

// The result set of one statement, rendered to text.
typedef struct MhResult MhResult;

// A warehouse session.
typedef struct MhSession MhSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Opens a session over an in-memory warehouse. Free with
// `mh_session_free`.
struct MhSession *mh_session_new(void);

// Opens (or initializes) a warehouse directory and stores the session
// handle in `*out`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum MhStatus mh_session_open(const char *path, struct MhSession **out);

// # Safety
// `session` must come from `mh_session_new` or `mh_session_open` and not
// be used afterwards. NULL is ignored.
void mh_session_free(struct MhSession *session);

// Sets an option as `SET key=value` would.
//
// # Safety
// `session` must be a live handle; `key` and `value` NUL-terminated.
enum MhStatus mh_session_set(struct MhSession *session, const char *key, const char *value);

// Runs every statement in `sql`. When `out` is not NULL it receives the
// last statement's result (free with `mh_result_free`), or NULL on error.
//
// # Safety
// `session` must be a live handle, `sql` NUL-terminated, `out` NULL or
// writable.
enum MhStatus mh_execute(struct MhSession *session, const char *sql, struct MhResult **out);

// Message of the session's most recent failure; empty if none. Valid
// until the next call on the session.
//
// # Safety
// `session` must be a live handle or NULL.
const char *mh_last_error(const struct MhSession *session);

// # Safety
// `result` must be a live result handle or NULL.
size_t mh_result_column_count(const struct MhResult *result);

// # Safety
// `result` must be a live result handle or NULL.
size_t mh_result_row_count(const struct MhResult *result);

// Column name, or NULL when out of range.
//
// # Safety
// `result` must be a live result handle or NULL.
const char *mh_result_column_name(const struct MhResult *result, size_t column);

// Cell text, or NULL for SQL NULL and for out-of-range positions. The
// pointer lives as long as the result.
//
// # Safety
// `result` must be a live result handle or NULL.
const char *mh_result_value(const struct MhResult *result, size_t row, size_t column);

// Simulated execution time of the statement; 0 for statements that do
// not run a query.
//
// # Safety
// `result` must be a live result handle or NULL.
double mh_result_simulated_ms(const struct MhResult *result);

// # Safety
// `result` must come from `mh_execute` and not be used afterwards. NULL
// is ignored.
void mh_result_free(struct MhResult *result);

// Library version as a static string.
const char *mh_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MINIHIVE_H */
