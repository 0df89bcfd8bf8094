/* C API for the ftslab core: opaque handles, status codes, and the three
 * config-driven run entry points. All returned strings are heap-allocated
 * and must be released with ftslab_string_free(); expression handles with
 * ftslab_expr_free(). On any non-OK status, ftslab_last_error() returns a
 * thread-local message describing the failure.
 */
#ifndef FTSLAB_H
#define FTSLAB_H

#include <stddef.h>

#if defined(_WIN32)
#define FTSLAB_API __declspec(dllexport)
#else
#define FTSLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ftslab_status {
    FTSLAB_OK = 0,
    FTSLAB_ERROR_PARSE = 1,   /* expression syntax error */
    FTSLAB_ERROR_EVAL = 2,    /* evaluation domain error */
    FTSLAB_ERROR_CONFIG = 3,  /* invalid or inconsistent run config */
    FTSLAB_ERROR_IO = 4,      /* file system failure */
    FTSLAB_ERROR_INVALID = 5, /* bad argument (null pointer, bad name, ...) */
    FTSLAB_ERROR_INTERNAL = 6
} ftslab_status;

typedef struct ftslab_expr ftslab_expr;

FTSLAB_API const char* ftslab_version(void);

/* Thread-local message for the most recent failure on this thread. */
FTSLAB_API const char* ftslab_last_error(void);

FTSLAB_API ftslab_status ftslab_expr_parse(const char* source, ftslab_expr** out_expr);
FTSLAB_API ftslab_status ftslab_expr_eval(const ftslab_expr* expr, double t, const double* x,
                                          size_t x_len, double* out_value);
/* Parenthesized canonical form; reparses to an identically evaluating tree. */
FTSLAB_API ftslab_status ftslab_expr_print(const ftslab_expr* expr, char** out_text);
/* Comma-separated free variables, e.g. "t,x1,x2"; empty string when none. */
FTSLAB_API ftslab_status ftslab_expr_variables(const ftslab_expr* expr, char** out_csv);
FTSLAB_API void ftslab_expr_free(ftslab_expr* expr);

/* Run pipelines. overrides_json is optional JSON text such as
 * {"seed": 42, "paths": 100}; pass NULL for none. out_report_json receives
 * the full stability report. out_exit_code receives 0 when every check and
 * verdict passed and 2 otherwise; operational failures are reported through
 * the returned status instead. run_simulate and run_reproduce write
 * trajectories.csv, summary.csv, and report.json under output_dir. */
FTSLAB_API ftslab_status ftslab_run_certify(const char* config_path, const char* overrides_json,
                                            char** out_report_json, int* out_exit_code);
FTSLAB_API ftslab_status ftslab_run_simulate(const char* config_path, const char* output_dir,
                                             const char* overrides_json, char** out_report_json,
                                             int* out_exit_code);
FTSLAB_API ftslab_status ftslab_run_reproduce(const char* example_name, const char* output_dir,
                                              const char* overrides_json, char** out_report_json,
                                              int* out_exit_code);

FTSLAB_API void ftslab_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* FTSLAB_H */
