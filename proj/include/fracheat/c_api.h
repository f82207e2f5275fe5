#ifndef FRACHEAT_C_API_H
#define FRACHEAT_C_API_H

/* Plain C surface of the library. Every call returns a status; on failure the message is
   available from fh_last_error() (per thread, valid until the next failing call). Strings handed
   out through char** must be released with fh_free_string. */

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define FH_API __declspec(dllexport)
#else
#define FH_API __attribute__((visibility("default")))
#endif

typedef enum fh_status {
  FH_OK = 0,
  FH_ERR_DOMAIN = 1,
  FH_ERR_CONFIG = 2,
  FH_ERR_ADMISSIBILITY = 3,
  FH_ERR_DIVERGENCE = 4,
  FH_ERR_INVARIANT = 5,
  FH_ERR_IO = 6,
  FH_ERR_ARGUMENT = 7,
  FH_ERR_INTERNAL = 8
} fh_status;

typedef struct fh_context fh_context; /* parsed run configuration */
typedef struct fh_field fh_field;     /* a catalog field bound to a context */
typedef struct fh_grid fh_grid;       /* sampled space-time grid */

FH_API const char* fh_version(void);
FH_API const char* fh_last_error(void);
FH_API const char* fh_status_name(fh_status s);
FH_API void fh_free_string(char* s);

/* config_json may be NULL or "" for all defaults; base_dir resolves relative grid paths */
FH_API fh_status fh_context_create(const char* config_json, const char* base_dir, fh_context** out);
FH_API void fh_context_destroy(fh_context* ctx);
/* the effective configuration's main numbers, as JSON */
FH_API fh_status fh_context_describe(const fh_context* ctx, char** json_out);

/* Run a subcommand. overrides_json is merged into the configuration first (keys of the top-level
   document, e.g. {"s":0.25,"op":{"points":[[0,0]]}}), may be NULL. exit_code receives 0 or 1;
   report_json and console_text may be NULL when not wanted. */
FH_API fh_status fh_run_command(fh_context* ctx, const char* cmd, const char* action, const char* overrides_json,
                                int* exit_code, char** report_json, char** console_text);

FH_API fh_status fh_kernel_eval(int n, double s, const double* dx, double dt, double* out);

FH_API fh_status fh_field_create(const fh_context* ctx, const char* name, fh_field** out);
FH_API void fh_field_destroy(fh_field* f);
FH_API fh_status fh_field_eval(const fh_field* f, const double* x, double t, double* out);
FH_API fh_status fh_apply_master(const fh_context* ctx, const fh_field* f, const double* x, double t, double* value,
                                 double* error_estimate);

FH_API fh_status fh_grid_load(const char* manifest_path, fh_grid** out);
FH_API fh_status fh_grid_save(const fh_grid* g, const char* manifest_path);
FH_API void fh_grid_destroy(fh_grid* g);
FH_API fh_status fh_grid_info(const fh_grid* g, int* n, long* size);
FH_API fh_status fh_grid_values(const fh_grid* g, const double** values);
FH_API fh_status fh_grid_interpolate(const fh_grid* g, const double* x, double t, double* out);

/* one acceptance criterion (1..8); passed receives 0/1, summary a one-line description */
FH_API fh_status fh_selftest_criterion(int id, int quick, int threads, int* passed, char** summary);

#ifdef __cplusplus
}
#endif

#endif
