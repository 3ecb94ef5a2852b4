#ifndef PARCAL_H
#define PARCAL_H

/* C interface to the parcal library.
 *
 * Every call returns a parcal_status.  On failure the message is available
 * from parcal_last_error() until the next failing call on the same thread;
 * tolerance failures also leave their best estimate in
 * parcal_last_estimate().  Points are passed as n spatial coordinates x and
 * a time t.  Handles are opaque and owned by the caller, who releases them
 * with the matching _free function (NULL is accepted). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PARCAL_API __declspec(dllexport)
#else
#define PARCAL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum parcal_status {
  PARCAL_OK = 0,
  PARCAL_ERR_CONFIG = 1,
  PARCAL_ERR_DIMENSION = 2,
  PARCAL_ERR_DOMAIN = 3,
  PARCAL_ERR_DIAGONAL = 4,
  PARCAL_ERR_RESOURCE = 5,
  PARCAL_ERR_TOLERANCE = 6,
  PARCAL_ERR_REFINE = 7,
  PARCAL_ERR_NULL = 8,
  PARCAL_ERR_INTERNAL = 9
} parcal_status;

PARCAL_API const char* parcal_version(void);
PARCAL_API const char* parcal_status_name(parcal_status s);
PARCAL_API const char* parcal_last_error(void);
/* Best estimate and error estimate carried by the last tolerance failure;
 * returns 0 when the last failure had none. */
PARCAL_API int parcal_last_estimate(double* best, double* error);

/* Kernels ------------------------------------------------------------------ */

PARCAL_API parcal_status parcal_heat_kernel(int n, const double* x, double t, double* out);
/* out has n entries. */
PARCAL_API parcal_status parcal_heat_kernel_grad(int n, const double* x, double t, double* out);
PARCAL_API parcal_status parcal_heat_kernel_dt(int n, const double* x, double t, double* out);
/* rel_tol <= 0 selects the default. */
PARCAL_API parcal_status parcal_heat_kernel_half_dt(int n, const double* x, double t, double rel_tol, double* value,
                                                    double* error);

typedef double (*parcal_scalar_fn)(double s, void* user);

/* Half time derivative of f at t.  f vanishes before support_begin (pass
 * -INFINITY for none); tail (may be NULL) bounds the integral of
 * |f(t+u)| |u|^{-3/2} over |u| > R. */
PARCAL_API parcal_status parcal_half_time_derivative(parcal_scalar_fn f, parcal_scalar_fn tail, void* user, double t,
                                                     double support_begin, double rel_tol, double abs_floor,
                                                     double* value, double* error);

/* envelope: "W", "grad_W", "dt_W" or "half_dt_W".  worst has n + 1 entries
 * (may be NULL). */
PARCAL_API parcal_status parcal_verify_bounds(const char* envelope, int n, size_t samples, double r_min, double r_max,
                                              uint64_t seed, double* ratio, double* worst);
PARCAL_API parcal_status parcal_regularity_constant(int n, size_t samples, uint64_t seed, double* ratio);

/* Measures ----------------------------------------------------------------- */

typedef struct parcal_measure parcal_measure;

PARCAL_API parcal_status parcal_measure_create(int n, parcal_measure** out);
/* Natural Cantor measure: mass 12^-k at each generation-k center. */
PARCAL_API parcal_status parcal_measure_cantor(int k, parcal_measure** out);
/* count equal atoms at centers of random generation-depth Cantor cubes. */
PARCAL_API parcal_status parcal_measure_cloud(size_t count, int depth, uint64_t seed, parcal_measure** out);
PARCAL_API void parcal_measure_free(parcal_measure* mu);
PARCAL_API parcal_status parcal_measure_add(parcal_measure* mu, const double* x, double t, double w);
PARCAL_API size_t parcal_measure_size(const parcal_measure* mu);
PARCAL_API int parcal_measure_dim(const parcal_measure* mu);
/* coords receives n + 1 values. */
PARCAL_API parcal_status parcal_measure_atom(const parcal_measure* mu, size_t i, double* coords, double* w);
/* sup of mu(B) / r^{n+1} over balls centered at atoms with the given radii
 * (nradii = 0 for the default family). */
PARCAL_API parcal_status parcal_measure_growth(const parcal_measure* mu, const double* radii, size_t nradii,
                                               double* ratio);
/* T mu (adjoint = 0) or T* mu at (x, t); out has n entries. */
PARCAL_API parcal_status parcal_potential(const parcal_measure* mu, const double* x, double t, int adjoint,
                                          double* out);
/* Sum over atoms farther than eps. */
PARCAL_API parcal_status parcal_potential_truncated(const parcal_measure* mu, const double* x, double t, double eps,
                                                    int adjoint, double* out);

/* Treecode ----------------------------------------------------------------- */

typedef struct parcal_treecode_config {
  int order;
  double theta;
  double variation;
  size_t leaf_capacity;
  unsigned threads;
} parcal_treecode_config;

typedef struct parcal_treecode parcal_treecode;

PARCAL_API void parcal_treecode_config_default(parcal_treecode_config* cfg);
/* The evaluator keeps its own copy of the measure.  cfg may be NULL. */
PARCAL_API parcal_status parcal_treecode_create(const parcal_measure* mu, const parcal_treecode_config* cfg,
                                                parcal_treecode** out);
PARCAL_API void parcal_treecode_free(parcal_treecode* tc);
/* points: count rows of (x_1..x_n, t); out: count rows of n values. */
PARCAL_API parcal_status parcal_treecode_evaluate(const parcal_treecode* tc, size_t count, const double* points,
                                                  int adjoint, double* out);

/* Capacity ----------------------------------------------------------------- */

typedef struct parcal_capacity parcal_capacity;

/* set: "plane:x1=t" or "plane:t=0". */
PARCAL_API parcal_status parcal_capacity_plane_patch(const char* set, int level, int adjoint, parcal_capacity** out);
PARCAL_API parcal_status parcal_capacity_dilate(const parcal_capacity* prob, double lambda, parcal_capacity** out);
PARCAL_API void parcal_capacity_free(parcal_capacity* prob);
PARCAL_API parcal_status parcal_capacity_size(const parcal_capacity* prob, size_t* atoms, size_t* collocation,
                                              size_t* growth_cubes);
PARCAL_API parcal_status parcal_capacity_solve(const parcal_capacity* prob, double* objective);

/* Corner experiment -------------------------------------------------------- */

/* S receives m values S(1..m); slope and relative_residual may be NULL. */
PARCAL_API parcal_status parcal_corner_sum(int k, int m, int refine, int max_refine, double theta, double* S,
                                           double* slope, double* relative_residual);
PARCAL_API parcal_status parcal_corner_positivity(int k, int m, int samples_per_axis, int* nonnegative,
                                                  double* min_value);

/* Config-driven runs ------------------------------------------------------- */

typedef struct parcal_run parcal_run;

PARCAL_API size_t parcal_command_count(void);
PARCAL_API const char* parcal_command_name(size_t i);
/* config_json: object of overrides, NULL or "" for defaults. */
PARCAL_API parcal_status parcal_run_command(const char* command, const char* config_json, parcal_run** out);
PARCAL_API parcal_status parcal_run_selftest(const char* command, parcal_run** out);
PARCAL_API void parcal_run_free(parcal_run* run);
/* Output document (run) or check report (selftest). */
PARCAL_API const char* parcal_run_document(const parcal_run* run);
/* "csv", "json" or "text". */
PARCAL_API const char* parcal_run_format(const parcal_run* run);
PARCAL_API const char* parcal_run_summary(const parcal_run* run);
PARCAL_API int parcal_run_passed(const parcal_run* run);

#ifdef __cplusplus
}
#endif

#endif
