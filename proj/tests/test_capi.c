/* Exercises the shared library through its C header only. */

#include <math.h>
#include <stdio.h>
#include <string.h>

#include "parcal/parcal.h"

static int failures = 0;

#define EXPECT(cond)                                           \
  do {                                                         \
    if (!(cond)) {                                             \
      fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                              \
    }                                                          \
  } while (0)

static double cosine(double s, void* user) { return cos(*(double*)user * s); }
static double cosine_tail(double r, void* user) { return 4.0 / (*(double*)user * pow(r, 1.5)); }

int main(void) {
  const double pi = 3.14159265358979323846;
  double x[2] = {2.0, 0.0}, v = 0.0, g[2], err = 0.0;

  EXPECT(parcal_heat_kernel(2, x, 1.0, &v) == PARCAL_OK);
  EXPECT(fabs(v - exp(-1.0) / (4.0 * pi)) < 1e-16);
  EXPECT(parcal_heat_kernel_grad(2, x, 1.0, g) == PARCAL_OK);
  EXPECT(fabs(g[0] + v) < 1e-16);
  double origin[2] = {0.0, 0.0};
  EXPECT(parcal_heat_kernel(2, origin, 0.0, &v) == PARCAL_ERR_DOMAIN);
  EXPECT(strlen(parcal_last_error()) > 0);
  EXPECT(parcal_heat_kernel(0, x, 1.0, &v) == PARCAL_ERR_CONFIG);
  EXPECT(parcal_heat_kernel(2, NULL, 1.0, &v) == PARCAL_ERR_NULL);

  double one[2] = {1.0, 0.0};
  EXPECT(parcal_heat_kernel_half_dt(2, one, 0.5, 0.0, &v, &err) == PARCAL_OK);
  EXPECT(fabs(v + 0.50765952873451301631) < 1e-7);

  double omega = 4.0;
  EXPECT(parcal_half_time_derivative(cosine, cosine_tail, &omega, 0.3, -INFINITY, 1e-6, 1e-9, &v, &err) == PARCAL_OK);
  EXPECT(fabs(v + 2.0 * sqrt(2.0 * pi * omega) * cos(omega * 0.3)) < 1e-4 * 2.0 * sqrt(2.0 * pi * omega));

  double ratio = 0.0, worst[3];
  EXPECT(parcal_verify_bounds("grad_W", 2, 500, 1e-3, 1e3, 1, &ratio, worst) == PARCAL_OK);
  EXPECT(ratio > 0.0 && isfinite(ratio));
  EXPECT(parcal_verify_bounds("nope", 2, 500, 1e-3, 1e3, 1, &ratio, worst) == PARCAL_ERR_CONFIG);

  parcal_measure* mu = NULL;
  EXPECT(parcal_measure_create(2, &mu) == PARCAL_OK);
  EXPECT(parcal_measure_add(mu, origin, 0.0, 1.0) == PARCAL_OK);
  EXPECT(parcal_measure_size(mu) == 1);
  double radii[2] = {0.5, 1.0};
  EXPECT(parcal_measure_growth(mu, radii, 2, &ratio) == PARCAL_OK);
  EXPECT(fabs(ratio - 8.0) < 1e-14);
  double p[2] = {1.0, 0.0}, t[2], k[2];
  EXPECT(parcal_potential(mu, p, 1.0, 0, t) == PARCAL_OK);
  EXPECT(parcal_heat_kernel_grad(2, p, 1.0, k) == PARCAL_OK);
  EXPECT(t[0] == k[0] && t[1] == k[1]);
  EXPECT(parcal_potential(mu, origin, 0.0, 0, t) == PARCAL_ERR_DIAGONAL);
  EXPECT(parcal_potential_truncated(mu, origin, 0.0, 0.5, 0, t) == PARCAL_OK);
  EXPECT(t[0] == 0.0);
  parcal_measure_free(mu);

  parcal_measure* cloud = NULL;
  EXPECT(parcal_measure_cloud(3000, 6, 7, &cloud) == PARCAL_OK);
  parcal_treecode_config cfg;
  parcal_treecode_config_default(&cfg);
  cfg.threads = 1;
  parcal_treecode* tc = NULL;
  EXPECT(parcal_treecode_create(cloud, &cfg, &tc) == PARCAL_OK);
  double probe[3] = {0.3, 0.6, 1.2}, fast[2], direct[2];
  EXPECT(parcal_treecode_evaluate(tc, 1, probe, 0, fast) == PARCAL_OK);
  EXPECT(parcal_potential(cloud, probe, probe[2], 0, direct) == PARCAL_OK);
  EXPECT(hypot(fast[0] - direct[0], fast[1] - direct[1]) <= 1e-8 * hypot(direct[0], direct[1]));
  parcal_treecode_free(tc);
  parcal_measure_free(cloud);

  parcal_capacity* cap = NULL;
  parcal_capacity* big = NULL;
  double obj = 0.0, obj_big = 0.0;
  size_t atoms = 0;
  EXPECT(parcal_capacity_plane_patch("plane:x1=t", 1, 0, &cap) == PARCAL_OK);
  EXPECT(parcal_capacity_size(cap, &atoms, NULL, NULL) == PARCAL_OK);
  EXPECT(atoms > 0);
  EXPECT(parcal_capacity_solve(cap, &obj) == PARCAL_OK);
  EXPECT(parcal_capacity_dilate(cap, 2.0, &big) == PARCAL_OK);
  EXPECT(parcal_capacity_solve(big, &obj_big) == PARCAL_OK);
  EXPECT(fabs(obj_big - 8.0 * obj) <= 1e-10 * obj_big);
  EXPECT(parcal_capacity_plane_patch("sphere", 1, 0, &cap) == PARCAL_ERR_CONFIG);
  parcal_capacity_free(big);

  double S[3], slope = 0.0, resid = 1.0, best = 0.0, est = 0.0;
  EXPECT(parcal_corner_sum(1, 3, 5, 7, 0.25, S, &slope, &resid) == PARCAL_OK);
  EXPECT(slope > 0.0 && resid < 1e-12);
  EXPECT(fabs(S[2] - 3.0 * S[0]) < 1e-12 * S[2]);
  EXPECT(parcal_corner_sum(1, 2, 2, 3, 0.5, S, NULL, NULL) == PARCAL_ERR_REFINE);
  EXPECT(parcal_last_estimate(&best, &est) == 1 && best > 0.0);
  int nonneg = 0;
  EXPECT(parcal_corner_positivity(1, 2, 5, &nonneg, NULL) == PARCAL_OK && nonneg == 1);

  EXPECT(parcal_command_count() == 7);
  EXPECT(strcmp(parcal_command_name(0), "kernel") == 0);
  EXPECT(parcal_command_name(99) == NULL);
  parcal_run* run = NULL;
  EXPECT(parcal_run_command("cantor", "{\"k\":1}", &run) == PARCAL_OK);
  EXPECT(strcmp(parcal_run_format(run), "csv") == 0);
  EXPECT(strncmp(parcal_run_document(run), "# config:", 9) == 0);
  parcal_run_free(run);
  EXPECT(parcal_run_command("cantor", "{\"kk\":1}", &run) == PARCAL_ERR_CONFIG);
  EXPECT(run == NULL);
  EXPECT(parcal_run_selftest("content", &run) == PARCAL_OK);
  EXPECT(parcal_run_passed(run) == 1);
  parcal_run_free(run);

  if (failures) fprintf(stderr, "%d failures\n", failures);
  return failures ? 1 : 0;
}
