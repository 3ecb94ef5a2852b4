#include "parcal/parcal.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "parcal/cantor.hpp"
#include "parcal/capacity.hpp"
#include "parcal/error.hpp"
#include "parcal/kernels.hpp"
#include "parcal/measure.hpp"
#include "parcal/potential.hpp"
#include "parcal/removability.hpp"
#include "parcal/runner.hpp"

struct parcal_measure {
  parcal::DiscreteMeasure mu;
};

struct parcal_treecode {
  parcal::DiscreteMeasure mu;
  std::unique_ptr<parcal::TreecodeEvaluator> ev;
};

struct parcal_capacity {
  parcal::CapacityProblem prob;
};

struct parcal_run {
  std::string document;
  std::string format;
  std::string summary;
  bool passed = true;
};

namespace {

thread_local std::string last_error;
thread_local bool has_estimate = false;
thread_local double last_best = 0.0;
thread_local double last_error_estimate = 0.0;

parcal_status fail(parcal_status s, const std::string& what) {
  last_error = what;
  has_estimate = false;
  return s;
}

// Runs f, mapping library exceptions onto status codes.
template <class F>
parcal_status guarded(F&& f) {
  try {
    f();
    return PARCAL_OK;
  } catch (const parcal::RefineRequired& e) {
    fail(PARCAL_ERR_REFINE, e.what());
    has_estimate = true;
    last_best = e.best_estimate();
    last_error_estimate = e.error_estimate();
    return PARCAL_ERR_REFINE;
  } catch (const parcal::ToleranceNotMet& e) {
    fail(PARCAL_ERR_TOLERANCE, e.what());
    has_estimate = true;
    last_best = e.best_estimate();
    last_error_estimate = e.error_estimate();
    return PARCAL_ERR_TOLERANCE;
  } catch (const parcal::DimensionMismatch& e) {
    return fail(PARCAL_ERR_DIMENSION, e.what());
  } catch (const parcal::ConfigError& e) {
    return fail(PARCAL_ERR_CONFIG, e.what());
  } catch (const parcal::DiagonalError& e) {
    return fail(PARCAL_ERR_DIAGONAL, e.what());
  } catch (const parcal::DomainError& e) {
    return fail(PARCAL_ERR_DOMAIN, e.what());
  } catch (const parcal::ResourceError& e) {
    return fail(PARCAL_ERR_RESOURCE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PARCAL_ERR_RESOURCE, "out of memory");
  } catch (const std::exception& e) {
    return fail(PARCAL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PARCAL_ERR_INTERNAL, "unknown error");
  }
}

parcal::ParaPoint make_point(int n, const double* x, double t) {
  if (n < 1 || n > parcal::kMaxSpatialDim) throw parcal::ConfigError("spatial dimension out of range");
  return parcal::ParaPoint(std::span<const double>(x, static_cast<std::size_t>(n)), t);
}

void copy_vector(const parcal::SpatialVector& v, double* out) {
  for (int j = 0; j < v.n; ++j) out[j] = v[j];
}

parcal::QuadratureConfig quad_config(double rel_tol) {
  parcal::QuadratureConfig q;
  if (rel_tol > 0.0) q.rel_tol = rel_tol;
  q.validate();
  return q;
}

parcal::CornerExperiment corner(int k, int m, int refine, int max_refine, double theta) {
  parcal::CornerExperiment e;
  e.k = k;
  e.m = m;
  e.refine = refine;
  e.max_refine = max_refine;
  e.theta = theta;
  e.validate();
  return e;
}

#define PARCAL_REQUIRE(ptr)                                              \
  do {                                                                   \
    if ((ptr) == nullptr) return fail(PARCAL_ERR_NULL, #ptr " is NULL"); \
  } while (0)

}  // namespace

extern "C" {

const char* parcal_version(void) { return "1.0.0"; }

const char* parcal_status_name(parcal_status s) {
  switch (s) {
    case PARCAL_OK: return "ok";
    case PARCAL_ERR_CONFIG: return "config_error";
    case PARCAL_ERR_DIMENSION: return "dimension_mismatch";
    case PARCAL_ERR_DOMAIN: return "domain_error";
    case PARCAL_ERR_DIAGONAL: return "diagonal_error";
    case PARCAL_ERR_RESOURCE: return "resource_error";
    case PARCAL_ERR_TOLERANCE: return "tolerance_not_met";
    case PARCAL_ERR_REFINE: return "refine_required";
    case PARCAL_ERR_NULL: return "null_argument";
    case PARCAL_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

const char* parcal_last_error(void) { return last_error.c_str(); }

int parcal_last_estimate(double* best, double* error) {
  if (!has_estimate) return 0;
  if (best) *best = last_best;
  if (error) *error = last_error_estimate;
  return 1;
}

parcal_status parcal_heat_kernel(int n, const double* x, double t, double* out) {
  PARCAL_REQUIRE(x);
  PARCAL_REQUIRE(out);
  return guarded([&] { *out = parcal::heat_kernel(make_point(n, x, t)); });
}

parcal_status parcal_heat_kernel_grad(int n, const double* x, double t, double* out) {
  PARCAL_REQUIRE(x);
  PARCAL_REQUIRE(out);
  return guarded([&] { copy_vector(parcal::heat_kernel_grad(make_point(n, x, t)), out); });
}

parcal_status parcal_heat_kernel_dt(int n, const double* x, double t, double* out) {
  PARCAL_REQUIRE(x);
  PARCAL_REQUIRE(out);
  return guarded([&] { *out = parcal::heat_kernel_dt(make_point(n, x, t)); });
}

parcal_status parcal_heat_kernel_half_dt(int n, const double* x, double t, double rel_tol, double* value,
                                         double* error) {
  PARCAL_REQUIRE(x);
  PARCAL_REQUIRE(value);
  return guarded([&] {
    const parcal::QuadResult r = parcal::heat_kernel_half_dt(make_point(n, x, t), quad_config(rel_tol));
    *value = r.value;
    if (error) *error = r.error;
  });
}

parcal_status parcal_half_time_derivative(parcal_scalar_fn f, parcal_scalar_fn tail, void* user, double t,
                                          double support_begin, double rel_tol, double abs_floor, double* value,
                                          double* error) {
  PARCAL_REQUIRE(f);
  PARCAL_REQUIRE(value);
  return guarded([&] {
    parcal::HalfDerivativeInput in;
    in.f = [f, user](double s) { return f(s, user); };
    if (tail) in.tail_bound = [tail, user](double r) { return tail(r, user); };
    in.t = t;
    in.support_begin = support_begin;
    in.abs_floor = abs_floor;
    const parcal::QuadResult r = parcal::half_time_derivative(in, quad_config(rel_tol));
    *value = r.value;
    if (error) *error = r.error;
  });
}

parcal_status parcal_verify_bounds(const char* envelope, int n, size_t samples, double r_min, double r_max,
                                   uint64_t seed, double* ratio, double* worst) {
  PARCAL_REQUIRE(envelope);
  PARCAL_REQUIRE(ratio);
  return guarded([&] {
    parcal::KernelParams{n}.validate();
    parcal::SamplerSpec spec{n, samples, r_min, r_max, seed};
    const parcal::BoundReport r = parcal::verify_bounds(parcal::envelope_from_name(envelope), spec);
    *ratio = r.ratio;
    if (worst) {
      for (int j = 0; j < n; ++j) worst[j] = r.worst.x(j);
      worst[n] = r.worst.t();
    }
  });
}

parcal_status parcal_regularity_constant(int n, size_t samples, uint64_t seed, double* ratio) {
  PARCAL_REQUIRE(ratio);
  return guarded([&] {
    parcal::KernelParams{n}.validate();
    parcal::SamplerSpec spec;
    spec.n = n;
    spec.samples = samples;
    spec.seed = seed;
    *ratio = parcal::regularity_constant(spec).ratio;
  });
}

parcal_status parcal_measure_create(int n, parcal_measure** out) {
  PARCAL_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    parcal::KernelParams{n}.validate();
    *out = new parcal_measure{parcal::DiscreteMeasure(n)};
  });
}

parcal_status parcal_measure_cantor(int k, parcal_measure** out) {
  PARCAL_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    parcal::CantorSpec spec;
    spec.max_generation = std::max(spec.max_generation, k);
    spec.validate();
    *out = new parcal_measure{parcal::cantor_natural_measure(spec, k)};
  });
}

parcal_status parcal_measure_cloud(size_t count, int depth, uint64_t seed, parcal_measure** out) {
  PARCAL_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new parcal_measure{parcal::cantor_cloud(count, depth, seed)}; });
}

void parcal_measure_free(parcal_measure* mu) { delete mu; }

parcal_status parcal_measure_add(parcal_measure* mu, const double* x, double t, double w) {
  PARCAL_REQUIRE(mu);
  PARCAL_REQUIRE(x);
  return guarded([&] { mu->mu.add(make_point(mu->mu.dim(), x, t), w); });
}

size_t parcal_measure_size(const parcal_measure* mu) { return mu ? mu->mu.size() : 0; }

int parcal_measure_dim(const parcal_measure* mu) { return mu ? mu->mu.dim() : 0; }

parcal_status parcal_measure_atom(const parcal_measure* mu, size_t i, double* coords, double* w) {
  PARCAL_REQUIRE(mu);
  if (i >= mu->mu.size()) return fail(PARCAL_ERR_CONFIG, "atom index out of range");
  if (coords) {
    const double* c = mu->mu.coords(i);
    for (int j = 0; j < mu->mu.stride(); ++j) coords[j] = c[j];
  }
  if (w) *w = mu->mu.weight(i);
  return PARCAL_OK;
}

parcal_status parcal_measure_growth(const parcal_measure* mu, const double* radii, size_t nradii, double* ratio) {
  PARCAL_REQUIRE(mu);
  PARCAL_REQUIRE(ratio);
  if (nradii > 0 && radii == nullptr) return fail(PARCAL_ERR_NULL, "radii is NULL");
  return guarded([&] {
    parcal::BallFamily fam;
    if (nradii > 0) fam.radii.assign(radii, radii + nradii);
    *ratio = parcal::growth_constant(mu->mu, fam).ratio;
  });
}

parcal_status parcal_potential(const parcal_measure* mu, const double* x, double t, int adjoint, double* out) {
  PARCAL_REQUIRE(mu);
  PARCAL_REQUIRE(x);
  PARCAL_REQUIRE(out);
  return guarded([&] {
    const parcal::ParaPoint p = make_point(mu->mu.dim(), x, t);
    copy_vector(adjoint ? parcal::potential_T_adjoint(mu->mu, p) : parcal::potential_T(mu->mu, p), out);
  });
}

parcal_status parcal_potential_truncated(const parcal_measure* mu, const double* x, double t, double eps,
                                         int adjoint, double* out) {
  PARCAL_REQUIRE(mu);
  PARCAL_REQUIRE(x);
  PARCAL_REQUIRE(out);
  return guarded([&] {
    const parcal::ParaPoint p = make_point(mu->mu.dim(), x, t);
    copy_vector(adjoint ? parcal::potential_T_adjoint_eps(mu->mu, p, eps) : parcal::potential_T_eps(mu->mu, p, eps),
                out);
  });
}

void parcal_treecode_config_default(parcal_treecode_config* cfg) {
  if (!cfg) return;
  const parcal::TreecodeConfig d;
  cfg->order = d.order;
  cfg->theta = d.theta;
  cfg->variation = d.variation;
  cfg->leaf_capacity = d.leaf_capacity;
  cfg->threads = d.threads;
}

parcal_status parcal_treecode_create(const parcal_measure* mu, const parcal_treecode_config* cfg,
                                     parcal_treecode** out) {
  PARCAL_REQUIRE(mu);
  PARCAL_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    parcal::TreecodeConfig c;
    if (cfg) {
      c.order = cfg->order;
      c.theta = cfg->theta;
      c.variation = cfg->variation;
      c.leaf_capacity = cfg->leaf_capacity;
      c.threads = cfg->threads;
    }
    auto tc = std::make_unique<parcal_treecode>();
    tc->mu = mu->mu;
    tc->ev = std::make_unique<parcal::TreecodeEvaluator>(tc->mu, c);
    *out = tc.release();
  });
}

void parcal_treecode_free(parcal_treecode* tc) { delete tc; }

parcal_status parcal_treecode_evaluate(const parcal_treecode* tc, size_t count, const double* points, int adjoint,
                                       double* out) {
  PARCAL_REQUIRE(tc);
  if (count == 0) return PARCAL_OK;
  PARCAL_REQUIRE(points);
  PARCAL_REQUIRE(out);
  return guarded([&] {
    const int n = tc->mu.dim();
    std::vector<parcal::ParaPoint> probes;
    probes.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      const double* row = points + i * static_cast<size_t>(n + 1);
      probes.push_back(make_point(n, row, row[n]));
    }
    const auto values = tc->ev->evaluate_many(probes, adjoint != 0);
    for (size_t i = 0; i < count; ++i) copy_vector(values[i].value, out + i * static_cast<size_t>(n));
  });
}

parcal_status parcal_capacity_plane_patch(const char* set, int level, int adjoint, parcal_capacity** out) {
  PARCAL_REQUIRE(set);
  PARCAL_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    parcal::PatchSpec ps;
    const std::string s = set;
    if (s == "plane:x1=t") ps.kind = parcal::PlaneKind::Graph;
    else if (s == "plane:t=0") ps.kind = parcal::PlaneKind::Horizontal;
    else throw parcal::ConfigError("set must be plane:x1=t or plane:t=0");
    ps.level = level;
    ps.include_adjoint = adjoint != 0;
    *out = new parcal_capacity{parcal::plane_patch_problem(ps)};
  });
}

parcal_status parcal_capacity_dilate(const parcal_capacity* prob, double lambda, parcal_capacity** out) {
  PARCAL_REQUIRE(prob);
  PARCAL_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new parcal_capacity{prob->prob.dilated(parcal::Dilation(lambda))}; });
}

void parcal_capacity_free(parcal_capacity* prob) { delete prob; }

parcal_status parcal_capacity_size(const parcal_capacity* prob, size_t* atoms, size_t* collocation,
                                   size_t* growth_cubes) {
  PARCAL_REQUIRE(prob);
  if (atoms) *atoms = prob->prob.support.size();
  if (collocation) *collocation = prob->prob.collocation.size();
  if (growth_cubes) *growth_cubes = prob->prob.growth_cubes.size();
  return PARCAL_OK;
}

parcal_status parcal_capacity_solve(const parcal_capacity* prob, double* objective) {
  PARCAL_REQUIRE(prob);
  PARCAL_REQUIRE(objective);
  return guarded([&] { *objective = parcal::solve_capacity(prob->prob).objective; });
}

parcal_status parcal_corner_sum(int k, int m, int refine, int max_refine, double theta, double* S, double* slope,
                                double* relative_residual) {
  PARCAL_REQUIRE(S);
  return guarded([&] {
    const parcal::CornerTable t = parcal::corner_sum(corner(k, m, refine, max_refine, theta));
    for (std::size_t i = 0; i < t.rows.size(); ++i) S[i] = t.rows[i].S;
    if (slope) *slope = t.slope;
    if (relative_residual) *relative_residual = t.relative_residual;
  });
}

parcal_status parcal_corner_positivity(int k, int m, int samples_per_axis, int* nonnegative, double* min_value) {
  PARCAL_REQUIRE(nonnegative);
  return guarded([&] {
    parcal::CornerExperiment e = corner(k, m, 5, 7, 0.25);
    const parcal::PositivityReport r = parcal::positivity_check(e, samples_per_axis);
    *nonnegative = r.nonnegative ? 1 : 0;
    if (min_value) *min_value = r.min_value;
  });
}

size_t parcal_command_count(void) { return parcal::run_commands().size(); }

const char* parcal_command_name(size_t i) {
  const auto& names = parcal::run_commands();
  return i < names.size() ? names[i].c_str() : nullptr;
}

parcal_status parcal_run_command(const char* command, const char* config_json, parcal_run** out) {
  PARCAL_REQUIRE(command);
  PARCAL_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    parcal::RunOutput r = parcal::run_command(command, config_json ? config_json : "");
    *out = new parcal_run{std::move(r.document), std::move(r.format), std::move(r.summary), true};
  });
}

parcal_status parcal_run_selftest(const char* command, parcal_run** out) {
  PARCAL_REQUIRE(command);
  PARCAL_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    parcal::SelftestOutcome r = parcal::run_selftest(command);
    *out = new parcal_run{std::move(r.report), "text", r.passed ? "passed" : "failed", r.passed};
  });
}

void parcal_run_free(parcal_run* run) { delete run; }

const char* parcal_run_document(const parcal_run* run) { return run ? run->document.c_str() : ""; }
const char* parcal_run_format(const parcal_run* run) { return run ? run->format.c_str() : ""; }
const char* parcal_run_summary(const parcal_run* run) { return run ? run->summary.c_str() : ""; }
int parcal_run_passed(const parcal_run* run) { return run && run->passed ? 1 : 0; }

}  // extern "C"
