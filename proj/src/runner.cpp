#include "parcal/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "parcal/cantor.hpp"
#include "parcal/capacity.hpp"
#include "parcal/error.hpp"
#include "parcal/kernels.hpp"
#include "parcal/measure.hpp"
#include "parcal/potential.hpp"
#include "parcal/removability.hpp"
#include "parcal/rng.hpp"
#include "parallel.hpp"

namespace parcal {

namespace {

using json = nlohmann::json;

// Defaults merged with user overrides; unknown keys and type changes are
// configuration errors.
json merge_config(const json& defaults, const std::string& text) {
  json user = json::object();
  if (!text.empty()) {
    try {
      user = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
  }
  if (!user.is_object()) throw ConfigError("config must be a JSON object");
  json eff = defaults;
  for (auto it = user.begin(); it != user.end(); ++it) {
    if (!defaults.contains(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
    const json& d = defaults[it.key()];
    const json& v = it.value();
    if (d.is_boolean() && v.is_boolean()) {
      eff[it.key()] = v;
    } else if (d.is_string() && v.is_string()) {
      eff[it.key()] = v;
    } else if (d.is_number_unsigned() && v.is_number_unsigned()) {
      eff[it.key()] = v;
    } else if (d.is_number_integer() && v.is_number_integer()) {
      if (d.is_number_unsigned() && v.get<long long>() < 0) throw ConfigError("'" + it.key() + "' must be nonnegative");
      eff[it.key()] = v;
    } else if (d.is_number_float() && v.is_number()) {
      eff[it.key()] = v.get<double>();
    } else {
      throw ConfigError("config key '" + it.key() + "' has the wrong type");
    }
  }
  return eff;
}

std::string csv_header(const json& cfg) { return "# config: " + cfg.dump() + "\n"; }

// kernel -----------------------------------------------------------------------

json kernel_defaults() {
  return {{"n", 2},          {"verify_bounds", "all"}, {"samples", 10000}, {"r_min", 1e-3},
          {"r_max", 1e3},    {"seed", 20240611u},      {"rel_tol", 1e-8},  {"regularity", true}};
}

RunOutput run_kernel(const json& cfg) {
  SamplerSpec spec;
  spec.n = cfg["n"].get<int>();
  const int samples = cfg["samples"].get<int>();
  if (samples < 1) throw ConfigError("samples must be positive");
  spec.samples = static_cast<std::size_t>(samples);
  spec.r_min = cfg["r_min"].get<double>();
  spec.r_max = cfg["r_max"].get<double>();
  spec.seed = cfg["seed"].get<std::uint64_t>();
  if (!(spec.r_min > 0.0) || !(spec.r_max > spec.r_min)) throw ConfigError("need 0 < r_min < r_max");
  KernelParams{spec.n}.validate();
  QuadratureConfig qc;
  qc.rel_tol = cfg["rel_tol"].get<double>();
  qc.validate();

  std::vector<Envelope> which;
  const std::string sel = cfg["verify_bounds"].get<std::string>();
  if (sel == "all") which = all_envelopes();
  else if (sel != "none") which.push_back(envelope_from_name(sel));

  std::ostringstream out;
  out << csv_header(cfg) << "envelope,samples,ratio";
  for (int j = 0; j < spec.n; ++j) out << ",worst_x" << (j + 1);
  out << ",worst_t\n";
  json summary = json::object();
  auto row = [&](const BoundReport& r) {
    out << r.envelope << ',' << r.samples << ',' << format_real(r.ratio);
    for (int j = 0; j < spec.n; ++j) out << ',' << format_real(r.worst.x(j));
    out << ',' << format_real(r.worst.t()) << '\n';
    summary[r.envelope] = r.ratio;
  };
  const auto sample = log_spaced_sample(spec);
  for (Envelope e : which) row(verify_bounds(e, sample, qc));
  if (cfg["regularity"].get<bool>()) row(regularity_constant(spec));
  return {"csv", out.str(), summary.dump()};
}

// cantor -----------------------------------------------------------------------

json cantor_defaults() { return {{"k", 3}, {"output", "cubes"}}; }

RunOutput run_cantor(const json& cfg) {
  const int k = cfg["k"].get<int>();
  CantorSpec spec;
  spec.max_generation = std::max(spec.max_generation, k);
  spec.validate();
  const std::string what = cfg["output"].get<std::string>();
  if (what == "cubes") {
    const auto nodes = cantor_generation(spec, k);
    std::ostringstream out;
    out << csv_header(cfg);
    write_generation_csv(nodes, out);
    return {"csv", out.str(), json{{"cubes", nodes.size()}}.dump()};
  }
  if (what == "measure") {
    const auto mu = cantor_natural_measure(spec, k);
    std::ostringstream out;
    out << csv_header(cfg);
    write_measure_csv(mu, out);
    return {"csv", out.str(), json{{"atoms", mu.size()}, {"mass", mu.total_mass()}}.dump()};
  }
  if (what == "stats") {
    const auto nodes = cantor_generation(spec, k);
    detail::CompensatedSum acc;
    for (const auto& node : nodes) acc.add(std::pow(node.cube.side(), 3));
    const double sum = acc.value();
    const auto sep = separation_stats(spec, k);
    const auto proj = child_projection_counts(ParaCube::unit(2));
    json j;
    j["config"] = cfg;
    j["cubes"] = nodes.size();
    j["side"] = std::pow(cantor_ratio(), k);
    j["sum_side_cubed"] = sum;
    j["min_sibling_ratio"] = sep.min_sibling_ratio;
    j["max_sibling_ratio"] = sep.max_sibling_ratio;
    j["min_pair_ratio"] = std::isnan(sep.min_pair_ratio) ? json(nullptr) : json(sep.min_pair_ratio);
    j["projection_spatial"] = proj.spatial;
    j["projection_x1_t"] = proj.x1_t;
    j["projection_x2_t"] = proj.x2_t;
    return {"json", j.dump(2) + "\n", json{{"cubes", nodes.size()}, {"sum_side_cubed", sum}}.dump()};
  }
  throw ConfigError("cantor output must be cubes, measure or stats");
}

// potential --------------------------------------------------------------------

json potential_defaults() {
  return {{"atoms", 10000}, {"depth", 7},        {"seed", 20240611u},   {"probes", 100},
          {"method", "both"}, {"adjoint", false}, {"order", 10},         {"theta", 0.25},
          {"variation", 4.0}, {"leaf_capacity", 64}, {"threads", 0},     {"measure_csv", ""}};
}

std::vector<ParaPoint> random_probes(std::size_t count, std::uint64_t seed) {
  SplitMix64 rng(seed ^ 0xA5A5A5A5DEADBEEFull);
  std::vector<ParaPoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x1 = rng.uniform(), x2 = rng.uniform(), t = rng.uniform();
    out.emplace_back(ParaPoint({x1, x2}, 1.1 * t));
  }
  return out;
}

RunOutput run_potential(const json& cfg, const std::function<std::string(const std::string&)>& read_file) {
  const std::string path = cfg["measure_csv"].get<std::string>();
  DiscreteMeasure mu;
  if (!path.empty()) {
    std::istringstream in(read_file(path));
    mu = read_measure_csv(in, true);
  } else {
    const int atoms = cfg["atoms"].get<int>();
    if (atoms < 1) throw ConfigError("atoms must be positive");
    mu = cantor_cloud(static_cast<std::size_t>(atoms), cfg["depth"].get<int>(), cfg["seed"].get<std::uint64_t>());
  }
  const int nprobe = cfg["probes"].get<int>();
  if (nprobe < 1) throw ConfigError("probes must be positive");
  if (mu.dim() != 2) throw ConfigError("the potential run uses n = 2 probes");
  const auto probes = random_probes(static_cast<std::size_t>(nprobe), cfg["seed"].get<std::uint64_t>());
  const bool adjoint = cfg["adjoint"].get<bool>();
  const std::string method = cfg["method"].get<std::string>();
  if (method != "both" && method != "treecode" && method != "direct") {
    throw ConfigError("method must be both, treecode or direct");
  }
  const int threads = cfg["threads"].get<int>();
  if (threads < 0) throw ConfigError("threads must be nonnegative");
  const int n = mu.dim();

  std::vector<SpatialVector> tc, dr;
  if (method != "direct") {
    TreecodeConfig tcfg;
    tcfg.order = cfg["order"].get<int>();
    tcfg.theta = cfg["theta"].get<double>();
    tcfg.variation = cfg["variation"].get<double>();
    const int leaf = cfg["leaf_capacity"].get<int>();
    if (leaf < 1) throw ConfigError("leaf_capacity must be positive");
    tcfg.leaf_capacity = static_cast<std::size_t>(leaf);
    tcfg.threads = static_cast<unsigned>(threads);
    const TreecodeEvaluator ev(mu, tcfg);
    for (const auto& v : ev.evaluate_many(probes, adjoint)) tc.push_back(v.value);
  }
  if (method != "treecode") {
    for (const auto& p : probes) dr.push_back(adjoint ? potential_T_adjoint(mu, p) : potential_T(mu, p));
  }
  std::ostringstream out;
  out << csv_header(cfg) << "index";
  for (int j = 0; j < n; ++j) out << ",x" << (j + 1);
  out << ",t";
  if (!tc.empty()) {
    for (int j = 0; j < n; ++j) out << ",treecode_" << (j + 1);
  }
  if (!dr.empty()) {
    for (int j = 0; j < n; ++j) out << ",direct_" << (j + 1);
  }
  if (!tc.empty() && !dr.empty()) out << ",rel_diff";
  out << '\n';
  double worst = 0.0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    out << i;
    for (int j = 0; j < n; ++j) out << ',' << format_real(probes[i].x(j));
    out << ',' << format_real(probes[i].t());
    if (!tc.empty()) {
      for (int j = 0; j < n; ++j) out << ',' << format_real(tc[i][j]);
    }
    if (!dr.empty()) {
      for (int j = 0; j < n; ++j) out << ',' << format_real(dr[i][j]);
    }
    if (!tc.empty() && !dr.empty()) {
      const double scale = dr[i].norm();
      const double diff = (tc[i] - dr[i]).norm();
      const double rel = scale > 0.0 ? diff / scale : diff;
      worst = std::max(worst, rel);
      out << ',' << format_real(rel);
    }
    out << '\n';
  }
  json summary{{"atoms", mu.size()}, {"probes", probes.size()}};
  if (!tc.empty() && !dr.empty()) summary["max_rel_diff"] = worst;
  return {"csv", out.str(), summary.dump()};
}

// capacity ---------------------------------------------------------------------

json capacity_defaults() {
  return {{"set", "plane:x1=t"}, {"levels", 3},     {"level_min", 1},       {"mode", "S1"},
          {"norm", "per_component"}, {"facets", 8}, {"clearance_factor", 0.25}, {"dilation", 1.0},
          {"violation_tol", 1e-9}, {"batch", 256},  {"threads", 0}};
}

PlaneKind plane_from_set(const std::string& set) {
  if (set == "plane:x1=t") return PlaneKind::Graph;
  if (set == "plane:t=0") return PlaneKind::Horizontal;
  throw ConfigError("set must be plane:x1=t or plane:t=0");
}

RunOutput run_capacity(const json& cfg) {
  PatchSpec ps;
  ps.kind = plane_from_set(cfg["set"].get<std::string>());
  const std::string mode = cfg["mode"].get<std::string>();
  if (mode != "S1" && mode != "gamma_plus") throw ConfigError("mode must be S1 or gamma_plus");
  ps.include_adjoint = mode == "gamma_plus";
  ps.mode = norm_mode_from_name(cfg["norm"].get<std::string>());
  ps.facets = cfg["facets"].get<int>();
  ps.clearance_factor = cfg["clearance_factor"].get<double>();
  const double lambda = cfg["dilation"].get<double>();
  if (!(lambda > 0.0)) throw ConfigError("dilation must be positive");
  CapacityOptions opts;
  opts.violation_tol = cfg["violation_tol"].get<double>();
  const int batch = cfg["batch"].get<int>();
  if (batch < 1) throw ConfigError("batch must be positive");
  opts.batch = static_cast<std::size_t>(batch);
  const int threads = cfg["threads"].get<int>();
  if (threads < 0) throw ConfigError("threads must be nonnegative");
  opts.threads = static_cast<unsigned>(threads);
  const int lo = cfg["level_min"].get<int>(), hi = cfg["levels"].get<int>();
  if (lo < 0 || hi < lo) throw ConfigError("need 0 <= level_min <= levels");

  json j;
  j["config"] = cfg;
  j["levels"] = json::array();
  json summary = json::array();
  double prev = 0.0;
  for (int L = lo; L <= hi; ++L) {
    ps.level = L;
    CapacityProblem prob = plane_patch_problem(ps);
    if (lambda != 1.0) prob = prob.dilated(Dilation(lambda));
    const CapacitySolution sol = solve_capacity(prob, opts);
    json row{{"level", L},
             {"atoms", prob.support.size()},
             {"collocation", prob.collocation.size()},
             {"growth_cubes", prob.growth_cubes.size()},
             {"clearance", prob.clearance},
             {"objective", sol.objective},
             {"status", sol.status},
             {"rounds", sol.rounds},
             {"pivots", sol.pivots},
             {"potential_rows_added", sol.potential_rows_added},
             {"potential_rows_total", sol.potential_rows_total},
             {"max_residual", sol.max_residual},
             {"active_constraints", sol.active.size()}};
    if (L > lo) row["ratio_to_previous"] = prev / sol.objective;
    prev = sol.objective;
    j["levels"].push_back(row);
    summary.push_back({{"level", L}, {"objective", sol.objective}, {"status", sol.status}});
  }
  return {"json", j.dump(2) + "\n", summary.dump()};
}

// content ----------------------------------------------------------------------

json content_defaults() {
  return {{"set", "cantor"}, {"points_k", 3}, {"dyadic_k", -1}, {"box_k_min", 1}, {"box_k_max", -1},
          {"cover_k_min", 0}, {"simplex_check", true}};
}

struct PointSet {
  std::vector<ParaPoint> points;
  std::vector<ParaCube> cells;
};

PointSet make_point_set(const std::string& set, int k) {
  PointSet s;
  if (k < 0) throw ConfigError("points_k must be nonnegative");
  if (set == "cantor") {
    CantorSpec spec;
    spec.max_generation = std::max(spec.max_generation, k);
    for (const auto& node : cantor_generation(spec, k)) {
      s.points.push_back(node.cube.center());
      s.cells.push_back(node.cube);
    }
    return s;
  }
  if (k > 6) throw ResourceError("points_k above 6 is too dense for this set");
  const int nx = 1 << k;
  const double h = 1.0 / nx;
  if (set == "cube") {
    const int nt = 1 << (2 * k);
    for (int c = 0; c < nt; ++c) {
      for (int b = 0; b < nx; ++b) {
        for (int a = 0; a < nx; ++a) {
          const ParaCube q(ParaPoint({a * h, b * h}, c * h * h), h);
          s.points.push_back(q.center());
          s.cells.push_back(q);
        }
      }
    }
    return s;
  }
  if (set == "plane:t=0") {
    for (int b = 0; b < nx; ++b) {
      for (int a = 0; a < nx; ++a) {
        s.points.push_back(ParaPoint({(a + 0.5) * h, (b + 0.5) * h}, 0.0));
        s.cells.push_back(ParaCube(ParaPoint({a * h, b * h}, 0.0), h));
      }
    }
    return s;
  }
  if (set == "plane:x1=t") {
    const int nt = 1 << (2 * k);
    for (int c = 0; c < nt; ++c) {
      for (int b = 0; b < nx; ++b) {
        const double t = (c + 0.5) * h * h;
        s.points.push_back(ParaPoint({t, (b + 0.5) * h}, t));
        s.cells.push_back(ParaCube(ParaPoint({t - 0.5 * h, b * h}, c * h * h), h));
      }
    }
    return s;
  }
  throw ConfigError("set must be cantor, cube, plane:t=0 or plane:x1=t");
}

// Finest dyadic scale whose side is at least the generation-k Cantor side.
int dyadic_scale_for(const std::string& set, int k) {
  if (set != "cantor") return k;
  return static_cast<int>(std::ceil(k * std::log2(12.0) / 3.0 - 1e-12));
}

RunOutput run_content(const json& cfg) {
  const std::string set = cfg["set"].get<std::string>();
  const int k = cfg["points_k"].get<int>();
  const PointSet ps = make_point_set(set, k);
  int dk = cfg["dyadic_k"].get<int>();
  if (dk < 0) dk = dyadic_scale_for(set, k);
  int bmax = cfg["box_k_max"].get<int>();
  // Dyadic scales finer than the generation side only count isolated points.
  if (bmax < 0) bmax = set == "cantor" ? static_cast<int>(std::floor(k * std::log2(12.0) / 3.0 + 1e-12)) : dk;
  const int bmin = cfg["box_k_min"].get<int>();
  const int cmin = cfg["cover_k_min"].get<int>();

  ContentProblem prob;
  prob.targets = covering_cubes(ps.points, dk);
  prob.depth = dk;
  const ContentSolution lower = frostman_content_lower(prob);
  json j;
  j["config"] = cfg;
  j["points"] = ps.points.size();
  j["dyadic_k"] = dk;
  j["targets"] = prob.targets.size();
  j["content_lower"] = lower.value;
  j["constraints"] = lower.constraints;
  if (cfg["simplex_check"].get<bool>() && prob.targets.size() <= 600) {
    j["content_lower_simplex"] = frostman_content_lower_simplex(prob).value;
  }
  j["content_upper"] = best_cover_content(ps.cells, cmin, std::max(cmin, dk));
  j["native_cover"] = [&] {
    double s = 0.0;
    for (const auto& q : ps.cells) s += std::pow(q.side(), 3);
    return s;
  }();
  if (bmax - bmin >= 2) {
    const BoxDimensionFit fit = box_dimension_estimate(ps.points, bmin, bmax);
    j["box_dimension"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared},
                          {"scales", fit.scales}, {"counts", fit.counts}};
  }
  json summary{{"content_lower", j["content_lower"]}, {"content_upper", j["content_upper"]}};
  if (j.contains("box_dimension")) summary["box_slope"] = j["box_dimension"]["slope"];
  return {"json", j.dump(2) + "\n", summary.dump()};
}

// removability -----------------------------------------------------------------

json removability_defaults() {
  return {{"k", 1}, {"m", 6}, {"refine", 5}, {"max_refine", 7}, {"theta", 0.25}, {"positivity_samples", 9}};
}

CornerExperiment corner_from(const json& cfg) {
  CornerExperiment e;
  e.k = cfg["k"].get<int>();
  e.m = cfg["m"].get<int>();
  e.refine = cfg["refine"].get<int>();
  e.max_refine = std::max(e.refine, cfg["max_refine"].get<int>());
  e.theta = cfg["theta"].get<double>();
  e.validate();
  return e;
}

RunOutput run_removability(const json& cfg) {
  const CornerExperiment e = corner_from(cfg);
  const CornerTable t = corner_sum(e);
  const PositivityReport pos = positivity_check(e, cfg["positivity_samples"].get<int>());
  std::ostringstream out;
  out << csv_header(cfg);
  write_corner_csv(t, out);
  json refine = json::array();
  for (const auto& a : t.annuli) refine.push_back(a.refine);
  json summary{{"slope", t.slope},
               {"intercept", t.intercept},
               {"relative_residual", t.relative_residual},
               {"increment_spread", t.increment_spread},
               {"refine_used", refine},
               {"positivity", pos.nonnegative},
               {"positivity_min", pos.min_value},
               {"positivity_samples", pos.samples}};
  return {"csv", out.str(), summary.dump()};
}

// bmo --------------------------------------------------------------------------

json bmo_defaults() {
  return {{"k", 2},          {"nx", 9},        {"nt", 65},       {"shift_x1", 0.37}, {"shift_x2", 0.29},
          {"shift_t", 0.41}, {"theta", 1.0},  {"max_split", 6}, {"threads", 0}};
}

RunOutput run_bmo(const json& cfg) {
  BmoSpotSpec s;
  s.k = cfg["k"].get<int>();
  s.nx = cfg["nx"].get<int>();
  s.nt = cfg["nt"].get<int>();
  s.shift_x1 = cfg["shift_x1"].get<double>();
  s.shift_x2 = cfg["shift_x2"].get<double>();
  s.shift_t = cfg["shift_t"].get<double>();
  s.theta = cfg["theta"].get<double>();
  s.max_split = cfg["max_split"].get<int>();
  const int threads = cfg["threads"].get<int>();
  if (threads < 0) throw ConfigError("threads must be nonnegative");
  s.threads = static_cast<unsigned>(threads);
  const BmoSpotResult r = bmo_spotcheck(s);
  json j;
  j["config"] = cfg;
  j["growth_constant"] = r.growth;
  j["probes"] = r.probes;
  j["bmo"] = {{"value", r.bmo.value},
              {"cubes", r.bmo.cubes},
              {"min_cells", r.bmo.min_cells},
              {"max_cells", r.bmo.max_cells},
              {"witness_ix", {r.bmo.witness_ix[0], r.bmo.witness_ix[1]}},
              {"witness_it", r.bmo.witness_it},
              {"witness_cells", r.bmo.witness_cells}};
  j["lip_half_t"] = {{"value", r.lip.value}, {"pairs", r.lip.pairs}};
  j["lip_half_t_W"] = {{"value", r.lip_W.value}, {"pairs", r.lip_W.pairs}};
  json summary{{"bmo", r.bmo.value}, {"lip_half_t", r.lip.value}, {"lip_half_t_W", r.lip_W.value}};
  return {"json", j.dump(2) + "\n", summary.dump()};
}

// selftests -------------------------------------------------------------------

class Checks {
 public:
  void expect(const std::string& name, bool ok, const std::string& detail = {}) {
    passed_ = passed_ && ok;
    report_ += (ok ? "ok   " : "FAIL ") + name;
    if (!detail.empty()) report_ += " (" + detail + ")";
    report_ += '\n';
  }
  void near(const std::string& name, double got, double want, double rel) {
    // rel is absolute when want is zero
    const double tol = want == 0.0 ? rel : rel * std::abs(want);
    expect(name, std::isfinite(got) && std::abs(got - want) <= tol,
           "got " + format_real(got) + ", want " + format_real(want));
  }
  template <class E, class F>
  void throws(const std::string& name, F&& f) {
    try {
      f();
    } catch (const E&) {
      expect(name, true);
      return;
    } catch (const std::exception& e) {
      expect(name, false, std::string("other error: ") + e.what());
      return;
    }
    expect(name, false, "no error");
  }
  SelftestOutcome outcome() const { return {passed_, report_}; }

 private:
  bool passed_ = true;
  std::string report_;
};

void selftest_kernel(Checks& c) {
  c.near("dist_p spatial", dist_p(ParaPoint({1.0, 0.0}, 0.0), ParaPoint({0.0, 0.0}, 0.0)), 1.0, 0.0);
  c.near("dist_p time", dist_p(ParaPoint({0.0, 0.0}, 4.0), ParaPoint({0.0, 0.0}, 0.0)), 2.0, 0.0);
  c.near("dist_p max", dist_p(ParaPoint({3.0, 0.0}, 0.0), ParaPoint({0.0, 0.0}, 4.0)), 3.0, 0.0);
  const ParaPoint d = Dilation(2.0)(ParaPoint({1.0, 1.0}, 1.0));
  c.expect("dilation of ((1,1),1) by 2", d == ParaPoint({2.0, 2.0}, 4.0));
  const ParaCube q = Dilation(3.0)(ParaCube::unit(2));
  c.expect("dilated unit cube", q.side() == 3.0 && q.time_extent() == 9.0);
  const ParaCube s2 = concentric_scale(ParaCube::unit(2), 2.0);
  c.expect("concentric scale by 2",
           s2.side() == 2.0 && s2.time_extent() == 4.0 && s2.center() == ParaCube::unit(2).center());
  const DyadicCubeId id = dyadic_cube_at(ParaPoint({0.6, 0.1}, 0.3), 1);
  c.expect("dyadic indices", id.i[0] == 1 && id.i[1] == 0 && id.i_time == 1);
  const double t = 0.7;
  c.near("W at x = 0", heat_kernel(ParaPoint({0.0, 0.0}, t)), 1.0 / (4.0 * std::numbers::pi * t), 1e-15);
  c.near("d_t W at x = 0", heat_kernel_dt(ParaPoint({0.0, 0.0}, t)),
         -1.0 / t / (4.0 * std::numbers::pi * t), 1e-15);
  const SpatialVector past = heat_kernel_grad(ParaPoint({0.3, -0.2}, -0.5));
  c.expect("grad W vanishes for t < 0", past[0] == 0.0 && past[1] == 0.0);
  c.expect("d_t W vanishes for t < 0", heat_kernel_dt(ParaPoint({0.3, -0.2}, -0.5)) == 0.0);
  const ParaPoint p({0.4, -0.3}, 0.25);
  c.near("W homogeneity", heat_kernel(Dilation(3.0)(p)), heat_kernel(p) / 9.0, 1e-12);
  HalfDerivativeInput in;
  in.f = [](double) { return 2.5; };
  in.t = 0.3;
  in.tail_bound = [](double r) { return 2.0 * 2.5 * 2.0 / std::sqrt(r); };
  in.abs_floor = 1e-6;
  c.near("half derivative of a constant", half_time_derivative(in, {}).value, 0.0, 1e-6);
  c.near("regularity ratio at b = a", regularity_ratio(p, p), 0.0, 0.0);
  const BoundReport past_bound = verify_bounds(Envelope::Gradient, std::vector<ParaPoint>{ParaPoint({1.0, 2.0}, -1.0)});
  c.near("gradient envelope at t < 0", past_bound.ratio, 0.0, 0.0);
}

void selftest_cantor(Checks& c) {
  CantorSpec spec;
  const auto g0 = cantor_generation(spec, 0);
  c.expect("k = 0 is the unit cube", g0.size() == 1 && g0[0].cube.side() == 1.0);
  const auto g1 = cantor_generation(spec, 1);
  const auto g2 = cantor_generation(spec, 2);
  bool nested = true;
  for (const auto& node : g2) {
    const auto& parent = g1[static_cast<std::size_t>(node.child_index(1))].cube;
    nested = nested && parent.contains_cube(node.cube, 1e-12);
  }
  c.expect("generation 2 inside generation 1", nested);
  for (int k = 0; k <= 5; ++k) {
    c.near("natural measure mass k=" + std::to_string(k), cantor_natural_measure(spec, k).total_mass(), 1.0, 1e-12);
  }
  const auto s1 = separation_stats(spec, 1), s2 = separation_stats(spec, 2);
  c.near("sibling ratio self-similar", s2.min_sibling_ratio, s1.min_sibling_ratio, 1e-12);
  const ParaPoint cp = corner_point(ParaCube::unit(2));
  c.expect("corner of the unit cube", cp == ParaPoint({0.0, 0.0}, 1.0));
  const Dilation dl(1.7);
  const ParaPoint a = corner_point(dl(g1[3].cube)), b = dl(corner_point(g1[3].cube));
  c.near("corner commutes with dilation (x1)", a.x(0), b.x(0), 1e-15);
  c.near("corner commutes with dilation (x2)", a.x(1), b.x(1), 1e-15);
  c.near("corner commutes with dilation (t)", a.t(), b.t(), 1e-15);
  const auto& off = cantor_child_offsets()[kCornerChild];
  const ParaPoint corner_child = corner_point(g1[kCornerChild].cube);
  c.near("corner child keeps t = 1", corner_child.t(), 1.0, 1e-15);
  c.expect("corner child offset", off[0] == 0.0 && off[1] == 0.0);
}

void selftest_potential(Checks& c) {
  DiscreteMeasure unit;
  unit.add(ParaPoint({0.0, 0.0}, 0.0), 1.0);
  const ParaPoint p({1.0, 0.0}, 1.0);
  const SpatialVector k = heat_kernel_grad(p), v = potential_T(unit, p);
  c.expect("single atom potential", v[0] == k[0] && v[1] == k[1]);
  DiscreteMeasure mirror;
  mirror.add(ParaPoint({0.5, 0.2}, 0.1), 1.0);
  mirror.add(ParaPoint({-0.5, -0.2}, 0.1), 1.0);
  c.near("mirror symmetric potential", potential_T(mirror, ParaPoint({0.0, 0.0}, 0.6)).norm(), 0.0, 0.0);
  c.near("truncation beyond the diameter", potential_T_eps(unit, p, 10.0).norm(), 0.0, 0.0);
  c.near("truncation as eps goes to 0", (potential_T_eps(unit, p, 1e-12) - v).norm(), 0.0, 0.0);
  DiscreteMeasure two;
  two.add(ParaPoint({0.0, 0.0}, 0.0), 1.0);
  two.add(ParaPoint({1.0, 0.0}, -1.0), 1.0);
  const SpatialVector far = heat_kernel_grad(ParaPoint({-1.0, 0.0}, 1.0));
  const SpatialVector at_first = potential_T_eps(two, ParaPoint({0.0, 0.0}, 0.0), 0.5);
  c.near("truncation at an atom", (at_first - far).norm(), 0.0, 0.0);
  const double dd = std::sqrt(2.0);
  c.near("maximal truncation of one atom", maximal_T_star(unit, p, {dd / 2.0, 2.0 * dd}), k.norm(), 0.0);
  BallFamily fam;
  fam.radii = {0.5, 1.0, 2.0};
  const GrowthReport gr = growth_constant(unit, fam);
  c.near("growth of a unit atom", gr.ratio, 1.0 / 0.125, 1e-15);
  c.near("growth witness radius", gr.witness_radius, 0.5, 0.0);
  DiscreteMeasure empty;
  c.near("half potential of the empty measure", half_dt_potential(empty, p).value, 0.0, 0.0);
  c.near("half potential of a unit atom", half_dt_potential(unit, p).value, heat_kernel_half_dt(p).value, 1e-12);
  DiscreteMeasure cloud = cantor_cloud(200, 3, 5);
  TreecodeConfig tc;
  tc.threads = 1;
  const TreecodeEvaluator ev(cloud, tc);
  const ParaPoint probe({0.33, 0.71}, 1.2);
  const SpatialVector direct = potential_T(cloud, probe);
  c.near("treecode against direct sum", (ev.evaluate(probe).value - direct).norm() / direct.norm(), 0.0, 1e-8);
}

CapacityProblem single_atom_problem(bool adjoint) {
  CapacityProblem prob;
  prob.support = {ParaPoint({0.0, 0.0}, 0.0)};
  prob.collocation = {ParaPoint({1.0, 0.0}, 1.0)};
  prob.growth_cubes = {ParaCube(ParaPoint({-5.0, -5.0}, -50.0), 10.0)};
  prob.include_adjoint = adjoint;
  prob.clearance = 0.5;
  return prob;
}

void selftest_capacity(Checks& c) {
  const double want = std::min(1000.0, 1.0 / std::abs(heat_kernel_grad(ParaPoint({1.0, 0.0}, 1.0))[0]));
  c.near("single atom S1", estimate_S1(single_atom_problem(false)).objective, want, 1e-9);
  c.near("single atom with slack adjoint", estimate_tilde_gamma_plus(single_atom_problem(true)).objective, want, 1e-9);
  PatchSpec ps;
  ps.level = 1;
  const CapacityProblem prob = plane_patch_problem(ps);
  const double s1 = estimate_S1(prob).objective, g = estimate_tilde_gamma_plus(prob).objective;
  c.expect("adjoint constraints only lower the optimum", g <= s1 * (1.0 + 1e-12),
           format_real(g) + " <= " + format_real(s1));
}

void selftest_content(Checks& c) {
  c.near("empty target", frostman_content_lower(ContentProblem{}).value, 0.0, 0.0);
  const std::vector<ParaCube> unit{ParaCube::unit(2)};
  for (int k = 0; k <= 3; ++k) {
    c.near("unit cube cover at scale " + std::to_string(k), cover_content_upper(unit, k), std::ldexp(1.0, k), 1e-12);
  }
  c.near("best cover of the unit cube", best_cover_content(unit, 0, 3), 1.0, 1e-12);
  const std::vector<ParaCube> a{ParaCube(ParaPoint({0.0, 0.0}, 0.0), 0.25)};
  const std::vector<ParaCube> b{ParaCube(ParaPoint({0.5, 0.5}, 0.5), 0.25)};
  const std::vector<ParaCube> ab{a[0], b[0]};
  c.near("cover additive over separated parts", cover_content_upper(ab, 2),
         cover_content_upper(a, 2) + cover_content_upper(b, 2), 1e-15);
  ContentProblem prob;
  prob.targets = covering_cubes(make_point_set("cantor", 2).points, 3);
  prob.depth = 3;
  c.near("greedy content equals simplex", frostman_content_lower(prob).value,
         frostman_content_lower_simplex(prob).value, 1e-9);
}

void selftest_removability(Checks& c) {
  CornerExperiment e;
  const ParaPoint z = e.corner();
  c.expect("K1 vanishes in the future of the corner",
           heat_kernel_grad1(z - ParaPoint({z.x(0) + 0.1, z.x(1)}, z.t() + 0.01)) == 0.0);
  c.expect("K1 vanishes at y1 = z1", heat_kernel_grad1(z - ParaPoint({z.x(0), z.x(1) + 0.05}, z.t() - 0.02)) == 0.0);
  e.m = 1;
  const CornerTable one = corner_sum(e);
  c.near("m = 1 is one annulus", one.rows.at(0).S, one.annuli.at(0).value, 0.0);
  CornerExperiment deeper = e;
  deeper.k = e.k + 1;
  c.near("annulus invariance under the level shift", annulus_quadrature(deeper, deeper.k).value,
         annulus_quadrature(e, e.k).value, 1e-12);
  CornerExperiment e2;
  e2.m = 3;
  const PositivityReport pos = positivity_check(e2, 5);
  c.expect("K1 nonnegative on the annuli", pos.nonnegative, "min " + format_real(pos.min_value));
}

void selftest_bmo(Checks& c) {
  const GridSpec g = make_grid(2, ParaPoint::origin(2), 0.25, 5, 17);
  const GridFunction zero(g);
  c.near("BMO of a constant", bmo_p_norm(GridFunction::sample(g, [](const ParaPoint&) { return 3.0; })).value, 0.0, 0.0);
  c.near("Lip of a constant", lip_half_t_seminorm(zero).value, 0.0, 0.0);
  const auto wave = [](const ParaPoint& p) { return std::sin(3.0 * p.x(0)) + std::cos(5.0 * p.t()); };
  const auto shifted = [&](const ParaPoint& p) { return wave(p) + 7.0; };
  c.near("BMO invariant under constants", bmo_p_norm(GridFunction::sample(g, shifted)).value,
         bmo_p_norm(GridFunction::sample(g, wave)).value, 1e-12);
  const GridSpec pair = make_grid(1, ParaPoint::origin(1), 1.0, 1, 2);
  const GridFunction root = GridFunction::sample(pair, [](const ParaPoint& p) { return std::sqrt(std::abs(p.t())); });
  c.near("Lip of sqrt|t| on {0, 1}", lip_half_t_seminorm(root).value, 1.0, 1e-15);
  BmoSpotSpec s;
  s.k = 0;
  s.nx = 5;
  s.nt = 17;
  const BmoSpotResult r = bmo_spotcheck(s);
  c.expect("k = 0 values are finite", std::isfinite(r.bmo.value) && std::isfinite(r.lip.value),
           "bmo " + format_real(r.bmo.value) + ", lip " + format_real(r.lip.value));
}

// ------------------------------------------------------------------------------

std::string read_whole_file(const std::string& path);

struct Command {
  std::function<json()> defaults;
  std::function<RunOutput(const json&)> run;
  std::function<void(Checks&)> selftest;
};

const std::map<std::string, Command>& command_table() {
  static const std::map<std::string, Command> table{
      {"kernel", {kernel_defaults, run_kernel, selftest_kernel}},
      {"cantor", {cantor_defaults, run_cantor, selftest_cantor}},
      {"potential", {potential_defaults, [](const json& c) { return run_potential(c, read_whole_file); }, selftest_potential}},
      {"capacity", {capacity_defaults, run_capacity, selftest_capacity}},
      {"content", {content_defaults, run_content, selftest_content}},
      {"removability", {removability_defaults, run_removability, selftest_removability}},
      {"bmo", {bmo_defaults, run_bmo, selftest_bmo}},
  };
  return table;
}

const Command& find_command(const std::string& name) {
  const auto& t = command_table();
  auto it = t.find(name);
  if (it == t.end()) throw ConfigError("unknown command '" + name + "'");
  return it->second;
}

std::string read_whole_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

const std::vector<std::string>& run_commands() {
  static const std::vector<std::string> names{"kernel", "cantor", "potential", "capacity",
                                              "content", "removability", "bmo"};
  return names;
}

std::string effective_config(const std::string& command, const std::string& overrides_json) {
  return merge_config(find_command(command).defaults(), overrides_json).dump();
}

RunOutput run_command(const std::string& command, const std::string& overrides_json) {
  const Command& c = find_command(command);
  json cfg = merge_config(c.defaults(), overrides_json);
  try {
    return c.run(cfg);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config value out of range: ") + e.what());
  }
}

SelftestOutcome run_selftest(const std::string& command) {
  const Command& c = find_command(command);
  Checks checks;
  try {
    c.selftest(checks);
  } catch (const std::exception& e) {
    checks.expect("selftest finished", false, e.what());
  }
  return checks.outcome();
}

}  // namespace parcal
