// Command-line front end.  Talks to the library only through the C API.
//
// Config precedence: flags, then the --config file, then built-in defaults.
// Output goes to --out, else $PARCAL_OUT_DIR/<command>.<ext>, else stdout.

#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "parcal/parcal.h"

namespace {

using json = nlohmann::json;

enum class Kind { Int, Real, Text, Bool };

struct Flag {
  std::string name;  // without the leading dashes
  std::string key;   // config key
  Kind kind;
  std::string help;
};

const std::map<std::string, std::vector<Flag>>& flag_table() {
  static const std::map<std::string, std::vector<Flag>> table{
      {"kernel",
       {{"verify-bounds", "verify_bounds", Kind::Text, "W, grad_W, dt_W, half_dt_W, all or none"},
        {"n", "n", Kind::Int, "spatial dimension"},
        {"samples", "samples", Kind::Int, "sample size"},
        {"r-min", "r_min", Kind::Real, "smallest parabolic radius"},
        {"r-max", "r_max", Kind::Real, "largest parabolic radius"},
        {"rel-tol", "rel_tol", Kind::Real, "half-derivative quadrature tolerance"},
        {"regularity", "regularity", Kind::Bool, "also report the regularity constant"},
        {"seed", "seed", Kind::Int, "sampler seed"}}},
      {"cantor",
       {{"k", "k", Kind::Int, "generation"}, {"output", "output", Kind::Text, "cubes, measure or stats"}}},
      {"potential",
       {{"atoms", "atoms", Kind::Int, "atoms in the Cantor cloud"},
        {"depth", "depth", Kind::Int, "generation of the cloud atoms"},
        {"probes", "probes", Kind::Int, "number of probe points"},
        {"method", "method", Kind::Text, "both, treecode or direct"},
        {"adjoint", "adjoint", Kind::Bool, "evaluate T* instead of T"},
        {"order", "order", Kind::Int, "Chebyshev proxy order"},
        {"theta", "theta", Kind::Real, "centroid admissibility"},
        {"variation", "variation", Kind::Real, "proxy admissibility"},
        {"leaf-capacity", "leaf_capacity", Kind::Int, "atoms per tree leaf"},
        {"measure-csv", "measure_csv", Kind::Text, "read the measure from this CSV"},
        {"seed", "seed", Kind::Int, "cloud and probe seed"},
        {"threads", "threads", Kind::Int, "worker threads (0 = hardware)"}}},
      {"capacity",
       {{"set", "set", Kind::Text, "plane:x1=t or plane:t=0"},
        {"levels", "levels", Kind::Int, "finest level"},
        {"level-min", "level_min", Kind::Int, "coarsest level"},
        {"mode", "mode", Kind::Text, "S1 or gamma_plus"},
        {"norm", "norm", Kind::Text, "per_component or polyhedral"},
        {"facets", "facets", Kind::Int, "polygon facets for the polyhedral norm"},
        {"clearance-factor", "clearance_factor", Kind::Real, "clearance over atom spacing"},
        {"dilation", "dilation", Kind::Real, "dilate the discretization by this factor"},
        {"violation-tol", "violation_tol", Kind::Real, "allowed potential constraint residual"},
        {"batch", "batch", Kind::Int, "violated rows added per round"},
        {"threads", "threads", Kind::Int, "worker threads (0 = hardware)"}}},
      {"content",
       {{"set", "set", Kind::Text, "cantor, cube, plane:t=0 or plane:x1=t"},
        {"points-k", "points_k", Kind::Int, "resolution of the point set"},
        {"dyadic-k", "dyadic_k", Kind::Int, "target dyadic scale (-1 = automatic)"},
        {"box-k-min", "box_k_min", Kind::Int, "coarsest box-counting scale"},
        {"box-k-max", "box_k_max", Kind::Int, "finest box-counting scale (-1 = automatic)"},
        {"cover-k-min", "cover_k_min", Kind::Int, "coarsest cover scale"},
        {"simplex-check", "simplex_check", Kind::Bool, "cross-check the greedy content with the LP"}}},
      {"removability",
       {{"k", "k", Kind::Int, "base generation"},
        {"m", "m", Kind::Int, "number of annuli"},
        {"refine", "refine", Kind::Int, "minimal quadrature depth"},
        {"max-refine", "max_refine", Kind::Int, "largest quadrature depth"},
        {"theta", "theta", Kind::Real, "leaf admissibility"},
        {"positivity-samples", "positivity_samples", Kind::Int, "scan nodes per axis"}}},
      {"bmo",
       {{"k", "k", Kind::Int, "Cantor generation"},
        {"nx", "nx", Kind::Int, "spatial nodes per axis"},
        {"nt", "nt", Kind::Int, "time nodes"},
        {"theta", "theta", Kind::Real, "cube splitting ratio"},
        {"max-split", "max_split", Kind::Int, "deepest split below the generation"},
        {"shift-x1", "shift_x1", Kind::Real, "grid shift in cells"},
        {"shift-x2", "shift_x2", Kind::Real, "grid shift in cells"},
        {"shift-t", "shift_t", Kind::Real, "grid shift in cells"},
        {"threads", "threads", Kind::Int, "worker threads (0 = hardware)"}}},
  };
  return table;
}

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> d{
      {"kernel", "kernel envelope ratios over log-spaced samples"},
      {"cantor", "Cantor generation cubes, natural measure or statistics"},
      {"potential", "T mu or T* mu on a Cantor cloud, treecode and direct"},
      {"capacity", "discretized capacity LP on plane patches"},
      {"content", "Frostman content and box dimension of a point set"},
      {"removability", "corner blow-up sums and kernel positivity scan"},
      {"bmo", "BMO and Lip(1/2) of the half-derivative potential"},
  };
  return d;
}

struct FlagValue {
  const Flag* flag = nullptr;
  CLI::Option* option = nullptr;
  long long i = 0;
  double r = 0.0;
  std::string s;
  bool b = false;
};

struct Subcommand {
  CLI::App* app = nullptr;
  std::string config_path;
  std::string out;
  bool selftest = false;
  std::deque<FlagValue> values;
};

void error_json(const std::string& kind, const std::string& message, bool with_estimate = false, double best = 0.0,
                double err = 0.0) {
  json j{{"error", kind}, {"message", message}};
  if (with_estimate) {
    j["best_estimate"] = best;
    j["error_estimate"] = err;
  }
  std::cerr << j.dump() << '\n';
}

int exit_code_for(parcal_status s) {
  return s == PARCAL_ERR_TOLERANCE || s == PARCAL_ERR_REFINE ? 2 : 1;
}

int report_failure(parcal_status s) {
  double best = 0.0, err = 0.0;
  const bool est = parcal_last_estimate(&best, &err) != 0;
  error_json(parcal_status_name(s), parcal_last_error(), est, best, err);
  return exit_code_for(s);
}

// Config file overlaid with the flags that were given.
json build_overrides(const Subcommand& sub) {
  json cfg = json::object();
  if (!sub.config_path.empty()) {
    std::ifstream in(sub.config_path);
    if (!in) throw std::runtime_error("cannot read config file '" + sub.config_path + "'");
    try {
      in >> cfg;
    } catch (const json::exception& e) {
      throw std::runtime_error("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!cfg.is_object()) throw std::runtime_error("config file must hold a JSON object");
  }
  for (const FlagValue& v : sub.values) {
    if (v.option->count() == 0) continue;
    switch (v.flag->kind) {
      case Kind::Int: cfg[v.flag->key] = v.i; break;
      case Kind::Real: cfg[v.flag->key] = v.r; break;
      case Kind::Text: cfg[v.flag->key] = v.s; break;
      case Kind::Bool: cfg[v.flag->key] = v.b; break;
    }
  }
  return cfg;
}

std::filesystem::path output_path(const std::string& command, const std::string& out, const std::string& ext) {
  const char* dir = std::getenv("PARCAL_OUT_DIR");
  if (out == "-") return {};
  if (!out.empty()) {
    std::filesystem::path p(out);
    if (p.is_relative() && dir && *dir) return std::filesystem::path(dir) / p;
    return p;
  }
  if (dir && *dir) return std::filesystem::path(dir) / (command + "." + ext);
  return {};
}

int run(const std::string& command, const Subcommand& sub) {
  if (sub.selftest) {
    parcal_run* r = nullptr;
    const parcal_status s = parcal_run_selftest(command.c_str(), &r);
    if (s != PARCAL_OK) return report_failure(s);
    std::cout << parcal_run_document(r);
    const bool ok = parcal_run_passed(r) != 0;
    std::cout << command << " selftest " << (ok ? "passed" : "FAILED") << '\n';
    parcal_run_free(r);
    return ok ? 0 : 1;
  }
  json overrides;
  try {
    overrides = build_overrides(sub);
  } catch (const std::exception& e) {
    error_json("config_error", e.what());
    return 1;
  }
  parcal_run* r = nullptr;
  const parcal_status s = parcal_run_command(command.c_str(), overrides.dump().c_str(), &r);
  if (s != PARCAL_OK) return report_failure(s);
  const std::string document = parcal_run_document(r);
  const std::filesystem::path path = output_path(command, sub.out, parcal_run_format(r));
  const std::string summary = parcal_run_summary(r);
  parcal_run_free(r);
  if (path.empty()) {
    std::cout << document;
    return 0;
  }
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary);
  f << document;
  f.close();
  if (!f) {
    error_json("io_error", "cannot write '" + path.string() + "'");
    return 1;
  }
  std::cout << path.string() << ' ' << summary << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Caloric capacity and Cantor set experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(parcal_version()));

  std::map<std::string, Subcommand> subs;
  for (const auto& [name, flags] : flag_table()) {
    Subcommand& sub = subs[name];
    sub.app = app.add_subcommand(name, descriptions().at(name));
    sub.app->add_option("--config", sub.config_path, "JSON file of config overrides");
    sub.app->add_option("--out", sub.out, "output file ('-' for stdout)");
    sub.app->add_flag("--selftest", sub.selftest, "run the built-in checks and exit");
    for (const Flag& f : flags) {
      FlagValue& v = sub.values.emplace_back();
      v.flag = &f;
      const std::string opt = "--" + f.name;
      switch (f.kind) {
        case Kind::Int: v.option = sub.app->add_option(opt, v.i, f.help); break;
        case Kind::Real: v.option = sub.app->add_option(opt, v.r, f.help); break;
        case Kind::Text: v.option = sub.app->add_option(opt, v.s, f.help); break;
        case Kind::Bool: v.option = sub.app->add_option(opt, v.b, f.help)->expected(0, 1)->default_str("true"); break;
      }
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  for (auto& [name, sub] : subs) {
    if (sub.app->parsed()) return run(name, sub);
  }
  return 1;
}
