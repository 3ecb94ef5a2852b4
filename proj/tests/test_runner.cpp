#include <doctest.h>

#include <json.hpp>

#include "parcal/error.hpp"
#include "parcal/runner.hpp"

using namespace parcal;
using json = nlohmann::json;

TEST_CASE("config merging") {
  const json eff = json::parse(effective_config("removability", R"({"m": 3})"));
  CHECK(eff["m"] == 3);
  CHECK(eff["k"] == 1);
  CHECK_THROWS_AS(effective_config("removability", R"({"mm": 3})"), ConfigError);
  CHECK_THROWS_AS(effective_config("removability", R"({"m": 3.5})"), ConfigError);
  CHECK_THROWS_AS(effective_config("removability", R"({"m": "3"})"), ConfigError);
  CHECK_THROWS_AS(effective_config("removability", "[1]"), ConfigError);
  CHECK_THROWS_AS(effective_config("removability", "{"), ConfigError);
  CHECK(json::parse(effective_config("removability", R"({"theta": 0})"))["theta"] == 0.0);
  CHECK_THROWS_AS(run_command("nonsense", ""), ConfigError);
}

TEST_CASE("outputs echo the effective config") {
  const RunOutput csv = run_command("cantor", R"({"k": 1})");
  CHECK(csv.format == "csv");
  CHECK(csv.document.rfind("# config: {\"k\":1,\"output\":\"cubes\"}\n", 0) == 0);
  const RunOutput js = run_command("cantor", R"({"k": 2, "output": "stats"})");
  CHECK(js.format == "json");
  const json doc = json::parse(js.document);
  CHECK(doc["config"]["k"] == 2);
  CHECK(doc["cubes"] == 144);
  CHECK(doc["projection_spatial"] == 4);
}

TEST_CASE("reruns are byte identical") {
  for (const char* cmd : {"kernel", "potential", "content"}) {
    const std::string cfg = std::string(cmd) == "kernel"      ? R"({"samples": 300})"
                            : std::string(cmd) == "potential" ? R"({"atoms": 3000, "probes": 30})"
                                                              : R"({"points_k": 2})";
    CHECK(run_command(cmd, cfg).document == run_command(cmd, cfg).document);
  }
}

TEST_CASE("potential threads do not change the output") {
  const std::string a = run_command("potential", R"({"atoms": 4000, "probes": 40, "threads": 1})").document;
  const std::string b = run_command("potential", R"({"atoms": 4000, "probes": 40, "threads": 3})").document;
  CHECK(a.substr(a.find('\n')) == b.substr(b.find('\n')));
}

TEST_CASE("selftests pass") {
  for (const auto& cmd : run_commands()) {
    const SelftestOutcome r = run_selftest(cmd);
    INFO(cmd << "\n" << r.report);
    CHECK(r.passed);
  }
}
