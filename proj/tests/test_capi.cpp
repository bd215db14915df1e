#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <string>

#include "nst.h"

namespace fs = std::filesystem;

namespace {

std::string minimal_scenario(const std::string& outdir) {
  return std::string(R"({
  "name": "capi-smoke",
  "initial_system": {
    "dim": 1, "metric": ["1"], "scalar_potential": "0",
    "domain": [[-2.0, 2.0]]
  },
  "transform": {
    "space_map": ["Q1"], "inverse_map": ["q1"], "time_scale": "1",
    "domain": [[-1.0, 1.0]]
  },
  "experiments": [
    { "type": "geometry-audit", "points": [[0.25]], "tolerance": 1e-8 }
  ],
  "output_dir": ")") +
         outdir + "\"}";
}

}  // namespace

TEST_CASE("version string is exposed") {
  const char* v = nst_version();
  REQUIRE(v != nullptr);
  CHECK(std::strlen(v) >= 5);
}

TEST_CASE("null arguments are refused, not crashed on") {
  CHECK(nst_scenario_load_string(nullptr, nullptr) == NST_ERR_VALIDATION);
  nst_scenario* sc = nullptr;
  CHECK(nst_scenario_load_string(nullptr, &sc) == NST_ERR_VALIDATION);
  CHECK(sc == nullptr);
  CHECK(nst_scenario_run(nullptr, nullptr, nullptr) == NST_ERR_VALIDATION);
  nst_scenario_free(nullptr);   // no-ops
  nst_run_result_free(nullptr);
}

TEST_CASE("malformed documents report through nst_last_error") {
  nst_scenario* sc = nullptr;
  CHECK(nst_scenario_load_string("{ nope", &sc) == NST_ERR_VALIDATION);
  CHECK(sc == nullptr);
  CHECK(std::strlen(nst_last_error()) > 0);

  CHECK(nst_scenario_load_file("/no/such/file.json", &sc) == NST_ERR_INTERNAL);
  CHECK(sc == nullptr);
}

TEST_CASE("load, inspect, run, free round-trip") {
  const fs::path out = fs::temp_directory_path() / "nst-capi-run";
  fs::remove_all(out);

  const std::string text = minimal_scenario(out.string());
  nst_scenario* sc = nullptr;
  REQUIRE(nst_scenario_load_string(text.c_str(), &sc) == NST_OK);
  REQUIRE(sc != nullptr);
  CHECK(std::string(nst_scenario_name(sc)) == "capi-smoke");

  nst_run_options opts{};
  opts.seed = 2024;
  nst_run_result res{};
  REQUIRE(nst_scenario_run(sc, &opts, &res) == NST_OK);
  CHECK(res.exit_code == 0);
  REQUIRE(res.summary_json != nullptr);
  REQUIRE(res.report_text != nullptr);
  CHECK(std::string(res.summary_json).find("\"status\": \"pass\"") != std::string::npos);
  CHECK(std::string(res.report_text).find("overall: PASS") != std::string::npos);
  CHECK(fs::exists(out / "summary.json"));

  nst_run_result_free(&res);
  CHECK(res.summary_json == nullptr);
  nst_scenario_free(sc);
  fs::remove_all(out);
}

TEST_CASE("default options work and omit nothing essential") {
  const fs::path out = fs::temp_directory_path() / "nst-capi-defaults";
  fs::remove_all(out);
  const std::string text = minimal_scenario(out.string());
  nst_scenario* sc = nullptr;
  REQUIRE(nst_scenario_load_string(text.c_str(), &sc) == NST_OK);
  nst_run_result res{};
  REQUIRE(nst_scenario_run(sc, nullptr, &res) == NST_OK);
  CHECK(res.exit_code == 0);
  nst_run_result_free(&res);
  nst_scenario_free(sc);
  fs::remove_all(out);
}
