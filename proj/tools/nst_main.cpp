// Command-line front end for the nst scenario runner. Talks to the library
// exclusively through the C interface in nst.h.

#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "nst.h"

namespace {

int status_to_exit(nst_status st) {
  switch (st) {
    case NST_OK: return 0;
    case NST_ERR_RUNTIME: return 1;
    case NST_ERR_VALIDATION: return 2;
    case NST_ERR_INTERNAL: return 3;
  }
  return 3;
}

int complain(nst_status st) {
  std::fprintf(stderr, "nst: %s\n", nst_last_error());
  return status_to_exit(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonholonomic spacetime transformations of point-mass systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("nst ") + nst_version());

  std::string scenario_path;
  std::string output_dir;
  double tolerance_scale = 0.0;
  double grid_scale = 0.0;
  std::uint64_t seed = 2024;

  CLI::App* run = app.add_subcommand("run", "run every experiment in a scenario");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--output-dir", output_dir, "override the scenario's output directory");
  run->add_option("--tolerance-scale", tolerance_scale,
                  "multiply every pass/fail tolerance (convergence studies)");
  run->add_option("--grid-scale", grid_scale, "multiply grid sizes and sample counts");
  run->add_option("--seed", seed, "seed for randomized probe points")
      ->default_val(std::uint64_t{2024});

  CLI::App* validate =
      app.add_subcommand("validate", "parse and validate a scenario without running it");
  validate->add_option("scenario", scenario_path, "scenario JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  nst_scenario* sc = nullptr;
  const nst_status load = nst_scenario_load_file(scenario_path.c_str(), &sc);
  if (load != NST_OK) return complain(load);

  int code = 0;
  if (app.got_subcommand(validate)) {
    std::printf("ok: scenario '%s' is valid\n", nst_scenario_name(sc));
  } else {
    nst_run_options opts{};
    opts.output_dir = output_dir.empty() ? nullptr : output_dir.c_str();
    opts.tolerance_scale = tolerance_scale;
    opts.grid_scale = grid_scale;
    opts.seed = seed;
    nst_run_result res{};
    const nst_status st = nst_scenario_run(sc, &opts, &res);
    if (st != NST_OK) {
      code = complain(st);
    } else {
      std::fputs(res.report_text, stdout);
      code = res.exit_code;
    }
    nst_run_result_free(&res);
  }
  nst_scenario_free(sc);
  return code;
}
