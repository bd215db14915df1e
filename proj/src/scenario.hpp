#pragma once
// Declarative scenario layer: JSON in, experiment pipelines out. A scenario
// bundles an initial system, one transform, and a list of experiments
// (geometry-audit | correspondence | spectra | resolvent). Parsing validates
// everything up front and reports every violated precondition at once;
// running writes one CSV per experiment plus summary.json and report.txt
// into the output directory.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "classical.hpp"
#include "quantum.hpp"

namespace nst {

inline constexpr const char* kVersion = "0.1.0";

struct GeometryAuditParams {
  std::vector<Vec> points;   // declared probe points in Q
  int n_random_points = 0;   // extra seeded samples drawn from the Q domain
  double tolerance = 1e-8;   // relative gate on |direct - geometric|
};

struct CorrespondenceParams {
  Vec x0, v0;                // initial-frame data
  double s_span = 1.0;
  std::size_t n_samples = 2000;
  double tolerance = 1e-6;   // gate on the mapped-orbit position error
  bool reflecting_walls = false;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
};

struct SpectraParams {
  Grid1D grid_initial;
  Grid1D grid_transformed;
  std::size_t n_levels = 3;
  double tolerance = 1e-4;   // offsets gated against tolerance * |E_1|
  // Dropping V^(qu) must inflate every offset by at least this factor
  // (0 disables the cross-check).
  double require_correction_ratio = 10.0;
};

struct ResolventParams {
  Grid1D grid_initial;
  Grid1D grid_transformed;
  std::optional<double> probe_energy;  // default: 2 E_1 of the initial grid
  std::vector<std::array<double, 2>> pairs;  // (q_a, q_b) probes
  double tolerance = 1e-3;
  double prefactor_delta = 0.0;  // deliberate exponent perturbation
};

struct Experiment {
  enum class Type { kGeometryAudit, kCorrespondence, kSpectra, kResolvent };
  Type type = Type::kGeometryAudit;
  std::string label;  // defaults to the type name; used for CSV file names
  GeometryAuditParams audit;
  CorrespondenceParams corr;
  SpectraParams spectra;
  ResolventParams resolvent;
};

const char* to_string(Experiment::Type t);

struct Scenario {
  std::string name = "unnamed";
  SystemSpec initial;
  TransformSpec transform;     // conformal_exponent holds -1 until auto resolves
  bool exponent_auto = false;  // "auto": resolved by the correspondence probe
  std::vector<Experiment> experiments;
  std::string output_dir = "out";
};

// Throws ParseError on malformed JSON, ValidationError (with the complete
// issue list) on precondition violations. A returned Scenario is runnable.
Scenario parse_scenario(const std::string& text);
// Reads the file (InfrastructureError when unreadable) and parses it.
Scenario load_scenario_file(const std::string& path);

struct RunOptions {
  std::string output_dir;        // empty: use the scenario's
  double tolerance_scale = 1.0;  // multiplies every experiment gate
  double grid_scale = 1.0;       // multiplies grid sizes and sample counts
  std::uint64_t seed = 2024;     // audit-point sampling
};

struct RunResult {
  int exit_code = 0;         // 0 pass, 1 any experiment failed or errored
  bool all_passed = false;
  std::string summary_json;  // also written to <output_dir>/summary.json
  std::string report_text;   // also written to <output_dir>/report.txt
};

// Executes the experiments in order. Per-experiment failures and runtime
// errors are captured in the summary (exit_code 1); only infrastructure
// trouble (unwritable output directory) throws.
RunResult run_scenario(const Scenario& sc, const RunOptions& opts = {});

}  // namespace nst
