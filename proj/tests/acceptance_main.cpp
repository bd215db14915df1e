// End-to-end acceptance gates for the nst library and CLI. Each criterion
// prints one PASS/FAIL line; the process exits 0 only if every gate holds.
//
// Usage: acceptance <path-to-nst-cli> <scenarios-dir>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "classical.hpp"
#include "errors.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "quantum.hpp"
#include "scenario.hpp"
#include "transform.hpp"

using namespace nst;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int idx, const char* name, bool pass, const std::string& detail) {
  std::printf("[%d] %-18s %s  %s\n", idx, name, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(double x) {
  char b[40];
  std::snprintf(b, sizeof b, "%.3g", x);
  return b;
}

double uni(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1p-53; }
double rnd(std::mt19937_64& g, double lo, double hi) { return lo + (hi - lo) * uni(g); }

// A smooth invertible-on-[-1,1]^d chart: a polynomial layer composed with a
// trig layer, both close to the identity.
SmoothMap random_chart(int d, std::mt19937_64& g) {
  const double scale = 0.5 / d;
  std::vector<Expr> trig(d), poly(d);
  for (int i = 0; i < d; ++i) {
    const int j = static_cast<int>(g() % static_cast<std::uint64_t>(d));
    const int k = static_cast<int>(g() % static_cast<std::uint64_t>(d));
    const Expr qi = Expr::variable(i), qj = Expr::variable(j), qk = Expr::variable(k);
    trig[i] = qi + Expr::constant(rnd(g, -scale, scale)) * Expr::apply(ExFun::kSin, qj) +
              Expr::constant(rnd(g, -scale, scale)) * Expr::apply(ExFun::kCos, qk);
    poly[i] = qi + Expr::constant(rnd(g, -scale, scale)) * qj * qk +
              Expr::constant(rnd(g, -scale, scale)) * qi * qi;
  }
  const SmoothMap inner = SmoothMap::from_expressions(trig, d);
  return SmoothMap::from_expressions(poly, d).compose(inner);
}

ScalarField random_time_scale(int d, std::mt19937_64& g) {
  Expr e;
  if (uni(g) < 0.5) {
    e = Expr::constant(rnd(g, 0.2, 0.8));  // exp(c + sum a_i Q_i)
    for (int i = 0; i < d; ++i)
      e = e + Expr::constant(rnd(g, -0.6, 0.6) / d) * Expr::variable(i);
    e = Expr::apply(ExFun::kExp, e);
  } else {
    e = Expr::constant(rnd(g, 0.8, 1.6));  // positive quadratic
    for (int i = 0; i < d; ++i) {
      const Expr qi = Expr::variable(i);
      e = e + Expr::constant(rnd(g, 0.1, 0.5)) * qi * qi;
    }
  }
  return ScalarField::from_expression(e, d);
}

MetricField random_constant_spd(int d, std::mt19937_64& g) {
  const double p = uni(g);
  Mat a = Mat::identity(d);
  if (p > 0.7) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) += rnd(g, -0.3, 0.3) / d;
  } else if (p > 0.4) {
    for (int i = 0; i < d; ++i) a(i, i) = rnd(g, 0.5, 1.8);
  }
  std::vector<Expr> entries(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += a(k, i) * a(k, j);
      entries[static_cast<std::size_t>(i) * d + j] = Expr::constant(s);
    }
  return MetricField::from_expressions(d, entries);
}

DomainBox cube(int d, double half) { return DomainBox{Vec(d, -half), Vec(d, half)}; }

const std::vector<std::string> kq1 = coordinate_names("q", 1);
const std::vector<std::string> kQ1 = coordinate_names("Q", 1);

SystemSpec coulomb_system() {
  SystemSpec s;
  s.dim = 1;
  s.metric = MetricField::euclidean(1);
  s.scalar_potential = ScalarField::from_expression(parse_expression("-1/q1", kq1), 1);
  s.domain = DomainBox{{1e-4}, {20.0}};
  return s;
}

TransformSpec square_chart() {
  TransformSpec t;
  t.space_map = SmoothMap::from_expressions({parse_expression("Q1^2", kQ1)}, 1);
  t.inverse_map = SmoothMap::from_expressions({parse_expression("sqrt(q1)", kq1)}, 1);
  t.time_scale = ScalarField::from_expression(parse_expression("4*Q1^2", kQ1), 1);
  t.domain = DomainBox{{0.01}, {4.5}};
  return t;
}

TransformSpec identity_chart(double energy = 0.0) {
  TransformSpec t;
  t.space_map = SmoothMap::from_expressions({parse_expression("Q1", kQ1)}, 1);
  t.inverse_map = SmoothMap::from_expressions({parse_expression("q1", kq1)}, 1);
  t.time_scale = ScalarField::from_expression(parse_expression("1", kQ1), 1);
  t.energy = energy;
  t.domain = DomainBox{{1e-4}, {20.0}};
  return t;
}

// ---------- criterion 1 ----------

void criterion_schwarz() {
  std::mt19937_64 g(101);
  double worst_holonomic = 0.0;
  for (int m = 0; m < 10; ++m) {
    const int d = 1 + m % 3;
    const SmoothMap map = random_chart(d, g);
    for (int p = 0; p < 100; ++p) {
      Vec Q(d);
      for (int i = 0; i < d; ++i) Q[i] = rnd(g, -0.8, 0.8);
      worst_holonomic = std::max(worst_holonomic, schwarz_residual(map, Q));
    }
  }
  double best_adhoc = 1e300;
  for (int m = 0; m < 5; ++m) {
    const int d = 2 + m % 2;
    // Identity frame with one deliberately non-integrable entry.
    std::vector<Expr> e(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) e[static_cast<std::size_t>(i) * d + j] =
          Expr::constant(i == j ? 1.0 : 0.0);
    e[1] = Expr::constant(rnd(g, 0.5, 1.5)) * Expr::variable(0);  // e^1_2 ~ Q1
    const MatrixField frame = MatrixField::from_expressions(d, e);
    Vec Q(d);
    for (int i = 0; i < d; ++i) Q[i] = rnd(g, -0.8, 0.8);
    best_adhoc = std::min(best_adhoc, schwarz_residual(frame, Q));
  }
  const bool pass = worst_holonomic < 1e-8 && best_adhoc > 1e-2;
  report(1, "schwarz-holonomy", pass,
         "10 charts x 100 pts max residual " + fmt(worst_holonomic) +
             "; 5 ad-hoc frames min residual " + fmt(best_adhoc));
}

// ---------- criterion 2 ----------

void criterion_d2_vanishing() {
  std::mt19937_64 g(202);
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    SystemSpec init;
    init.dim = 2;
    init.mass = rnd(g, 0.5, 2.0);
    init.hbar = rnd(g, 0.5, 1.5);
    // Position-dependent SPD metric g = A^T A, A = I + small expressions.
    std::vector<Expr> arows(4);
    for (int i = 0; i < 4; ++i)
      arows[i] = Expr::constant(i % 3 == 0 ? 1.0 : 0.0) +
                 Expr::constant(rnd(g, -0.2, 0.2)) * Expr::variable(i % 2) *
                     Expr::variable(i / 2);
    std::vector<Expr> gm(4);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        gm[static_cast<std::size_t>(i) * 2 + j] = arows[i] * arows[j] +
                                                  arows[2 + i] * arows[2 + j];
    init.metric = MetricField::from_expressions(2, gm);
    init.scalar_potential = ScalarField::zero(2);
    init.domain = cube(2, 2.0);

    TransformSpec tr;
    tr.space_map = random_chart(2, g);
    tr.time_scale = random_time_scale(2, g);
    tr.energy = rnd(g, -1.0, 1.0);
    tr.domain = cube(2, 0.7);

    const TransformedSystem ts = transform_system(init, tr);
    for (const Vec& Q : tr.domain.grid(3))
      worst = std::max(worst, std::abs(ts.quantum_correction(Q)));
  }
  report(2, "d2-vanishing", worst < 1e-10,
         "20 random (f, e, g) cases, max |Vqu| = " + fmt(worst));
}

// ---------- criterion 3 ----------

void criterion_equivalence() {
  std::mt19937_64 g(303);
  double worst = 0.0;
  int cases = 0;
  for (int c = 0; c < 100; ++c) {
    const int d = std::array<int, 3>{1, 3, 4}[c % 3];
    SystemSpec init;
    init.dim = d;
    init.mass = rnd(g, 0.5, 2.0);
    init.hbar = rnd(g, 0.5, 1.5);
    init.metric = random_constant_spd(d, g);
    init.scalar_potential = ScalarField::zero(d);
    init.domain = cube(d, 2.0);

    TransformSpec tr;
    tr.space_map = random_chart(d, g);
    tr.time_scale = random_time_scale(d, g);
    tr.energy = rnd(g, -1.0, 1.0);
    tr.conformal_exponent = -1;
    tr.domain = cube(d, 0.7);

    const TransformedSystem ts = transform_system(init, tr);
    const ScalarField vgeo = quantum_potential_geometric(init, tr);
    Vec Q(d);
    for (int i = 0; i < d; ++i) Q[i] = rnd(g, -0.6, 0.6);
    const double vd = ts.quantum_correction(Q);
    const double vg = vgeo(Q);
    const double rel = std::abs(vd - vg) / std::max({std::abs(vd), std::abs(vg), 1e-15});
    worst = std::max(worst, rel);
    ++cases;
  }
  report(3, "direct-geometric", worst < 1e-8,
         std::to_string(cases) +
             " random charts in D = 1,3,4 (christoffel reading: raised_lower), "
             "max relative gap " +
             fmt(worst));
}

// ---------- criterion 4 ----------

void criterion_correspondence(const fs::path& workdir) {
  bool pass = true;
  std::string detail;

  // One walled radial period: s in [0, pi] maps onto t in [0, 16 pi]. The
  // matched walls sit at q = 0.016 = Q^2 so the bounce stays clear of the
  // collision singularity.
  const fs::path out = workdir / "auto-orbit";
  const std::string scen = std::string(R"json({
    "name": "auto-exponent-orbit",
    "initial_system": {
      "dim": 1, "metric": ["1"], "scalar_potential": "-1/q1",
      "domain": [[0.016, 20.0]]
    },
    "transform": {
      "space_map": ["Q1^2"], "inverse_map": ["sqrt(q1)"], "time_scale": "4*Q1^2",
      "energy": -0.125, "conformal_exponent": "auto",
      "domain": [[0.12649110640673517, 4.5]]
    },
    "experiments": [
      { "type": "correspondence", "label": "orbit", "x0": [8.0], "v0": [0.0],
        "s_span": 3.141592653589793, "n_samples": 2000, "tolerance": 1e-6,
        "rel_tol": 1e-12, "abs_tol": 1e-14, "reflecting_walls": true }
    ],
    "output_dir": ")json") + out.string() + "\"}";

  try {
    const Scenario sc = parse_scenario(scen);
    const RunResult rr = run_scenario(sc);
    const auto summary = nlohmann::json::parse(rr.summary_json);
    const int resolved = summary["conventions"]["conformal_exponent"]["resolved"].get<int>();
    const double err =
        summary["experiments"][0]["details"]["max_position_error"].get<double>();
    pass = rr.exit_code == 0 && resolved == -1 && err < 1e-6;
    detail = "auto exponent " + std::to_string(resolved) + ", orbit deviation " + fmt(err);
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }

  try {
    const CorrespondenceReport rep =
        correspondence_check(coulomb_system(), identity_chart(-0.125), {8.0}, {0.0}, 10.0, 100);
    pass = pass && rep.max_position_error < 1e-9;
    detail += "; identity control " + fmt(rep.max_position_error);
  } catch (const std::exception& e) {
    pass = false;
    detail += std::string("; identity control exception: ") + e.what();
  }
  report(4, "correspondence", pass, detail);
}

// ---------- criterion 5 ----------

void criterion_zero_modes() {
  const SystemSpec init = coulomb_system();
  const TransformSpec tr = square_chart();
  auto grids = [](std::size_t n) {
    return std::pair<Grid1D, Grid1D>{{0.016, 16.016, n},
                                     {std::sqrt(0.016), std::sqrt(16.016), n}};
  };
  bool pass = true;
  std::string detail;
  try {
    const auto [gi4, gt4] = grids(4000);
    const auto [gi8, gt8] = grids(8000);
    const ZeroModeReport base = zero_mode_spectral_check(init, tr, gi4, gt4, 3, true);
    const double threshold = 1e-4 * std::abs(base.initial_levels[0]);
    double worst = 0.0;
    for (double off : base.offsets) worst = std::max(worst, off);
    pass = worst < threshold;

    const ZeroModeReport fine = zero_mode_spectral_check(init, tr, gi8, gt8, 3, true);
    double min_conv = 1e300;
    for (std::size_t k = 0; k < 3; ++k)
      min_conv = std::min(min_conv, base.offsets[k] / fine.offsets[k]);
    pass = pass && min_conv > 2.5;

    const ZeroModeReport bare = zero_mode_spectral_check(init, tr, gi4, gt4, 3, false);
    double min_ratio = 1e300;
    for (std::size_t k = 0; k < 3; ++k)
      min_ratio = std::min(min_ratio, bare.offsets[k] / base.offsets[k]);
    pass = pass && min_ratio >= 10.0;

    detail = "max offset " + fmt(worst) + " (gate " + fmt(threshold) + "), h^2 factor " +
             fmt(min_conv) + ", correction ratio " + fmt(min_ratio);
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  report(5, "zero-modes", pass, detail);
}

// ---------- criterion 6 ----------

void criterion_resolvent() {
  const SystemSpec init = coulomb_system();
  const std::array<double, 2> pairs[] = {{4.0, 9.0}, {3.5, 6.0}, {5.0, 11.0}, {8.0, 12.5}};
  bool pass = true;
  std::string detail;
  try {
    const ResolventReport ident = resolvent_dk_check(init, identity_chart(), {1e-4, 20.0, 800},
                                                     {1e-4, 20.0, 800}, -1.0, pairs);
    pass = ident.max_rel_error < 1e-10 && ident.max_solve_residual < 1e-10;

    auto run = [&](std::size_t n, double delta) {
      const Grid1D gi{0.016, 16.016, n};
      const Grid1D gt{std::sqrt(0.016), std::sqrt(16.016), n};
      return resolvent_dk_check(init, square_chart(), gi, gt, -1.0, pairs, delta);
    };
    const double e4 = run(4000, 0.0).max_rel_error;
    const double e8 = run(8000, 0.0).max_rel_error;
    const double e16 = run(16000, 0.0).max_rel_error;
    pass = pass && e4 < 1e-3 && e8 < e4 && e16 < e8;

    const double plus = run(4000, 0.25).max_rel_error;
    const double minus = run(4000, -0.25).max_rel_error;
    pass = pass && plus >= 100.0 * e4 && minus >= 100.0 * e4;

    detail = "identity " + fmt(ident.max_rel_error) + "; coulomb " + fmt(e4) + " -> " + fmt(e8) +
             " -> " + fmt(e16) + "; exponent shifts x" + fmt(plus / e4) + "/x" + fmt(minus / e4);
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  report(6, "resolvent", pass, detail);
}

// ---------- criterion 7 ----------

void criterion_derivative_oracles() {
  std::mt19937_64 g(707);
  double worst = 0.0;
  int samples = 0;
  while (samples < 1000) {
    const int d = 1 + samples % 3;
    const SmoothMap m = random_chart(d, g);
    for (int p = 0; p < 5 && samples < 1000; ++p, ++samples) {
      std::vector<double> x(d);
      for (int i = 0; i < d; ++i) x[i] = rnd(g, -0.7, 0.7);
      const Mat ja = m.jacobian(x);
      const Tensor3 h = m.hessian(x);
      for (int c = 0; c < d; ++c) {
        oracle::FnN comp = [&](const std::vector<double>& p2) { return m(p2)[c]; };
        for (int i = 0; i < d; ++i) {
          worst = std::max(worst, std::abs(ja(c, i) - oracle::partial(comp, x, i)));
          for (int j = 0; j <= i; ++j)
            worst = std::max(worst,
                             std::abs(h(c, i, j) - oracle::second_partial(comp, x, i, j)));
        }
      }
    }
  }
  report(7, "derivative-oracles", worst < 1e-8,
         "1000 (chart, point) samples, max |jet - FD| = " + fmt(worst));
}

// ---------- criterion 8 ----------

int run_cli(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_cli(const std::string& cli, const fs::path& scenarios, const fs::path& workdir) {
  bool pass = true;
  std::string detail;
  const std::string scen = (scenarios / "coulomb_oscillator.json").string();
  const fs::path run1 = workdir / "cli-run1";
  const fs::path run2 = workdir / "cli-run2";
  const fs::path log = workdir / "cli-log.txt";

  const int v = run_cli(cli + " validate " + scen + " >> " + log.string() + " 2>&1");
  pass = v == 0;

  const int c1 = run_cli(cli + " run " + scen + " --output-dir " + run1.string() +
                         " --seed 2024 >> " + log.string() + " 2>&1");
  const int c2 = run_cli(cli + " run " + scen + " --output-dir " + run2.string() +
                         " --seed 2024 >> " + log.string() + " 2>&1");
  pass = pass && c1 == 0 && c2 == 0;
  detail = "validate rc " + std::to_string(v) + ", runs rc " + std::to_string(c1) + "/" +
           std::to_string(c2);

  if (pass) {
    std::vector<std::string> names;
    for (const auto& ent : fs::directory_iterator(run1)) names.push_back(ent.path().filename());
    std::sort(names.begin(), names.end());
    bool identical = !names.empty();
    for (const auto& n : names)
      if (!fs::exists(run2 / n) || slurp(run1 / n) != slurp(run2 / n)) identical = false;
    pass = identical;
    detail += identical ? "; " + std::to_string(names.size()) + " outputs bit-identical"
                        : "; outputs differ between identical runs";
  }

  // Invalid documents: exit 2, and nothing gets written.
  const fs::path badf = workdir / "bad.json";
  const fs::path badout = workdir / "bad-out";
  {
    std::ofstream f(badf);
    f << "{ \"name\": ";  // truncated JSON
  }
  const int b1 = run_cli(cli + " run " + badf.string() + " --output-dir " + badout.string() +
                         " > /dev/null 2>&1");
  pass = pass && b1 == 2 && !fs::exists(badout);
  {
    std::ofstream f(badf);  // parses as JSON, fails validation
    f << R"({"name":"x","initial_system":{"dim":1,"metric":["1 +"],"scalar_potential":"0",
        "domain":[[0,1]]},"transform":{"space_map":["Q1"],"time_scale":"1",
        "domain":[[0,1]]},"experiments":[]})";
  }
  const int b2 = run_cli(cli + " run " + badf.string() + " --output-dir " + badout.string() +
                         " > /dev/null 2>&1");
  pass = pass && b2 == 2 && !fs::exists(badout);
  detail += "; invalid docs rc " + std::to_string(b1) + "/" + std::to_string(b2) +
            (fs::exists(badout) ? " (partial outputs!)" : ", no partial outputs");

  report(8, "cli-contract", pass, detail);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <nst-cli> <scenarios-dir>\n");
    return 3;
  }
  const std::string cli = argv[1];
  const fs::path scenarios = argv[2];
  const fs::path workdir = fs::temp_directory_path() / "nst-acceptance";
  std::error_code ec;
  fs::remove_all(workdir, ec);
  fs::create_directories(workdir, ec);
  if (ec) {
    std::fprintf(stderr, "cannot create %s\n", workdir.string().c_str());
    return 3;
  }

  std::printf("nst acceptance gates\n");
  criterion_schwarz();
  criterion_d2_vanishing();
  criterion_equivalence();
  criterion_correspondence(workdir);
  criterion_zero_modes();
  criterion_resolvent();
  criterion_derivative_oracles();
  criterion_cli(cli, scenarios, workdir);

  if (g_failures == 0) {
    std::printf("acceptance: all 8 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criteria FAILED\n", g_failures);
  return 1;
}
