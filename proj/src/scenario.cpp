#include "scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <random>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace nst {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const char* to_string(Experiment::Type t) {
  switch (t) {
    case Experiment::Type::kGeometryAudit: return "geometry-audit";
    case Experiment::Type::kCorrespondence: return "correspondence";
    case Experiment::Type::kSpectra: return "spectra";
    case Experiment::Type::kResolvent: return "resolvent";
  }
  return "?";
}

namespace {

std::string fmt17(double x) {
  char b[48];
  std::snprintf(b, sizeof b, "%.17g", x);
  return b;
}

std::string fmt3(double x) {
  char b[48];
  std::snprintf(b, sizeof b, "%.3g", x);
  return b;
}

double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1p-53; }

std::size_t scale_n(std::size_t n, double scale, std::size_t floor_n) {
  const auto scaled = static_cast<std::size_t>(std::llround(static_cast<double>(n) * scale));
  return std::max(scaled, floor_n);
}

// ---------- parsing ----------

struct Ctx {
  std::vector<std::string> issues;
  void add(std::string s) { issues.push_back(std::move(s)); }
};

std::string dotted(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

void check_keys(Ctx& c, const json& obj, const std::string& path,
                std::initializer_list<const char*> known) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : known)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) c.add(dotted(path, item.key().c_str()) + ": unknown field");
  }
}

const json* get_field(Ctx& c, const json& obj, const char* key, const std::string& path,
                      bool required) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) c.add(dotted(path, key) + ": missing required field");
    return nullptr;
  }
  return &*it;
}

double get_num(Ctx& c, const json& obj, const char* key, const std::string& path, bool required,
               double def) {
  const json* f = get_field(c, obj, key, path, required);
  if (!f) return def;
  if (!f->is_number()) {
    c.add(dotted(path, key) + ": expected a number");
    return def;
  }
  return f->get<double>();
}

long get_int(Ctx& c, const json& obj, const char* key, const std::string& path, bool required,
             long def) {
  const json* f = get_field(c, obj, key, path, required);
  if (!f) return def;
  if (!f->is_number_integer() && !(f->is_number() && f->get<double>() == std::floor(f->get<double>()))) {
    c.add(dotted(path, key) + ": expected an integer");
    return def;
  }
  return static_cast<long>(f->get<double>());
}

std::string get_str(Ctx& c, const json& obj, const char* key, const std::string& path,
                    bool required, const std::string& def) {
  const json* f = get_field(c, obj, key, path, required);
  if (!f) return def;
  if (!f->is_string()) {
    c.add(dotted(path, key) + ": expected a string");
    return def;
  }
  return f->get<std::string>();
}

bool get_bool(Ctx& c, const json& obj, const char* key, const std::string& path, bool def) {
  const json* f = get_field(c, obj, key, path, false);
  if (!f) return def;
  if (!f->is_boolean()) {
    c.add(dotted(path, key) + ": expected true or false");
    return def;
  }
  return f->get<bool>();
}

Expr parse_expr_str(Ctx& c, const json& j, const std::string& path,
                    const std::vector<std::string>& vars) {
  if (!j.is_string()) {
    c.add(path + ": expected an expression string");
    return {};
  }
  try {
    return parse_expression(j.get<std::string>(), vars);
  } catch (const ExprError& e) {
    c.add(path + ": " + e.what());
    return {};
  }
}

std::vector<Expr> parse_expr_array(Ctx& c, const json& j, const std::string& path,
                                   const std::vector<std::string>& vars, std::size_t count,
                                   const char* what) {
  std::vector<Expr> out(count);
  if (!j.is_array() || j.size() != count) {
    c.add(path + ": expected an array of " + std::to_string(count) + " " + what);
    return out;
  }
  for (std::size_t i = 0; i < count; ++i)
    out[i] = parse_expr_str(c, j[i], path + "[" + std::to_string(i) + "]", vars);
  return out;
}

DomainBox parse_domain(Ctx& c, const json& obj, const char* key, const std::string& path,
                       int dim) {
  DomainBox box;
  const json* f = get_field(c, obj, key, path, true);
  if (!f) return box;
  const std::string p = dotted(path, key);
  if (!f->is_array() || static_cast<int>(f->size()) != dim) {
    c.add(p + ": expected " + std::to_string(dim) + " [lo, hi] pairs");
    return box;
  }
  box.lo.resize(dim);
  box.hi.resize(dim);
  for (int i = 0; i < dim; ++i) {
    const json& pr = (*f)[i];
    if (!pr.is_array() || pr.size() != 2 || !pr[0].is_number() || !pr[1].is_number()) {
      c.add(p + "[" + std::to_string(i) + "]: expected [lo, hi] numbers");
      return DomainBox{};
    }
    box.lo[i] = pr[0].get<double>();
    box.hi[i] = pr[1].get<double>();
    if (!(box.lo[i] < box.hi[i]))
      c.add(p + "[" + std::to_string(i) + "]: lo must be strictly below hi");
  }
  return box;
}

Vec parse_point(Ctx& c, const json& j, const std::string& path, int dim) {
  Vec out(dim, 0.0);
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    c.add(path + ": expected " + std::to_string(dim) + " numbers");
    return out;
  }
  for (int i = 0; i < dim; ++i) {
    if (!j[i].is_number()) {
      c.add(path + "[" + std::to_string(i) + "]: expected a number");
      return out;
    }
    out[i] = j[i].get<double>();
  }
  return out;
}

Grid1D parse_grid(Ctx& c, const json& obj, const char* key, const std::string& path) {
  Grid1D g;
  const json* f = get_field(c, obj, key, path, true);
  if (!f) return g;
  const std::string p = dotted(path, key);
  if (!f->is_object()) {
    c.add(p + ": expected an object {x_min, x_max, n}");
    return g;
  }
  check_keys(c, *f, p, {"x_min", "x_max", "n"});
  g.x_min = get_num(c, *f, "x_min", p, true, 0.0);
  g.x_max = get_num(c, *f, "x_max", p, true, 1.0);
  const long n = get_int(c, *f, "n", p, true, 0);
  if (n < 3)
    c.add(p + ".n: need at least 3 grid nodes");
  else
    g.n = static_cast<std::size_t>(n);
  if (!(g.x_min < g.x_max)) c.add(p + ": x_min must be strictly below x_max");
  return g;
}

bool grid_in_box(const Grid1D& g, const DomainBox& box) {
  if (box.dim() != 1) return false;
  return g.x_min >= box.lo[0] - 1e-12 && g.x_max <= box.hi[0] + 1e-12;
}

bool tr_has_inverse(const Scenario& sc) { return sc.transform.inverse_map.valid(); }

// Second phase: everything that needs evaluable fields. Gated on the
// structural phase succeeding.
void semantic_checks(Ctx& c, const Scenario& sc) {
  {
    std::vector<std::string> more = transform_validation_issues(sc.initial, sc.transform);
    c.issues.insert(c.issues.end(), more.begin(), more.end());
  }

  bool has_correspondence = false;
  for (std::size_t i = 0; i < sc.experiments.size(); ++i) {
    const Experiment& ex = sc.experiments[i];
    const std::string p = "experiments[" + std::to_string(i) + "]";
    switch (ex.type) {
      case Experiment::Type::kGeometryAudit: {
        const auto& a = ex.audit;
        if (!(a.tolerance > 0.0)) c.add(p + ".tolerance: must be positive");
        if (a.n_random_points < 0) c.add(p + ".n_random_points: must be nonnegative");
        if (a.points.empty() && a.n_random_points == 0)
          c.add(p + ": needs at least one probe point (declared or random)");
        for (std::size_t k = 0; k < a.points.size(); ++k)
          if (!sc.transform.domain.contains(a.points[k]))
            c.add(p + ".points[" + std::to_string(k) + "]: outside the transform domain");
        break;
      }
      case Experiment::Type::kCorrespondence: {
        has_correspondence = true;
        const auto& a = ex.corr;
        if (static_cast<int>(a.x0.size()) != sc.initial.dim ||
            static_cast<int>(a.v0.size()) != sc.initial.dim)
          c.add(p + ": x0/v0 must have one entry per coordinate");
        else if (!sc.initial.domain.contains(a.x0))
          c.add(p + ".x0: outside the initial domain");
        else {
          if (!tr_has_inverse(sc)) c.add(p + ": correspondence requires transform.inverse_map");
          try {
            const double e = orbit_energy(sc.initial, a.x0, a.v0);
            const double scale =
                std::max({std::abs(e), std::abs(sc.transform.energy), 1e-12});
            if (std::abs(e - sc.transform.energy) > 1e-6 * scale)
              c.add(p + ": declared transform energy " + fmt3(sc.transform.energy) +
                    " does not match the measured orbit energy " + fmt3(e));
          } catch (const std::exception& e) {
            c.add(p + ": cannot evaluate the orbit energy at x0 (" + e.what() + ")");
          }
        }
        if (!(a.s_span > 0.0)) c.add(p + ".s_span: must be positive");
        if (a.n_samples < 2) c.add(p + ".n_samples: need at least 2");
        if (!(a.tolerance > 0.0)) c.add(p + ".tolerance: must be positive");
        break;
      }
      case Experiment::Type::kSpectra:
      case Experiment::Type::kResolvent: {
        if (sc.initial.dim != 1) {
          c.add(p + ": quantum grid experiments support only one-dimensional systems");
          break;
        }
        if (!(sc.initial.hbar > 0.0)) c.add(p + ": requires hbar > 0");
        const Grid1D& gi = ex.type == Experiment::Type::kSpectra ? ex.spectra.grid_initial
                                                                 : ex.resolvent.grid_initial;
        const Grid1D& gt = ex.type == Experiment::Type::kSpectra ? ex.spectra.grid_transformed
                                                                 : ex.resolvent.grid_transformed;
        if (gi.n >= 3 && !grid_in_box(gi, sc.initial.domain))
          c.add(p + ".grid_initial: not contained in the initial domain");
        if (gt.n >= 3 && !grid_in_box(gt, sc.transform.domain))
          c.add(p + ".grid_transformed: not contained in the transform domain");
        if (ex.type == Experiment::Type::kSpectra) {
          const auto& a = ex.spectra;
          if (a.n_levels < 1) c.add(p + ".n_levels: need at least 1");
          if (!(a.tolerance > 0.0)) c.add(p + ".tolerance: must be positive");
          if (a.require_correction_ratio < 0.0)
            c.add(p + ".require_correction_ratio: must be nonnegative");
        } else {
          const auto& a = ex.resolvent;
          if (!(a.tolerance > 0.0)) c.add(p + ".tolerance: must be positive");
          if (a.pairs.empty()) c.add(p + ".pairs: need at least one probe pair");
          if (sc.initial.has_vector_potential())
            c.add(p + ": the resolvent identity does not support a vector potential");
          if (!tr_has_inverse(sc)) {
            c.add(p + ": resolvent requires transform.inverse_map");
          } else if (gi.n >= 3 && gt.n >= 3) {
            for (std::size_t k = 0; k < a.pairs.size(); ++k) {
              for (double q : a.pairs[k]) {
                if (!(q > gi.x_min + gi.h() && q < gi.x_max - gi.h())) {
                  c.add(p + ".pairs[" + std::to_string(k) +
                        "]: probe point not strictly inside the initial grid");
                  continue;
                }
                try {
                  const Vec Q = sc.transform.inverse_map(std::span<const double>(&q, 1));
                  if (!(Q[0] > gt.x_min + gt.h() && Q[0] < gt.x_max - gt.h()))
                    c.add(p + ".pairs[" + std::to_string(k) +
                          "]: mapped probe point not strictly inside the transformed grid");
                } catch (const std::exception& e) {
                  c.add(p + ".pairs[" + std::to_string(k) + "]: cannot map the probe point (" +
                        e.what() + ")");
                }
              }
            }
          }
          if (a.probe_energy && !std::isfinite(*a.probe_energy))
            c.add(p + ".probe_energy: must be finite");
        }
        break;
      }
    }
  }
  if (sc.exponent_auto && !has_correspondence)
    c.add("transform.conformal_exponent: \"auto\" needs a correspondence experiment to arbitrate");
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario document: ") + e.what());
  }
  if (!root.is_object()) throw ParseError("scenario document: top level must be a JSON object");

  Ctx c;
  Scenario sc;
  check_keys(c, root, "", {"name", "initial_system", "transform", "experiments", "output_dir"});
  sc.name = get_str(c, root, "name", "", false, "unnamed");
  sc.output_dir = get_str(c, root, "output_dir", "", false, "out");

  int dim = 0;
  std::vector<std::string> qvars, Qvars;
  if (const json* sys = get_field(c, root, "initial_system", "", true)) {
    const std::string p = "initial_system";
    if (!sys->is_object()) {
      c.add(p + ": expected an object");
    } else {
      check_keys(c, *sys, p,
                 {"dim", "mass", "hbar", "metric", "vector_potential", "scalar_potential",
                  "domain"});
      const long d = get_int(c, *sys, "dim", p, true, 0);
      if (d < 1 || d > 8) {
        c.add(p + ".dim: must be between 1 and 8");
      } else {
        dim = static_cast<int>(d);
        qvars = coordinate_names("q", dim);
        Qvars = coordinate_names("Q", dim);
        sc.initial.dim = dim;
        sc.initial.mass = get_num(c, *sys, "mass", p, false, 1.0);
        sc.initial.hbar = get_num(c, *sys, "hbar", p, false, 1.0);
        if (const json* f = get_field(c, *sys, "metric", p, true))
          sc.initial.metric = MetricField::from_expressions(
              dim, parse_expr_array(c, *f, p + ".metric", qvars,
                                    static_cast<std::size_t>(dim) * dim,
                                    "expression strings (row-major)"));
        if (const json* f = get_field(c, *sys, "scalar_potential", p, true))
          sc.initial.scalar_potential =
              ScalarField::from_expression(parse_expr_str(c, *f, p + ".scalar_potential", qvars),
                                           dim);
        if (const json* f = get_field(c, *sys, "vector_potential", p, false)) {
          std::vector<Expr> comps = parse_expr_array(c, *f, p + ".vector_potential", qvars,
                                                     static_cast<std::size_t>(dim),
                                                     "expression strings");
          bool all_zero = true;
          for (const Expr& e : comps) {
            double v = 0.0;
            if (!e.is_constant(&v) || v != 0.0) all_zero = false;
          }
          if (!all_zero) sc.initial.vector_potential = SmoothMap::from_expressions(comps, dim);
        }
        sc.initial.domain = parse_domain(c, *sys, "domain", p, dim);
      }
    }
  }

  if (const json* tj = get_field(c, root, "transform", "", true)) {
    const std::string p = "transform";
    if (!tj->is_object()) {
      c.add(p + ": expected an object");
    } else {
      check_keys(c, *tj, p,
                 {"space_map", "inverse_map", "time_scale", "energy", "conformal_exponent",
                  "domain"});
      if (dim > 0) {
        if (const json* f = get_field(c, *tj, "space_map", p, true))
          sc.transform.space_map = SmoothMap::from_expressions(
              parse_expr_array(c, *f, p + ".space_map", Qvars, static_cast<std::size_t>(dim),
                               "expression strings"),
              dim);
        if (const json* f = get_field(c, *tj, "inverse_map", p, false))
          sc.transform.inverse_map = SmoothMap::from_expressions(
              parse_expr_array(c, *f, p + ".inverse_map", qvars, static_cast<std::size_t>(dim),
                               "expression strings"),
              dim);
        if (const json* f = get_field(c, *tj, "time_scale", p, true))
          sc.transform.time_scale =
              ScalarField::from_expression(parse_expr_str(c, *f, p + ".time_scale", Qvars), dim);
        sc.transform.energy = get_num(c, *tj, "energy", p, false, 0.0);
        sc.transform.domain = parse_domain(c, *tj, "domain", p, dim);
        if (const json* f = get_field(c, *tj, "conformal_exponent", p, false)) {
          if (f->is_string()) {
            if (f->get<std::string>() == "auto")
              sc.exponent_auto = true;
            else
              c.add(p + ".conformal_exponent: expected +1, -1 or \"auto\"");
          } else if (f->is_number() &&
                     (f->get<double>() == 1.0 || f->get<double>() == -1.0)) {
            sc.transform.conformal_exponent = static_cast<int>(f->get<double>());
          } else {
            c.add(p + ".conformal_exponent: expected +1, -1 or \"auto\"");
          }
        }
      }
    }
  }

  if (const json* ej = get_field(c, root, "experiments", "", true)) {
    if (!ej->is_array()) {
      c.add("experiments: expected an array");
    } else {
      for (std::size_t i = 0; i < ej->size(); ++i) {
        const json& e = (*ej)[i];
        const std::string p = "experiments[" + std::to_string(i) + "]";
        if (!e.is_object()) {
          c.add(p + ": expected an object");
          continue;
        }
        Experiment ex;
        const std::string type = get_str(c, e, "type", p, true, "");
        if (type == "geometry-audit") {
          ex.type = Experiment::Type::kGeometryAudit;
          check_keys(c, e, p, {"type", "label", "points", "n_random_points", "tolerance"});
          if (const json* f = get_field(c, e, "points", p, false)) {
            if (!f->is_array()) {
              c.add(p + ".points: expected an array of points");
            } else if (dim > 0) {
              for (std::size_t k = 0; k < f->size(); ++k)
                ex.audit.points.push_back(
                    parse_point(c, (*f)[k], p + ".points[" + std::to_string(k) + "]", dim));
            }
          }
          ex.audit.n_random_points =
              static_cast<int>(get_int(c, e, "n_random_points", p, false, 0));
          ex.audit.tolerance = get_num(c, e, "tolerance", p, false, 1e-8);
        } else if (type == "correspondence") {
          ex.type = Experiment::Type::kCorrespondence;
          check_keys(c, e, p,
                     {"type", "label", "x0", "v0", "s_span", "n_samples", "tolerance",
                      "reflecting_walls", "rel_tol", "abs_tol"});
          if (dim > 0) {
            if (const json* f = get_field(c, e, "x0", p, true))
              ex.corr.x0 = parse_point(c, *f, p + ".x0", dim);
            if (const json* f = get_field(c, e, "v0", p, true))
              ex.corr.v0 = parse_point(c, *f, p + ".v0", dim);
          }
          ex.corr.s_span = get_num(c, e, "s_span", p, true, 1.0);
          ex.corr.n_samples =
              static_cast<std::size_t>(std::max(0L, get_int(c, e, "n_samples", p, false, 2000)));
          ex.corr.tolerance = get_num(c, e, "tolerance", p, false, 1e-6);
          ex.corr.reflecting_walls = get_bool(c, e, "reflecting_walls", p, false);
          ex.corr.rel_tol = get_num(c, e, "rel_tol", p, false, 1e-10);
          ex.corr.abs_tol = get_num(c, e, "abs_tol", p, false, 1e-12);
        } else if (type == "spectra") {
          ex.type = Experiment::Type::kSpectra;
          check_keys(c, e, p,
                     {"type", "label", "grid_initial", "grid_transformed", "n_levels",
                      "tolerance", "require_correction_ratio"});
          ex.spectra.grid_initial = parse_grid(c, e, "grid_initial", p);
          ex.spectra.grid_transformed = parse_grid(c, e, "grid_transformed", p);
          ex.spectra.n_levels =
              static_cast<std::size_t>(std::max(0L, get_int(c, e, "n_levels", p, false, 3)));
          ex.spectra.tolerance = get_num(c, e, "tolerance", p, false, 1e-4);
          ex.spectra.require_correction_ratio =
              get_num(c, e, "require_correction_ratio", p, false, 10.0);
        } else if (type == "resolvent") {
          ex.type = Experiment::Type::kResolvent;
          check_keys(c, e, p,
                     {"type", "label", "grid_initial", "grid_transformed", "probe_energy",
                      "pairs", "tolerance", "prefactor_delta"});
          ex.resolvent.grid_initial = parse_grid(c, e, "grid_initial", p);
          ex.resolvent.grid_transformed = parse_grid(c, e, "grid_transformed", p);
          if (get_field(c, e, "probe_energy", p, false))
            ex.resolvent.probe_energy = get_num(c, e, "probe_energy", p, false, 0.0);
          if (const json* f = get_field(c, e, "pairs", p, true)) {
            if (!f->is_array()) {
              c.add(p + ".pairs: expected an array of [q_a, q_b] pairs");
            } else {
              for (std::size_t k = 0; k < f->size(); ++k) {
                const Vec pt = parse_point(c, (*f)[k], p + ".pairs[" + std::to_string(k) + "]", 2);
                ex.resolvent.pairs.push_back({pt[0], pt[1]});
              }
            }
          }
          ex.resolvent.tolerance = get_num(c, e, "tolerance", p, false, 1e-3);
          ex.resolvent.prefactor_delta = get_num(c, e, "prefactor_delta", p, false, 0.0);
        } else {
          c.add(p + ".type: expected one of geometry-audit, correspondence, spectra, resolvent");
          continue;
        }
        ex.label = get_str(c, e, "label", p, false, type);
        sc.experiments.push_back(std::move(ex));
      }
    }
  }

  if (c.issues.empty()) semantic_checks(c, sc);
  if (!c.issues.empty()) throw ValidationError(std::move(c.issues));
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InfrastructureError("cannot read scenario file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

// ---------- running ----------

namespace {

struct Csv {
  std::string kind;
  std::string header;
  std::vector<std::string> rows;

  void row(std::span<const double> xs) {
    std::string line;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) line += ',';
      line += fmt17(xs[i]);
    }
    rows.push_back(std::move(line));
  }
  void row(std::initializer_list<double> xs) {
    row(std::span<const double>(xs.begin(), xs.size()));
  }
};

struct Outcome {
  Experiment::Type type = Experiment::Type::kGeometryAudit;
  std::string label;
  std::string status;  // pass | fail | error
  std::string message;
  ordered_json details = ordered_json::object();
  std::optional<Csv> csv;
};

std::string sanitize(const std::string& s) {
  std::string out;
  for (char ch : s)
    out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') ? ch : '-';
  return out.empty() ? std::string("experiment") : out;
}

Outcome run_geometry_audit(const Scenario& sc, const Experiment& ex, const RunOptions& opt,
                           std::mt19937_64& rng) {
  Outcome out;
  const auto& prm = ex.audit;
  const int d = sc.initial.dim;

  // The audit pins the physical exponent: the curvature/torsion identities
  // hold for g^(f) = ghat / f, whatever the scenario picked for dynamics.
  TransformSpec tra = sc.transform;
  tra.conformal_exponent = -1;
  const FrameField frame = FrameField::from_space_map(tra.space_map, tra.time_scale);
  const TransformedSystem tsys = transform_system(sc.initial, tra);
  const ScalarField vgeo = quantum_potential_geometric(sc.initial, tra);
  const ScalarField vdir_alt =
      quantum_potential_direct(sc.initial, tra, ChristoffelReading::kContractedUpper);
  const ScalarField vclass = classical_potential(sc.initial, tra);

  std::vector<Vec> points = prm.points;
  for (int r = 0; r < prm.n_random_points; ++r) {
    Vec Q(d);
    for (int i = 0; i < d; ++i)
      Q[i] = tra.domain.lo[i] + uniform01(rng) * (tra.domain.hi[i] - tra.domain.lo[i]);
    points.push_back(std::move(Q));
  }

  Csv csv;
  csv.kind = "geometry-audit";
  for (int i = 0; i < d; ++i) csv.header += "Q" + std::to_string(i + 1) + ",";
  csv.header +=
      "schwarz,f,vqu_direct,vqu_geometric,rel_residual,vqu_contracted_upper,cartan_scalar,"
      "riemann_scalar,torsion_square";
  for (int i = 0; i < d; ++i) csv.header += ",S" + std::to_string(i + 1);

  double max_rel = 0.0, max_schwarz = 0.0, max_rel_alt = 0.0;
  for (const Vec& Q : points) {
    const double sw = schwarz_residual(tra.space_map, Q);
    const CartanAudit audit = cartan_audit(frame, sc.initial.metric, Q);
    const double vd = tsys.quantum_correction(Q);
    const double vg = vgeo(Q);
    const double rel = std::abs(vd - vg) / std::max({std::abs(vd), std::abs(vg), 1e-15});
    const double va = vdir_alt(Q) - vclass(Q);
    const double rel_alt = std::abs(va - vg) / std::max({std::abs(va), std::abs(vg), 1e-15});
    max_rel = std::max(max_rel, rel);
    max_schwarz = std::max(max_schwarz, sw);
    max_rel_alt = std::max(max_rel_alt, rel_alt);

    Vec row;
    row.insert(row.end(), Q.begin(), Q.end());
    row.insert(row.end(), {sw, audit.f, vd, vg, rel, va, audit.cartan_scalar,
                           audit.riemann_scalar, audit.torsion_square});
    row.insert(row.end(), audit.torsion.begin(), audit.torsion.end());
    csv.row(row);
  }

  const double gate = prm.tolerance * opt.tolerance_scale;
  const double schwarz_gate = 1e-8 * opt.tolerance_scale;
  out.details["points"] = points.size();
  out.details["max_rel_residual"] = max_rel;
  out.details["max_schwarz_residual"] = max_schwarz;
  out.details["tolerance"] = gate;
  out.details["conformal_exponent"] = -1;
  out.details["christoffel_readings"] =
      ordered_json{{"raised_lower", max_rel}, {"contracted_upper", max_rel_alt}};
  out.csv = std::move(csv);
  if (max_rel < gate && max_schwarz < schwarz_gate) {
    out.status = "pass";
    out.message = "max relative direct/geometric residual " + fmt3(max_rel) + ", Schwarz " +
                  fmt3(max_schwarz);
  } else {
    out.status = "fail";
    out.message = max_rel >= gate ? "direct/geometric residual " + fmt3(max_rel) +
                                        " exceeds gate " + fmt3(gate)
                                  : "Schwarz residual " + fmt3(max_schwarz) + " exceeds gate " +
                                        fmt3(schwarz_gate);
  }
  return out;
}

Outcome run_correspondence(const Scenario& sc, const Experiment& ex, const RunOptions& opt,
                           int eps) {
  Outcome out;
  const auto& prm = ex.corr;
  const int d = sc.initial.dim;

  TransformSpec tr = sc.transform;
  tr.conformal_exponent = eps;
  IntegratorConfig cfg;
  cfg.rel_tol = prm.rel_tol;
  cfg.abs_tol = prm.abs_tol;
  cfg.reflecting_walls = prm.reflecting_walls;
  const std::size_t n = scale_n(prm.n_samples, opt.grid_scale, 2);

  const CorrespondenceReport rep =
      correspondence_check(sc.initial, tr, prm.x0, prm.v0, prm.s_span, n, cfg, cfg);

  Trajectory sampled;
  sampled.s = rep.s;
  sampled.x = rep.Q;
  sampled.v = rep.Qdot;
  const Vec t_quad = pseudotime_map(tr.time_scale, sampled, rep.t[0]);
  double clock_dev = 0.0;
  for (std::size_t k = 0; k < t_quad.size(); ++k)
    clock_dev = std::max(clock_dev, std::abs(t_quad[k] - rep.t[k]));

  Csv csv;
  csv.kind = "correspondence";
  csv.header = "s,t";
  for (const char* base : {"Q", "Qdot", "q_mapped", "q_direct", "v_mapped", "v_direct"})
    for (int i = 0; i < d; ++i) csv.header += "," + std::string(base) + std::to_string(i + 1);
  csv.header += ",pos_err,vel_err";
  for (std::size_t k = 0; k < rep.s.size(); ++k) {
    Vec row{rep.s[k], rep.t[k]};
    for (const std::vector<Vec>* cols :
         {&rep.Q, &rep.Qdot, &rep.q_mapped, &rep.q_direct, &rep.v_mapped, &rep.v_direct})
      row.insert(row.end(), (*cols)[k].begin(), (*cols)[k].end());
    double pe = 0.0, ve = 0.0;
    for (int i = 0; i < d; ++i) {
      pe = std::max(pe, std::abs(rep.q_mapped[k][i] - rep.q_direct[k][i]));
      ve = std::max(ve, std::abs(rep.v_mapped[k][i] - rep.v_direct[k][i]));
    }
    row.push_back(pe);
    row.push_back(ve);
    csv.row(row);
  }

  const double gate = prm.tolerance * opt.tolerance_scale;
  out.details["conformal_exponent"] = eps;
  out.details["n_samples"] = n;
  out.details["orbit_energy"] = rep.energy;
  out.details["max_position_error"] = rep.max_position_error;
  out.details["max_velocity_error"] = rep.max_velocity_error;
  out.details["energy_drift_direct"] = rep.energy_drift_direct;
  out.details["energy_drift_mapped"] = rep.energy_drift_mapped;
  out.details["clock_quadrature_deviation"] = clock_dev;
  out.details["tolerance"] = gate;
  out.csv = std::move(csv);
  if (rep.max_position_error < gate) {
    out.status = "pass";
    out.message = "position error " + fmt3(rep.max_position_error) + " (gate " + fmt3(gate) + ")";
  } else {
    out.status = "fail";
    out.message =
        "position error " + fmt3(rep.max_position_error) + " exceeds gate " + fmt3(gate);
  }
  return out;
}

Outcome run_spectra(const Scenario& sc, const Experiment& ex, const RunOptions& opt, int eps) {
  Outcome out;
  const auto& prm = ex.spectra;
  TransformSpec tr = sc.transform;
  tr.conformal_exponent = eps;
  Grid1D gi = prm.grid_initial;
  Grid1D gt = prm.grid_transformed;
  gi.n = scale_n(gi.n, opt.grid_scale, 3);
  gt.n = scale_n(gt.n, opt.grid_scale, 3);

  const ZeroModeReport with_c =
      zero_mode_spectral_check(sc.initial, tr, gi, gt, prm.n_levels, true);
  const ZeroModeReport without_c =
      zero_mode_spectral_check(sc.initial, tr, gi, gt, prm.n_levels, false);

  const double e1 = std::abs(with_c.initial_levels.empty() ? 1.0 : with_c.initial_levels[0]);
  const double gate = prm.tolerance * e1 * opt.tolerance_scale;
  double max_offset = 0.0, min_ratio = std::numeric_limits<double>::infinity();
  Csv csv;
  csv.kind = "spectra";
  csv.header = "k,level,offset,offset_without_correction,ratio";
  for (std::size_t k = 0; k < with_c.offsets.size(); ++k) {
    const double ratio = with_c.offsets[k] > 0.0
                             ? without_c.offsets[k] / with_c.offsets[k]
                             : std::numeric_limits<double>::infinity();
    max_offset = std::max(max_offset, with_c.offsets[k]);
    min_ratio = std::min(min_ratio, ratio);
    csv.row({static_cast<double>(k + 1), with_c.initial_levels[k], with_c.offsets[k],
             without_c.offsets[k], ratio});
  }

  out.details["conformal_exponent"] = eps;
  out.details["grid_initial_n"] = gi.n;
  out.details["grid_transformed_n"] = gt.n;
  out.details["levels"] = with_c.initial_levels;
  out.details["offsets"] = with_c.offsets;
  out.details["offsets_without_correction"] = without_c.offsets;
  out.details["max_offset"] = max_offset;
  out.details["min_correction_ratio"] = min_ratio;
  out.details["tolerance"] = gate;
  out.csv = std::move(csv);

  bool ok = max_offset < gate;
  std::string why;
  if (!ok) why = "zero-mode offset " + fmt3(max_offset) + " exceeds gate " + fmt3(gate);
  if (ok && prm.require_correction_ratio > 0.0 && min_ratio < prm.require_correction_ratio) {
    ok = false;
    why = "dropping V^(qu) only inflates offsets by " + fmt3(min_ratio) + "x (need " +
          fmt3(prm.require_correction_ratio) + "x)";
  }
  out.status = ok ? "pass" : "fail";
  out.message = ok ? "max offset " + fmt3(max_offset) + " (gate " + fmt3(gate) +
                         "), correction ratio >= " + fmt3(min_ratio)
                   : why;
  return out;
}

Outcome run_resolvent(const Scenario& sc, const Experiment& ex, const RunOptions& opt, int eps) {
  Outcome out;
  const auto& prm = ex.resolvent;
  TransformSpec tr = sc.transform;
  tr.conformal_exponent = eps;
  Grid1D gi = prm.grid_initial;
  Grid1D gt = prm.grid_transformed;
  gi.n = scale_n(gi.n, opt.grid_scale, 3);
  gt.n = scale_n(gt.n, opt.grid_scale, 3);

  double probe = 0.0;
  if (prm.probe_energy) {
    probe = *prm.probe_energy;
  } else {
    const Grid1DOperator op = discretize_hamiltonian(sc.initial, gi);
    probe = 2.0 * lowest_eigenvalues(op, 1)[0];
  }

  const ResolventReport rep = resolvent_dk_check(sc.initial, tr, gi, gt, probe, prm.pairs,
                                                 prm.prefactor_delta);

  Csv csv;
  csv.kind = "resolvent";
  csv.header = "q_a,q_b,direct,mapped,rel_error";
  for (const ResolventPoint& pt : rep.points)
    csv.row({pt.q_a, pt.q_b, pt.direct, pt.mapped, pt.rel_error});

  const double gate = prm.tolerance * opt.tolerance_scale;
  const double solve_gate = 1e-10 * opt.tolerance_scale;
  out.details["conformal_exponent"] = eps;
  out.details["grid_initial_n"] = gi.n;
  out.details["grid_transformed_n"] = gt.n;
  out.details["probe_energy"] = probe;
  out.details["spectral_gap"] = rep.spectral_gap;
  out.details["prefactor_delta"] = prm.prefactor_delta;
  out.details["max_rel_error"] = rep.max_rel_error;
  out.details["max_solve_residual"] = rep.max_solve_residual;
  out.details["tolerance"] = gate;
  out.csv = std::move(csv);
  if (rep.max_rel_error < gate && rep.max_solve_residual < solve_gate) {
    out.status = "pass";
    out.message = "kernel mismatch " + fmt3(rep.max_rel_error) + " (gate " + fmt3(gate) + ")";
  } else {
    out.status = "fail";
    out.message = rep.max_rel_error >= gate
                      ? "kernel mismatch " + fmt3(rep.max_rel_error) + " exceeds gate " +
                            fmt3(gate)
                      : "solver residual " + fmt3(rep.max_solve_residual) + " exceeds " +
                            fmt3(solve_gate);
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InfrastructureError("cannot open for writing: " + path.string());
  f << content;
  f.flush();
  if (!f) throw InfrastructureError("write failed: " + path.string());
}

}  // namespace

RunResult run_scenario(const Scenario& sc, const RunOptions& opts) {
  RunOptions opt = opts;
  if (!(opt.tolerance_scale > 0.0)) opt.tolerance_scale = 1.0;
  if (!(opt.grid_scale > 0.0)) opt.grid_scale = 1.0;
  const std::string outdir = opt.output_dir.empty() ? sc.output_dir : opt.output_dir;

  // Resolve the conformal exponent before anything runs.
  int eps = sc.transform.conformal_exponent;
  ordered_json expo = ordered_json::object();
  expo["declared"] = sc.exponent_auto ? ordered_json("auto") : ordered_json(eps);
  if (sc.exponent_auto) {
    const Experiment* probe = nullptr;
    for (const Experiment& ex : sc.experiments)
      if (ex.type == Experiment::Type::kCorrespondence) {
        probe = &ex;
        break;
      }
    double err_plus = std::numeric_limits<double>::infinity();
    double err_minus = err_plus;
    if (probe) {
      for (int cand : {1, -1}) {
        TransformSpec t2 = sc.transform;
        t2.conformal_exponent = cand;
        IntegratorConfig cfg;
        cfg.rel_tol = probe->corr.rel_tol;
        cfg.abs_tol = probe->corr.abs_tol;
        cfg.reflecting_walls = probe->corr.reflecting_walls;
        const std::size_t n = std::max<std::size_t>(probe->corr.n_samples / 16, 16);
        double err;
        try {
          err = correspondence_check(sc.initial, t2, probe->corr.x0, probe->corr.v0,
                                     probe->corr.s_span / 16.0, n, cfg, cfg)
                    .max_position_error;
        } catch (const std::exception&) {
          err = std::numeric_limits<double>::infinity();
        }
        (cand == 1 ? err_plus : err_minus) = err;
      }
      eps = err_plus < err_minus ? 1 : -1;
    }
    expo["probe_error_plus"] = err_plus;
    expo["probe_error_minus"] = err_minus;
  }
  expo["resolved"] = eps;

  std::mt19937_64 rng(opt.seed);
  std::vector<Outcome> outcomes;
  bool all_pass = true;
  for (const Experiment& ex : sc.experiments) {
    Outcome out;
    try {
      switch (ex.type) {
        case Experiment::Type::kGeometryAudit:
          out = run_geometry_audit(sc, ex, opt, rng);
          break;
        case Experiment::Type::kCorrespondence:
          out = run_correspondence(sc, ex, opt, eps);
          break;
        case Experiment::Type::kSpectra:
          out = run_spectra(sc, ex, opt, eps);
          break;
        case Experiment::Type::kResolvent:
          out = run_resolvent(sc, ex, opt, eps);
          break;
      }
    } catch (const std::exception& e) {
      out = Outcome{};
      out.status = "error";
      out.message = e.what();
    }
    out.type = ex.type;
    out.label = ex.label;
    if (out.status != "pass") all_pass = false;
    outcomes.push_back(std::move(out));
  }

  // Summary document.
  ordered_json summary;
  summary["tool"] = ordered_json{{"name", "nst"}, {"version", kVersion}};
  summary["scenario"] = sc.name;
  summary["seed"] = opt.seed;
  summary["grid_scale"] = opt.grid_scale;
  summary["tolerance_scale"] = opt.tolerance_scale;
  summary["conventions"] = ordered_json{{"conformal_exponent", expo},
                                        {"christoffel_reading", "raised_lower"},
                                        {"torsion_square_metric", "spacetime"},
                                        {"operator_ordering", "weyl_symmetric"},
                                        {"eta_tt", 1}};
  summary["experiments"] = ordered_json::array();
  std::vector<std::string> csv_names(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const Outcome& out = outcomes[i];
    ordered_json je;
    je["type"] = to_string(out.type);
    je["label"] = out.label;
    je["status"] = out.status;
    je["message"] = out.message;
    if (out.csv) {
      csv_names[i] = std::to_string(i + 1) + "-" + sanitize(out.label) + ".csv";
      je["csv"] = csv_names[i];
    }
    je["details"] = out.details;
    summary["experiments"].push_back(std::move(je));
  }
  summary["status"] = all_pass ? "pass" : "fail";

  // Human-readable report.
  std::string report;
  report += "scenario: " + sc.name + " (nst " + std::string(kVersion) + ")\n";
  report += "conformal exponent: " + std::to_string(eps);
  if (sc.exponent_auto)
    report += " (auto; probe error +1: " + fmt3(expo["probe_error_plus"].get<double>()) +
              ", -1: " + fmt3(expo["probe_error_minus"].get<double>()) + ")";
  report += "\n";
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const Outcome& out = outcomes[i];
    char head[80];
    std::snprintf(head, sizeof head, "[%zu] %-18s %-5s ", i + 1, out.label.c_str(),
                  out.status == "pass" ? "PASS" : out.status == "fail" ? "FAIL" : "ERROR");
    report += head + out.message + "\n";
  }
  report += std::string("overall: ") + (all_pass ? "PASS" : "FAIL") + "\n";

  // Emit everything.
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(outdir, ec);
  if (ec) throw InfrastructureError("cannot create output directory " + outdir);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].csv) continue;
    const Csv& csv = *outcomes[i].csv;
    std::string body = "# nst-csv v1 " + csv.kind + "\n" + csv.header + "\n";
    for (const std::string& r : csv.rows) body += r + "\n";
    write_file(fs::path(outdir) / csv_names[i], body);
  }
  RunResult res;
  res.exit_code = all_pass ? 0 : 1;
  res.all_passed = all_pass;
  res.summary_json = summary.dump(2) + "\n";
  res.report_text = report;
  write_file(fs::path(outdir) / "summary.json", res.summary_json);
  write_file(fs::path(outdir) / "report.txt", res.report_text);
  return res;
}

}  // namespace nst
