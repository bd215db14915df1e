#include "nst.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "errors.hpp"
#include "scenario.hpp"

struct nst_scenario {
  nst::Scenario sc;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

template <typename Fn>
nst_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return NST_OK;
  } catch (const nst::ParseError& e) {
    g_last_error = e.what();
    return NST_ERR_VALIDATION;
  } catch (const nst::ValidationError& e) {
    g_last_error = e.what();
    return NST_ERR_VALIDATION;
  } catch (const nst::InfrastructureError& e) {
    g_last_error = e.what();
    return NST_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NST_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown failure";
    return NST_ERR_RUNTIME;
  }
}

}  // namespace

extern "C" {

const char* nst_version(void) { return nst::kVersion; }

const char* nst_last_error(void) { return g_last_error.c_str(); }

nst_status nst_scenario_load_string(const char* text, nst_scenario** out) {
  if (!text || !out) {
    g_last_error = "null argument";
    return NST_ERR_VALIDATION;
  }
  *out = nullptr;
  return guarded([&] { *out = new nst_scenario{nst::parse_scenario(text)}; });
}

nst_status nst_scenario_load_file(const char* path, nst_scenario** out) {
  if (!path || !out) {
    g_last_error = "null argument";
    return NST_ERR_VALIDATION;
  }
  *out = nullptr;
  return guarded([&] { *out = new nst_scenario{nst::load_scenario_file(path)}; });
}

const char* nst_scenario_name(const nst_scenario* sc) {
  return sc ? sc->sc.name.c_str() : "";
}

void nst_scenario_free(nst_scenario* sc) { delete sc; }

nst_status nst_scenario_run(const nst_scenario* sc, const nst_run_options* opts,
                            nst_run_result* out) {
  if (!sc || !out) {
    g_last_error = "null argument";
    return NST_ERR_VALIDATION;
  }
  out->exit_code = 1;
  out->summary_json = nullptr;
  out->report_text = nullptr;
  return guarded([&] {
    nst::RunOptions ro;
    if (opts) {
      if (opts->output_dir && opts->output_dir[0]) ro.output_dir = opts->output_dir;
      if (opts->tolerance_scale > 0.0) ro.tolerance_scale = opts->tolerance_scale;
      if (opts->grid_scale > 0.0) ro.grid_scale = opts->grid_scale;
      ro.seed = opts->seed;
    }
    const nst::RunResult res = nst::run_scenario(sc->sc, ro);
    out->exit_code = res.exit_code;
    out->summary_json = dup_string(res.summary_json);
    out->report_text = dup_string(res.report_text);
    if (!out->summary_json || !out->report_text) throw std::bad_alloc();
  });
}

void nst_run_result_free(nst_run_result* res) {
  if (!res) return;
  std::free(res->summary_json);
  std::free(res->report_text);
  res->summary_json = nullptr;
  res->report_text = nullptr;
}

}  // extern "C"
