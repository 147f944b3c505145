#include "rhd/rhd.h"

#include <exception>
#include <new>
#include <string>

#include "rhd/commands.hpp"
#include "rhd/io.hpp"

struct rhd_model {
  rhd::Model model;
  std::string json;
};

struct rhd_result {
  rhd::CommandResult result;
};

namespace {

thread_local std::string last_error;

int fail(int code, const std::string& msg) {
  last_error = msg;
  return code;
}

int finish(rhd::CommandResult r, rhd_result** out) {
  if (r.status != RHD_OK) last_error = r.message;
  else last_error.clear();
  const int status = r.status;
  *out = new (std::nothrow) rhd_result{std::move(r)};
  if (!*out) return fail(RHD_E_MATH, "out of memory");
  return status;
}

template <class F>
int guard(rhd_result** out, F&& f) {
  if (!out) return fail(RHD_E_INPUT, "null result pointer");
  *out = nullptr;
  try {
    return finish(f(), out);
  } catch (const rhd::Error& e) {
    return fail(rhd::status_of(e), e.what());
  } catch (const std::exception& e) {
    return fail(RHD_E_MATH, e.what());
  }
}

}  // namespace

extern "C" {

const char* rhd_version(void) { return "1.0.0"; }

const char* rhd_last_error(void) { return last_error.c_str(); }

int rhd_model_parse(const char* json, rhd_model** out) {
  if (!out) return fail(RHD_E_INPUT, "null model pointer");
  *out = nullptr;
  if (!json) return fail(RHD_E_INPUT, "null model document");
  try {
    *out = new rhd_model{rhd::parse_model(json), {}};
    last_error.clear();
    return RHD_OK;
  } catch (const rhd::Error& e) {
    return fail(rhd::status_of(e), e.what());
  } catch (const std::exception& e) {
    return fail(RHD_E_MATH, e.what());
  }
}

void rhd_model_free(rhd_model* model) { delete model; }

size_t rhd_model_outcomes(const rhd_model* model) { return model ? model->model.space.atoms() : 0; }

size_t rhd_model_horizon(const rhd_model* model) { return model ? model->model.space.horizon() : 0; }

const char* rhd_model_json(rhd_model* model) {
  if (!model) return nullptr;
  if (model->json.empty()) model->json = rhd::model_to_json(model->model);
  return model->json.c_str();
}

int rhd_verify(const rhd_model* model, double tol, rhd_result** out) {
  return guard(out, [&] {
    if (!model) throw rhd::Error(rhd::ErrorKind::input, "null model");
    return rhd::cmd_verify(model->model, tol);
  });
}

int rhd_deflate(const rhd_model* model, const char* params_json, const char* route, double tol, rhd_result** out) {
  return guard(out, [&] {
    if (!model) throw rhd::Error(rhd::ErrorKind::input, "null model");
    std::optional<rhd::Route> r;
    if (route) r = rhd::parse_route(route);
    return rhd::cmd_deflate(model->model, params_json ? params_json : "", r, tol);
  });
}

int rhd_decompose(const rhd_model* model, const char* table_csv, double tol, rhd_result** out) {
  return guard(out, [&] {
    if (!model) throw rhd::Error(rhd::ErrorKind::input, "null model");
    if (!table_csv) throw rhd::Error(rhd::ErrorKind::input, "null table");
    return rhd::cmd_decompose(model->model, table_csv, tol);
  });
}

int rhd_simulate(const char* scenario_json, const rhd_sim_options* options, rhd_result** out) {
  return guard(out, [&] {
    rhd::SimulateOptions o;
    if (options) {
      if (options->has_seed) o.seed = options->seed;
      if (options->has_paths) o.paths = static_cast<std::size_t>(options->paths);
      if (options->has_dt) o.dt = options->dt;
      o.workers = options->workers;
    }
    return rhd::cmd_simulate(scenario_json ? scenario_json : "", o);
  });
}

int rhd_result_status(const rhd_result* r) { return r ? r->result.status : RHD_E_INPUT; }

const char* rhd_result_message(const rhd_result* r) { return r ? r->result.message.c_str() : ""; }

size_t rhd_result_artifact_count(const rhd_result* r) { return r ? r->result.artifacts.size() : 0; }

const char* rhd_result_artifact_name(const rhd_result* r, size_t i) {
  if (!r || i >= r->result.artifacts.size()) return nullptr;
  return r->result.artifacts[i].name.c_str();
}

const char* rhd_result_artifact_data(const rhd_result* r, size_t i, size_t* len) {
  if (!r || i >= r->result.artifacts.size()) {
    if (len) *len = 0;
    return nullptr;
  }
  const std::string& s = r->result.artifacts[i].content;
  if (len) *len = s.size();
  return s.c_str();
}

void rhd_result_free(rhd_result* r) { delete r; }

}  // extern "C"
