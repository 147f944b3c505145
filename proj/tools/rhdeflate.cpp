// rhdeflate: random-horizon deflator toolkit.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rhd/rhd.h"

namespace fs = std::filesystem;

namespace {

bool slurp(const std::string& path, std::string& text) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  text = ss.str();
  return true;
}

int input_error(const std::string& msg) {
  std::cerr << "rhdeflate: " << msg << "\n";
  return RHD_E_INPUT;
}

int emit(int status, rhd_result* r, const fs::path& out) {
  if (!r) {
    std::cerr << "rhdeflate: " << rhd_last_error() << "\n";
    return status;
  }
  std::error_code ec;
  if (rhd_result_artifact_count(r) > 0) fs::create_directories(out, ec);
  if (ec) {
    rhd_result_free(r);
    return input_error("cannot create output directory " + out.string());
  }
  for (size_t i = 0; i < rhd_result_artifact_count(r); ++i) {
    size_t len = 0;
    const char* data = rhd_result_artifact_data(r, i, &len);
    const fs::path file = out / rhd_result_artifact_name(r, i);
    std::ofstream f(file, std::ios::binary | std::ios::trunc);
    if (!f.write(data, static_cast<std::streamsize>(len))) {
      rhd_result_free(r);
      return input_error("cannot write " + file.string());
    }
  }
  (status == RHD_OK ? std::cout : std::cerr) << (status == RHD_OK ? "ok: " : "failed: ") << rhd_result_message(r)
                                             << "\n";
  rhd_result_free(r);
  return status;
}

struct ModelHandle {
  rhd_model* m = nullptr;
  ~ModelHandle() { rhd_model_free(m); }
};

int load_model(const std::string& path, ModelHandle& h) {
  std::string text;
  if (!slurp(path, text)) return input_error("cannot read model " + path);
  int rc = rhd_model_parse(text.c_str(), &h.m);
  if (rc != RHD_OK) std::cerr << "rhdeflate: " << path << ": " << rhd_last_error() << "\n";
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deflators and survival analysis under a random horizon"};
  app.require_subcommand(1);

  std::string out_dir;
  if (const char* env = std::getenv("RHD_OUT_DIR")) out_dir = env;
  if (out_dir.empty()) out_dir = ".";
  double tol = 1e-10;
  std::string model, params, scenario, route, table;
  std::optional<std::uint64_t> seed, paths;
  std::optional<double> dt;
  unsigned workers = 0;

  auto common = [&](CLI::App* c) {
    c->add_option("--out", out_dir, "Output directory (default $RHD_OUT_DIR or .)");
    c->add_option("--tol", tol, "Tolerance")->check(CLI::PositiveNumber);
  };

  auto* verify = app.add_subcommand("verify", "Check the survival invariants of a model");
  verify->add_option("--model", model, "Model JSON")->required();
  common(verify);

  auto* deflate = app.add_subcommand("deflate", "Build a G-deflator and certify it");
  deflate->add_option("--model", model, "Model JSON")->required();
  deflate->add_option("--params", params, "Parameter JSON");
  deflate->add_option("--route", route, "Construction route")
      ->check(CLI::IsMember({"additive", "multiplicative", "thm58"}));
  common(deflate);

  auto* decompose = app.add_subcommand("decompose", "Represent a G-martingale table");
  decompose->add_option("--model", model, "Model JSON")->required();
  decompose->add_option("--table", table, "atom,time,value CSV")->required();
  common(decompose);

  auto* simulate = app.add_subcommand("simulate", "Jump-diffusion Monte Carlo suite");
  simulate->add_option("--scenario", scenario, "Scenario JSON");
  simulate->add_option("--seed", seed, "Seed");
  simulate->add_option("--paths", paths, "Number of paths");
  simulate->add_option("--dt", dt, "Grid step");
  simulate->add_option("--workers", workers, "Worker threads (0: all cores)");
  common(simulate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return RHD_E_INPUT;
  }

  const fs::path out(out_dir);
  rhd_result* r = nullptr;
  if (*verify || *deflate || *decompose) {
    ModelHandle h;
    if (int rc = load_model(model, h); rc != RHD_OK) return rc;
    if (*verify) {
      int rc = rhd_verify(h.m, tol, &r);
      return emit(rc, r, out);
    }
    if (*deflate) {
      std::string ptext;
      if (!params.empty() && !slurp(params, ptext)) return input_error("cannot read params " + params);
      int rc = rhd_deflate(h.m, ptext.c_str(), route.empty() ? nullptr : route.c_str(), tol, &r);
      return emit(rc, r, out);
    }
    std::string ttext;
    if (!slurp(table, ttext)) return input_error("cannot read table " + table);
    int rc = rhd_decompose(h.m, ttext.c_str(), tol, &r);
    return emit(rc, r, out);
  }

  std::string stext;
  if (!scenario.empty() && !slurp(scenario, stext)) return input_error("cannot read scenario " + scenario);
  rhd_sim_options o{};
  if (seed) o.has_seed = 1, o.seed = *seed;
  if (paths) o.has_paths = 1, o.paths = *paths;
  if (dt) o.has_dt = 1, o.dt = *dt;
  o.workers = workers;
  int rc = rhd_simulate(stext.c_str(), &o, &r);
  return emit(rc, r, out);
}
