#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rhd/deflators.hpp"
#include "rhd/io.hpp"

namespace rhd {

struct Artifact {
  std::string name;
  std::string content;
};

// status: 0 success, 1 mathematical failure, 2 input error.
struct CommandResult {
  int status = 0;
  std::string message;
  std::vector<Artifact> artifacts;

  const Artifact* find(const std::string& name) const;
};

CommandResult cmd_verify(const Model& model, double tol = 1e-10);
// Empty params text means all-default parameters; route overrides the document.
CommandResult cmd_deflate(const Model& model, const std::string& params_text, std::optional<Route> route,
                          double tol = 1e-10);
CommandResult cmd_decompose(const Model& model, const std::string& table_csv, double tol = 1e-10);

struct SimulateOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<double> dt;
  unsigned workers = 0;
};
CommandResult cmd_simulate(const std::string& scenario_text, const SimulateOptions& opt = {});

// Status an exception maps to.
int status_of(const Error& e);

}  // namespace rhd
