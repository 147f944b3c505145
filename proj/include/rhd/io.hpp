#pragma once

#include <map>
#include <string>
#include <vector>

#include "rhd/deflators.hpp"
#include "rhd/jumpdiff.hpp"
#include "rhd/prob.hpp"

namespace rhd {

struct Model {
  FiniteFilteredSpace space;
  std::vector<int> tau;
  VectorProcess S;                           // per asset, may be empty
  std::map<std::string, Process> processes;  // named tables referenced by parameter documents
};

// All parsers throw ErrorKind::input on malformed documents.
Model parse_model(const std::string& json_text);
std::string model_to_json(const Model& model);

// Table: a number (constant) or an [atom][time] array.
DeflatorParams parse_params(const std::string& json_text, const Model& model);

jd::Scenario parse_scenario(const std::string& json_text);
std::string scenario_to_json(const jd::Scenario& sc);

// "atom,time,value" rows, values with 17 significant digits.
std::string process_csv(const Process& x, const std::vector<std::string>& ids);
std::string processes_csv(const std::vector<std::pair<std::string, const Process*>>& cols,
                          const std::vector<std::string>& ids);
Process parse_process_csv(const std::string& text, const std::vector<std::string>& ids, std::size_t horizon);

std::string format_double(double x);

}  // namespace rhd
