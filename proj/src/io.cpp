#include "rhd/io.hpp"

#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace rhd {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::input, msg); }

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    bad(fmt::format("{} is not valid JSON: {}", what, e.what()));
  }
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(fmt::format("{} must be a number", where));
  double v = j.get<double>();
  if (!std::isfinite(v)) bad(fmt::format("{} must be finite", where));
  return v;
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) bad(fmt::format("{} must be an integer", where));
  return j.get<int>();
}

const json& field(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key)) bad(fmt::format("{} lacks field '{}'", where, key));
  return j.at(key);
}

Process table(const json& j, std::size_t atoms, std::size_t T, const std::string& where) {
  if (j.is_number()) return Process(atoms, T, number(j, where));
  if (!j.is_array() || j.size() != atoms) bad(fmt::format("{} must be a number or an [outcome][time] array", where));
  Process p(atoms, T);
  for (std::size_t a = 0; a < atoms; ++a) {
    const json& row = j[a];
    if (!row.is_array() || row.size() != T + 1) bad(fmt::format("{} row {} must have {} entries", where, a, T + 1));
    for (std::size_t n = 0; n <= T; ++n) p(a, n) = number(row[n], fmt::format("{}[{}][{}]", where, a, n));
  }
  return p;
}

ojson table_json(const Process& p) {
  ojson rows = ojson::array();
  for (std::size_t a = 0; a < p.atoms(); ++a) {
    ojson r = ojson::array();
    for (std::size_t n = 0; n <= p.horizon(); ++n) r.push_back(p(a, n));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

std::string format_double(double x) { return fmt::format("{:.17g}", x); }

Model parse_model(const std::string& text) {
  json j = parse_json(text, "model");
  if (!j.is_object()) bad("model must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (k != "outcomes" && k != "horizon" && k != "partitions" && k != "tau" && k != "S" && k != "processes")
      bad(fmt::format("model has unknown field '{}'", k));

  const json& outs = field(j, "outcomes", "model");
  if (!outs.is_array() || outs.empty()) bad("outcomes must be a non-empty array");
  std::vector<std::string> ids;
  std::vector<double> probs;
  std::set<std::string> seen;
  for (std::size_t a = 0; a < outs.size(); ++a) {
    const json& o = outs[a];
    const json& id = field(o, "id", "outcome");
    if (!id.is_string()) bad(fmt::format("outcome {} id must be a string", a));
    if (!seen.insert(id.get<std::string>()).second) bad(fmt::format("duplicate outcome id '{}'", id.get<std::string>()));
    ids.push_back(id.get<std::string>());
    probs.push_back(number(field(o, "prob", "outcome"), fmt::format("prob of '{}'", ids.back())));
  }
  const std::size_t N = ids.size();
  const int Ti = integer(field(j, "horizon", "model"), "horizon");
  if (Ti < 1) bad("horizon must be >= 1");
  const std::size_t T = static_cast<std::size_t>(Ti);

  const json& parts = field(j, "partitions", "model");
  if (!parts.is_array() || parts.size() != T + 1) bad(fmt::format("partitions must list {} partitions", T + 1));
  std::vector<Partition> chain;
  for (std::size_t n = 0; n <= T; ++n) {
    if (!parts[n].is_array() || parts[n].size() != N) bad(fmt::format("partition {} must give a block id per outcome", n));
    std::vector<int> labels;
    for (std::size_t a = 0; a < N; ++a) labels.push_back(integer(parts[n][a], fmt::format("partitions[{}][{}]", n, a)));
    chain.emplace_back(labels);
  }

  Model m;
  m.space = FiniteFilteredSpace(ids, probs, Filtration(std::move(chain)));
  const json& tau = field(j, "tau", "model");
  if (!tau.is_array() || tau.size() != N) bad("tau must give one integer per outcome");
  for (std::size_t a = 0; a < N; ++a) {
    int t = integer(tau[a], fmt::format("tau[{}]", a));
    if (t < 0 || t > Ti) bad(fmt::format("tau of '{}' is outside 0..{}", ids[a], T));
    m.tau.push_back(t);
  }

  if (j.contains("S")) {
    const json& s = j.at("S");
    if (!s.is_array() || s.size() != N) bad("S must be an [outcome][time][asset] array");
    std::size_t d = 0;
    for (std::size_t a = 0; a < N; ++a) {
      if (!s[a].is_array() || s[a].size() != T + 1) bad(fmt::format("S row {} must have {} entries", a, T + 1));
      for (std::size_t n = 0; n <= T; ++n) {
        const json& cell = s[a][n];
        std::size_t dc = cell.is_array() ? cell.size() : 1;
        if (dc == 0) bad("S needs at least one asset");
        if (d == 0) {
          d = dc;
          m.S.assign(d, Process(N, T));
        } else if (dc != d) {
          bad("S has inconsistent asset counts");
        }
        for (std::size_t i = 0; i < d; ++i)
          m.S[i](a, n) = number(cell.is_array() ? cell[i] : cell, fmt::format("S[{}][{}]", a, n));
      }
    }
    for (std::size_t i = 0; i < d; ++i)
      if (!is_adapted(m.S[i], m.space.F())) bad(fmt::format("asset {} price is not adapted", i));
  }
  if (j.contains("processes")) {
    const json& ps = j.at("processes");
    if (!ps.is_object()) bad("processes must be an object of named tables");
    for (const auto& [k, v] : ps.items()) m.processes.emplace(k, table(v, N, T, fmt::format("processes.{}", k)));
  }
  return m;
}

std::string model_to_json(const Model& m) {
  ojson j;
  ojson outs = ojson::array();
  for (std::size_t a = 0; a < m.space.atoms(); ++a) outs.push_back({{"id", m.space.ids()[a]}, {"prob", m.space.P()[a]}});
  j["outcomes"] = outs;
  j["horizon"] = m.space.horizon();
  ojson parts = ojson::array();
  for (const auto& p : m.space.F().chain()) parts.push_back(p.labels());
  j["partitions"] = parts;
  j["tau"] = m.tau;
  if (!m.S.empty()) {
    ojson s = ojson::array();
    for (std::size_t a = 0; a < m.space.atoms(); ++a) {
      ojson row = ojson::array();
      for (std::size_t n = 0; n <= m.space.horizon(); ++n) {
        ojson cell = ojson::array();
        for (const auto& asset : m.S) cell.push_back(asset(a, n));
        row.push_back(cell);
      }
      s.push_back(row);
    }
    j["S"] = s;
  }
  if (!m.processes.empty()) {
    ojson ps = ojson::object();
    for (const auto& [k, v] : m.processes) ps[k] = table_json(v);
    j["processes"] = ps;
  }
  return j.dump(2) + "\n";
}

DeflatorParams parse_params(const std::string& text, const Model& m) {
  json j = parse_json(text, "params");
  if (!j.is_object()) bad("params must be a JSON object");
  const std::size_t N = m.space.atoms(), T = m.space.horizon();
  DeflatorParams p;
  auto load = [&](const char* key) -> Process {
    if (!j.contains(key) || j.at(key).is_null()) return {};
    const json& v = j.at(key);
    if (v.is_string()) {
      auto it = m.processes.find(v.get<std::string>());
      if (it == m.processes.end()) bad(fmt::format("params.{} references unknown process '{}'", key, v.get<std::string>()));
      return it->second;
    }
    return table(v, N, T, fmt::format("params.{}", key));
  };
  for (const auto& [k, v] : j.items())
    if (k != "route" && k != "base" && k != "phi_o" && k != "phi_pr" && k != "phi" && k != "V_F")
      bad(fmt::format("params has unknown field '{}'", k));
  if (j.contains("route")) {
    if (!j.at("route").is_string()) bad("params.route must be a string");
    p.route = parse_route(j.at("route").get<std::string>());
  }
  if (j.contains("phi") && j.contains("phi_o")) bad("params gives both phi and phi_o");
  p.base = load("base");
  p.phi_o = j.contains("phi") ? load("phi") : load("phi_o");
  p.phi_pr = load("phi_pr");
  p.V_F = load("V_F");
  return p;
}

jd::Scenario parse_scenario(const std::string& text) {
  json j = parse_json(text, "scenario");
  if (!j.is_object()) bad("scenario must be a JSON object");
  jd::Scenario sc;
  for (const auto& [k, v] : j.items()) {
    if (k == "sigma") sc.sigma = number(v, k);
    else if (k == "zeta") sc.zeta = number(v, k);
    else if (k == "mu") sc.mu = number(v, k);
    else if (k == "lambda") sc.lambda = number(v, k);
    else if (k == "a") sc.a = number(v, k);
    else if (k == "S0") sc.S0 = number(v, k);
    else if (k == "horizon") sc.horizon = number(v, k);
    else if (k == "dt") sc.dt = number(v, k);
    else if (k == "psi2") sc.psi2 = number(v, k);
    else if (k == "phi_o") sc.phi_o = number(v, k);
    else if (k == "phi_pr") sc.phi_pr = number(v, k);
    else if (k == "n_paths" || k == "csv_paths" || k == "seed") {
      if (!v.is_number_integer() || v.get<long long>() < 0) bad(fmt::format("{} must be a non-negative integer", k));
      if (k == "n_paths") sc.n_paths = v.get<std::size_t>();
      else if (k == "csv_paths") sc.csv_paths = v.get<std::size_t>();
      else sc.seed = v.get<std::uint64_t>();
    } else if (k == "obs_times") {
      if (!v.is_array()) bad("obs_times must be an array");
      sc.obs_times.clear();
      for (const auto& t : v) sc.obs_times.push_back(number(t, "obs_times entry"));
    } else {
      bad(fmt::format("scenario has unknown field '{}'", k));
    }
  }
  return sc;
}

std::string scenario_to_json(const jd::Scenario& sc) {
  ojson j;
  j["sigma"] = sc.sigma;
  j["zeta"] = sc.zeta;
  j["mu"] = sc.mu;
  j["lambda"] = sc.lambda;
  j["a"] = sc.a;
  j["S0"] = sc.S0;
  j["horizon"] = sc.horizon;
  j["dt"] = sc.dt;
  j["n_paths"] = sc.n_paths;
  j["seed"] = sc.seed;
  j["psi2"] = sc.psi2;
  j["phi_o"] = sc.phi_o;
  j["phi_pr"] = sc.phi_pr;
  j["obs_times"] = sc.obs_times;
  j["csv_paths"] = sc.csv_paths;
  return j.dump(2) + "\n";
}

std::string processes_csv(const std::vector<std::pair<std::string, const Process*>>& cols,
                          const std::vector<std::string>& ids) {
  std::string out = "atom,time";
  for (const auto& c : cols) out += "," + c.first;
  out += "\n";
  const Process& first = *cols.front().second;
  for (std::size_t a = 0; a < first.atoms(); ++a)
    for (std::size_t n = 0; n <= first.horizon(); ++n) {
      out += fmt::format("{},{}", ids[a], n);
      for (const auto& c : cols) out += "," + format_double((*c.second)(a, n));
      out += "\n";
    }
  return out;
}

std::string process_csv(const Process& x, const std::vector<std::string>& ids) {
  return processes_csv({{"value", &x}}, ids);
}

Process parse_process_csv(const std::string& text, const std::vector<std::string>& ids, std::size_t T) {
  std::map<std::string, std::size_t> index;
  for (std::size_t a = 0; a < ids.size(); ++a) index[ids[a]] = a;
  Process p(ids.size(), T);
  std::vector<char> seen(ids.size() * (T + 1), 0);
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("atom,", 0) == 0) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 3) bad(fmt::format("table line {} must have 3 fields", lineno));
    auto it = index.find(f[0]);
    if (it == index.end()) bad(fmt::format("table line {}: unknown outcome '{}'", lineno, f[0]));
    std::size_t n;
    double v;
    try {
      std::size_t used = 0;
      long long ni = std::stoll(f[1], &used);
      if (used != f[1].size() || ni < 0 || static_cast<std::size_t>(ni) > T) throw std::invalid_argument("time");
      n = static_cast<std::size_t>(ni);
      v = std::stod(f[2], &used);
      if (used != f[2].size() || !std::isfinite(v)) throw std::invalid_argument("value");
    } catch (const std::exception&) {
      bad(fmt::format("table line {} is malformed", lineno));
    }
    std::size_t k = n * ids.size() + it->second;
    if (seen[k]) bad(fmt::format("table line {} repeats ({}, {})", lineno, f[0], n));
    seen[k] = 1;
    p(it->second, n) = v;
  }
  for (std::size_t k = 0; k < seen.size(); ++k)
    if (!seen[k]) bad(fmt::format("table misses outcome '{}' at time {}", ids[k % ids.size()], k / ids.size()));
  return p;
}

}  // namespace rhd
