#include "rhd/commands.hpp"

#include <cmath>
#include <functional>

#include <fmt/format.h>
#include <json.hpp>

#include "rhd/jumpdiff.hpp"
#include "rhd/market.hpp"

namespace rhd {

using ojson = nlohmann::ordered_json;

namespace {

ojson num(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "+inf" : "-inf";
  return x;
}

ojson table(const Process& p) {
  ojson rows = ojson::array();
  for (std::size_t a = 0; a < p.atoms(); ++a) {
    ojson r = ojson::array();
    for (std::size_t n = 0; n <= p.horizon(); ++n) r.push_back(num(p(a, n)));
    rows.push_back(std::move(r));
  }
  return rows;
}

ojson node(const std::vector<std::string>& ids, std::size_t time, std::size_t atom) {
  return {{"time", time}, {"outcome", ids[atom]}};
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

CommandResult guarded(const std::function<CommandResult()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    return {status_of(e), e.what(), {}};
  } catch (const nlohmann::json::exception& e) {
    return {2, e.what(), {}};
  } catch (const std::exception& e) {
    return {1, e.what(), {}};
  }
}

double max_abs(const Process& x) {
  double r = 0.0;
  for (double v : x.raw()) r = std::max(r, std::abs(v));
  return r;
}

}  // namespace

const Artifact* CommandResult::find(const std::string& name) const {
  for (const auto& a : artifacts)
    if (a.name == name) return &a;
  return nullptr;
}

int status_of(const Error& e) { return e.kind() == ErrorKind::input ? 2 : 1; }

CommandResult cmd_verify(const Model& model, double tol) {
  return guarded([&] {
    if (!(tol > 0.0)) throw Error(ErrorKind::input, "tolerance must be positive");
    const RandomTimeStructure rts = build_survival(model.space, model.tau);
    const auto& ids = model.space.ids();
    const std::size_t N = rts.atoms(), T = rts.horizon();
    const Filtration& F = rts.F();
    const Measure& P = rts.P();

    ojson inv = ojson::array();
    bool all = true;
    std::string first_failure;
    auto record = [&](const std::string& name, double residual, ojson extra = nullptr) {
      bool ok = residual <= tol;
      ojson e = {{"name", name}, {"residual", num(residual)}, {"passed", ok}};
      if (!extra.is_null()) e["worst"] = std::move(extra);
      inv.push_back(std::move(e));
      if (!ok && all) first_failure = fmt::format("invariant failed: {} (residual {:.17g})", name, residual);
      all = all && ok;
    };
    auto classified = [&](const std::string& name, const Process& x, const Filtration& f) {
      Classification c = classify(x, f, P, tol);
      record(name, c.max_residual, node(ids, c.worst_time, c.worst_atom));
    };
    auto guarded_classify = [&](const std::string& name, const std::function<Process()>& make, const Filtration& f) {
      try {
        classified(name, make(), f);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::input) throw;
        record(name, std::numeric_limits<double>::infinity());
        if (first_failure.find(name) != std::string::npos) first_failure += fmt::format(": {}", e.what());
      }
    };

    double surv = 0.0;
    for (std::size_t n = 0; n <= T; ++n) {
      std::vector<double> total(rts.G.at(n).begin(), rts.G.at(n).end());
      for (std::size_t k = 0; k <= n; ++k) {
        std::vector<double> ind(N);
        for (std::size_t a = 0; a < N; ++a) ind[a] = rts.tau[a] == static_cast<int>(k) ? 1.0 : 0.0;
        auto e = cond_expect(ind, F.at(n), P, Degenerate::zero);
        for (std::size_t a = 0; a < N; ++a) total[a] += e[a];
      }
      for (std::size_t a = 0; a < N; ++a)
        if (P[a] > 0.0) surv = std::max(surv, std::abs(total[a] - 1.0));
    }
    record("G_n + P(tau <= n | F_n) = 1", surv);

    double gap = 0.0;
    for (std::size_t n = 0; n <= T; ++n)
      for (std::size_t a = 0; a < N; ++a)
        gap = std::max({gap, std::abs(rts.Gtilde(a, n) - rts.G(a, n) - rts.pdeath(a, n)), -rts.pdeath(a, n)});
    record("Gtilde - G = P(tau = n | F_n) >= 0", gap);

    double gT = 0.0;
    for (std::size_t a = 0; a < N; ++a) gT = std::max(gT, std::abs(rts.G(a, T)));
    record("G_T = 0", gT);

    classified("m is an F-martingale", rts.m, F);

    double dm = 0.0;
    for (std::size_t n = 1; n <= T; ++n)
      for (std::size_t a = 0; a < N; ++a)
        dm = std::max(dm, std::abs(rts.m.delta(a, n) - (rts.Gtilde(a, n) - rts.G(a, n - 1))));
    record("dm = Gtilde - G_-", dm);

    classified("N^G is a G-martingale", rts.NG, rts.Gf);
    record("N^G is stopped at tau", rts.NG.max_abs_diff(rts.NG.stopped(rts.tau)));
    guarded_classify("T(m) is a G-martingale", [&] { return transform_T(rts.m, rts, tol); }, rts.Gf);
    guarded_classify("Mbar(m) is a G-martingale", [&] { return transform_predictable(rts.m, rts, tol); }, rts.Gf);
    guarded_classify("Nbar^G is a G-martingale", [&] { return compensate_D(rts); }, rts.Gf);
    classified("Zbar is an F-martingale", rts.Zbar, F);

    Process x(N, T);
    for (std::size_t n = 1; n <= T; ++n)
      for (std::size_t a = 0; a < N; ++a) {
        double g = rts.G(a, n - 1);
        x(a, n) = x(a, n - 1) + (g > 0.0 ? rts.m.delta(a, n) / g : 0.0);
      }
    record("Zbar = E(G_-^{-1} I{G_- > 0} . m)", rts.Zbar.max_abs_diff(stochastic_exponential(x)));

    try {
      Measure q = qtilde(rts);
      double s = 0.0;
      for (double w : q.weights()) s += w;
      record("Qtilde has total mass 1", std::abs(s - 1.0));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::input) throw;
      record("Qtilde has total mass 1", std::numeric_limits<double>::infinity());
    }

    double refine = 0.0;
    for (std::size_t n = 0; n <= T; ++n)
      if (!rts.Gf.at(n).refines(F.at(n))) refine = 1.0;
    record("G refines F", refine);

    ojson pos = {{"survival_positive", rts.positivity.survival_positive()}};
    pos["G_zero_before_T"] = ojson::array();
    for (const auto& c : rts.positivity.G_zero_before_T) pos["G_zero_before_T"].push_back(node(ids, c.time, c.atom));
    pos["zero_cells"] = ojson::array();
    for (const auto& c : rts.positivity.zero_cells) pos["zero_cells"].push_back(node(ids, c.time, c.atom));

    ojson rep;
    rep["command"] = "verify";
    rep["tolerance"] = tol;
    rep["outcomes"] = N;
    rep["horizon"] = T;
    rep["passed"] = all;
    rep["invariants"] = std::move(inv);
    rep["positivity"] = std::move(pos);

    CommandResult res;
    res.status = all ? 0 : 1;
    res.message = all ? "all invariants hold" : first_failure;
    res.artifacts.push_back({"report.json", dump(rep)});
    res.artifacts.push_back({"survival.csv",
                             processes_csv({{"D", &rts.D},
                                            {"G", &rts.G},
                                            {"Gtilde", &rts.Gtilde},
                                            {"Gminus", &rts.Gminus},
                                            {"pdeath", &rts.pdeath},
                                            {"DoF", &rts.DoF},
                                            {"DpF", &rts.DpF},
                                            {"m", &rts.m},
                                            {"NG", &rts.NG},
                                            {"Zbar", &rts.Zbar}},
                                           ids)});
    return res;
  });
}

namespace {

ojson admissibility_json(const AdmissibilityReport& rep, const std::vector<std::string>& ids) {
  ojson j;
  j["admissible"] = rep.admissible;
  j["min_factor"] = num(rep.min_factor);
  j["violations"] = ojson::array();
  for (const auto& v : rep.violations) {
    ojson e = {{"condition", v.condition}, {"time", v.time}, {"outcome", ids[v.atom]}, {"value", num(v.value)}};
    if (!v.detail.empty()) e["detail"] = v.detail;
    j["violations"].push_back(std::move(e));
  }
  j["inequalities"] = ojson::array();
  for (const auto& m : rep.inequalities) {
    ojson nodes = ojson::array();
    for (std::size_t n = 0; n <= m.value.horizon(); ++n)
      for (std::size_t a = 0; a < m.value.atoms(); ++a) {
        if (!m.active[n * m.value.atoms() + a]) continue;
        nodes.push_back({{"time", n},
                         {"outcome", ids[a]},
                         {"value", num(m.value(a, n))},
                         {"lower", num(m.lower(a, n))},
                         {"upper", num(m.upper(a, n))},
                         {"holds", m.holds_at(a, n)}});
      }
    j["inequalities"].push_back({{"name", m.name}, {"violations", m.violations()}, {"nodes", std::move(nodes)}});
  }
  return j;
}

ojson market_json(const Process& Z, const Model& model, const RandomTimeStructure& rts, double tol) {
  const auto& ids = model.space.ids();
  VectorProcess St = stopped(model.S, rts.tau);
  ojson j;
  j["assets"] = model.S.size();
  try {
    LmdReport l = verify_lmd(Z, St, rts.Gf, rts.P(), tol);
    j["local_martingale_deflator"] = {{"ok", l.ok},
                                      {"positive", l.positive},
                                      {"martingale_residual", num(l.martingale_residual)},
                                      {"price_residual", num(l.price_residual)},
                                      {"worst", node(ids, l.worst.time, l.worst.atom)}};
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::input) throw;
    j["local_martingale_deflator"] = {{"ok", false}, {"error", e.what()}};
  }
  try {
    DeflatorReport d = verify_deflator(Z, St, rts.Gf, rts.P(), tol);
    ojson w = node(ids, d.worst.time, d.worst.atom);
    w["sup"] = num(d.worst.sup);
    w["z_prev"] = num(d.worst.z_prev);
    w["excess"] = num(d.worst.excess);
    w["unbounded"] = d.worst.unbounded;
    j["deflator"] = {{"ok", d.ok}, {"positive", d.positive}, {"nodes", d.nodes.size()}, {"worst", std::move(w)}};
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::input) throw;
    j["deflator"] = {{"ok", false}, {"error", e.what()}};
  }
  return j;
}

}  // namespace

CommandResult cmd_deflate(const Model& model, const std::string& params_text, std::optional<Route> route,
                          double tol) {
  return guarded([&] {
    if (!(tol > 0.0)) throw Error(ErrorKind::input, "tolerance must be positive");
    DeflatorParams params = parse_params(params_text.empty() ? "{}" : params_text, model);
    if (route) params.route = *route;
    const RandomTimeStructure rts = build_survival(model.space, model.tau);
    const auto& ids = model.space.ids();

    ojson cert;
    cert["command"] = "deflate";
    cert["route"] = to_string(params.route);
    cert["tolerance"] = tol;

    CommandResult res;
    Deflator d;
    try {
      d = build(params, rts);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::inadmissible) throw;
      cert["admissibility"] = admissibility_json(validate(params, rts), ids);
      res.status = 1;
      res.message = e.what();
      res.artifacts.push_back({"certificate.json", dump(cert)});
      return res;
    }
    cert["admissibility"] = admissibility_json(d.admissibility, ids);
    cert["Z"] = table(d.Z);
    ojson factors = ojson::object();
    for (const auto& f : d.factors) factors[f.name] = table(f.value);
    cert["factors"] = std::move(factors);
    if (!d.K_G.empty()) cert["K_G"] = table(d.K_G);
    if (!model.S.empty()) cert["market"] = market_json(d.Z, model, rts, tol);

    std::vector<std::pair<std::string, const Process*>> cols;
    for (const auto& f : d.factors) cols.emplace_back(f.name, &f.value);
    res.status = 0;
    res.message = fmt::format("{} deflator built", to_string(params.route));
    res.artifacts.push_back({"certificate.json", dump(cert)});
    res.artifacts.push_back({"Z.csv", process_csv(d.Z, ids)});
    res.artifacts.push_back({"factors.csv", processes_csv(cols, ids)});
    return res;
  });
}

CommandResult cmd_decompose(const Model& model, const std::string& table_csv, double tol) {
  return guarded([&] {
    if (!(tol > 0.0)) throw Error(ErrorKind::input, "tolerance must be positive");
    const RandomTimeStructure rts = build_survival(model.space, model.tau);
    const auto& ids = model.space.ids();
    Process M = parse_process_csv(table_csv, ids, rts.horizon());
    Representation r = decompose_G_martingale(M, rts, tol);
    const bool ok = r.residual <= tol;

    ojson rep;
    rep["command"] = "decompose";
    rep["tolerance"] = tol;
    rep["residual"] = num(r.residual);
    rep["passed"] = ok;
    rep["max_abs_M_F"] = num(max_abs(r.M_F));
    rep["M_F"] = table(r.M_F);
    rep["phi"] = table(r.phi);
    rep["phi_determined"] = table(r.phi_determined);

    CommandResult res;
    res.status = ok ? 0 : 1;
    res.message = ok ? "representation reassembles the input"
                     : fmt::format("reassembly residual {:.17g} exceeds tolerance", r.residual);
    res.artifacts.push_back({"representation.json", dump(rep)});
    res.artifacts.push_back({"M_F.csv", process_csv(r.M_F, ids)});
    res.artifacts.push_back({"phi.csv", processes_csv({{"phi", &r.phi}, {"determined", &r.phi_determined}}, ids)});
    res.artifacts.push_back({"reassembled.csv", process_csv(r.reassembled, ids)});
    return res;
  });
}

namespace {

ojson stats_json(const jd::Check& c) {
  ojson times = ojson::array();
  for (const auto& t : c.stats.times)
    times.push_back({{"t", num(t.t)}, {"mean", num(t.mean)}, {"se", num(t.se)}, {"z", num(t.z)}});
  ojson reg = ojson::array();
  for (const auto& row : c.stats.regression_z) {
    ojson r = ojson::array();
    for (double z : row) r.push_back(num(z));
    reg.push_back(std::move(r));
  }
  ojson j = {{"name", c.name},
             {"null", c.null == jd::Null::martingale ? "martingale" : "supermartingale"},
             {"expect_reject", c.expect_reject},
             {"x0", num(c.x0)},
             {"rejected", c.stats.rejected},
             {"passed", c.passed()},
             {"max_z", num(c.stats.max_z)},
             {"times", std::move(times)},
             {"regression_z", std::move(reg)}};
  if (!c.stats.warning.empty()) j["warning"] = c.stats.warning;
  return j;
}

std::string paths_csv(const jd::PathBundle& b) {
  const jd::Scenario& sc = b.scenario;
  const double beta = sc.beta();
  const std::size_t steps = sc.steps();
  std::string out = "path,t,W,N,S,G,m\n";
  for (const auto& g : b.grids) {
    const jd::Path& p = b.paths[g.index];
    std::size_t jumps = 0;
    for (std::size_t i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) * sc.dt;
      while (jumps < g.jumps.size() && g.jumps[jumps] <= t) ++jumps;
      const double N = static_cast<double>(jumps);
      out += fmt::format("{},{},{},{},{},{},{}\n", g.index, format_double(t), format_double(g.W[i]), jumps,
                         format_double(jd::S(sc, t, g.W[i], N)), format_double(jd::G(beta, t, p.T1)),
                         format_double(jd::m(beta, sc.lambda, t, p.T1)));
    }
  }
  return out;
}

}  // namespace

CommandResult cmd_simulate(const std::string& scenario_text, const SimulateOptions& opt) {
  return guarded([&] {
    jd::Scenario sc = parse_scenario(scenario_text.empty() ? "{}" : scenario_text);
    if (opt.seed) sc.seed = *opt.seed;
    if (opt.paths) sc.n_paths = *opt.paths;
    if (opt.dt) sc.dt = *opt.dt;
    sc.validate();
    jd::PathBundle b = jd::simulate(sc, opt.workers);
    jd::Report rep;
    try {
      rep = jd::run(b);
    } catch (const Error& e) {
      // Scenario constants that violate the deflator constraints are an input problem.
      if (e.kind() == ErrorKind::inadmissible) throw Error(ErrorKind::input, e.what());
      throw;
    }

    ojson j;
    j["command"] = "simulate";
    j["scenario"] = ojson::parse(scenario_to_json(rep.scenario));
    j["deflator"] = {{"psi1", num(rep.deflator.psi1)},
                     {"psi2", num(rep.deflator.psi2)},
                     {"phi_o", num(rep.deflator.phi_o)},
                     {"phi_pr", num(rep.deflator.phi_pr)}};
    j["max_m_residual"] = num(rep.max_m_residual);
    j["m_residual_bound"] = num(5.0 * sc.dt);
    j["tau_before_T1"] = rep.tau_before_T1;
    j["mean_jump_count"] = num(rep.mean_jump_count);
    j["warnings"] = rep.warnings;
    j["checks"] = ojson::array();
    for (const auto& c : rep.checks) j["checks"].push_back(stats_json(c));
    j["ok"] = rep.ok;

    CommandResult res;
    res.status = rep.ok ? 0 : 1;
    if (rep.ok) {
      res.message = "all null checks hold";
    } else if (rep.max_m_residual > 5.0 * sc.dt) {
      res.message = fmt::format("pathwise m = G + DoF residual {:.17g} exceeds 5 dt", rep.max_m_residual);
    } else if (!rep.tau_before_T1) {
      res.message = "tau exceeds T1 on some path";
    } else {
      for (const auto& c : rep.checks)
        if (!c.expect_reject && c.stats.rejected) {
          res.message = fmt::format("null rejected: {} (max z {:.17g})", c.name, c.stats.max_z);
          break;
        }
    }
    for (const auto& w : rep.warnings) res.message += "; warning: " + w;
    res.artifacts.push_back({"summary.json", dump(j)});
    if (!b.grids.empty()) res.artifacts.push_back({"paths.csv", paths_csv(b)});
    return res;
  });
}

}  // namespace rhd
