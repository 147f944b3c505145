#include "rhd/deflators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace rhd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Process or_default(const Process& p, const RandomTimeStructure& rts, double fill, const char* name) {
  if (p.empty()) return Process(rts.atoms(), rts.horizon(), fill);
  if (p.atoms() != rts.atoms() || p.horizon() != rts.horizon())
    throw Error(ErrorKind::input, fmt::format("{} table has the wrong shape", name));
  return p;
}

InequalityMap make_map(std::string name, const RandomTimeStructure& rts) {
  InequalityMap m;
  m.name = std::move(name);
  const std::size_t N = rts.atoms(), T = rts.horizon();
  m.value = Process(N, T);
  m.lower = Process(N, T, -kInf);
  m.upper = Process(N, T, kInf);
  m.active.assign(N * (T + 1), 0);
  m.holds.assign(N * (T + 1), 1);
  return m;
}

void set_node(InequalityMap& m, std::size_t a, std::size_t n, double value, double lo, double hi) {
  const std::size_t i = n * m.value.atoms() + a;
  m.value(a, n) = value;
  m.lower(a, n) = lo;
  m.upper(a, n) = hi;
  m.active[i] = 1;
  m.holds[i] = (lo < value && value < hi) ? 1 : 0;
}

double ratio_or(double num, double den, double if_zero) { return den == 0.0 ? if_zero : num / den; }

struct Checker {
  AdmissibilityReport& rep;

  void fail(std::string cond, std::size_t n, std::size_t a, double v, std::string detail = {}) {
    rep.admissible = false;
    rep.violations.push_back({std::move(cond), n, a, v, std::move(detail)});
  }

  void factor(const char* what, std::size_t n, std::size_t a, double f) {
    rep.min_factor = std::min(rep.min_factor, f);
    if (!(f > 0.0)) fail(fmt::format("realized factor of {} must be positive", what), n, a, f);
  }

  void adapted(const Process& p, const Filtration& f, const char* what) {
    for (std::size_t n = 0; n <= p.horizon(); ++n)
      if (!is_measurable(p.at(n), f.at(n), 1e-12)) {
        fail(fmt::format("{} must be F-adapted", what), n, 0, 0.0);
        return;
      }
  }

  void collapse(const Process& phi_pr, const RandomTimeStructure& rts) {
    for (std::size_t a = 0; a < rts.atoms(); ++a) {
      int t = rts.tau[a];
      if (t >= 1 && phi_pr(a, static_cast<std::size_t>(t)) != 0.0)
        fail("phi_pr must vanish at tau on a finite tree", static_cast<std::size_t>(t), a,
             phi_pr(a, static_cast<std::size_t>(t)));
    }
  }
};

// phi_o bounds in the multiplicative form: -Gt/G < phi < Gt/(Gt - G), evaluated where Gt > 0.
InequalityMap phi_o_bounds(const char* name, const Process& phi, const RandomTimeStructure& rts) {
  InequalityMap m = make_map(name, rts);
  for (std::size_t n = 1; n <= rts.horizon(); ++n)
    for (std::size_t a = 0; a < rts.atoms(); ++a) {
      double gt = rts.Gtilde(a, n);
      if (gt <= 0.0) continue;
      set_node(m, a, n, phi(a, n), -ratio_or(gt, rts.G(a, n), kInf), ratio_or(gt, rts.pdeath(a, n), kInf));
    }
  return m;
}

InequalityMap phi_pr_lower(const Process& phi_pr, const RandomTimeStructure& rts) {
  InequalityMap m = make_map("phi_pr > -1 on {tau = n}", rts);
  for (std::size_t a = 0; a < rts.atoms(); ++a) {
    int t = rts.tau[a];
    if (t >= 1) set_node(m, a, static_cast<std::size_t>(t), phi_pr(a, static_cast<std::size_t>(t)), -1.0, kInf);
  }
  return m;
}

Process stopped_tau(const Process& p, const RandomTimeStructure& rts) { return p.stopped(rts.tau); }

Process additive_driver(const Process& K_F, const Process& phi_o, const Process& phi_pr,
                        const RandomTimeStructure& rts) {
  Process KG = transform_T(K_F, rts);
  KG -= stochastic_integral(survival_integrand(rts), transform_T(rts.m, rts), rts.Gf);
  KG += stieltjes_integral(phi_o, rts.NG);
  KG += stieltjes_integral(phi_pr, rts.D);
  return KG;
}

Process one_minus_exponential(const Process& V) { return stochastic_exponential(-1.0 * V); }

}  // namespace

std::size_t InequalityMap::violations() const {
  std::size_t c = 0;
  for (char h : holds) c += h ? 0 : 1;
  return c;
}

const char* to_string(Route r) {
  switch (r) {
    case Route::additive: return "additive";
    case Route::multiplicative: return "multiplicative";
    case Route::thm58: return "thm58";
  }
  return "multiplicative";
}

Route parse_route(const std::string& s) {
  if (s == "additive") return Route::additive;
  if (s == "multiplicative") return Route::multiplicative;
  if (s == "thm58") return Route::thm58;
  throw Error(ErrorKind::input, fmt::format("unknown route '{}'", s));
}

Process survival_exponential(const RandomTimeStructure& rts) {
  return stochastic_exponential(stochastic_integral(survival_integrand(rts), rts.m, rts.Gf));
}

Process z_phi(const Process& phi, const RandomTimeStructure& rts) {
  const std::size_t N = rts.atoms(), T = rts.horizon();
  Process z(N, T, 1.0);
  for (std::size_t n = 1; n <= T; ++n)
    for (std::size_t a = 0; a < N; ++a) {
      double f = 1.0;
      if (rts.alive(a, n)) {
        double gt = rts.Gtilde(a, n);
        f = rts.tau[a] == static_cast<int>(n) ? 1.0 + phi(a, n) * rts.G(a, n) / gt
                                              : 1.0 - phi(a, n) * rts.pdeath(a, n) / gt;
      }
      z(a, n) = z(a, n - 1) * f;
    }
  return z;
}

AdmissibilityReport validate(const DeflatorParams& params, const RandomTimeStructure& rts) {
  AdmissibilityReport rep;
  Checker chk{rep};
  const std::size_t N = rts.atoms(), T = rts.horizon();
  const auto& F = rts.F();
  const double base_fill = params.route == Route::additive ? 0.0 : 1.0;
  Process base = or_default(params.base, rts, base_fill, "base");
  Process phi_o = or_default(params.phi_o, rts, 0.0, "phi_o");
  Process phi_pr = or_default(params.phi_pr, rts, 0.0, "phi_pr");
  Process V = or_default(params.V_F, rts, 0.0, "V_F");

  chk.adapted(phi_o, F, "phi_o");
  chk.adapted(phi_pr, F, "phi_pr");
  chk.collapse(phi_pr, rts);
  if (!rep.admissible) return rep;

  switch (params.route) {
    case Route::multiplicative: {
      chk.adapted(base, F, "Z_F");
      for (std::size_t n = 0; n <= T; ++n)
        for (std::size_t a = 0; a < N; ++a)
          if (!(base(a, n) > 0.0)) chk.fail("Z_F must be positive", n, a, base(a, n));
      rep.inequalities.push_back(phi_pr_lower(phi_pr, rts));
      rep.inequalities.push_back(phi_o_bounds("-Gt/G < phi_o < Gt/(Gt - G)", phi_o, rts));
      for (std::size_t n = 1; n <= T; ++n)
        for (std::size_t a = 0; a < N; ++a) {
          if (!rts.alive(a, n)) continue;
          chk.factor("E(phi_o . N^G)", n, a, 1.0 + phi_o(a, n) * rts.NG.delta(a, n));
          chk.factor("E(phi_pr . D)", n, a, 1.0 + phi_pr(a, n) * rts.D.delta(a, n));
        }
      break;
    }
    case Route::thm58: {
      chk.adapted(base, F, "Z_QF");
      for (std::size_t n = 0; n <= T; ++n)
        for (std::size_t a = 0; a < N; ++a)
          if (rts.Zbar(a, n) > 0.0 && !(base(a, n) > 0.0)) chk.fail("Z_QF must be positive", n, a, base(a, n));
      rep.inequalities.push_back(phi_o_bounds("-P(tau>=n|F_n)/P(tau>n|F_n) < phi < P(tau>=n|F_n)/P(tau=n|F_n)", phi_o, rts));
      Process z = z_phi(phi_o, rts);
      for (std::size_t n = 1; n <= T; ++n)
        for (std::size_t a = 0; a < N; ++a)
          if (rts.alive(a, n)) chk.factor("Z^(phi)", n, a, z(a, n) / z(a, n - 1));
      break;
    }
    case Route::additive: {
      chk.adapted(base, F, "K_F");
      if (!rep.admissible) return rep;
      auto c = classify(base, F, rts.P(), 1e-10);
      if (c.verdict != Verdict::martingale)
        chk.fail("K_F must be an F-martingale", c.worst_time, c.worst_atom, c.max_residual);
      for (std::size_t n = 1; n <= T; ++n)
        for (std::size_t a = 0; a < N; ++a) {
          if (!(1.0 + base.delta(a, n) > 0.0)) chk.fail("1 + dK_F must be positive", n, a, base.delta(a, n));
          double dv = V.delta(a, n);
          if (!(dv >= 0.0 && dv < 1.0)) chk.fail("0 <= dV_F < 1", n, a, dv);
        }
      if (!is_predictable(V, F, 1e-12)) chk.fail("V_F must be F-predictable", 0, 0, 0.0);
      if (!rep.admissible) return rep;

      InequalityMap o = make_map("-(G_-/G)(1 + dK_F) < phi_o < (1 + dK_F) G_- / dDoF", rts);
      InequalityMap pr = make_map("phi_pr > -[G_-(1 + dK_F) + phi_o G]/Gt on {tau = n}", rts);
      for (std::size_t n = 1; n <= T; ++n)
        for (std::size_t a = 0; a < N; ++a) {
          double gt = rts.Gtilde(a, n);
          if (gt <= 0.0) continue;
          double q = rts.Gminus(a, n) * (1.0 + base.delta(a, n));
          set_node(o, a, n, phi_o(a, n), -ratio_or(q, rts.G(a, n), kInf), ratio_or(q, rts.pdeath(a, n), kInf));
          if (rts.tau[a] == static_cast<int>(n))
            set_node(pr, a, n, phi_pr(a, n), -(q + phi_o(a, n) * rts.G(a, n)) / gt, kInf);
        }
      rep.inequalities.push_back(std::move(o));
      rep.inequalities.push_back(std::move(pr));
      Process KG = additive_driver(base, phi_o, phi_pr, rts);
      for (std::size_t n = 1; n <= T; ++n)
        for (std::size_t a = 0; a < N; ++a)
          if (rts.alive(a, n)) chk.factor("E(K^G)", n, a, 1.0 + KG.delta(a, n));
      break;
    }
  }
  for (auto& v : rep.violations)
    for (const auto& m : rep.inequalities)
      if (!m.holds_at(v.atom, v.time)) {
        v.detail = std::move(v.condition);
        v.condition = m.name;
        v.value = m.value(v.atom, v.time);
        break;
      }
  return rep;
}

namespace {

Deflator construct_additive(const Process& K_F, const Process& V, const Process& phi_o, const Process& phi_pr,
                            const RandomTimeStructure& rts) {
  Deflator d;
  d.route = Route::additive;
  d.K_G = additive_driver(K_F, phi_o, phi_pr, rts);
  Process eK = stochastic_exponential(d.K_G);
  Process eV = stopped_tau(one_minus_exponential(V), rts);
  d.Z = eK.times(eV);
  d.factors = {{"E(K^G)", eK}, {"E(-V_F)^tau", eV}};
  return d;
}

Deflator construct_multiplicative(const Process& Z_F, const Process& phi_o, const Process& phi_pr,
                                  const RandomTimeStructure& rts) {
  Deflator d;
  d.route = Route::multiplicative;
  Process zf = stopped_tau(Z_F, rts);
  Process se = survival_exponential(rts);
  Process inv(se.atoms(), se.horizon());
  for (std::size_t i = 0; i <= se.horizon(); ++i)
    for (std::size_t a = 0; a < se.atoms(); ++a) inv(a, i) = 1.0 / se(a, i);
  Process eo = stochastic_exponential(stieltjes_integral(phi_o, rts.NG));
  Process ep = stochastic_exponential(stieltjes_integral(phi_pr, rts.D));
  d.Z = zf.times(inv).times(eo).times(ep);
  d.factors = {{"(Z_F)^tau", zf}, {"1/E(G_-^{-1} . m)^tau", inv}, {"E(phi_o . N^G)", eo}, {"E(phi_pr . D)", ep}};
  return d;
}

Deflator construct_thm58(const Process& Z_QF, const Process& phi, const RandomTimeStructure& rts) {
  Deflator d;
  d.route = Route::thm58;
  Process zq = stopped_tau(Z_QF, rts);
  Process zp = z_phi(phi, rts);
  d.Z = zq.times(zp);
  d.factors = {{"(Z_QF)^tau", zq}, {"Z^(phi)", zp}};
  return d;
}

}  // namespace

Deflator build(const DeflatorParams& params, const RandomTimeStructure& rts) {
  AdmissibilityReport rep = validate(params, rts);
  if (!rep.admissible) {
    const auto& v = rep.violations.front();
    throw Error(ErrorKind::inadmissible,
                fmt::format("inadmissible parameters: {} (time {}, outcome '{}', value {:.17g}){}", v.condition, v.time,
                            rts.space.ids()[v.atom], v.value, v.detail.empty() ? "" : "; " + v.detail));
  }
  const double base_fill = params.route == Route::additive ? 0.0 : 1.0;
  Process base = or_default(params.base, rts, base_fill, "base");
  Process phi_o = or_default(params.phi_o, rts, 0.0, "phi_o");
  Process phi_pr = or_default(params.phi_pr, rts, 0.0, "phi_pr");
  Process V = or_default(params.V_F, rts, 0.0, "V_F");
  Deflator d;
  switch (params.route) {
    case Route::additive: d = construct_additive(base, V, phi_o, phi_pr, rts); break;
    case Route::multiplicative: d = construct_multiplicative(base, phi_o, phi_pr, rts); break;
    case Route::thm58: d = construct_thm58(base, phi_o, rts); break;
  }
  d.admissibility = std::move(rep);
  return d;
}

Deflator build_additive(const Process& K_F, const Process& V_F, const Process& phi_o, const Process& phi_pr,
                        const RandomTimeStructure& rts) {
  return build({Route::additive, K_F, phi_o, phi_pr, V_F}, rts);
}

Deflator build_multiplicative(const Process& Z_F, const Process& phi_o, const Process& phi_pr,
                              const RandomTimeStructure& rts) {
  return build({Route::multiplicative, Z_F, phi_o, phi_pr, {}}, rts);
}

Deflator build_thm58(const Process& Z_QF, const Process& phi, const RandomTimeStructure& rts) {
  return build({Route::thm58, Z_QF, phi, {}, {}}, rts);
}

MultiplicativeDecomposition mult_decompose(const Process& Z, const Filtration& f, const Measure& m, double tol) {
  if (!is_adapted(Z, f)) throw Error(ErrorKind::input, "process is not adapted");
  if (!is_strictly_positive(Z)) throw Error(ErrorKind::contract, "process is not strictly positive");
  auto c = classify(Z, f, m, tol);
  if (c.max_positive > tol)
    throw Error(ErrorKind::contract, fmt::format("process is not a supermartingale: residual {:.17g} at time {}",
                                                 c.max_positive, c.worst_time));
  const std::size_t N = Z.atoms(), T = Z.horizon();
  Process X(N, T);
  for (std::size_t n = 1; n <= T; ++n)
    for (std::size_t a = 0; a < N; ++a) X(a, n) = X(a, n - 1) + Z.delta(a, n) / Z(a, n - 1);
  Doob doob = doob_decomposition(X, f, m, Degenerate::zero);
  MultiplicativeDecomposition r;
  r.V = -1.0 * doob.drift;
  r.N = Process(N, T);
  for (std::size_t n = 1; n <= T; ++n)
    for (std::size_t a = 0; a < N; ++a)
      r.N(a, n) = r.N(a, n - 1) + doob.martingale.delta(a, n) / (1.0 - r.V.delta(a, n));
  r.Z0.assign(Z.at(0).begin(), Z.at(0).end());
  r.reassembled = stochastic_exponential(r.N).times(stochastic_exponential(-1.0 * r.V));
  for (std::size_t n = 0; n <= T; ++n)
    for (std::size_t a = 0; a < N; ++a) r.reassembled(a, n) *= r.Z0[a];
  r.residual = r.reassembled.max_abs_diff(Z);
  return r;
}

Process reassemble(const Process& M0, const Process& M_F, const Process& phi, const RandomTimeStructure& rts) {
  const std::size_t N = rts.atoms(), T = rts.horizon();
  Process tm = transform_T(M_F, rts);
  Process r(N, T);
  for (std::size_t a = 0; a < N; ++a) r(a, 0) = M0(a, 0);
  for (std::size_t k = 1; k <= T; ++k)
    for (std::size_t a = 0; a < N; ++a) {
      double d = 0.0;
      if (rts.alive(a, k)) {
        double g = rts.G(a, k - 1);
        d = tm.delta(a, k) / (g * g) + phi(a, k) * rts.NG.delta(a, k);
      }
      r(a, k) = r(a, k - 1) + d;
    }
  return r;
}

Representation decompose_G_martingale(const Process& M_G, const RandomTimeStructure& rts, double tol) {
  const std::size_t N = rts.atoms(), T = rts.horizon();
  if (M_G.atoms() != N || M_G.horizon() != T) throw Error(ErrorKind::input, "table has the wrong shape");
  if (!is_adapted(M_G, rts.Gf, 1e-12)) throw Error(ErrorKind::input, "table is not adapted to the enlarged filtration");
  auto c = classify(M_G, rts.Gf, rts.P(), tol);
  if (c.verdict != Verdict::martingale)
    throw Error(ErrorKind::contract, fmt::format("input is not a G-martingale: residual {:.17g} at time {}",
                                                 c.max_residual, c.worst_time));
  Representation rep;
  rep.M_F = Process(N, T);
  rep.phi = Process(N, T);
  rep.phi_determined = Process(N, T);
  const auto& F = rts.F();
  for (std::size_t k = 1; k <= T; ++k) {
    const Partition& cells = F.at(k);
    for (std::size_t b = 0; b < cells.block_count(); ++b) {
      const auto& mem = cells.members(b);
      const std::size_t a0 = mem.front();
      const double gprev = rts.G(a0, k - 1), gt = rts.Gtilde(a0, k);
      double x = 0.0, phi = 0.0, det = 0.0;
      bool has_eq = false, has_gt = false;
      double y_eq = 0.0, y_gt = 0.0;
      for (std::size_t a : mem) {
        if (!rts.alive(a, k)) continue;
        if (rts.tau[a] == static_cast<int>(k)) {
          has_eq = true;
          y_eq = M_G.delta(a, k);
        } else {
          has_gt = true;
          y_gt = M_G.delta(a, k);
        }
      }
      if ((has_eq || has_gt) && gprev <= 0.0)
        throw Error(ErrorKind::structural, fmt::format("singular local system at time {} (outcome '{}')", k, rts.space.ids()[a0]));
      if (gt > 0.0) {
        double L;
        if (has_eq && has_gt) {
          double q = rts.pdeath(a0, k) / gt;
          phi = y_eq - y_gt;
          L = y_gt + phi * q;
          det = 1.0;
        } else {
          L = has_eq ? y_eq : y_gt;
        }
        x = gt * gprev * L;
      }
      for (std::size_t a : mem) {
        rep.M_F(a, k) = rep.M_F(a, k - 1) + x;
        rep.phi(a, k) = phi;
        rep.phi_determined(a, k) = det;
      }
    }
  }
  rep.reassembled = reassemble(M_G, rep.M_F, rep.phi, rts);
  rep.residual = rep.reassembled.max_abs_diff(M_G.stopped(rts.tau));
  return rep;
}

MultiplicativeExtraction extract_multiplicative(const Process& Z_G, const RandomTimeStructure& rts) {
  const std::size_t N = rts.atoms(), T = rts.horizon();
  Process Y = Z_G.times(survival_exponential(rts));
  MultiplicativeExtraction r;
  r.Z_F = Process(N, T);
  r.phi_o = Process(N, T);
  r.phi_pr = Process(N, T);
  r.Z_F_determined = Process(N, T, 1.0);
  r.phi_o_determined = Process(N, T);
  const auto& F = rts.F();
  for (std::size_t b = 0; b < F.at(0).block_count(); ++b)
    for (std::size_t a : F.at(0).members(b)) r.Z_F(a, 0) = Z_G(F.at(0).members(b).front(), 0);
  for (std::size_t k = 1; k <= T; ++k) {
    const Partition& cells = F.at(k);
    for (std::size_t b = 0; b < cells.block_count(); ++b) {
      const auto& mem = cells.members(b);
      const std::size_t a0 = mem.front();
      bool has_eq = false, has_gt = false;
      double r_eq = 0.0, r_gt = 0.0;
      for (std::size_t a : mem) {
        if (!rts.alive(a, k)) continue;
        double ratio = Y(a, k) / Y(a, k - 1);
        if (rts.tau[a] == static_cast<int>(k)) {
          has_eq = true;
          r_eq = ratio;
        } else {
          has_gt = true;
          r_gt = ratio;
        }
      }
      double z = 1.0, phi = 0.0, zdet = 1.0, pdet = 0.0;
      const double gt = rts.Gtilde(a0, k);
      if (has_eq && has_gt) {
        z = (rts.pdeath(a0, k) * r_eq + rts.G(a0, k) * r_gt) / gt;
        phi = (r_eq - r_gt) / z;
        pdet = 1.0;
      } else if (has_eq || has_gt) {
        z = has_eq ? r_eq : r_gt;
      } else {
        zdet = 0.0;
      }
      for (std::size_t a : mem) {
        r.Z_F(a, k) = r.Z_F(a, k - 1) * z;
        r.phi_o(a, k) = phi;
        r.Z_F_determined(a, k) = zdet;
        r.phi_o_determined(a, k) = pdet;
      }
    }
  }
  return r;
}

PayoffRepresentation represent_h(const Process& h, const RandomTimeStructure& rts) {
  const std::size_t N = rts.atoms(), T = rts.horizon();
  const auto& F = rts.F();
  const auto& P = rts.P();
  if (h.atoms() != N || h.horizon() != T) throw Error(ErrorKind::input, "payoff has the wrong shape");
  if (!is_adapted(h, F, 1e-12)) throw Error(ErrorKind::contract, "payoff is not F-optional");
  PayoffRepresentation r;
  r.h = h;
  Process hD = stieltjes_integral(h, rts.DoF);
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t n = 0; n <= T; ++n) hD(a, n) += h(a, 0) * rts.DoF(a, 0);
  std::vector<double> total(hD.at(T).begin(), hD.at(T).end());
  r.M_h = Process(N, T);
  for (std::size_t n = 0; n <= T; ++n) {
    auto e = cond_expect(total, F.at(n), P);
    std::copy(e.begin(), e.end(), r.M_h.at(n).begin());
  }
  r.Y_h = r.M_h - hD;
  r.J = Process(N, T);
  for (std::size_t n = 0; n <= T; ++n)
    for (std::size_t a = 0; a < N; ++a) {
      double g = rts.G(a, n);
      if (g > 0.0) r.J(a, n) = r.Y_h(a, n) / g;
    }
  for (std::size_t n = 0; n <= T; ++n)
    for (std::size_t b = 0; b < F.at(n).block_count(); ++b) {
      std::size_t a = F.at(n).members(b).front();
      if (rts.G(a, n) == 0.0) r.G_zero.push_back({n, a});
    }

  Process tMh = transform_T(r.M_h, rts);
  Process tm = transform_T(rts.m, rts);
  r.H = Process(N, T);
  for (std::size_t a = 0; a < N; ++a) r.H(a, 0) = rts.tau[a] == 0 ? h(a, 0) : r.J(a, 0);
  for (std::size_t k = 1; k <= T; ++k)
    for (std::size_t a = 0; a < N; ++a) {
      double d = 0.0;
      if (rts.alive(a, k)) {
        double g = rts.G(a, k - 1);
        d = (tMh.delta(a, k) - r.J(a, k - 1) * tm.delta(a, k)) / g + (h(a, k) - r.J(a, k)) * rts.NG.delta(a, k);
      }
      r.H(a, k) = r.H(a, k - 1) + d;
    }

  std::vector<double> h_tau(N);
  for (std::size_t a = 0; a < N; ++a) h_tau[a] = h(a, static_cast<std::size_t>(rts.tau[a]));
  r.H_direct = Process(N, T);
  for (std::size_t n = 0; n <= T; ++n) {
    auto e = cond_expect(h_tau, rts.Gf.at(n), P);
    std::copy(e.begin(), e.end(), r.H_direct.at(n).begin());
  }
  r.residual = r.H.max_abs_diff(r.H_direct);
  return r;
}

Split split_at(const Process& Z, std::span<const int> sigma, const Filtration& H) {
  const std::size_t N = Z.atoms(), T = Z.horizon();
  if (sigma.size() != N) throw Error(ErrorKind::input, "sigma must have one entry per outcome");
  for (std::size_t n = 0; n <= T; ++n) {
    std::vector<double> ind(N);
    for (std::size_t a = 0; a < N; ++a) ind[a] = sigma[a] <= static_cast<int>(n) ? 1.0 : 0.0;
    if (!is_measurable(ind, H.at(n))) throw Error(ErrorKind::contract, fmt::format("sigma is not a stopping time at {}", n));
  }
  for (std::size_t n = 0; n < T; ++n)
    for (std::size_t a = 0; a < N; ++a)
      if (!(Z(a, n) > 0.0)) throw Error(ErrorKind::contract, "Z must be positive");
  Split s;
  s.K = Process(N, T);
  for (std::size_t n = 1; n <= T; ++n)
    for (std::size_t a = 0; a < N; ++a) s.K(a, n) = s.K(a, n - 1) + Z.delta(a, n) / Z(a, n - 1);
  std::vector<int> clipped(sigma.begin(), sigma.end());
  for (int& c : clipped) c = std::clamp(c, 0, static_cast<int>(T));
  s.K1 = s.K.stopped(clipped);
  s.K2 = s.K - s.K1;
  s.product_residual = stochastic_exponential(s.K1).times(stochastic_exponential(s.K2)).max_abs_diff(stochastic_exponential(s.K));
  Process br = bracket(s.K1, s.K2);
  for (double v : br.raw()) s.bracket_max = std::max(s.bracket_max, std::abs(v));
  return s;
}

}  // namespace rhd
