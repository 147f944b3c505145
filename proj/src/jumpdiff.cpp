#include "rhd/jumpdiff.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace rhd::jd {

namespace {

// Neumaier-compensated running sum.
struct Sum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

double survival_core(double beta, double u) { return std::exp(-beta * u) * (1.0 + beta * u); }

// int_0^u beta s / (1 + beta s) ds
double hazard_integral(double beta, double u) { return u - std::log1p(beta * u) / beta; }

double u_tau(double t, const Path& p) { return std::min(t, p.tau); }

bool T1_jump_by(double t, const Path& p) { return p.tau_at_T1 && p.T1 <= t; }

double W_at(std::size_t obs, double t, const Path& p) { return t < p.tau ? p.W[obs] : p.W_tau; }

void input_check(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::input, msg);
}

}  // namespace

std::size_t Scenario::steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }

void Scenario::validate() {
  input_check(std::isfinite(sigma) && sigma > 0.0, "sigma must be > 0");
  input_check(std::isfinite(zeta) && zeta > -1.0, "zeta must be > -1");
  input_check(std::isfinite(mu), "mu must be finite");
  input_check(std::isfinite(lambda) && lambda > 0.0, "lambda must be > 0");
  input_check(a > 0.0 && a < 1.0, "a must lie in (0, 1)");
  input_check(std::isfinite(S0) && S0 > 0.0, "S0 must be > 0");
  input_check(std::isfinite(horizon) && horizon > 0.0, "horizon must be > 0");
  input_check(std::isfinite(dt) && dt > 0.0 && dt <= horizon, "dt must lie in (0, horizon]");
  input_check(std::abs(static_cast<double>(steps()) * dt - horizon) <= 1e-9 * horizon, "horizon must be a multiple of dt");
  input_check(n_paths >= 1, "n_paths must be >= 1");
  input_check(std::isfinite(psi2) && psi2 > 0.0, "psi2 must be > 0");
  input_check(std::isfinite(phi_o) && std::isfinite(phi_pr), "phi_o and phi_pr must be finite");
  if (obs_times.empty()) obs_times = {0.0, 0.25 * horizon, 0.5 * horizon, 0.75 * horizon, horizon};
  for (double t : obs_times) {
    input_check(t >= 0.0 && t <= horizon, fmt::format("observation time {} outside [0, horizon]", t));
    input_check(std::abs(t / dt - std::round(t / dt)) <= 1e-9, fmt::format("observation time {} is not a grid point", t));
  }
  input_check(std::is_sorted(obs_times.begin(), obs_times.end()), "observation times must be sorted");
  csv_paths = std::min(csv_paths, n_paths);
}

PathBundle simulate(Scenario sc, unsigned workers) {
  sc.validate();
  PathBundle b;
  b.scenario = sc;
  const std::size_t n = sc.n_paths, steps = sc.steps();
  const double sq = std::sqrt(sc.dt);
  std::vector<std::size_t> obs_idx;
  for (double t : sc.obs_times) obs_idx.push_back(static_cast<std::size_t>(std::llround(t / sc.dt)));
  b.paths.resize(n);
  b.grids.resize(sc.csv_paths);

  auto one = [&](std::size_t i) {
    const std::uint64_t s = sc.seed;
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32), static_cast<std::uint32_t>(i),
                      static_cast<std::uint32_t>(static_cast<std::uint64_t>(i) >> 32)};
    std::mt19937_64 rng(seq);
    std::exponential_distribution<double> gap(sc.lambda);
    std::normal_distribution<double> normal;
    Path& p = b.paths[i];
    std::vector<double> jumps;
    double t = 0.0;
    do {
      t += gap(rng);
      jumps.push_back(t);
    } while (t <= sc.horizon || jumps.size() < 2);
    p.T1 = jumps[0];
    p.T2 = jumps[1];
    p.tau_at_T1 = p.T1 <= sc.a * p.T2;
    p.tau = p.tau_at_T1 ? p.T1 : sc.a * p.T2;

    const bool keep = i < sc.csv_paths;
    std::vector<double> grid;
    if (keep) grid.assign(steps + 1, 0.0);
    p.W.assign(obs_idx.size(), 0.0);
    p.N.assign(obs_idx.size(), 0.0);
    const std::size_t tau_cell = p.tau < sc.horizon ? static_cast<std::size_t>(p.tau / sc.dt) : steps;
    double w = 0.0, w_lo = 0.0, w_hi = 0.0;
    std::size_t next_obs = 0;
    while (next_obs < obs_idx.size() && obs_idx[next_obs] == 0) p.W[next_obs++] = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
      w += sq * normal(rng);
      if (keep) grid[k] = w;
      if (k == tau_cell) w_lo = w;
      if (k == tau_cell + 1) w_hi = w;
      while (next_obs < obs_idx.size() && obs_idx[next_obs] == k) p.W[next_obs++] = w;
    }
    const double z = normal(rng);
    if (p.tau <= sc.horizon) {
      if (tau_cell >= steps) {
        p.W_tau = w;
      } else {
        const double tl = static_cast<double>(tau_cell) * sc.dt, th = tl + sc.dt;
        p.W_tau = w_lo + (p.tau - tl) / sc.dt * (w_hi - w_lo) + std::sqrt(std::max(0.0, (p.tau - tl) * (th - p.tau) / sc.dt)) * z;
      }
    }
    for (std::size_t j = 0; j < obs_idx.size(); ++j)
      p.N[j] = static_cast<double>(std::upper_bound(jumps.begin(), jumps.end(), sc.obs_times[j]) - jumps.begin());
    if (keep) {
      GridPath& g = b.grids[i];
      g.index = i;
      g.W = std::move(grid);
      for (double j : jumps)
        if (j <= sc.horizon) g.jumps.push_back(j);
    }
  };

  unsigned nw = workers ? workers : std::max(1u, std::thread::hardware_concurrency());
  nw = static_cast<unsigned>(std::min<std::size_t>(nw, n));
  if (nw <= 1) {
    for (std::size_t i = 0; i < n; ++i) one(i);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + nw - 1) / nw;
    for (unsigned w = 0; w < nw; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) one(i);
      });
    for (auto& th : pool) th.join();
  }
  return b;
}

double G(double beta, double t, double T1) { return t < T1 ? survival_core(beta, t) : 0.0; }

double Gtilde(double beta, double t, double T1) {
  if (t < T1) return survival_core(beta, t);
  return t == T1 ? std::exp(-beta * t) : 0.0;
}

double Gminus(double beta, double t, double T1) { return t <= T1 ? survival_core(beta, t) : 0.0; }

double m(double beta, double lambda, double t, double T1) {
  const double u = std::min(t, T1);
  double r = 1.0 + lambda * (1.0 - survival_core(beta, u)) / beta;
  if (T1 <= t) r -= beta * T1 * std::exp(-beta * T1);
  return r;
}

double DoF(double beta, double lambda, double t, double T1) {
  const double u = std::min(t, T1);
  double r = (beta + lambda) * (1.0 - survival_core(beta, u)) / beta;
  if (T1 <= t) r += std::exp(-beta * T1);
  return r;
}

DoFTrapezoid::DoFTrapezoid(double beta, double lambda, double dt, double horizon)
    : beta_(beta), lambda_(lambda), dt_(dt) {
  const std::size_t n = static_cast<std::size_t>(std::ceil(horizon / dt)) + 1;
  cum_.assign(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i)
    cum_[i] = cum_[i - 1] + 0.5 * dt * (integrand(static_cast<double>(i - 1) * dt) + integrand(static_cast<double>(i) * dt));
}

double DoFTrapezoid::integrand(double s) const { return (beta_ + lambda_) * beta_ * s * std::exp(-beta_ * s); }

double DoFTrapezoid::operator()(double t, double T1) const {
  const double u = std::min(t, T1);
  const std::size_t i = std::min(static_cast<std::size_t>(u / dt_), cum_.size() - 1);
  const double si = static_cast<double>(i) * dt_;
  double r = cum_[i] + 0.5 * (u - si) * (integrand(si) + integrand(u));
  if (T1 <= t) r += std::exp(-beta_ * T1);
  return r;
}

double NG(double beta, double lambda, double t, const Path& p) {
  double r = (!p.tau_at_T1 && p.tau <= t) ? 1.0 : 0.0;
  return r - (lambda + beta) * hazard_integral(beta, u_tau(t, p));
}

double S(const Scenario& sc, double t, double W, double N) {
  return sc.S0 * std::exp(sc.sigma * W - 0.5 * sc.sigma * sc.sigma * t + (sc.mu - sc.zeta * sc.lambda) * t) *
         std::pow(1.0 + sc.zeta, N);
}

double S_stopped(const Scenario& sc, std::size_t obs, const Path& p) {
  const double t = sc.obs_times[obs];
  if (t < p.tau) return S(sc, t, p.W[obs], p.N[obs]);
  return S(sc, p.tau, p.W_tau, p.tau_at_T1 ? 1.0 : 0.0);
}

double TW(const Scenario& sc, std::size_t obs, const Path& p) { return W_at(obs, sc.obs_times[obs], p); }

namespace {

double tnf_with(const Scenario& sc, std::size_t obs, const Path& p, double coeff_at_T1) {
  const double t = sc.obs_times[obs];
  const double u = u_tau(t, p);
  double r = -sc.lambda * u;
  if (T1_jump_by(t, p)) r += 1.0 + coeff_at_T1;
  return r;
}

}  // namespace

double TNF(const Scenario& sc, std::size_t obs, const Path& p) {
  return tnf_with(sc, obs, p, sc.beta() * p.T1);
}

double TNF_alternative(const Scenario& sc, std::size_t obs, const Path& p) {
  const double bt = sc.beta() * p.T1;
  return tnf_with(sc, obs, p, bt / (1.0 + bt));
}

double survival_exponential(double beta, double lambda, double t, double T1) {
  const double u = std::min(t, T1);
  double r = std::exp(lambda * hazard_integral(beta, u));
  if (T1 <= t) r /= 1.0 + beta * T1;
  return r;
}

double solve_drift(const Scenario& sc, double psi2) {
  if (!(psi2 > 0.0)) throw Error(ErrorKind::input, "psi2 must be > 0");
  return -(sc.mu + (psi2 - 1.0) * sc.zeta * sc.lambda) / sc.sigma;
}

void check_constraints(const PathBundle& b, const DeflatorSpec& d) {
  const Scenario& sc = b.scenario;
  if (!(d.psi2 > 0.0)) throw Error(ErrorKind::inadmissible, "psi2 must be > 0");
  if (!(d.phi_o > -1.0)) throw Error(ErrorKind::inadmissible, fmt::format("phi_o = {} violates -1 < phi_o before T1", d.phi_o));
  if (!(d.phi_pr > -1.0)) throw Error(ErrorKind::inadmissible, fmt::format("phi_pr = {} violates phi_pr > -1 at tau", d.phi_pr));
  const double drift = sc.mu + d.psi1 * sc.sigma + (d.psi2 - 1.0) * sc.zeta * sc.lambda;
  if (std::abs(drift) > 1e-12 * std::max(1.0, std::abs(sc.mu)))
    throw Error(ErrorKind::inadmissible, fmt::format("drift condition violated: mu + psi1 sigma + (psi2 - 1) zeta lambda = {:.17g}", drift));
  for (std::size_t i = 0; i < b.paths.size(); ++i) {
    const Path& p = b.paths[i];
    if (p.T1 <= sc.horizon && !(d.phi_o < d.psi2 * (1.0 + sc.beta() * p.T1)))
      throw Error(ErrorKind::inadmissible, fmt::format("path {}: phi_o violates phi_o(T1) < psi2 (1 + beta T1)", i));
  }
}

double deflator(const Scenario& sc, const DeflatorSpec& d, std::size_t obs, const Path& p) {
  const double t = sc.obs_times[obs], beta = sc.beta(), lam = sc.lambda;
  const double u = u_tau(t, p);
  double eL = std::exp(d.psi1 * W_at(obs, t, p) - 0.5 * d.psi1 * d.psi1 * u - lam * d.psi2 * u + lam * std::log1p(beta * u) / beta);
  if (T1_jump_by(t, p)) eL *= d.psi2 * (1.0 + beta * p.T1);
  double eN = std::exp(-d.phi_o * (lam + beta) * hazard_integral(beta, u));
  if (!p.tau_at_T1 && p.tau <= t) eN *= 1.0 + d.phi_o;
  double eD = p.tau <= t ? 1.0 + d.phi_pr : 1.0;
  return eL * eN * eD;
}

double f_density(const Scenario& sc, const DeflatorSpec& d, std::size_t obs, const Path& p) {
  const double t = sc.obs_times[obs];
  return std::exp(d.psi1 * p.W[obs] - 0.5 * d.psi1 * d.psi1 * t - (d.psi2 - 1.0) * sc.lambda * t) * std::pow(d.psi2, p.N[obs]);
}

double deflator_cor33(const Scenario& sc, const DeflatorSpec& d, std::size_t obs, const Path& p) {
  const double t = sc.obs_times[obs];
  const double u = u_tau(t, p);
  const double n_u = T1_jump_by(t, p) ? 1.0 : 0.0;
  double eK = std::exp(d.psi1 * W_at(obs, t, p) - 0.5 * d.psi1 * d.psi1 * u - (d.psi2 - 1.0) * sc.lambda * u) * std::pow(d.psi2, n_u);
  double se = std::exp(sc.lambda * hazard_integral(sc.beta(), u));
  if (n_u > 0.0) se /= 1.0 + sc.beta() * p.T1;
  return eK / se;
}

double wealth_stopped(const Scenario& sc, double pi, std::size_t obs, const Path& p) {
  const double t = sc.obs_times[obs];
  const double u = u_tau(t, p);
  const double n_u = t < p.tau ? p.N[obs] : (p.tau_at_T1 ? 1.0 : 0.0);
  const double ps = pi * sc.sigma;
  return std::exp(ps * W_at(obs, t, p) - 0.5 * ps * ps * u + pi * (sc.mu - sc.zeta * sc.lambda) * u) *
         std::pow(1.0 + pi * sc.zeta, n_u);
}

McStats mc_test(const std::vector<double>& times, const std::vector<std::vector<double>>& values, double x0, Null null,
                const std::vector<std::vector<std::vector<double>>>* features, double threshold) {
  McStats r;
  const std::size_t n = values.empty() ? 0 : values.front().size();
  if (n < 1000) r.warning = fmt::format("only {} paths: statistical power too low", n);
  for (std::size_t i = 0; i < times.size(); ++i) {
    Sum s;
    for (double v : values[i]) s.add(v);
    const double mean = s.value() / static_cast<double>(n);
    Sum q;
    for (double v : values[i]) q.add((v - mean) * (v - mean));
    const double var = n > 1 ? q.value() / static_cast<double>(n - 1) : 0.0;
    TimeStat ts{times[i], mean, std::sqrt(var / static_cast<double>(n)), 0.0};
    const double diff = mean - x0;
    if (ts.se > 0.0) ts.z = diff / ts.se;
    else ts.z = std::abs(diff) <= 1e-12 * std::max(1.0, std::abs(x0)) ? 0.0 : std::copysign(INFINITY, diff);
    const double stat = null == Null::martingale ? std::abs(ts.z) : ts.z;
    r.max_z = std::max(r.max_z, stat);
    r.times.push_back(ts);
  }
  r.rejected = r.max_z > threshold;

  if (features) {
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (times[i - 1] <= 0.0) continue;
      const auto& f = (*features)[i - 1];
      const Eigen::Index p = static_cast<Eigen::Index>(f.front().size()) + 1;
      Eigen::MatrixXd X(static_cast<Eigen::Index>(n), p);
      Eigen::VectorXd y(static_cast<Eigen::Index>(n));
      for (std::size_t k = 0; k < n; ++k) {
        const auto row = static_cast<Eigen::Index>(k);
        X(row, 0) = 1.0;
        for (Eigen::Index j = 1; j < p; ++j) X(row, j) = f[k][static_cast<std::size_t>(j - 1)];
        y(row) = values[i][k] - values[i - 1][k];
      }
      Eigen::MatrixXd XtX = X.transpose() * X;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(XtX);
      std::vector<double> zs(static_cast<std::size_t>(p), 0.0);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive() && std::abs(ldlt.vectorD().minCoeff()) > 1e-12 * XtX.norm()) {
        Eigen::VectorXd coef = ldlt.solve(X.transpose() * y);
        Eigen::VectorXd res = y - X * coef;
        const double s2 = res.squaredNorm() / static_cast<double>(static_cast<Eigen::Index>(n) - p);
        Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
        for (Eigen::Index j = 0; j < p; ++j) {
          const double se = std::sqrt(s2 * inv(j, j));
          zs[static_cast<std::size_t>(j)] = se > 0.0 ? coef(j) / se : 0.0;
        }
      }
      r.regression_z.push_back(std::move(zs));
    }
  }
  return r;
}

Report run(const PathBundle& b) {
  const Scenario& sc = b.scenario;
  Report rep;
  rep.scenario = sc;
  const double beta = sc.beta();
  DeflatorSpec d{solve_drift(sc, sc.psi2), sc.psi2, sc.phi_o, sc.phi_pr};
  check_constraints(b, d);
  rep.deflator = d;

  const std::size_t n = b.paths.size(), nt = sc.obs_times.size();
  if (n < 1000) rep.warnings.push_back(fmt::format("only {} paths: statistical power too low", n));

  std::vector<std::vector<std::vector<double>>> features(nt, std::vector<std::vector<double>>(n));
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const Path& p = b.paths[k];
      const double t = sc.obs_times[i];
      features[i][k] = {S(sc, t, p.W[i], p.N[i]), p.N[i], t < p.T1 ? 1.0 : 0.0};
    }

  auto add = [&](std::string name, Null null, double x0, bool expect_reject, auto&& f) {
    std::vector<std::vector<double>> v(nt, std::vector<double>(n));
    for (std::size_t i = 0; i < nt; ++i)
      for (std::size_t k = 0; k < n; ++k) v[i][k] = f(i, b.paths[k]);
    Check c;
    c.name = std::move(name);
    c.null = null;
    c.x0 = x0;
    c.expect_reject = expect_reject;
    c.stats = mc_test(sc.obs_times, v, x0, null, &features);
    rep.checks.push_back(std::move(c));
  };
  auto t_of = [&](std::size_t i) { return sc.obs_times[i]; };

  add("m", Null::martingale, 1.0, false, [&](std::size_t i, const Path& p) { return m(beta, sc.lambda, t_of(i), p.T1); });
  add("I{tau > t} - G", Null::martingale, 0.0, false,
      [&](std::size_t i, const Path& p) { return (p.tau > t_of(i) ? 1.0 : 0.0) - G(beta, t_of(i), p.T1); });
  add("T(W)", Null::martingale, 0.0, false, [&](std::size_t i, const Path& p) { return TW(sc, i, p); });
  add("T(N^F)", Null::martingale, 0.0, false, [&](std::size_t i, const Path& p) { return TNF(sc, i, p); });
  add("N^G", Null::martingale, 0.0, false, [&](std::size_t i, const Path& p) { return NG(beta, sc.lambda, t_of(i), p); });
  add("E(G_-^{-1} . m)", Null::martingale, 1.0, false,
      [&](std::size_t i, const Path& p) { return survival_exponential(beta, sc.lambda, t_of(i), p.T1); });
  add("F-deflated price", Null::martingale, sc.S0, false,
      [&](std::size_t i, const Path& p) { return f_density(sc, d, i, p) * S(sc, t_of(i), p.W[i], p.N[i]); });
  add("survival-corrected deflator", Null::martingale, 1.0, false,
      [&](std::size_t i, const Path& p) { return deflator_cor33(sc, d, i, p); });
  add("survival-corrected deflated price", Null::martingale, sc.S0, false,
      [&](std::size_t i, const Path& p) { return deflator_cor33(sc, d, i, p) * S_stopped(sc, i, p); });
  add("G-deflator", Null::martingale, 1.0, false, [&](std::size_t i, const Path& p) { return deflator(sc, d, i, p); });
  add("G-deflated price", Null::martingale, sc.S0, false,
      [&](std::size_t i, const Path& p) { return deflator(sc, d, i, p) * S_stopped(sc, i, p); });
  for (double pi : {-1.0, 1.0, 2.0}) {
    if (!(1.0 + pi * sc.zeta > 0.0)) continue;
    add(fmt::format("G-deflated wealth pi={}", pi), Null::supermartingale, 1.0, false,
        [&](std::size_t i, const Path& p) { return deflator(sc, d, i, p) * wealth_stopped(sc, pi, i, p); });
  }
  if (sc.mu != 0.0) {
    DeflatorSpec off = d;
    off.psi1 += 0.1 * std::abs(sc.mu) / sc.sigma;
    add("F-deflated price, psi1 shifted by 0.1|mu|/sigma", Null::martingale, sc.S0, true,
        [&](std::size_t i, const Path& p) { return f_density(sc, off, i, p) * S(sc, t_of(i), p.W[i], p.N[i]); });
  }
  add("T(N^F) with coefficient beta t/(1 + beta t)", Null::martingale, 0.0, true,
      [&](std::size_t i, const Path& p) { return TNF_alternative(sc, i, p); });

  DoFTrapezoid dof(beta, sc.lambda, sc.dt, sc.horizon);
  Sum jumps;
  for (const Path& p : b.paths) {
    if (p.tau > p.T1) rep.tau_before_T1 = false;
    auto resid = [&](double t) { return std::abs(m(beta, sc.lambda, t, p.T1) - G(beta, t, p.T1) - dof(t, p.T1)); };
    for (double t : sc.obs_times) rep.max_m_residual = std::max(rep.max_m_residual, resid(t));
    if (p.T1 <= sc.horizon) rep.max_m_residual = std::max(rep.max_m_residual, resid(p.T1));
    jumps.add(p.N.back());
  }
  rep.mean_jump_count = jumps.value() / static_cast<double>(n);

  rep.ok = rep.max_m_residual <= 5.0 * sc.dt && rep.tau_before_T1;
  for (const auto& c : rep.checks)
    if (!c.expect_reject && c.stats.rejected) rep.ok = false;
  return rep;
}

}  // namespace rhd::jd
