#include "rhd/enlargement.hpp"

#include <cmath>

#include <fmt/format.h>

namespace rhd {

namespace {

constexpr double kInvariantTol = 1e-9;

Process indicator(const std::vector<int>& tau, std::size_t T, bool (*pred)(int, int)) {
  Process r(tau.size(), T);
  for (std::size_t n = 0; n <= T; ++n)
    for (std::size_t a = 0; a < tau.size(); ++a) r(a, n) = pred(tau[a], static_cast<int>(n)) ? 1.0 : 0.0;
  return r;
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::structural, fmt::format("survival invariant failed: {}", what));
}

void require_martingale(const Process& M, const Filtration& f, const Measure& P, double tol) {
  if (!is_adapted(M, f, tol)) throw Error(ErrorKind::contract, "input process is not F-adapted");
  auto c = classify(M, f, P, tol);
  if (c.verdict != Verdict::martingale)
    throw Error(ErrorKind::contract,
                fmt::format("input is not an F-martingale: residual {:.17g} at time {}", c.max_residual, c.worst_time));
}

}  // namespace

Filtration enlarge(const FiniteFilteredSpace& space, std::span<const int> tau) {
  std::vector<Partition> chain;
  const std::size_t T = space.horizon();
  for (std::size_t n = 0; n <= T; ++n) {
    std::vector<int> level(tau.size());
    for (std::size_t a = 0; a < tau.size(); ++a) level[a] = std::min(tau[a], static_cast<int>(n) + 1);
    chain.push_back(space.F().at(n).meet(Partition(level)));
  }
  return Filtration(std::move(chain));
}

RandomTimeStructure build_survival(const FiniteFilteredSpace& space, std::vector<int> tau) {
  const std::size_t N = space.atoms(), T = space.horizon();
  if (tau.size() != N) throw Error(ErrorKind::input, "tau must have one entry per outcome");
  for (std::size_t a = 0; a < N; ++a)
    if (tau[a] < 0 || tau[a] > static_cast<int>(T))
      throw Error(ErrorKind::input, fmt::format("tau of outcome '{}' is outside 0..{}", space.ids()[a], T));

  RandomTimeStructure r;
  r.space = space;
  r.tau = std::move(tau);
  const auto& F = space.F();
  const auto& P = space.P();

  r.D = indicator(r.tau, T, [](int t, int n) { return t <= n; });
  r.G = project(indicator(r.tau, T, [](int t, int n) { return t > n; }), F, P, Projection::optional);
  r.Gtilde = project(indicator(r.tau, T, [](int t, int n) { return t >= n; }), F, P, Projection::optional);
  r.pdeath = project(indicator(r.tau, T, [](int t, int n) { return t == n; }), F, P, Projection::optional);
  r.Gminus = Process(N, T, 1.0);
  for (std::size_t n = 1; n <= T; ++n)
    for (std::size_t a = 0; a < N; ++a) r.Gminus(a, n) = r.G(a, n - 1);
  r.DoF = dual_projection(r.D, F, P, Projection::optional);
  r.DpF = dual_projection(r.D, F, P, Projection::predictable);
  r.m = r.G + r.DoF;
  r.Gf = enlarge(space, r.tau);
  r.NG = build_NG(r);
  r.Zbar = zbar(r);

  for (std::size_t n = 0; n <= T; ++n) {
    for (std::size_t b = 0; b < F.at(n).block_count(); ++b) {
      std::size_t a = F.at(n).members(b).front();
      if (n < T && r.G(a, n) == 0.0) r.positivity.G_zero_before_T.push_back({n, a});
      if (n >= 1 && r.Gtilde(a, n) == 0.0 && r.G(a, n - 1) > 0.0) r.positivity.zero_cells.push_back({n, a});
    }
  }

  // G_n + sum_{k<=n} P(tau=k | F_n) = 1
  for (std::size_t n = 0; n <= T; ++n) {
    std::vector<double> dead(N);
    for (std::size_t a = 0; a < N; ++a) dead[a] = r.D(a, n);
    auto pd = cond_expect(dead, F.at(n), P);
    for (std::size_t a = 0; a < N; ++a) {
      require(std::abs(r.G(a, n) + pd[a] - 1.0) <= kInvariantTol, "G + P(tau <= n | F_n) = 1");
      require(r.pdeath(a, n) >= 0.0 && std::abs(r.Gtilde(a, n) - r.G(a, n) - r.pdeath(a, n)) <= kInvariantTol,
              "Gtilde - G = P(tau = n | F_n)");
    }
  }
  for (std::size_t a = 0; a < N; ++a) require(r.G(a, T) == 0.0, "G_T = 0");
  require(classify(r.m, F, P, kInvariantTol).verdict == Verdict::martingale, "m is an F-martingale");
  require(classify(r.NG, r.Gf, P, kInvariantTol).verdict == Verdict::martingale, "N^G is a G-martingale");
  require(classify(r.Zbar, F, P, kInvariantTol).verdict == Verdict::martingale, "Zbar is an F-martingale");
  return r;
}

Process transform_T(const Process& M, const RandomTimeStructure& rts, double tol) {
  require_martingale(M, rts.F(), rts.P(), tol);
  const std::size_t N = rts.atoms(), T = rts.horizon();
  Process r(N, T);
  for (std::size_t a = 0; a < N; ++a) r(a, 0) = M(a, 0);
  std::vector<double> lost(N);
  for (std::size_t k = 1; k <= T; ++k) {
    for (std::size_t a = 0; a < N; ++a) lost[a] = rts.Gtilde(a, k) == 0.0 ? M.delta(a, k) : 0.0;
    auto corr = cond_expect(lost, rts.F().at(k - 1), rts.P());
    for (std::size_t a = 0; a < N; ++a) {
      double d = 0.0;
      if (rts.alive(a, k)) {
        d = corr[a];
        if (rts.Gtilde(a, k) > 0.0) d += rts.G(a, k - 1) / rts.Gtilde(a, k) * M.delta(a, k);
      }
      r(a, k) = r(a, k - 1) + d;
    }
  }
  return r;
}

Process transform_predictable(const Process& M, const RandomTimeStructure& rts, double tol) {
  require_martingale(M, rts.F(), rts.P(), tol);
  const std::size_t N = rts.atoms(), T = rts.horizon();
  Process ab = angle_bracket(M, rts.m, rts.F(), rts.P());
  Process r(N, T);
  for (std::size_t a = 0; a < N; ++a) r(a, 0) = M(a, 0);
  for (std::size_t k = 1; k <= T; ++k)
    for (std::size_t a = 0; a < N; ++a) {
      double d = 0.0;
      if (rts.alive(a, k)) {
        double g = rts.G(a, k - 1);
        if (g <= 0.0) throw Error(ErrorKind::structural, fmt::format("G_{} vanishes on a cell meeting {{tau >= {}}} (atom {})", k - 1, k, a));
        d = M.delta(a, k) - ab.delta(a, k) / g;
      }
      r(a, k) = r(a, k - 1) + d;
    }
  return r;
}

Process compensate_D(const RandomTimeStructure& rts) {
  const std::size_t N = rts.atoms(), T = rts.horizon();
  Process r(N, T);
  for (std::size_t a = 0; a < N; ++a) r(a, 0) = rts.D(a, 0);
  for (std::size_t k = 1; k <= T; ++k)
    for (std::size_t a = 0; a < N; ++a) {
      double d = rts.D.delta(a, k);
      if (rts.alive(a, k)) {
        double g = rts.G(a, k - 1);
        if (g <= 0.0) throw Error(ErrorKind::structural, fmt::format("G_{} vanishes on a cell meeting {{tau >= {}}} (atom {})", k - 1, k, a));
        d -= rts.DpF.delta(a, k) / g;
      }
      r(a, k) = r(a, k - 1) + d;
    }
  return r;
}

namespace {

Process ng_with_numerator(const RandomTimeStructure& rts, const Process& numerator) {
  const std::size_t N = rts.atoms(), T = rts.horizon();
  Process r(N, T);
  for (std::size_t a = 0; a < N; ++a) r(a, 0) = rts.D(a, 0);
  for (std::size_t k = 1; k <= T; ++k)
    for (std::size_t a = 0; a < N; ++a) {
      double d = rts.D.delta(a, k);
      if (rts.alive(a, k)) {
        double gt = rts.Gtilde(a, k);
        if (gt <= 0.0) throw Error(ErrorKind::structural, fmt::format("Gtilde_{} vanishes on a cell meeting {{tau >= {}}} (atom {})", k, k, a));
        d -= numerator(a, k) / gt;
      }
      r(a, k) = r(a, k - 1) + d;
    }
  return r;
}

}  // namespace

Process build_NG(const RandomTimeStructure& rts) { return ng_with_numerator(rts, rts.pdeath); }

Process ng_lagged(const RandomTimeStructure& rts) {
  const std::size_t N = rts.atoms(), T = rts.horizon();
  Process num(N, T);
  for (std::size_t k = 1; k <= T; ++k) {
    std::vector<double> x(N);
    for (std::size_t a = 0; a < N; ++a) x[a] = rts.tau[a] == static_cast<int>(k) ? 1.0 : 0.0;
    auto e = cond_expect(x, rts.F().at(k - 1), rts.P());
    std::copy(e.begin(), e.end(), num.at(k).begin());
  }
  return ng_with_numerator(rts, num);
}

Process zbar(const RandomTimeStructure& rts) {
  const std::size_t N = rts.atoms(), T = rts.horizon();
  Process z(N, T, 1.0);
  for (std::size_t k = 1; k <= T; ++k)
    for (std::size_t a = 0; a < N; ++a) {
      double g = rts.G(a, k - 1);
      z(a, k) = z(a, k - 1) * (g > 0.0 ? rts.Gtilde(a, k) / g : 1.0);
    }
  return z;
}

Measure qtilde(const RandomTimeStructure& rts) {
  return change_measure(rts.P(), rts.Zbar.at(rts.horizon()), 1e-12);
}

Process survival_integrand(const RandomTimeStructure& rts) {
  const std::size_t N = rts.atoms(), T = rts.horizon();
  Process r(N, T);
  for (std::size_t k = 1; k <= T; ++k)
    for (std::size_t a = 0; a < N; ++a) {
      double g = rts.G(a, k - 1);
      if (rts.alive(a, k) && g > 0.0) r(a, k) = 1.0 / g;
    }
  return r;
}

Process g_compensator_stopped(const Process& V, const RandomTimeStructure& rts) {
  const std::size_t N = rts.atoms(), T = rts.horizon();
  Process weighted(N, T);
  for (std::size_t k = 1; k <= T; ++k)
    for (std::size_t a = 0; a < N; ++a)
      weighted(a, k) = weighted(a, k - 1) + rts.Gtilde(a, k) * V.delta(a, k);
  Process comp = dual_projection(weighted, rts.F(), rts.P(), Projection::predictable);
  return stieltjes_integral(survival_integrand(rts), comp);
}

}  // namespace rhd
