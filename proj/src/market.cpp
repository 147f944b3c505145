#include "rhd/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace rhd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_assets(const VectorProcess& S) {
  if (S.empty()) throw Error(ErrorKind::input, "market has no assets");
}

}  // namespace

Process wealth(const VectorProcess& phi, const VectorProcess& S, const Filtration& f) {
  require_assets(S);
  for (const auto& p : phi)
    if (!is_predictable(p, f)) throw Error(ErrorKind::contract, "strategy is not predictable");
  Process gain = stochastic_integral(phi, S, f);
  for (std::size_t n = 1; n <= gain.horizon(); ++n)
    for (std::size_t a = 0; a < gain.atoms(); ++a)
      if (!(1.0 + gain.delta(a, n) > 0.0))
        throw Error(ErrorKind::inadmissible, fmt::format("strategy inadmissible at time {}, atom {}: phi.dS = {:.17g}", n, a, gain.delta(a, n)));
  return stochastic_exponential(gain);
}

VectorProcess stopped(const VectorProcess& S, std::span<const int> sigma) {
  VectorProcess r;
  for (const auto& s : S) r.push_back(s.stopped(sigma));
  return r;
}

LmdReport verify_lmd(const Process& Z, const VectorProcess& S, const Filtration& f, const Measure& m, double tol) {
  require_assets(S);
  LmdReport r;
  r.positive = true;
  for (std::size_t n = 0; n <= Z.horizon(); ++n)
    for (std::size_t a = 0; a < Z.atoms(); ++a)
      if (m[a] > 0.0 && !(Z(a, n) > 0.0)) r.positive = false;
  auto c = classify(Z, f, m, tol);
  r.martingale_residual = c.max_residual;
  r.worst = {c.worst_time, c.worst_atom};
  std::vector<double> x(Z.atoms());
  for (const auto& s : S) {
    for (std::size_t n = 1; n <= Z.horizon(); ++n) {
      for (std::size_t a = 0; a < Z.atoms(); ++a) x[a] = Z(a, n) * s.delta(a, n);
      auto e = cond_expect(x, f.at(n - 1), m, Degenerate::zero);
      for (std::size_t a = 0; a < Z.atoms(); ++a)
        if (std::abs(e[a]) > r.price_residual) {
          r.price_residual = std::abs(e[a]);
          if (r.price_residual > r.martingale_residual) r.worst = {n, a};
        }
    }
  }
  r.ok = r.positive && r.martingale_residual <= tol && r.price_residual <= tol;
  return r;
}

namespace {

struct LpResult {
  double value = 0.0;  // max g.theta over {theta : a_i.theta >= -1}
  bool unbounded = false;
  Eigen::VectorXd theta;
};

// Rows are constraint vectors a_i (in R^r, full column rank r <= 3), g in span.
LpResult solve_reduced(const std::vector<Eigen::VectorXd>& rows, const Eigen::VectorXd& g, double tol) {
  const Eigen::Index r = g.size();
  LpResult best;
  const double gscale = std::max(1.0, g.norm());
  auto feasible_ray = [&](const Eigen::VectorXd& rho) {
    for (const auto& a : rows)
      if (a.dot(rho) < -1e-12 * a.norm()) return false;
    return true;
  };
  auto feasible_point = [&](const Eigen::VectorXd& eta) {
    for (const auto& a : rows)
      if (a.dot(eta) < -1.0 - 1e-9 * std::max(1.0, std::abs(a.dot(eta)))) return false;
    return true;
  };
  auto consider_ray = [&](Eigen::VectorXd rho) {
    double nr = rho.norm();
    if (nr <= 1e-14) return;
    rho /= nr;
    for (int sgn : {1, -1}) {
      Eigen::VectorXd d = sgn * rho;
      if (feasible_ray(d) && g.dot(d) > tol * gscale) {
        best.unbounded = true;
        best.value = kInf;
        best.theta = d;
      }
    }
  };

  if (r == 1) {
    double lo = -kInf, hi = kInf;
    for (const auto& a : rows) {
      if (a(0) > 0.0) lo = std::max(lo, -1.0 / a(0));
      else if (a(0) < 0.0) hi = std::min(hi, -1.0 / a(0));
    }
    double gv = g(0);
    best.theta = Eigen::VectorXd::Zero(1);
    if (gv > tol * gscale && hi == kInf) {
      best.unbounded = true;
      best.value = kInf;
      best.theta(0) = 1.0;
    } else if (gv < -tol * gscale && lo == -kInf) {
      best.unbounded = true;
      best.value = kInf;
      best.theta(0) = -1.0;
    } else {
      // linear on an interval containing 0: optimum at a finite endpoint or at 0
      best.value = 0.0;
      for (double e : {lo, hi})
        if (std::isfinite(e) && gv * e > best.value) {
          best.value = gv * e;
          best.theta(0) = e;
        }
    }
    return best;
  }

  const std::size_t m = rows.size();
  if (r == 2) {
    for (std::size_t i = 0; i < m; ++i) {
      Eigen::VectorXd perp(2);
      perp << -rows[i](1), rows[i](0);
      consider_ray(perp);
    }
  } else {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        Eigen::Vector3d c = Eigen::Vector3d(rows[i]).cross(Eigen::Vector3d(rows[j]));
        consider_ray(Eigen::VectorXd(c));
      }
  }
  if (best.unbounded) return best;

  best.value = -kInf;
  std::vector<std::size_t> idx(static_cast<std::size_t>(r));
  Eigen::MatrixXd A(r, r);
  auto try_vertex = [&]() {
    for (Eigen::Index i = 0; i < r; ++i) A.row(i) = rows[idx[static_cast<std::size_t>(i)]].transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.rank() < r) return;
    Eigen::VectorXd eta = lu.solve(Eigen::VectorXd::Constant(r, -1.0));
    if (!feasible_point(eta)) return;
    double v = g.dot(eta);
    if (v > best.value) {
      best.value = v;
      best.theta = eta;
    }
  };
  if (r == 2) {
    for (idx[0] = 0; idx[0] < m; ++idx[0])
      for (idx[1] = idx[0] + 1; idx[1] < m; ++idx[1]) try_vertex();
  } else {
    for (idx[0] = 0; idx[0] < m; ++idx[0])
      for (idx[1] = idx[0] + 1; idx[1] < m; ++idx[1])
        for (idx[2] = idx[1] + 1; idx[2] < m; ++idx[2]) try_vertex();
  }
  if (best.value == -kInf) {
    // pointed nonempty polyhedron always has a vertex; reaching here means numerical trouble
    throw Error(ErrorKind::structural, "node polytope has no vertex");
  }
  return best;
}

}  // namespace

DeflatorReport verify_deflator(const Process& Z, const VectorProcess& S, const Filtration& f, const Measure& m,
                               double tol) {
  require_assets(S);
  const std::size_t d = S.size();
  if (d > 3) throw Error(ErrorKind::unsupported, fmt::format("verify_deflator supports at most 3 assets, got {}", d));
  if (!is_adapted(Z, f, 1e-12)) throw Error(ErrorKind::contract, "deflator candidate is not adapted");

  DeflatorReport rep;
  for (std::size_t n = 0; n <= Z.horizon(); ++n)
    for (std::size_t a = 0; a < Z.atoms(); ++a)
      if (m[a] > 0.0 && !(Z(a, n) > 0.0)) rep.positive = false;

  rep.worst.excess = -kInf;
  for (std::size_t k = 1; k <= Z.horizon(); ++k) {
    const Partition& p = f.at(k - 1);
    for (std::size_t b = 0; b < p.block_count(); ++b) {
      const auto& mem = p.members(b);
      double mass = m.mass(mem);
      if (mass <= 0.0) continue;
      double c = 0.0;
      Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
      std::vector<Eigen::VectorXd> rows;
      for (std::size_t a : mem) {
        if (m[a] == 0.0) continue;
        double w = m[a] / mass;
        Eigen::VectorXd ds(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i) ds(static_cast<Eigen::Index>(i)) = S[i].delta(a, k);
        c += w * Z(a, k);
        g += w * Z(a, k) * ds;
        if (ds.squaredNorm() == 0.0) continue;
        bool dup = false;
        for (const auto& q : rows)
          if (q == ds) dup = true;
        if (!dup) rows.push_back(ds);
      }

      NodeLp node;
      node.time = k;
      node.atom = mem.front();
      node.z_prev = Z(mem.front(), k - 1);
      node.theta.assign(d, 0.0);
      if (rows.empty()) {
        node.sup = c;
      } else {
        Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < rows.size(); ++i) A.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
        svd.setThreshold(1e-12);
        const Eigen::Index r = svd.rank();
        Eigen::MatrixXd U = svd.matrixV().leftCols(r);
        std::vector<Eigen::VectorXd> reduced;
        for (const auto& row : rows) reduced.push_back(U.transpose() * row);
        LpResult lp = solve_reduced(reduced, U.transpose() * g, tol);
        Eigen::VectorXd theta = U * lp.theta;
        for (std::size_t i = 0; i < d; ++i) node.theta[i] = theta(static_cast<Eigen::Index>(i));
        node.unbounded = lp.unbounded;
        node.sup = lp.unbounded ? kInf : c + lp.value;
      }
      node.excess = node.sup - node.z_prev;
      bool pass = !node.unbounded && node.excess <= tol * std::max(1.0, std::abs(node.z_prev));
      if (!pass) rep.ok = false;
      if (node.excess > rep.worst.excess) rep.worst = node;
      rep.nodes.push_back(std::move(node));
    }
  }
  if (!rep.positive) rep.ok = false;
  return rep;
}

Process lift_strategy(const Process& phi_G, const RandomTimeStructure& rts) {
  if (!is_predictable(phi_G, rts.Gf)) throw Error(ErrorKind::contract, "strategy is not G-predictable");
  const std::size_t T = rts.horizon();
  Process r(rts.atoms(), T);
  for (std::size_t n = 0; n <= T; ++n) {
    const Partition& p = rts.F().predictable_at(n);
    for (std::size_t b = 0; b < p.block_count(); ++b) {
      double v = 0.0;
      for (std::size_t a : p.members(b))
        if (rts.alive(a, n)) {
          v = phi_G(a, n);
          break;
        }
      for (std::size_t a : p.members(b)) r(a, n) = v;
    }
  }
  return r;
}

}  // namespace rhd
