#pragma once
// Exact enumeration over a finite tree in rational arithmetic.

#include <functional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace oracle {

using Q = boost::multiprecision::cpp_rational;
using Table = std::vector<std::vector<Q>>;  // [time][atom]

struct Tree {
  std::vector<Q> p;
  std::vector<std::vector<int>> parts;  // [time][atom] block labels
  std::vector<int> tau;
  std::size_t T() const { return parts.size() - 1; }
  std::size_t N() const { return p.size(); }
};

inline Q cond(const Tree& t, std::size_t n, std::size_t a, const std::function<Q(std::size_t)>& x) {
  Q num = 0, den = 0;
  for (std::size_t b = 0; b < t.N(); ++b)
    if (t.parts[n][b] == t.parts[n][a]) {
      num += t.p[b] * x(b);
      den += t.p[b];
    }
  return den == 0 ? Q(0) : num / den;
}

struct Survival {
  Table G, Gt, pd, m, NG, Zbar;
  std::vector<Q> qtilde;
};

inline Table table(const Tree& t) { return Table(t.T() + 1, std::vector<Q>(t.N(), Q(0))); }

inline Survival survival(const Tree& t) {
  const std::size_t T = t.T(), N = t.N();
  Survival s{table(t), table(t), table(t), table(t), table(t), table(t), {}};
  for (std::size_t n = 0; n <= T; ++n)
    for (std::size_t a = 0; a < N; ++a) {
      const int ni = static_cast<int>(n);
      s.G[n][a] = cond(t, n, a, [&](std::size_t b) { return Q(t.tau[b] > ni ? 1 : 0); });
      s.Gt[n][a] = cond(t, n, a, [&](std::size_t b) { return Q(t.tau[b] >= ni ? 1 : 0); });
      s.pd[n][a] = cond(t, n, a, [&](std::size_t b) { return Q(t.tau[b] == ni ? 1 : 0); });
      Q dof = 0;
      for (std::size_t k = 0; k <= n; ++k) {
        const int ki = static_cast<int>(k);
        dof += cond(t, k, a, [&](std::size_t b) { return Q(t.tau[b] == ki ? 1 : 0); });
      }
      s.m[n][a] = s.G[n][a] + dof;
    }
  for (std::size_t a = 0; a < N; ++a) {
    s.NG[0][a] = t.tau[a] == 0 ? 1 : 0;
    s.Zbar[0][a] = 1;
    for (std::size_t k = 1; k <= T; ++k) {
      const int ki = static_cast<int>(k);
      Q d = 0;
      if (t.tau[a] == ki) d += 1;
      if (ki <= t.tau[a]) d -= s.pd[k][a] / s.Gt[k][a];
      s.NG[k][a] = s.NG[k - 1][a] + d;
      s.Zbar[k][a] = s.Zbar[k - 1][a] * (s.G[k - 1][a] > 0 ? s.Gt[k][a] / s.G[k - 1][a] : Q(1));
    }
    s.qtilde.push_back(t.p[a] * s.Zbar[T][a]);
  }
  return s;
}

// Product over n <= t of 1 + phi G/Gt on {tau = n} and 1 - phi P(tau=n|F_n)/Gt on {tau > n}.
inline Table z_phi(const Tree& t, const Survival& s, const std::function<Q(std::size_t, std::size_t)>& phi) {
  Table z = table(t);
  for (std::size_t a = 0; a < t.N(); ++a) {
    z[0][a] = 1;
    for (std::size_t n = 1; n <= t.T(); ++n) {
      const int ni = static_cast<int>(n);
      Q f = 1;
      if (t.tau[a] == ni) f += phi(n, a) * s.G[n][a] / s.Gt[n][a];
      if (t.tau[a] > ni) f -= phi(n, a) * s.pd[n][a] / s.Gt[n][a];
      z[n][a] = z[n - 1][a] * f;
    }
  }
  return z;
}

inline double to_double(const Q& q) { return static_cast<double>(q); }

}  // namespace oracle
