#include "rhd/prob.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

namespace rhd {

Partition::Partition(std::span<const int> labels) {
  std::map<int, std::size_t> ids;
  block_of_.reserve(labels.size());
  for (std::size_t a = 0; a < labels.size(); ++a) {
    auto [it, fresh] = ids.try_emplace(labels[a], members_.size());
    if (fresh) members_.emplace_back();
    block_of_.push_back(it->second);
    members_[it->second].push_back(a);
  }
}

Partition Partition::trivial(std::size_t atoms) {
  std::vector<int> l(atoms, 0);
  return Partition(l);
}

Partition Partition::discrete(std::size_t atoms) {
  std::vector<int> l(atoms);
  for (std::size_t a = 0; a < atoms; ++a) l[a] = static_cast<int>(a);
  return Partition(l);
}

bool Partition::refines(const Partition& coarser) const {
  if (coarser.atoms() != atoms()) return false;
  for (const auto& b : members_)
    for (std::size_t a : b)
      if (coarser.block_of(a) != coarser.block_of(b.front())) return false;
  return true;
}

Partition Partition::meet(const Partition& other) const {
  std::map<std::pair<std::size_t, std::size_t>, int> ids;
  std::vector<int> l(atoms());
  for (std::size_t a = 0; a < atoms(); ++a) {
    auto key = std::make_pair(block_of_[a], other.block_of(a));
    auto [it, fresh] = ids.try_emplace(key, static_cast<int>(ids.size()));
    l[a] = it->second;
  }
  return Partition(l);
}

Filtration::Filtration(std::vector<Partition> chain) : chain_(std::move(chain)) {
  if (chain_.size() < 2) throw Error(ErrorKind::input, "filtration needs horizon >= 1");
  for (std::size_t n = 1; n < chain_.size(); ++n) {
    if (chain_[n].atoms() != chain_[0].atoms())
      throw Error(ErrorKind::input, fmt::format("partition {} covers a different atom set", n));
    if (!chain_[n].refines(chain_[n - 1]))
      throw Error(ErrorKind::input, fmt::format("partition {} does not refine partition {}", n, n - 1));
  }
}

Measure::Measure(std::vector<double> weights, double tol) : w_(std::move(weights)) {
  double s = 0.0;
  for (double w : w_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorKind::input, "measure weights must be finite and >= 0");
    s += w;
  }
  if (std::abs(s - 1.0) > tol) throw Error(ErrorKind::input, fmt::format("measure weights sum to {:.17g}", s));
}

double Measure::mass(const std::vector<std::size_t>& atoms) const {
  double s = 0.0;
  for (std::size_t a : atoms) s += w_[a];
  return s;
}

FiniteFilteredSpace::FiniteFilteredSpace(std::vector<std::string> ids, std::vector<double> probs, Filtration f)
    : ids_(std::move(ids)), F_(std::move(f)) {
  if (ids_.size() != probs.size() || ids_.size() != F_.atoms())
    throw Error(ErrorKind::input, "outcomes, probabilities and partitions disagree on the atom count");
  for (std::size_t a = 0; a < probs.size(); ++a)
    if (!(probs[a] > 0.0)) throw Error(ErrorKind::input, fmt::format("outcome '{}' has non-positive probability", ids_[a]));
  P_ = Measure(std::move(probs));
}

Process::Process(std::size_t atoms, std::size_t horizon, double fill)
    : atoms_(atoms), horizon_(horizon), v_(atoms * (horizon + 1), fill) {}

static void require_same_shape(const Process& a, const Process& b) {
  if (a.atoms() != b.atoms() || a.horizon() != b.horizon())
    throw Error(ErrorKind::contract, "process shapes differ");
}

Process& Process::operator+=(const Process& o) {
  require_same_shape(*this, o);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}

Process& Process::operator-=(const Process& o) {
  require_same_shape(*this, o);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}

Process& Process::operator*=(double c) {
  for (double& x : v_) x *= c;
  return *this;
}

Process Process::times(const Process& o) const {
  require_same_shape(*this, o);
  Process r = *this;
  for (std::size_t i = 0; i < v_.size(); ++i) r.v_[i] *= o.v_[i];
  return r;
}

Process Process::stopped(std::span<const int> sigma) const {
  Process r = *this;
  for (std::size_t a = 0; a < atoms_; ++a)
    for (std::size_t n = 0; n <= horizon_; ++n)
      if (static_cast<int>(n) > sigma[a]) r(a, n) = (*this)(a, static_cast<std::size_t>(std::max(sigma[a], 0)));
  return r;
}

double Process::max_abs_diff(const Process& o) const {
  require_same_shape(*this, o);
  double d = 0.0;
  for (std::size_t i = 0; i < v_.size(); ++i) d = std::max(d, std::abs(v_[i] - o.v_[i]));
  return d;
}

double Process::min_value() const {
  double m = std::numeric_limits<double>::infinity();
  for (double x : v_) m = std::min(m, x);
  return m;
}

bool is_measurable(std::span<const double> x, const Partition& p, double tol) {
  for (std::size_t b = 0; b < p.block_count(); ++b) {
    const auto& mem = p.members(b);
    for (std::size_t a : mem)
      if (std::abs(x[a] - x[mem.front()]) > tol) return false;
  }
  return true;
}

bool is_adapted(const Process& x, const Filtration& f, double tol) {
  for (std::size_t n = 0; n <= x.horizon(); ++n)
    if (!is_measurable(x.at(n), f.at(n), tol)) return false;
  return true;
}

bool is_predictable(const Process& x, const Filtration& f, double tol) {
  for (std::size_t n = 0; n <= x.horizon(); ++n)
    if (!is_measurable(x.at(n), f.predictable_at(n), tol)) return false;
  return true;
}

std::vector<double> cond_expect(std::span<const double> x, const Partition& p, const Measure& m,
                                Degenerate policy) {
  std::vector<double> r(x.size());
  for (std::size_t b = 0; b < p.block_count(); ++b) {
    const auto& mem = p.members(b);
    double mass = 0.0, sum = 0.0;
    for (std::size_t a : mem) {
      if (m[a] == 0.0) continue;
      mass += m[a];
      sum += m[a] * x[a];
    }
    double v = 0.0;
    if (mass > 0.0) {
      v = sum / mass;
    } else if (policy == Degenerate::reject) {
      throw Error(ErrorKind::degenerate, fmt::format("conditioning on a zero-mass block (atom {})", mem.front()));
    }
    for (std::size_t a : mem) r[a] = v;
  }
  return r;
}

Process project(const Process& x, const Filtration& f, const Measure& m, Projection mode, Degenerate policy) {
  Process r(x.atoms(), x.horizon());
  for (std::size_t n = 0; n <= x.horizon(); ++n) {
    const Partition& p = mode == Projection::optional ? f.at(n) : f.predictable_at(n);
    auto e = cond_expect(x.at(n), p, m, policy);
    std::copy(e.begin(), e.end(), r.at(n).begin());
  }
  return r;
}

Process dual_projection(const Process& a, const Filtration& f, const Measure& m, Projection mode,
                        Degenerate policy) {
  Process r(a.atoms(), a.horizon());
  std::vector<double> inc(a.atoms());
  for (std::size_t n = 0; n <= a.horizon(); ++n) {
    for (std::size_t w = 0; w < a.atoms(); ++w) inc[w] = a.delta(w, n);
    const Partition& p = mode == Projection::optional ? f.at(n) : f.predictable_at(n);
    auto e = cond_expect(inc, p, m, policy);
    for (std::size_t w = 0; w < a.atoms(); ++w) r(w, n) = (n == 0 ? 0.0 : r(w, n - 1)) + e[w];
  }
  return r;
}

Process stieltjes_integral(const Process& phi, const Process& x) {
  require_same_shape(phi, x);
  Process r(x.atoms(), x.horizon());
  for (std::size_t n = 1; n <= x.horizon(); ++n)
    for (std::size_t w = 0; w < x.atoms(); ++w) r(w, n) = r(w, n - 1) + phi(w, n) * x.delta(w, n);
  return r;
}

Process stochastic_integral(const Process& phi, const Process& x, const Filtration& f) {
  if (!is_predictable(phi, f)) throw Error(ErrorKind::contract, "integrand is not predictable");
  return stieltjes_integral(phi, x);
}

Process stochastic_integral(const VectorProcess& phi, const VectorProcess& x, const Filtration& f) {
  if (phi.size() != x.size() || x.empty()) throw Error(ErrorKind::contract, "integrand and integrator dimensions differ");
  Process r = stochastic_integral(phi[0], x[0], f);
  for (std::size_t i = 1; i < x.size(); ++i) r += stochastic_integral(phi[i], x[i], f);
  return r;
}

Process stochastic_exponential(const Process& x) {
  Process r(x.atoms(), x.horizon(), 1.0);
  for (std::size_t n = 1; n <= x.horizon(); ++n)
    for (std::size_t w = 0; w < x.atoms(); ++w) r(w, n) = r(w, n - 1) * (1.0 + x.delta(w, n));
  return r;
}

bool is_strictly_positive(const Process& x) { return x.min_value() > 0.0; }

Process bracket(const Process& x, const Process& y) {
  require_same_shape(x, y);
  Process r(x.atoms(), x.horizon());
  for (std::size_t n = 1; n <= x.horizon(); ++n)
    for (std::size_t w = 0; w < x.atoms(); ++w) r(w, n) = r(w, n - 1) + x.delta(w, n) * y.delta(w, n);
  return r;
}

Process angle_bracket(const Process& x, const Process& y, const Filtration& f, const Measure& m,
                      Degenerate policy) {
  return dual_projection(bracket(x, y), f, m, Projection::predictable, policy);
}

Doob doob_decomposition(const Process& x, const Filtration& f, const Measure& m, Degenerate policy) {
  Process drift(x.atoms(), x.horizon());
  std::vector<double> inc(x.atoms());
  for (std::size_t n = 1; n <= x.horizon(); ++n) {
    for (std::size_t w = 0; w < x.atoms(); ++w) inc[w] = x.delta(w, n);
    auto e = cond_expect(inc, f.at(n - 1), m, policy);
    for (std::size_t w = 0; w < x.atoms(); ++w) drift(w, n) = drift(w, n - 1) + e[w];
  }
  return {x - drift, drift};
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::martingale: return "martingale";
    case Verdict::supermartingale: return "supermartingale";
    case Verdict::submartingale: return "submartingale";
    case Verdict::none: return "none";
  }
  return "none";
}

Classification classify(const Process& x, const Filtration& f, const Measure& m, double tol) {
  Classification c;
  std::vector<double> inc(x.atoms());
  for (std::size_t n = 1; n <= x.horizon(); ++n) {
    for (std::size_t w = 0; w < x.atoms(); ++w) inc[w] = x.delta(w, n);
    const Partition& p = f.at(n - 1);
    auto e = cond_expect(inc, p, m, Degenerate::zero);
    for (std::size_t b = 0; b < p.block_count(); ++b) {
      std::size_t a = p.members(b).front();
      double r = e[a];
      if (std::abs(r) > c.max_residual) {
        c.max_residual = std::abs(r);
        c.worst_time = n;
        c.worst_atom = a;
      }
      c.max_positive = std::max(c.max_positive, r);
      c.max_negative = std::max(c.max_negative, -r);
    }
  }
  if (c.max_residual <= tol) c.verdict = Verdict::martingale;
  else if (c.max_positive <= tol) c.verdict = Verdict::supermartingale;
  else if (c.max_negative <= tol) c.verdict = Verdict::submartingale;
  else c.verdict = Verdict::none;
  return c;
}

Measure change_measure(const Measure& p, std::span<const double> density, double tol) {
  if (density.size() != p.size()) throw Error(ErrorKind::input, "density size differs from atom count");
  std::vector<double> w(p.size());
  double mean = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (density[a] < 0.0) throw Error(ErrorKind::input, fmt::format("negative density at atom {}", a));
    w[a] = density[a] * p[a];
    mean += w[a];
  }
  if (std::abs(mean - 1.0) > tol) throw Error(ErrorKind::input, fmt::format("density has mean {:.17g}", mean));
  return Measure(std::move(w), tol);
}

}  // namespace rhd
