#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rhd/errors.hpp"

namespace rhd {

inline constexpr double kExactTol = 1e-12;

// Partition of atoms {0..n-1}. Block ids are normalized to order of first appearance.
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::span<const int> labels);

  static Partition trivial(std::size_t atoms);
  static Partition discrete(std::size_t atoms);

  std::size_t atoms() const { return block_of_.size(); }
  std::size_t block_count() const { return members_.size(); }
  std::size_t block_of(std::size_t atom) const { return block_of_[atom]; }
  const std::vector<std::size_t>& members(std::size_t block) const { return members_[block]; }
  const std::vector<std::size_t>& labels() const { return block_of_; }

  // Every block of *this lies inside one block of `coarser`.
  bool refines(const Partition& coarser) const;
  // Common refinement.
  Partition meet(const Partition& other) const;

  bool operator==(const Partition& other) const { return block_of_ == other.block_of_; }

 private:
  std::vector<std::size_t> block_of_;
  std::vector<std::vector<std::size_t>> members_;
};

class Filtration {
 public:
  Filtration() = default;
  explicit Filtration(std::vector<Partition> chain);

  std::size_t horizon() const { return chain_.size() - 1; }
  std::size_t atoms() const { return chain_.front().atoms(); }
  const Partition& at(std::size_t n) const { return chain_[n]; }
  // Partition against which values at time n must be measurable to be predictable.
  const Partition& predictable_at(std::size_t n) const { return chain_[n == 0 ? 0 : n - 1]; }
  const std::vector<Partition>& chain() const { return chain_; }

 private:
  std::vector<Partition> chain_;
};

class Measure {
 public:
  Measure() = default;
  explicit Measure(std::vector<double> weights, double tol = 1e-9);

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t atom) const { return w_[atom]; }
  const std::vector<double>& weights() const { return w_; }
  double mass(const std::vector<std::size_t>& atoms) const;

 private:
  std::vector<double> w_;
};

class FiniteFilteredSpace {
 public:
  FiniteFilteredSpace() = default;
  FiniteFilteredSpace(std::vector<std::string> ids, std::vector<double> probs, Filtration f);

  std::size_t atoms() const { return ids_.size(); }
  std::size_t horizon() const { return F_.horizon(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const Measure& P() const { return P_; }
  const Filtration& F() const { return F_; }

 private:
  std::vector<std::string> ids_;
  Measure P_;
  Filtration F_;
};

// Real-valued process on atoms x {0..T}, stored time-major.
class Process {
 public:
  Process() = default;
  Process(std::size_t atoms, std::size_t horizon, double fill = 0.0);

  std::size_t atoms() const { return atoms_; }
  std::size_t horizon() const { return horizon_; }
  bool empty() const { return v_.empty(); }

  double operator()(std::size_t atom, std::size_t n) const { return v_[n * atoms_ + atom]; }
  double& operator()(std::size_t atom, std::size_t n) { return v_[n * atoms_ + atom]; }
  std::span<const double> at(std::size_t n) const { return {v_.data() + n * atoms_, atoms_}; }
  std::span<double> at(std::size_t n) { return {v_.data() + n * atoms_, atoms_}; }
  const std::vector<double>& raw() const { return v_; }

  // X_n - X_{n-1}; X_0 at n = 0.
  double delta(std::size_t atom, std::size_t n) const {
    return n == 0 ? (*this)(atom, 0) : (*this)(atom, n) - (*this)(atom, n - 1);
  }

  Process& operator+=(const Process& o);
  Process& operator-=(const Process& o);
  Process& operator*=(double c);
  friend Process operator+(Process a, const Process& b) { return a += b; }
  friend Process operator-(Process a, const Process& b) { return a -= b; }
  friend Process operator*(Process a, double c) { return a *= c; }
  friend Process operator*(double c, Process a) { return a *= c; }
  // Elementwise product.
  Process times(const Process& o) const;

  // X_{n ∧ sigma(atom)}.
  Process stopped(std::span<const int> sigma) const;
  double max_abs_diff(const Process& o) const;
  double min_value() const;

 private:
  std::size_t atoms_ = 0;
  std::size_t horizon_ = 0;
  std::vector<double> v_;
};

using VectorProcess = std::vector<Process>;

bool is_measurable(std::span<const double> x, const Partition& p, double tol = 0.0);
bool is_adapted(const Process& x, const Filtration& f, double tol = 0.0);
bool is_predictable(const Process& x, const Filtration& f, double tol = 0.0);

enum class Degenerate { reject, zero };

// Block-weighted mean. Zero-mass blocks either throw or carry value 0.
std::vector<double> cond_expect(std::span<const double> x, const Partition& p, const Measure& m,
                                Degenerate policy = Degenerate::reject);

enum class Projection { optional, predictable };

Process project(const Process& x, const Filtration& f, const Measure& m, Projection mode,
                Degenerate policy = Degenerate::reject);
Process dual_projection(const Process& a, const Filtration& f, const Measure& m, Projection mode,
                        Degenerate policy = Degenerate::reject);

// sum_{k=1..n} phi_k dX_k, phi checked predictable.
Process stochastic_integral(const Process& phi, const Process& x, const Filtration& f);
Process stochastic_integral(const VectorProcess& phi, const VectorProcess& x, const Filtration& f);
// Same sum without the predictability check; for finite-variation integrators.
Process stieltjes_integral(const Process& phi, const Process& x);

Process stochastic_exponential(const Process& x);
bool is_strictly_positive(const Process& x);

Process bracket(const Process& x, const Process& y);
Process angle_bracket(const Process& x, const Process& y, const Filtration& f, const Measure& m,
                      Degenerate policy = Degenerate::reject);

struct Doob {
  Process martingale;
  Process drift;  // predictable, drift at 0 is 0
};
Doob doob_decomposition(const Process& x, const Filtration& f, const Measure& m,
                        Degenerate policy = Degenerate::reject);

enum class Verdict { martingale, supermartingale, submartingale, none };
const char* to_string(Verdict v);

struct Classification {
  double max_residual = 0.0;   // sup |E[dX_n | block]|
  double max_positive = 0.0;   // sup of positive residuals
  double max_negative = 0.0;   // sup of negated negative residuals
  Verdict verdict = Verdict::martingale;
  std::size_t worst_time = 0;
  std::size_t worst_atom = 0;
};
// Zero-mass blocks are skipped.
Classification classify(const Process& x, const Filtration& f, const Measure& m, double tol = kExactTol);

Measure change_measure(const Measure& p, std::span<const double> density, double tol = 1e-9);

}  // namespace rhd
