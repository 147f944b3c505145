#pragma once

#include <vector>

#include "rhd/prob.hpp"

namespace rhd {

struct Node {
  std::size_t time = 0;
  std::size_t atom = 0;  // representative atom of the block
};

struct PositivityReport {
  std::vector<Node> G_zero_before_T;  // F_n blocks, n < T, with G_n = 0
  std::vector<Node> zero_cells;       // F_k blocks with Gtilde_k = 0 < G_{k-1}
  // Every F_T block contains an atom with tau = T.
  bool survival_positive() const { return G_zero_before_T.empty() && zero_cells.empty(); }
};

// tau and its survival objects. Build with build_survival; treat as immutable.
struct RandomTimeStructure {
  FiniteFilteredSpace space;
  std::vector<int> tau;
  Process D;       // I{tau <= n}
  Process G;       // P(tau > n | F_n)
  Process Gtilde;  // P(tau >= n | F_n)
  Process Gminus;  // G_{n-1}, with 1 at n = 0
  Process pdeath;  // P(tau = n | F_n)
  Process DoF;
  Process DpF;
  Process m;       // G + DoF
  Process NG;
  Process Zbar;
  Filtration Gf;
  PositivityReport positivity;

  std::size_t atoms() const { return tau.size(); }
  std::size_t horizon() const { return space.horizon(); }
  const Filtration& F() const { return space.F(); }
  const Measure& P() const { return space.P(); }
  bool alive(std::size_t atom, std::size_t k) const { return static_cast<int>(k) <= tau[atom]; }
};

RandomTimeStructure build_survival(const FiniteFilteredSpace& space, std::vector<int> tau);

Filtration enlarge(const FiniteFilteredSpace& space, std::span<const int> tau);

Process transform_T(const Process& M, const RandomTimeStructure& rts, double tol = 1e-10);
Process transform_predictable(const Process& M, const RandomTimeStructure& rts, double tol = 1e-10);
Process compensate_D(const RandomTimeStructure& rts);
Process build_NG(const RandomTimeStructure& rts);
// Variant whose compensator numerator is P(tau = k | F_{k-1}); not a G-martingale in general.
Process ng_lagged(const RandomTimeStructure& rts);
Process zbar(const RandomTimeStructure& rts);
Measure qtilde(const RandomTimeStructure& rts);

// G_{k-1}^{-1} I{k <= tau}, zero at k = 0 and where G_{k-1} = 0.
Process survival_integrand(const RandomTimeStructure& rts);
// (G_-^{-1} I_{]0,tau]}) . (Gtilde . V)^{p,F}, zero at time 0.
Process g_compensator_stopped(const Process& V, const RandomTimeStructure& rts);

}  // namespace rhd
