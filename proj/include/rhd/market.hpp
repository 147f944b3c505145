#pragma once

#include <vector>

#include "rhd/enlargement.hpp"
#include "rhd/prob.hpp"

namespace rhd {

// Wealth E(phi . S) of a predictable admissible strategy; throws inadmissible naming the node.
Process wealth(const VectorProcess& phi, const VectorProcess& S, const Filtration& f);

VectorProcess stopped(const VectorProcess& S, std::span<const int> sigma);

struct LmdReport {
  bool ok = false;
  bool positive = false;
  double martingale_residual = 0.0;
  double price_residual = 0.0;  // sup |E[Z_n dS_n | H_{n-1}]|
  Node worst;
};

LmdReport verify_lmd(const Process& Z, const VectorProcess& S, const Filtration& f, const Measure& m,
                     double tol = 1e-10);

struct NodeLp {
  std::size_t time = 0;  // k: the step from k-1 to k
  std::size_t atom = 0;  // representative atom of the H_{k-1} block
  double sup = 0.0;      // sup over admissible theta of E[Z_k (1 + theta.dS_k) | block]
  double z_prev = 0.0;
  double excess = 0.0;   // sup - z_prev
  bool unbounded = false;
  std::vector<double> theta;  // maximizer, or an improving ray when unbounded
};

struct DeflatorReport {
  bool ok = true;
  bool positive = true;
  NodeLp worst;
  std::vector<NodeLp> nodes;
};

// One-step LP oracle at every node with positive mass. Supports d <= 3.
DeflatorReport verify_deflator(const Process& Z, const VectorProcess& S, const Filtration& f, const Measure& m,
                               double tol = 1e-10);

// F-predictable process agreeing with a G-predictable one on ]0, tau].
Process lift_strategy(const Process& phi_G, const RandomTimeStructure& rts);

}  // namespace rhd
