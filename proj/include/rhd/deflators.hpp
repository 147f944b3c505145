#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rhd/enlargement.hpp"
#include "rhd/prob.hpp"

namespace rhd {

enum class Route { additive, multiplicative, thm58 };
const char* to_string(Route r);
Route parse_route(const std::string& s);

// Empty processes take their neutral defaults: base 0 (additive) or 1, phi_o = phi_pr = V_F = 0.
// phi_o is the single integrand phi on the thm58 route.
struct DeflatorParams {
  Route route = Route::multiplicative;
  Process base;
  Process phi_o;
  Process phi_pr;
  Process V_F;
};

struct InequalityMap {
  std::string name;
  Process value;
  Process lower;
  Process upper;
  std::vector<char> active;  // time-major flags: node where the inequality is evaluated
  std::vector<char> holds;   // 1 where inactive or lower < value < upper

  bool holds_at(std::size_t atom, std::size_t n) const { return holds[n * value.atoms() + atom] != 0; }
  std::size_t violations() const;
};

struct Violation {
  std::string condition;
  std::size_t time = 0;
  std::size_t atom = 0;
  double value = 0.0;
  std::string detail;
};

struct AdmissibilityReport {
  bool admissible = true;
  double min_factor = 1.0;  // smallest realized one-step factor
  std::vector<InequalityMap> inequalities;
  std::vector<Violation> violations;  // binding failures only
};

AdmissibilityReport validate(const DeflatorParams& params, const RandomTimeStructure& rts);

struct Factor {
  std::string name;
  Process value;
};

struct Deflator {
  Route route = Route::multiplicative;
  Process Z;
  Process K_G;  // additive driver, empty on other routes
  std::vector<Factor> factors;
  AdmissibilityReport admissibility;
};

// Validates, then builds. Throws ErrorKind::inadmissible naming the first binding violation.
Deflator build(const DeflatorParams& params, const RandomTimeStructure& rts);
Deflator build_additive(const Process& K_F, const Process& V_F, const Process& phi_o, const Process& phi_pr,
                        const RandomTimeStructure& rts);
Deflator build_multiplicative(const Process& Z_F, const Process& phi_o, const Process& phi_pr,
                              const RandomTimeStructure& rts);
Deflator build_thm58(const Process& Z_QF, const Process& phi, const RandomTimeStructure& rts);

// E(G_-^{-1} . m)^tau
Process survival_exponential(const RandomTimeStructure& rts);
// Product over n <= t of the one-step factors of the phi-density on the thm58 route.
Process z_phi(const Process& phi, const RandomTimeStructure& rts);

struct MultiplicativeDecomposition {
  std::vector<double> Z0;
  Process N;  // martingale, dN > -1
  Process V;  // predictable nondecreasing, dV < 1
  Process reassembled;
  double residual = 0.0;
};

MultiplicativeDecomposition mult_decompose(const Process& Z, const Filtration& f, const Measure& m,
                                           double tol = 1e-10);

struct Representation {
  Process M_F;             // F-martingale, M_F_0 = 0
  Process phi;             // F-adapted integrand against N^G
  Process phi_determined;  // 1 where phi is identified, 0 where any value reproduces the input
  Process reassembled;     // M_0 + sum dT(M_F)/G_-^2 + phi . N^G
  double residual = 0.0;   // against the input stopped at tau
};

Representation decompose_G_martingale(const Process& M_G, const RandomTimeStructure& rts, double tol = 1e-10);
Process reassemble(const Process& M0, const Process& M_F, const Process& phi, const RandomTimeStructure& rts);

// Inverse of the multiplicative factory wherever the data identify the inputs.
struct MultiplicativeExtraction {
  Process Z_F;
  Process phi_o;
  Process phi_pr;
  Process Z_F_determined;    // 1 where the F-step ratio is identified
  Process phi_o_determined;
};
MultiplicativeExtraction extract_multiplicative(const Process& Z_G, const RandomTimeStructure& rts);

struct PayoffRepresentation {
  Process h;
  Process M_h;       // E[sum_k h_k dDoF_k | F_n]
  Process Y_h;       // M_h - h . DoF
  Process J;         // Y_h / G, 0 where G = 0
  Process H;         // assembled from the F-objects
  Process H_direct;  // E[h_tau | G_n]
  double residual = 0.0;
  std::vector<Node> G_zero;  // nodes where J carries the zero convention
};
PayoffRepresentation represent_h(const Process& h, const RandomTimeStructure& rts);

struct Split {
  Process K;
  Process K1;  // K stopped at sigma
  Process K2;  // K - K1
  double product_residual = 0.0;  // |E(K1)E(K2) - E(K)|
  double bracket_max = 0.0;       // sup |[K1,K2]|
};
Split split_at(const Process& Z, std::span<const int> sigma, const Filtration& H);

}  // namespace rhd
