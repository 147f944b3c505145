#pragma once

#include <string>
#include <vector>

#include "oracle.hpp"
#include "rhd/enlargement.hpp"
#include "rhd/prob.hpp"

namespace support {

// Four equally likely outcomes over two periods; F_1 = {U, D}, F_2 discrete, tau = (2, 1, 2, 0).
inline rhd::FiniteFilteredSpace tiny2_space() {
  std::vector<int> p0{0, 0, 0, 0}, p1{0, 0, 1, 1}, p2{0, 1, 2, 3};
  return rhd::FiniteFilteredSpace({"w1", "w2", "w3", "w4"}, {0.25, 0.25, 0.25, 0.25},
                                  rhd::Filtration({rhd::Partition(p0), rhd::Partition(p1), rhd::Partition(p2)}));
}
inline std::vector<int> tiny2_tau() { return {2, 1, 2, 0}; }
inline rhd::RandomTimeStructure tiny2() { return rhd::build_survival(tiny2_space(), tiny2_tau()); }

inline oracle::Tree tiny2_oracle() {
  oracle::Q q(1, 4);
  return {{q, q, q, q}, {{0, 0, 0, 0}, {0, 0, 1, 1}, {0, 1, 2, 3}}, tiny2_tau()};
}

inline oracle::Tree to_oracle(const rhd::FiniteFilteredSpace& s, const std::vector<int>& tau) {
  oracle::Tree t;
  for (double p : s.P().weights()) t.p.push_back(oracle::Q(p));
  for (const auto& part : s.F().chain()) t.parts.emplace_back(part.labels().begin(), part.labels().end());
  t.tau = tau;
  return t;
}

inline rhd::Process from_table(const oracle::Table& tab) {
  rhd::Process x(tab.front().size(), tab.size() - 1);
  for (std::size_t n = 0; n < tab.size(); ++n)
    for (std::size_t a = 0; a < tab[n].size(); ++a) x(a, n) = oracle::to_double(tab[n][a]);
  return x;
}

inline rhd::Process constant(const rhd::RandomTimeStructure& rts, double v) {
  return rhd::Process(rts.atoms(), rts.horizon(), v);
}

}  // namespace support
