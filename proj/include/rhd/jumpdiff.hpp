#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rhd/errors.hpp"

namespace rhd::jd {

struct Scenario {
  double sigma = 0.2;
  double zeta = 0.1;
  double mu = 0.03;
  double lambda = 2.0;
  double a = 0.5;
  double S0 = 1.0;
  double horizon = 1.0;
  double dt = 1.0 / 1024.0;
  std::size_t n_paths = 100000;
  std::uint64_t seed = 20240607;
  // deflator parameters (constants)
  double psi2 = 1.0;
  double phi_o = 0.5;
  double phi_pr = 0.0;
  std::vector<double> obs_times;  // empty: 0, H/4, H/2, 3H/4, H
  std::size_t csv_paths = 0;      // full-grid paths kept for CSV output

  double beta() const { return lambda * (1.0 / a - 1.0); }
  std::size_t steps() const;
  // Throws ErrorKind::input on any violated constraint; fills default observation times.
  void validate();
};

struct Path {
  double T1 = 0.0, T2 = 0.0, tau = 0.0;
  bool tau_at_T1 = false;     // tau = T1 rather than a T2
  double W_tau = 0.0;         // Brownian value at tau when tau <= horizon
  std::vector<double> W, N;   // at observation times
};

struct GridPath {
  std::size_t index = 0;
  std::vector<double> W;      // on the full grid
  std::vector<double> jumps;  // jump times up to the horizon
};

struct PathBundle {
  Scenario scenario;
  std::vector<Path> paths;
  std::vector<GridPath> grids;
};

// Deterministic for fixed (seed, n_paths, dt); workers = 0 picks hardware concurrency.
PathBundle simulate(Scenario scenario, unsigned workers = 0);

// Closed forms along a path. u denotes t ∧ T1 or t ∧ tau as stated.
double G(double beta, double t, double T1);
double Gtilde(double beta, double t, double T1);
double Gminus(double beta, double t, double T1);
double m(double beta, double lambda, double t, double T1);
double DoF(double beta, double lambda, double t, double T1);

// DoF with its Lebesgue part integrated by the trapezoid rule on the grid of step dt.
class DoFTrapezoid {
 public:
  DoFTrapezoid(double beta, double lambda, double dt, double horizon);
  double operator()(double t, double T1) const;

 private:
  double integrand(double s) const;
  double beta_, lambda_, dt_;
  std::vector<double> cum_;
};
double NG(double beta, double lambda, double t, const Path& p);
double S(const Scenario& sc, double t, double W, double N);
double S_stopped(const Scenario& sc, std::size_t obs, const Path& p);
double TW(const Scenario& sc, std::size_t obs, const Path& p);
double TNF(const Scenario& sc, std::size_t obs, const Path& p);
// Same construction with coefficient beta t / (1 + beta t) on N^tau.
double TNF_alternative(const Scenario& sc, std::size_t obs, const Path& p);
double survival_exponential(double beta, double lambda, double t, double T1);

double solve_drift(const Scenario& sc, double psi2);

struct DeflatorSpec {
  double psi1 = 0.0, psi2 = 1.0, phi_o = 0.0, phi_pr = 0.0;
};
// Throws ErrorKind::inadmissible naming the first offending path.
void check_constraints(const PathBundle& b, const DeflatorSpec& d);
// E(L)^tau E(phi_o . N^G) E(phi_pr . D) at an observation time.
double deflator(const Scenario& sc, const DeflatorSpec& d, std::size_t obs, const Path& p);
// E(K^F)^tau / E(G_-^{-1} . m)^tau with K^F = psi1 W + (psi2 - 1) N^F.
double deflator_cor33(const Scenario& sc, const DeflatorSpec& d, std::size_t obs, const Path& p);
// E(K^F) at an observation time, unstopped.
double f_density(const Scenario& sc, const DeflatorSpec& d, std::size_t obs, const Path& p);
// E(pi X)^tau for a constant fraction pi with 1 + pi zeta > 0.
double wealth_stopped(const Scenario& sc, double pi, std::size_t obs, const Path& p);

enum class Null { martingale, supermartingale };

struct TimeStat {
  double t = 0.0, mean = 0.0, se = 0.0, z = 0.0;
};

struct McStats {
  std::vector<TimeStat> times;
  double max_z = 0.0;  // |z| for martingale, z for supermartingale
  bool rejected = false;
  std::vector<std::vector<double>> regression_z;  // per interval, per feature
  std::string warning;
};

// values[i][path] at times[i]; features[i][path] are F-measurable regressors at times[i].
McStats mc_test(const std::vector<double>& times, const std::vector<std::vector<double>>& values, double x0, Null null,
                const std::vector<std::vector<std::vector<double>>>* features = nullptr, double threshold = 3.0);

struct Check {
  std::string name;
  Null null = Null::martingale;
  bool expect_reject = false;  // power diagnostics
  double x0 = 0.0;
  McStats stats;
  bool passed() const { return stats.rejected == expect_reject; }
};

struct Report {
  Scenario scenario;
  DeflatorSpec deflator;
  std::vector<Check> checks;
  double max_m_residual = 0.0;
  bool tau_before_T1 = true;  // ]0, tau] inside {G_- > 0}
  double mean_jump_count = 0.0;
  std::vector<std::string> warnings;
  bool ok = false;  // every null check not rejected and pathwise checks pass
};

Report run(const PathBundle& b);

}  // namespace rhd::jd
