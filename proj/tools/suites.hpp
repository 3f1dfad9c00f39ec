#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ffd/evolve.hpp"
#include "ffd/exponents.hpp"
#include "ffd/grid.hpp"
#include "ffd/verify.hpp"

namespace ffd::suites {

/// One named check outcome inside a suite run.
struct LabeledReport {
  std::string label;
  EstimateReport report;
};

struct SuiteResult {
  std::vector<LabeledReport> reports;
  bool all_pass() const;
};

/// Deterministic sum of separated positive bumps, supported well inside the
/// box. The same (grid, seed, n_bumps) always produces the same field.
Field random_bump_field(const Grid& grid, std::uint64_t seed, int n_bumps);

/// Unit-mass indicator of a centered ball of radius radius_cells * h.
Field dirac_ball_field(const Grid& grid, double radius_cells);

/// Truncation of the closed-form extinguishing solution at its value on the
/// truncation radius: min(U(r, 0; T), U(r_trunc, 0; T)).
Field truncated_extinction_field(const Grid& grid, const ProblemParams& params,
                                 double T, double r_trunc);

/// Run fn(0..count-1) on up to `jobs` worker threads. Results must be stored
/// by index by the callee; the first exception is rethrown after the join.
void fan_out(int jobs, int count, const std::function<void(int)>& fn);

enum class SmoothingMode { L1, Lp };

struct SmoothingSuiteOptions {
  ProblemParams params{1, 1.0, 1.0};
  Grid grid{1, 2048, 40.0};
  std::uint64_t seed = 1;
  int data = 4;                    // seeded random bump data
  bool include_dirac = false;      // append the near-Dirac attainment run
  double dirac_radius_cells = 4.0;
  std::vector<double> times{1.0, 2.0};
  SmoothingMode mode = SmoothingMode::L1;
  double F0 = 0.0;  // unit-mass central value; <= 0 picks the closed form at m = 1
  double p = 2.0;   // Lp mode only
  double Cp = 0.0;  // Lp mode only; must be positive there
  double tol = 0.02;
  SolverConfig solver;
  int jobs = 1;
};
SuiteResult smoothing_suite(const SmoothingSuiteOptions& opt);

struct MarcinkiewiczSuiteOptions {
  ProblemParams params{1, 1.0, 0.5};
  double p = 2.0;
  double Fp0 = 0.0;  // unit-gauge central value of the p-profile; required
  Grid grid{1, 2048, 20.0};
  std::uint64_t seed = 1;
  int data = 3;  // seeded capped-power data
  std::vector<double> times{0.25, 0.5};
  double tol = 0.05;
  SolverConfig solver;
  int jobs = 1;
};
SuiteResult marcinkiewicz_suite(const MarcinkiewiczSuiteOptions& opt);

struct ConcentrationSuiteOptions {
  int N = 1;
  double sigma = 1.0;
  Grid grid{1, 1024, 20.0};
  std::uint64_t seed = 7;
  int pairs = 20;
  std::vector<double> times{0.1, 0.2, 0.35, 0.55, 0.75};
  double tol = 1e-3;  // prefix-sum violation tolerance, relative to ||u0||_1
  /// When set, u evolves with A = u^{1/2} + u while v keeps the weakly less
  /// diffusive A_tilde = u^{1/2}; otherwise both use the pair's concave power.
  bool different_diffusivity = false;
  SolverConfig solver;
  int jobs = 1;
};
SuiteResult concentration_suite(const ConcentrationSuiteOptions& opt);

struct ExtinctionSuiteOptions {
  ProblemParams params{3, 1.0, 0.5};
  Grid grid{3, 64, 2.0};
  double T = 1.0;        // extinction time of the sampled closed form
  double r_trunc = 0.15;
  double t_end = 1.2;
  double tol = 0.05;
  SolverConfig solver;
};
SuiteResult extinction_suite(const ExtinctionSuiteOptions& opt);

struct GeneralSuiteOptions {
  ProblemParams params{3, 1.0, 0.5};
  Grid grid{3, 64, 2.0};
  double T = 1.0;  // datum as in the extinction suite
  double r_trunc = 0.15;
  double t_end = 1.2;
  double F0 = 1.0;  // consumed only in the smoothing regime m > m_c
  double tol = 0.05;
  SolverConfig solver;
};
SuiteResult general_suite(const GeneralSuiteOptions& opt);

}  // namespace ffd::suites
