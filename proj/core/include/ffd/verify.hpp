#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ffd/evolve.hpp"
#include "ffd/exponents.hpp"
#include "ffd/grid.hpp"
#include "ffd/selfsim.hpp"

namespace ffd {

/// Which sharp estimate a report certifies.
enum class TheoremTag {
  Smoothing,
  SmoothingLp,
  MarcinkiewiczSmoothing,
  ConcentrationComparison,
  DiffusivityComparison,
  ExtinctionBound,
};

std::string theorem_tag_name(TheoremTag tag);

/// One observed quantity / theoretical bound ratio, with provenance.
struct MarginSample {
  double time = 0.0;
  double ratio = 0.0;
  std::string note;
};

/// Outcome of a single estimate check. The pass flag is a pure function of
/// the recorded numbers: pass <=> worst_margin <= 1 + tolerance. A report can
/// be inconclusive (extinction not reached inside a short horizon); the flag
/// is recorded separately so the invariant above stays exact.
struct EstimateReport {
  TheoremTag tag = TheoremTag::Smoothing;
  bool pass = false;
  bool conclusive = true;
  double worst_margin = 0.0;
  double tolerance = 0.0;
  ProblemParams params;
  std::optional<double> p;
  std::vector<MarginSample> breakdown;
  std::string config_echo;
};

std::string report_to_json(const EstimateReport& report);

/// L^p norm of the averaged profile over R^N: flat core inside the first
/// sample, trapezoidal body on the sampled shells, and an analytic power-law
/// tail continuation when a tail fit is available and integrable.
double profile_lp_norm(const SelfSimilarProfile& prof, double p);

/// The contract between profile measurement and estimate verification:
/// central values and L^p norms of unit-mass (unit-gauge) profiles, keyed by
/// kind and problem parameters. Checks consume these; they never recompute
/// profiles.
struct ConstantsManifest {
  struct Entry {
    std::string kind;  // "barenblatt" | "marcinkiewicz"
    ProblemParams params;
    std::optional<double> p;
    double F0 = 0.0;  // unit-mass (unit-gauge) central value
    std::vector<std::pair<double, double>> lp_norms;  // (order, unit-mass norm)
    double collapse_error = 0.0;
  };

  std::vector<Entry> entries;

  /// Normalizes the measured profile to unit mass (Barenblatt) or unit gauge
  /// (Marcinkiewicz) via the scaling law F_M(xi) = M^{sigma beta} F_1(M^{(1-m)beta} xi)
  /// and records F0 plus the requested unit-mass L^p norms (Barenblatt only).
  void add_profile(const SelfSimilarProfile& prof,
                   const std::vector<double>& lp_orders = {2.0});

  const Entry* find(const std::string& kind, const ProblemParams& params,
                    std::optional<double> p = std::nullopt) const;

  void save(const std::string& path) const;
  static ConstantsManifest load(const std::string& path);
};

/// sup-norm smoothing: ||u(t)||_inf * t^alpha / ||u0||_1^{sigma beta} <= F0 (1+tol)
/// at every snapshot with time > 0. Snapshot times are absolute self-similar
/// ages: start the trajectory at the datum's age (0 for generic data, t0 for
/// a profile snapshot taken at age t0). Requires m > m_c.
EstimateReport check_smoothing_L1(const Trajectory& traj,
                                  const ProblemParams& params, double F0,
                                  double tol = 0.05);

/// L^p smoothing: ||u(t)||_p <= Cp ||u0||_1^{(beta/p)(N(m-1)+sigma p)} t^{-alpha(p-1)/p}.
/// Cp is the unit-mass profile L^p norm. p = 1 degenerates to mass
/// non-increase (Cp = 1). Requires m > m_c and p >= 1.
EstimateReport check_smoothing_Lp(const Trajectory& traj,
                                  const ProblemParams& params, double p,
                                  double Cp, double tol = 0.05);

/// Weak-L^p smoothing: ||u(t)||_inf * t^{alpha_p} / M^{sigma beta_p} <= Fp0 (1+tol)
/// with M the Coefficient gauge of the initial snapshot (the trajectory must
/// include one at its start time). Requires p > max(1, p_tilde).
EstimateReport check_smoothing_marcinkiewicz(const Trajectory& traj,
                                             const ProblemParams& params,
                                             double p, double Fp0,
                                             double tol = 0.05);

/// Concentration comparison u^#(t) < v(t): evolves u0 with A and v0 with
/// A_tilde (if given, after the inverse-diffusivity gate) or A, then checks
/// prefix-sum domination of the rearrangements at every requested time plus
/// L^p domination for p in {1, 2, inf}. The prefix margin is reported as
/// 1 + gap/||u0||_1 so that pass <=> gap <= tol * ||u0||_1.
/// Preconditions: A concave; v0 radially non-increasing; u0^# < v0 at t = 0.
EstimateReport check_concentration_monotone(
    const Field& u0, const Field& v0, const Nonlinearity& A,
    const std::optional<Nonlinearity>& A_tilde, const ProblemParams& params,
    const std::vector<double>& times, double tol,
    const SolverConfig& base_cfg = {});

/// Extinction bound for 0 < m < m_c: runs to extinction and checks
/// T <= d(sigma,m) M^{1-m} (1+tol) with M the p_tilde-Coefficient gauge of
/// u0, plus u^#(t) < U(.,t;T_bound) against the explicit solution at the
/// snapshots (prefix sums on balls inside 0.6 L, where periodization images
/// are negligible). No extinction inside a horizon t_end <= 2 * bound is
/// inconclusive, not a failure.
EstimateReport check_extinction_bound(const Field& u0,
                                      const ProblemParams& params,
                                      const SolverConfig& cfg,
                                      double tol = 0.05);

/// General nonlinearity with certificate A'(u) >= a u^{m-1} (a = cert_a,
/// m = cert_m = params.m, validated on a log-spaced sample grid). For
/// m > m_c: smoothing bound with the extra factor (m/a)^alpha. For m < m_c:
/// extinction bound (m/a) d M^{1-m}. F0 is consumed only by the smoothing
/// variant.
EstimateReport check_general_nonlinearity(const Field& u0,
                                          const Nonlinearity& A,
                                          const ProblemParams& params,
                                          const SolverConfig& cfg, double F0,
                                          double tol = 0.05);

/// Monotone-truncation realization of the minimal solution for singular
/// radial data.
struct MinimalSolutionRun {
  Trajectory trajectory;            // the largest-cap run
  double cap_convergence = 0.0;     // rel. sup distance of the last two caps
  double monotonicity_defect = 0.0; // worst relative cellwise decrease in cap
};

/// Evolves u0 ^ cap for each cap (strictly increasing list) and checks that
/// snapshots increase cellwise with the cap up to monotone_tol (relative to
/// the snapshot sup). Throws on a violation; returns the largest-cap
/// trajectory with the cap-convergence metric.
MinimalSolutionRun minimal_solution_run(
    const std::function<double(double)>& u0_radial, const Grid& grid,
    const ProblemParams& params, const Nonlinearity& A,
    const std::vector<double>& caps, const SolverConfig& cfg,
    double monotone_tol = 1e-6);

}  // namespace ffd
