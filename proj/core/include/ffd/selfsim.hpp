#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ffd/evolve.hpp"
#include "ffd/exponents.hpp"
#include "ffd/grid.hpp"

namespace ffd {

/// Least-squares power-law fit result: F ~ xi^{-exponent}, with a ~95%
/// confidence half-width (two standard errors of the slope).
struct TailFit {
  double exponent = 0.0;
  double half_width = 0.0;
  int n_samples = 0;
};

/// Slope of log F against log xi over the window [window_lo, window_hi].
/// Requires at least 10 positive samples inside the window.
TailFit tail_exponent_fit(const std::vector<double>& xi,
                          const std::vector<double>& F, double window_lo,
                          double window_hi);

/// Radial shell averages of a Cartesian field on log-spaced bins.
struct RadialSamples {
  std::vector<double> radius;
  std::vector<double> value;
};

RadialSamples shell_average(const Field& f, int n_bins = 512);

/// Piecewise log-log interpolation of a positive radial profile, with a flat
/// core below the first sample and power-law extrapolation beyond the last.
/// Falls back to linear interpolation where values are non-positive.
double profile_interpolate(const std::vector<double>& xi,
                           const std::vector<double>& F, double r);

enum class ProfileKind { Barenblatt, Marcinkiewicz };

/// A self-similar profile extracted from forward evolution: snapshots at the
/// requested times are rescaled by (t^alpha, t^beta) and averaged on the
/// trusted window |xi| <= xi_max.
struct SelfSimilarProfile {
  ProfileKind kind = ProfileKind::Barenblatt;
  ProblemParams params;
  double M = 1.0;               // mass (Barenblatt) or gauge (Marcinkiewicz)
  std::optional<double> p;      // Marcinkiewicz order
  double alpha = 0.0;
  double beta = 0.0;
  Grid grid;                    // Cartesian resolution used
  std::vector<double> xi;       // averaged collapsed profile (increasing xi)
  std::vector<double> F;
  double F0 = 0.0;              // central value
  double xi_max = 0.0;          // trusted window of the averaged profile
  double collapse_error = 0.0;  // worst pairwise relative L-inf distance
  double cap_sensitivity = 0.0; // rel. distance of the two largest-cap runs
  double quantity = 0.0;        // measured mass / gauge of the evolved data
  TailFit tail;                 // fit on the averaged profile
  std::vector<double> snapshot_times;
  std::vector<TailFit> snapshot_tails;  // per snapshot, each on its own window
};

struct ProfileOptions {
  std::vector<double> times{1.0, 2.0, 4.0};
  double dt_initial = 1e-5;
  double dt_max = 5e-3;
  double dt_growth = 1.25;
  std::optional<double> epsilon_reg;
  double newton_tol = 1e-9;
  int n_bins = 512;
  double collapse_tolerance = 0.02;
  bool enforce_collapse = true;  // throw when the collapse check fails
  std::vector<double> caps{4.0, 8.0, 16.0};  // Marcinkiewicz truncation levels
  double dirac_radius_cells = 4.0;           // Barenblatt ball radius, in h
};

/// Barenblatt profile of mass M extracted from a Dirac-approximation run.
/// Requires m > m_c. Throws std::runtime_error on non-collapse when
/// opts.enforce_collapse is set.
SelfSimilarProfile barenblatt_profile(const ProblemParams& params, double M,
                                      const Grid& resolution,
                                      const ProfileOptions& opts = {});

/// Self-similar profile for the Marcinkiewicz datum M |x|^{-N/p}, built from
/// truncated data min(M |x|^{-N/p}, cap) over opts.caps. Requires m < 1 and
/// p > max(1, p_tilde).
SelfSimilarProfile marcinkiewicz_profile(const ProblemParams& params, double p,
                                         double M, const Grid& resolution,
                                         const ProfileOptions& opts = {});

/// Relative L2 residual (interior annulus, mean-centered) of the profile
/// equation (-Delta)^{sigma/2} F^m = alpha F + beta xi . grad F, with the
/// gradient by centered differences and the fractional term applied
/// spectrally. The periodic operator determines fields modulo constants, so
/// the annulus mean of the residual is removed before taking the norm.
double elliptic_residual(const SelfSimilarProfile& profile);

/// Closed-form separable solution vanishing at time T (requires m < m_c):
///   U(r, t) = C1 (T - t)^{1/(1-m)} r^{-sigma/(1-m)},  U(., t >= T) = 0.
struct ExplicitExtinctionSolution {
  ProblemParams params;
  double T = 1.0;
  ExtinctionCoefficients coeff;

  double operator()(double r, double t) const;
};

ExplicitExtinctionSolution explicit_extinction_solution(
    const ProblemParams& params, double T);

/// Decay rate of the profile tail: N/p for Marcinkiewicz profiles (p given),
/// otherwise sigma/(1-m) on m in (m_c, m_one), N+sigma on m in [m_one, 1].
/// The two branches agree at m = m_one.
double expected_tail_exponent(const ProblemParams& params,
                              std::optional<double> p = std::nullopt);

/// Export: CSV of (xi, F) plus a JSON metadata document.
void write_profile(const SelfSimilarProfile& profile,
                   const std::string& csv_path, const std::string& json_path);

}  // namespace ffd
