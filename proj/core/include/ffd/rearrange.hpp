#pragma once

#include <vector>

#include "ffd/grid.hpp"

namespace ffd {

/// Decreasing rearrangement of a non-negative field, indexed by measure.
/// values[j] is the rearranged value on the measure slab
/// [j * cell_measure, (j+1) * cell_measure); the midpoint measure is
/// s_j = (j + 1/2) * cell_measure. N is kept so that measures can be
/// converted to ball radii.
struct RadialProfile {
  int N = 1;
  double cell_measure = 0.0;
  std::vector<double> values;  // non-increasing

  double midpoint_measure(std::size_t j) const {
    return (static_cast<double>(j) + 0.5) * cell_measure;
  }
  /// Radius of the ball with the same measure as the first j+1 slabs' midpoint.
  double midpoint_radius(std::size_t j) const;
  double total_measure() const { return cell_measure * values.size(); }
};

enum class Order { Equal, LessOrEqual, GreaterOrEqual, Incomparable };

/// Outcome of a concentration comparison (prefix sums of rearranged values,
/// in mass units). max_violation is the largest signed prefix-sum gap against
/// the returned verdict; a verdict is only declared when the opposing gap
/// stays within the tolerance.
struct ConcentrationReport {
  Order verdict = Order::Incomparable;
  double max_violation = 0.0;
  double tolerance = 0.0;
};

/// mu_f(t): measure of {f > t}.
double distribution_function(const Field& f, double level);
double distribution_function(const RadialProfile& f, double level);

/// Sort the values in non-increasing order. Requires f >= 0.
RadialProfile decreasing_rearrangement(const Field& f);

/// Schwarz symmetrization on the grid: cells ranked by Euclidean cell-center
/// distance from the origin (ties broken lexicographically) receive the
/// sorted values. Mass, all L^p norms and the distribution function are
/// preserved exactly.
Field spherical_rearrangement(const Field& f);

/// Concentration comparison: f is less concentrated than g ("f < g") when
/// every prefix sum of f's rearrangement is <= the matching prefix sum of
/// g's. Profiles must share cell_measure and length.
ConcentrationReport concentration_compare(const RadialProfile& f,
                                          const RadialProfile& g,
                                          double tolerance);

/// Equivalent convex-test form of the concentration order, using the hinge
/// family phi_k(s) = max(s - k, 0) on a uniform level grid spanning
/// [0, max value]. Returns true when integral(phi_k(f)) <= integral(phi_k(g))
/// + tolerance for every level.
bool convex_test_compare(const RadialProfile& f, const RadialProfile& g,
                         int n_levels, double tolerance);

enum class MarcinkiewiczConvention { Coefficient, SupLevel, Integral };

/// Weak-L^p (Marcinkiewicz) gauge of a non-negative profile.
///   Coefficient: sup_j (s_j / omega_N)^{1/p} f*(s_j)   [default elsewhere]
///   SupLevel:    sup over observed levels t of t * mu_f(t)^{1/p}
///   Integral:    max_R  (integral of f* over the first cells of measure S)
///                       / S^{(p-1)/p}
/// All agree on exact power data up to voxel effects, except Integral which
/// carries the classical factor p/(p-1) on power data.
double marcinkiewicz_gauge(const RadialProfile& f, double p,
                           MarcinkiewiczConvention convention);
double marcinkiewicz_gauge(const Field& f, double p,
                           MarcinkiewiczConvention convention);

/// Lorentz L^{p,q} norm by midpoint quadrature on the measure grid:
///   ( sum_j [s_j^{1/p} f_j]^q * cm / s_j )^{1/q},  q < inf
///   sup_j s_j^{1/p} f_j,                           q = inf
/// L^{p,p} coincides with L^p exactly on piecewise-constant profiles.
double lorentz_norm(const RadialProfile& f, double p, double q);

/// Cumulative masses: prefix[j] = (f_0 + ... + f_j) * cell_measure.
std::vector<double> prefix_masses(const RadialProfile& f);

} // namespace ffd
