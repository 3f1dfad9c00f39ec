#pragma once

#include <array>
#include <functional>

#include "ffd/grid.hpp"

namespace ffd {

/// Discrete fractional Laplacian (-Delta)^{sigma/2} on the periodic box,
/// realized as the Fourier multiplier |k|^sigma with frequencies
/// k_d = pi * j_d / L, j_d in [-n/2, n/2). Exact on trigonometric modes:
/// cos(pi x_1 / L) is an eigenfunction with eigenvalue (pi/L)^sigma.
///
/// Instances own their transform plans and scratch buffers; use one instance
/// per thread. Construction is internally serialized (planner lock).
class SpectralOperator {
 public:
  SpectralOperator(const Grid& grid, double sigma);
  ~SpectralOperator();
  SpectralOperator(const SpectralOperator&) = delete;
  SpectralOperator& operator=(const SpectralOperator&) = delete;

  const Grid& grid() const { return grid_; }
  double sigma() const { return sigma_; }

  /// Op f. Output has exactly zero mean (the k = 0 multiplier vanishes).
  Field apply(const Field& f) const;

  /// (I + c Op)^{-1} b for c >= 0. Preserves the mean of b.
  Field resolvent(const Field& b, double c) const;

  /// Cache the transform of the step right-hand side b for repeated
  /// stabilized solves within one implicit step.
  void load_rhs(const Field& b) const;

  /// One linearly stabilized inner-iteration update against the cached b:
  ///   result_hat = (b_hat + dt |k|^sigma g_hat) / (1 + lambda dt |k|^sigma).
  /// Used by the semi-implicit time stepper with g = lambda v - A(v).
  Field stabilized_solve(const Field& g, double dt, double lambda) const;

 private:
  Grid grid_;
  double sigma_;
  struct Impl;
  Impl* impl_;
};

/// Multiplier value |k|^sigma for the integer mode vector j (unshifted DFT
/// indices; entries beyond N ignored).
double multiplier_value(const Grid& grid, double sigma,
                        const std::array<int, 3>& mode);

/// Normalization constant of the hypersingular-integral form,
///   (-Delta)^{sigma/2} f(x) = c_{N,sigma} P.V. int (f(x) - f(y)) / |x-y|^{N+sigma} dy,
///   c_{N,sigma} = 2^sigma Gamma((N+sigma)/2) sin(pi sigma/2) Gamma(1+sigma/2)
///                 / pi^{N/2 + 1}.
double levy_constant(int N, double sigma);

/// Independent oracle: evaluates (-Delta)^{sigma/2} of a radial function at
/// radius r > 0 by direct quadrature of the symmetric-difference form
///   -(c/2) int (f(x+z) + f(x-z) - 2 f(x)) |z|^{-N-sigma} dz.
/// f must be defined on all of (0, infinity) (the caller supplies the tail
/// continuation). No transforms involved.
struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

QuadratureResult apply_radial_quadrature(
    const std::function<double(double)>& f_radial, double r, int N,
    double sigma, double rel_tol = 1e-8);

/// Periodization of the pure power |x|^{-alpha} on the grid's torus,
/// renormalized so the truncated image sum converges fast:
///   field(x) = sum_{|v_d| <= images} |x + 2L v|^{-alpha}
///              - sum_{v != 0} |2L v|^{-alpha}  +  q * S(x),
/// where S is the periodic quadratic mode (see periodic_quadratic_mode) and
///   q = alpha (alpha + 2 - N) / (2N) * sum_{|v|_inf > images} |2L v|^{-alpha-2}
/// is the isotropized quadratic Taylor coefficient of the dropped images, so
/// q S models the truncation tail the finite sum is missing. Without it the
/// tail decays like images^{N-2-alpha}, which is uselessly slow; with it the
/// remainder is quartic in |x|/L. Requires alpha in (max(0, N-2), N) so the
/// q sum converges and the datum is locally integrable. Central-image values
/// within 4h of the origin are replaced by exact cell averages: the operator
/// and the grid-mean removal both feel the core's mass globally, and the
/// midpoint value misstates it by O(h^{N-alpha}).
///
/// Up to a global constant (annihilated by the operator and by mean removal),
/// field approximates the periodization of |x|^{-alpha} itself, so with
/// d = sample at alpha and t = sample at alpha + sigma the operator identity
/// reads  Op(d.field) = kappa(alpha) * t.field,  mean removed, up to
/// discretization error.
struct PeriodizedPowerField {
  Field field;
  double q = 0.0;
};

PeriodizedPowerField sample_periodized_power(const Grid& grid, double alpha,
                                             int images);

/// Periodic surrogate of |x|^2: the truncated Fourier series of the
/// periodization of sum_d x_d^2,
///   S(x) = sum_d [ L^2/3 + (4L^2/pi^2) sum_{k=1}^K (-1)^k cos(k pi x_d/L)/k^2 ]
/// with K = max(1, min(16, n/8)) modes per axis. Matching the series (rather
/// than the Taylor polynomial) matters: the operator responds to global
/// Fourier content, and truncating the series leaves only O(K^{sigma-2})
/// ripple in the operator image. S is band-limited, so sampling is exact.
Field periodic_quadratic_mode(const Grid& grid);

/// Exact spectral image Op S of the periodic quadratic mode: the constant
/// dies and each cosine is an eigenmode with |k| = k pi / L, so
///   Op S = sum_d (4L^2/pi^2) sum_{k=1}^K (-1)^k (k pi/L)^sigma cos(k pi x_d/L)/k^2.
Field periodic_quadratic_mode_image(const Grid& grid, double sigma);

/// Gaussian spectral filter: multiplies the spectrum by exp(-|k|^2 / k_c^2)
/// with k_c = cutoff_fraction * pi / h (a fraction of the Nyquist
/// wavenumber). A Fourier multiplier commutes with the spectral operator, so
/// filtering both sides of an operator identity with the same cutoff
/// preserves the identity exactly while suppressing the near-Nyquist noise
/// that midpoint sampling of non-band-limited (e.g. singular) data aliases
/// into the band.
Field gaussian_lowpass(const Field& field, double cutoff_fraction);

} // namespace ffd
