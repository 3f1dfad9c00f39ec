#pragma once

#include <functional>
#include <optional>
#include <vector>

namespace ffd {

/// Problem data for u_t + (-Delta)^{sigma/2} A(u) = 0 on the periodic box.
/// N in {1,2,3}, sigma in (0,2), m in (0,1] (fast-diffusion range).
struct ProblemParams {
  int N = 1;
  double sigma = 1.0;
  double m = 1.0;

  void validate() const;
};

/// Critical exponents attached to (N, sigma, m), plus the L^1 and
/// Marcinkiewicz self-similar exponents where they exist.
///
///   m_c      = (N - sigma)/N      (mass-conservation threshold)
///   m_one    = N/(N + sigma)      (tail-regime threshold)
///   p_tilde  = N(1 - m)/sigma
///   beta     = 1/(N(m-1) + sigma),  alpha   = N beta      (for m > m_c)
///   beta_p   = p/(N(m-1) + sigma p), alpha_p = (N/p) beta_p (for p > max(1, p_tilde))
struct ExponentSet {
  double m_c = 0.0;
  double m_one = 0.0;
  double p_tilde = 0.0;
  std::optional<double> beta;
  std::optional<double> alpha;
  std::optional<double> p;
  std::optional<double> beta_p;
  std::optional<double> alpha_p;
};

/// kappa(alpha) = 2^sigma Gamma((N-alpha)/2) Gamma((alpha+sigma)/2)
///              / ( Gamma((N-alpha-sigma)/2) Gamma(alpha/2) ),
/// the constant in (-Delta)^{sigma/2} |x|^{-alpha} = kappa(alpha) |x|^{-alpha-sigma}.
/// Domain: 0 < alpha < N - sigma (requires sigma < N). Throws std::domain_error
/// outside it. Satisfies kappa(alpha) = kappa(N - sigma - alpha) and tends to
/// alpha (N - alpha - 2) as sigma -> 2.
double kappa(double alpha, int N, double sigma);

/// Raw formula values, exposed so identities such as beta_p|p=1 == beta can be
/// checked without the availability gate in exponent_set.
double beta_p_formula(const ProblemParams& params, double p);

ExponentSet exponent_set(const ProblemParams& params,
                         std::optional<double> p = std::nullopt);

/// Best smoothing constant for sigma = 1, m = 1:
/// C = Gamma((N+1)/2) * pi^{-(N+1)/2}, the central value of the
/// (normalized-mass) Poisson kernel profile.
double best_constant_linear(int N);

/// Coefficients of the explicit extinction solution for 0 < m < m_c:
///   U(x,t;T) = C1 (T-t)^{1/(1-m)} |x|^{-sigma/(1-m)}
///   C1 = [(1-m) kappa(alpha_e)]^{1/(1-m)},  alpha_e = m sigma/(1-m)
///   d  = [(1-m) kappa(alpha_e)]^{-1}
/// so that the extinction time obeys T(u0) <= d * ||u0||_{M_ptilde}^{1-m}.
struct ExtinctionCoefficients {
  double alpha_e = 0.0;   // power of |x| in A(U) = U^m
  double kappa_value = 0.0;
  double C1 = 0.0;
  double d = 0.0;
  double p_tilde = 0.0;
};

ExtinctionCoefficients extinction_coefficients(const ProblemParams& params);

/// Diffusion nonlinearity A (monotone, A(0) = 0) with enough metadata for
/// comparison checks. For power laws A(u) = u^m everything is exact; general
/// nonlinearities carry a lower-bound certificate A'(u) >= a u^{m-1}.
struct Nonlinearity {
  std::function<double(double)> A;
  std::function<double(double)> A_prime;
  bool is_power = false;
  double power_m = 1.0;           // meaningful when is_power
  bool concave = false;
  std::optional<double> cert_a;   // A'(u) >= cert_a * u^{cert_m - 1}
  std::optional<double> cert_m;

  double operator()(double u) const { return A(u); }
};

Nonlinearity power_nonlinearity(double m);
Nonlinearity general_nonlinearity(std::function<double(double)> A,
                                  std::function<double(double)> A_prime,
                                  bool concave,
                                  std::optional<double> cert_a = std::nullopt,
                                  std::optional<double> cert_m = std::nullopt);

/// True when A_tilde is weakly less diffusive than A (A_tilde' <= A' at every
/// sample) and A_tilde is concave along the samples. Samples must be positive
/// and increasing.
bool diffusivity_order(const Nonlinearity& A_tilde, const Nonlinearity& A,
                       const std::vector<double>& u_samples,
                       double rel_tol = 1e-12);

/// Order of the inverse functions: with B = A^{-1}, B_tilde = A_tilde^{-1},
/// checks B'(t) <= B_tilde'(t) at the given t samples (the inverse-order
/// consequence of A_tilde' <= A'). Returns the largest signed violation
/// max(B' - B_tilde'); the check passes when that is <= rel_tol * scale.
struct InverseOrderReport {
  bool holds = false;
  double max_violation = 0.0;
};

InverseOrderReport inverse_order_check(const Nonlinearity& A_tilde,
                                       const Nonlinearity& A,
                                       const std::vector<double>& t_samples,
                                       double rel_tol = 1e-9);

} // namespace ffd
