#include "ffd/exponents.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ffd/gamma.hpp"

namespace ffd {

void ProblemParams::validate() const {
  if (N < 1 || N > 3)
    throw std::domain_error("ProblemParams: N must be 1, 2 or 3, got " +
                            std::to_string(N));
  if (!(sigma > 0.0) || !(sigma < 2.0))
    throw std::domain_error("ProblemParams: sigma must lie in (0,2), got " +
                            std::to_string(sigma));
  if (!(m > 0.0) || !(m <= 1.0))
    throw std::domain_error("ProblemParams: m must lie in (0,1], got " +
                            std::to_string(m));
}

double kappa(double alpha, int N, double sigma) {
  if (N < 1)
    throw std::domain_error("kappa: N must be a positive integer");
  if (!(sigma > 0.0) || !(sigma < 2.0))
    throw std::domain_error("kappa: sigma must lie in (0,2)");
  if (!(alpha > 0.0) || !(alpha < N - sigma))
    throw std::domain_error("kappa: alpha must lie in (0, N - sigma), got " +
                            std::to_string(alpha));
  const double log_value = sigma * std::log(2.0) +
                           log_gamma((N - alpha) / 2.0) +
                           log_gamma((alpha + sigma) / 2.0) -
                           log_gamma((N - alpha - sigma) / 2.0) -
                           log_gamma(alpha / 2.0);
  return std::exp(log_value);
}

double beta_p_formula(const ProblemParams& params, double p) {
  const double denom = params.N * (params.m - 1.0) + params.sigma * p;
  return p / denom;
}

ExponentSet exponent_set(const ProblemParams& params, std::optional<double> p) {
  params.validate();
  ExponentSet e;
  e.m_c = (params.N - params.sigma) / params.N;
  e.m_one = params.N / (params.N + params.sigma);
  e.p_tilde = params.N * (1.0 - params.m) / params.sigma;
  if (params.m > e.m_c) {
    const double beta = 1.0 / (params.N * (params.m - 1.0) + params.sigma);
    e.beta = beta;
    e.alpha = params.N * beta;
  }
  if (p) {
    if (!(*p > 0.0))
      throw std::domain_error("exponent_set: p must be positive");
    e.p = p;
    if (*p > std::max(1.0, e.p_tilde)) {
      const double bp = beta_p_formula(params, *p);
      e.beta_p = bp;
      e.alpha_p = (params.N / *p) * bp;
    }
  }
  return e;
}

double best_constant_linear(int N) {
  if (N < 1)
    throw std::domain_error("best_constant_linear: N must be positive");
  return gamma_fn((N + 1) / 2.0) * std::pow(M_PI, -(N + 1) / 2.0);
}

ExtinctionCoefficients extinction_coefficients(const ProblemParams& params) {
  params.validate();
  const double m_c = (params.N - params.sigma) / params.N;
  if (!(params.m < m_c))
    throw std::domain_error(
        "extinction_coefficients: requires 0 < m < m_c = (N - sigma)/N");
  ExtinctionCoefficients out;
  out.alpha_e = params.m * params.sigma / (1.0 - params.m);
  out.kappa_value = kappa(out.alpha_e, params.N, params.sigma);
  const double base = (1.0 - params.m) * out.kappa_value;
  out.C1 = std::pow(base, 1.0 / (1.0 - params.m));
  out.d = 1.0 / base;
  out.p_tilde = params.N * (1.0 - params.m) / params.sigma;
  return out;
}

Nonlinearity power_nonlinearity(double m) {
  if (!(m > 0.0 && m <= 1.0))
    throw std::domain_error("power_nonlinearity: m must lie in (0,1]");
  Nonlinearity nl;
  nl.A = [m](double u) { return u <= 0.0 ? 0.0 : std::pow(u, m); };
  nl.A_prime = [m](double u) {
    return u <= 0.0 ? 0.0 : m * std::pow(u, m - 1.0);
  };
  nl.is_power = true;
  nl.power_m = m;
  nl.concave = true;  // m <= 1
  nl.cert_a = m;
  nl.cert_m = m;
  return nl;
}

Nonlinearity general_nonlinearity(std::function<double(double)> A,
                                  std::function<double(double)> A_prime,
                                  bool concave,
                                  std::optional<double> cert_a,
                                  std::optional<double> cert_m) {
  Nonlinearity nl;
  nl.A = std::move(A);
  nl.A_prime = std::move(A_prime);
  nl.is_power = false;
  nl.concave = concave;
  nl.cert_a = cert_a;
  nl.cert_m = cert_m;
  if (std::abs(nl.A(0.0)) > 1e-14)
    throw std::domain_error("general_nonlinearity: A(0) must vanish");
  return nl;
}

bool diffusivity_order(const Nonlinearity& A_tilde, const Nonlinearity& A,
                       const std::vector<double>& u_samples, double rel_tol) {
  if (u_samples.empty())
    throw std::domain_error("diffusivity_order: no samples");
  double prev_slope = -1.0;
  bool first = true;
  for (double u : u_samples) {
    if (!(u > 0.0))
      throw std::domain_error("diffusivity_order: samples must be positive");
    const double dt = A_tilde.A_prime(u);
    const double da = A.A_prime(u);
    if (dt > da * (1.0 + rel_tol) + rel_tol) return false;
    // concavity of A_tilde along the sample sequence: A' non-increasing
    if (!first && dt > prev_slope * (1.0 + rel_tol) + rel_tol) return false;
    prev_slope = dt;
    first = false;
  }
  return true;
}

namespace {

// Invert a strictly increasing A by bisection on [0, hi], expanding hi as
// needed. Adequate for the desk-scale sample checks this feeds.
double invert(const std::function<double(double)>& A, double t) {
  double hi = 1.0;
  while (A(hi) < t) {
    hi *= 2.0;
    if (hi > 1e18)
      throw std::runtime_error("inverse_order_check: failed to bracket root");
  }
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (A(mid) < t)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace

InverseOrderReport inverse_order_check(const Nonlinearity& A_tilde,
                                       const Nonlinearity& A,
                                       const std::vector<double>& t_samples,
                                       double rel_tol) {
  if (t_samples.empty())
    throw std::domain_error("inverse_order_check: no samples");
  InverseOrderReport rep;
  rep.holds = true;
  double scale = 0.0;
  for (double t : t_samples) {
    if (!(t > 0.0))
      throw std::domain_error("inverse_order_check: samples must be positive");
    const double b = invert(A.A, t);
    const double bt = invert(A_tilde.A, t);
    const double db = 1.0 / A.A_prime(b);        // B'(t)
    const double dbt = 1.0 / A_tilde.A_prime(bt); // B_tilde'(t)
    rep.max_violation = std::max(rep.max_violation, db - dbt);
    scale = std::max({scale, std::abs(db), std::abs(dbt)});
  }
  rep.holds = rep.max_violation <= rel_tol * scale;
  return rep;
}

} // namespace ffd
