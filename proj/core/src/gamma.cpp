#include "ffd/gamma.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ffd {

namespace {

// Lanczos coefficients for g = 607/128, 15 terms (Godfrey's set).
// Relative error below 1e-14 across the positive real axis in double
// precision, which is comfortably more than the 13 digits required of
// the Gamma-ratio constants built on top of this.
constexpr double lanczos_g = 607.0 / 128.0;
constexpr double lanczos_c[15] = {
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
};

constexpr double half_log_two_pi = 0.91893853320467274178032973640562;

void require_positive(double x, const char* who) {
  if (!(x > 0.0)) {
    throw std::domain_error(std::string(who) +
                            ": argument must be positive, got " +
                            std::to_string(x));
  }
}

double lanczos_sum(double x) {
  double s = lanczos_c[0];
  for (int k = 1; k < 15; ++k) s += lanczos_c[k] / (x + k - 1.0);
  return s;
}

} // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  // Series written for Gamma(x) = log form of
  //   sqrt(2 pi) * (x + g - 1/2)^(x - 1/2) * exp(-(x + g - 1/2)) * S(x)
  const double base = x + lanczos_g - 0.5;
  return half_log_two_pi + (x - 0.5) * std::log(base) - base +
         std::log(lanczos_sum(x));
}

double gamma_fn(double x) {
  require_positive(x, "gamma_fn");
  if (x > 100.0) return std::exp(log_gamma(x));
  const double base = x + lanczos_g - 0.5;
  return std::sqrt(2.0 * M_PI) * std::pow(base, x - 0.5) * std::exp(-base) *
         lanczos_sum(x);
}

} // namespace ffd
