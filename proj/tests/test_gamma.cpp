#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "ffd/gamma.hpp"

using ffd::gamma_fn;
using ffd::log_gamma;

TEST_SUITE("gamma") {

TEST_CASE("classic values") {
  CHECK(gamma_fn(1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gamma_fn(2.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gamma_fn(5.0) == doctest::Approx(24.0).epsilon(1e-14));
  CHECK(gamma_fn(0.5) == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-14));
  CHECK(gamma_fn(1.5) == doctest::Approx(0.5 * std::sqrt(M_PI)).epsilon(1e-14));
}

TEST_CASE("agrees with the standard library") {
  for (double x = 1e-3; x < 250.0; x *= 1.37) {
    const double ours = log_gamma(x);
    const double ref = std::lgamma(x);
    CHECK(std::abs(ours - ref) <=
          doctest::Approx(1e-12 * std::max(1.0, std::abs(ref))).epsilon(0));
    if (x < 170.0) {
      CHECK(gamma_fn(x) == doctest::Approx(std::tgamma(x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("recurrence Gamma(x+1) = x Gamma(x)") {
  for (double x : {0.17, 0.5, 1.3, 4.75, 20.0, 91.5}) {
    CHECK(gamma_fn(x + 1.0) == doctest::Approx(x * gamma_fn(x)).epsilon(1e-13));
    CHECK(log_gamma(x + 1.0) ==
          doctest::Approx(std::log(x) + log_gamma(x)).epsilon(1e-12));
  }
}

TEST_CASE("rejects the non-positive axis") {
  CHECK_THROWS_AS(gamma_fn(0.0), std::domain_error);
  CHECK_THROWS_AS(gamma_fn(-1.0), std::domain_error);
  CHECK_THROWS_AS(gamma_fn(-2.5), std::domain_error);
  CHECK_THROWS_AS(log_gamma(0.0), std::domain_error);
  CHECK_THROWS_AS(log_gamma(-0.5), std::domain_error);
}

TEST_CASE("large arguments stay finite in log form") {
  const double v = log_gamma(250.0);
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(std::lgamma(250.0)).epsilon(1e-13));
}

}  // TEST_SUITE
