#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "ffd/exponents.hpp"

using namespace ffd;

TEST_SUITE("exponents") {

TEST_CASE("problem parameter gates") {
  CHECK_NOTHROW(ProblemParams{1, 0.5, 0.5}.validate());
  CHECK_NOTHROW(ProblemParams{3, 1.999, 1.0}.validate());
  CHECK_THROWS_AS((ProblemParams{0, 1.0, 0.5}.validate()), std::domain_error);
  CHECK_THROWS_AS((ProblemParams{4, 1.0, 0.5}.validate()), std::domain_error);
  CHECK_THROWS_AS((ProblemParams{1, 0.0, 0.5}.validate()), std::domain_error);
  CHECK_THROWS_AS((ProblemParams{1, 2.0, 0.5}.validate()), std::domain_error);
  CHECK_THROWS_AS((ProblemParams{1, 1.0, 0.0}.validate()), std::domain_error);
  CHECK_THROWS_AS((ProblemParams{1, 1.0, 1.1}.validate()), std::domain_error);
}

TEST_CASE("kappa pinned values") {
  CHECK(kappa(1.0, 3, 1.0) == doctest::Approx(2.0 / M_PI).epsilon(1e-13));
  CHECK(kappa(0.5, 2, 0.5) ==
        doctest::Approx(0.47798879748612499536).epsilon(1e-13));
  CHECK(kappa(0.25, 1, 0.5) ==
        doctest::Approx(0.13999967745248263087).epsilon(1e-13));
}

TEST_CASE("kappa symmetry alpha <-> N - sigma - alpha") {
  const struct { int N; double sigma; } cases[] = {{1, 0.5}, {2, 1.0}, {3, 1.2}};
  for (const auto& c : cases) {
    const double span = c.N - c.sigma;
    for (int i = 1; i <= 9; ++i) {
      const double a = span * i / 10.0;
      const double k1 = kappa(a, c.N, c.sigma);
      const double k2 = kappa(span - a, c.N, c.sigma);
      CHECK(std::abs(k1 - k2) <= doctest::Approx(1e-12 * k1).epsilon(0));
    }
  }
}

TEST_CASE("kappa domain gates") {
  CHECK_THROWS_AS(kappa(0.0, 3, 1.0), std::domain_error);
  CHECK_THROWS_AS(kappa(2.0, 3, 1.0), std::domain_error);  // alpha = N - sigma
  CHECK_THROWS_AS(kappa(-0.1, 3, 1.0), std::domain_error);
  CHECK_THROWS_AS(kappa(0.5, 1, 1.2), std::domain_error);  // sigma > N
  CHECK_THROWS_AS(kappa(0.5, 3, 0.0), std::domain_error);
  CHECK_THROWS_AS(kappa(0.5, 3, 2.0), std::domain_error);
  CHECK_THROWS_AS(kappa(0.5, 0, 1.0), std::domain_error);
}

TEST_CASE("kappa approaches the classical limit as sigma -> 2") {
  const double got3 = kappa(0.5, 3, 2.0 - 1e-5);
  CHECK(got3 == doctest::Approx(0.5 * (3.0 - 0.5 - 2.0)).epsilon(1e-4));
  const double got5 = kappa(1.0, 5, 2.0 - 1e-6);
  CHECK(got5 == doctest::Approx(1.0 * (5.0 - 1.0 - 2.0)).epsilon(1e-4));
}

TEST_CASE("critical exponents") {
  ExponentSet e = exponent_set({1, 1.0, 0.5});
  CHECK(e.m_c == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(e.m_one == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(e.p_tilde == doctest::Approx(0.5).epsilon(1e-14));
  REQUIRE(e.beta.has_value());
  CHECK(*e.beta == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(*e.alpha == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_FALSE(e.p.has_value());

  ExponentSet e3 = exponent_set({3, 1.0, 0.5});
  CHECK(e3.m_c == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(e3.m_one == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(e3.p_tilde == doctest::Approx(1.5).epsilon(1e-14));
  CHECK_FALSE(e3.beta.has_value());  // m below m_c: no mass-conserving scaling
  CHECK_FALSE(e3.alpha.has_value());
}

TEST_CASE("weak-norm exponents need p above the critical index") {
  ExponentSet e = exponent_set({1, 1.0, 0.5}, 2.0);
  REQUIRE(e.beta_p.has_value());
  CHECK(*e.p == doctest::Approx(2.0));
  CHECK(*e.beta_p == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
  CHECK(*e.alpha_p == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  ExponentSet blocked = exponent_set({1, 1.0, 0.5}, 1.0);  // p must exceed 1
  CHECK_FALSE(blocked.beta_p.has_value());
  CHECK_THROWS_AS(exponent_set({1, 1.0, 0.5}, -2.0), std::domain_error);

  // The raw formula degenerates to the L^1 exponent at p = 1.
  ExponentSet l1 = exponent_set({2, 1.0, 0.8});
  CHECK(beta_p_formula({2, 1.0, 0.8}, 1.0) ==
        doctest::Approx(*l1.beta).epsilon(1e-14));
}

TEST_CASE("best linear smoothing constant") {
  CHECK(best_constant_linear(1) == doctest::Approx(1.0 / M_PI).epsilon(1e-14));
  CHECK(best_constant_linear(2) ==
        doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-14));
  CHECK(best_constant_linear(3) ==
        doctest::Approx(1.0 / (M_PI * M_PI)).epsilon(1e-14));
  CHECK_THROWS_AS(best_constant_linear(0), std::domain_error);
}

TEST_CASE("extinction coefficients") {
  ExtinctionCoefficients c = extinction_coefficients({3, 1.0, 0.5});
  CHECK(c.alpha_e == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c.kappa_value == doctest::Approx(2.0 / M_PI).epsilon(1e-13));
  CHECK(c.C1 == doctest::Approx(1.0 / (M_PI * M_PI)).epsilon(1e-13));
  CHECK(c.d == doctest::Approx(M_PI).epsilon(1e-13));
  CHECK(c.p_tilde == doctest::Approx(1.5).epsilon(1e-14));

  ExtinctionCoefficients c2 = extinction_coefficients({2, 0.5, 0.5});
  CHECK(c2.alpha_e == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(c2.kappa_value ==
        doctest::Approx(0.47798879748612499536).epsilon(1e-13));
  CHECK(c2.C1 == doctest::Approx(0.057118322630557953172).epsilon(1e-13));
  CHECK(c2.d == doctest::Approx(4.1841984802124065958).epsilon(1e-13));
  CHECK(c2.p_tilde == doctest::Approx(2.0).epsilon(1e-14));

  // Above (or at) m_c mass is conserved and there is no finite-time vanishing.
  CHECK_THROWS_AS(extinction_coefficients({3, 1.0, 0.7}), std::domain_error);
  CHECK_THROWS_AS(extinction_coefficients({3, 1.0, 2.0 / 3.0}),
                  std::domain_error);
}

TEST_CASE("power nonlinearity") {
  Nonlinearity A = power_nonlinearity(0.5);
  CHECK(A.is_power);
  CHECK(A.power_m == doctest::Approx(0.5));
  CHECK(A.concave);
  REQUIRE(A.cert_a.has_value());
  CHECK(*A.cert_a == doctest::Approx(0.5));
  CHECK(*A.cert_m == doctest::Approx(0.5));
  CHECK(A(4.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(A.A_prime(4.0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(A(0.0) == 0.0);
  CHECK(A(-1.0) == 0.0);  // clamped on the negative axis

  Nonlinearity lin = power_nonlinearity(1.0);
  CHECK(lin(3.5) == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(lin.concave);

  CHECK_THROWS_AS(power_nonlinearity(0.0), std::domain_error);
  CHECK_THROWS_AS(power_nonlinearity(1.5), std::domain_error);
}

TEST_CASE("general nonlinearity requires A(0) = 0") {
  CHECK_THROWS_AS(general_nonlinearity([](double u) { return u + 1.0; },
                                       [](double) { return 1.0; }, true),
                  std::domain_error);
  Nonlinearity A = general_nonlinearity(
      [](double u) { return std::sqrt(u) + u; },
      [](double u) { return 0.5 / std::sqrt(u) + 1.0; }, true, 0.5, 0.5);
  CHECK_FALSE(A.is_power);
  CHECK(A.concave);
  CHECK(A(1.0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("diffusivity order") {
  std::vector<double> samples;
  for (double u = 1e-4; u < 10.0; u *= 1.8) samples.push_back(u);

  Nonlinearity slow = power_nonlinearity(0.5);
  Nonlinearity fast = general_nonlinearity(
      [](double u) { return std::sqrt(u) + u; },
      [](double u) { return 0.5 / std::sqrt(u) + 1.0; }, true, 0.5, 0.5);
  CHECK(diffusivity_order(slow, fast, samples));
  CHECK_FALSE(diffusivity_order(fast, slow, samples));

  Nonlinearity one = power_nonlinearity(1.0);
  Nonlinearity two = general_nonlinearity(
      [](double u) { return 2.0 * u; }, [](double) { return 2.0; }, true, 2.0,
      1.0);
  CHECK(diffusivity_order(one, two, samples));
  CHECK_FALSE(diffusivity_order(two, one, samples));

  CHECK_THROWS_AS(diffusivity_order(slow, fast, {}), std::domain_error);
  CHECK_THROWS_AS(diffusivity_order(slow, fast, {-1.0, 1.0}),
                  std::domain_error);
}

TEST_CASE("inverse order follows the diffusivity order") {
  Nonlinearity slow = power_nonlinearity(0.5);
  Nonlinearity fast = general_nonlinearity(
      [](double u) { return std::sqrt(u) + u; },
      [](double u) { return 0.5 / std::sqrt(u) + 1.0; }, true, 0.5, 0.5);
  std::vector<double> t = {0.1, 0.5, 1.0, 2.0, 5.0};

  InverseOrderReport ok = inverse_order_check(slow, fast, t);
  CHECK(ok.holds);
  InverseOrderReport bad = inverse_order_check(fast, slow, t);
  CHECK_FALSE(bad.holds);
  CHECK(bad.max_violation > 0.0);
}

}  // TEST_SUITE
