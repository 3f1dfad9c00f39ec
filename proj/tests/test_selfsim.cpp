#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "ffd/selfsim.hpp"
#include "json.hpp"

using namespace ffd;
namespace fs = std::filesystem;

namespace {

// Closed-form self-similar profile of the sigma = 1, m = 1, N = 1 flow:
// F(xi) = (1/pi) / (1 + xi^2), alpha = beta = 1 at unit mass.
SelfSimilarProfile poisson_profile(int n, double L, double xi_hi) {
  SelfSimilarProfile prof;
  prof.kind = ProfileKind::Barenblatt;
  prof.params = {1, 1.0, 1.0};
  prof.M = 1.0;
  prof.quantity = 1.0;
  prof.alpha = 1.0;
  prof.beta = 1.0;
  prof.grid = Grid{1, n, L};
  prof.xi_max = xi_hi;
  const int samples = 1200;
  const double lo = 1e-3;
  for (int i = 0; i < samples; ++i) {
    const double xi =
        lo * std::pow(1.6 * xi_hi / lo, static_cast<double>(i) / (samples - 1));
    prof.xi.push_back(xi);
    prof.F.push_back(1.0 / (M_PI * (1.0 + xi * xi)));
  }
  prof.F0 = 1.0 / M_PI;
  return prof;
}

}  // namespace

TEST_SUITE("selfsim") {

TEST_CASE("tail fit recovers an exact power law") {
  std::vector<double> xi, F;
  for (int i = 0; i < 200; ++i) {
    const double x = 0.5 * std::pow(40.0, i / 199.0);
    xi.push_back(x);
    F.push_back(3.0 * std::pow(x, -2.5));
  }
  TailFit fit = tail_exponent_fit(xi, F, 1.0, 15.0);
  CHECK(fit.exponent == doctest::Approx(2.5).epsilon(1e-10));
  CHECK(fit.half_width <= 1e-9);
  CHECK(fit.n_samples >= 10);

  CHECK_THROWS_AS(tail_exponent_fit(xi, F, 1.0, 1.01), std::runtime_error);
  CHECK_THROWS_AS(tail_exponent_fit(xi, F, 15.0, 1.0), std::invalid_argument);
  std::vector<double> short_xi(xi.begin(), xi.begin() + 5);
  CHECK_THROWS_AS(tail_exponent_fit(short_xi, F, 1.0, 15.0),
                  std::invalid_argument);
}

TEST_CASE("shell averages of a radial function") {
  Grid g{2, 128, 4.0};
  Field f = sample_field(g, [](const std::array<double, 3>& x) {
    return x[0] * x[0] + x[1] * x[1];
  });
  RadialSamples s = shell_average(f, 64);
  REQUIRE(s.radius.size() == s.value.size());
  REQUIRE(s.radius.size() > 16);
  for (std::size_t i = 1; i < s.radius.size(); ++i)
    CHECK(s.radius[i] > s.radius[i - 1]);
  for (std::size_t i = 0; i < s.radius.size(); ++i) {
    if (s.radius[i] < 0.3 || s.radius[i] > 3.5) continue;  // bin-edge effects
    CHECK(s.value[i] ==
          doctest::Approx(s.radius[i] * s.radius[i]).epsilon(0.05));
  }
  CHECK_THROWS_AS(shell_average(f, 4), std::invalid_argument);
}

TEST_CASE("profile interpolation") {
  std::vector<double> xi, F;
  for (int i = 0; i < 60; ++i) {
    const double x = 0.1 * std::pow(100.0, i / 59.0);
    xi.push_back(x);
    F.push_back(2.0 * std::pow(x, -1.5));
  }
  // Log-log interpolation is exact on exact powers.
  CHECK(profile_interpolate(xi, F, 0.731) ==
        doctest::Approx(2.0 * std::pow(0.731, -1.5)).epsilon(1e-12));
  // Flat core below the first sample.
  CHECK(profile_interpolate(xi, F, 1e-4) == doctest::Approx(F[0]).epsilon(1e-14));
  // Power-law extrapolation beyond the last sample.
  CHECK(profile_interpolate(xi, F, 25.0) ==
        doctest::Approx(2.0 * std::pow(25.0, -1.5)).epsilon(1e-10));
  CHECK_THROWS_AS(profile_interpolate({1.0}, {1.0, 2.0}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("expected tail exponents by regime") {
  // sigma = 1, N = 1: m_one = 1/2 splits the fat-tail and kernel-tail ranges.
  CHECK(expected_tail_exponent({1, 1.0, 0.4}) ==
        doctest::Approx(1.0 / 0.6).epsilon(1e-14));
  CHECK(expected_tail_exponent({1, 1.0, 0.75}) ==
        doctest::Approx(2.0).epsilon(1e-14));
  // The branches agree at the threshold.
  CHECK(expected_tail_exponent({1, 1.0, 0.5}) ==
        doctest::Approx(2.0).epsilon(1e-14));
  // Marcinkiewicz profiles decay like the datum.
  CHECK(expected_tail_exponent({1, 1.0, 0.5}, 2.0) ==
        doctest::Approx(0.5).epsilon(1e-14));
  CHECK(expected_tail_exponent({3, 1.5, 0.9}) ==
        doctest::Approx(4.5).epsilon(1e-14));
}

TEST_CASE("explicit extinction solution") {
  ProblemParams params{3, 1.0, 0.5};
  ExplicitExtinctionSolution U = explicit_extinction_solution(params, 1.0);
  CHECK(U.T == doctest::Approx(1.0));
  CHECK(U.coeff.C1 == doctest::Approx(1.0 / (M_PI * M_PI)).epsilon(1e-13));
  // U = C1 (T-t)^2 r^{-2} here.
  CHECK(U(0.5, 0.36) ==
        doctest::Approx((1.0 / (M_PI * M_PI)) * 0.64 * 0.64 * 4.0)
            .epsilon(1e-12));
  CHECK(U(2.0, 1.0) == 0.0);
  CHECK(U(2.0, 1.5) == 0.0);
  CHECK_THROWS_AS(U(0.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(U(-1.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(explicit_extinction_solution({1, 1.0, 0.5}, 1.0),
                  std::domain_error);  // m_c = 0: no extinction regime
}

TEST_CASE("elliptic residual of the closed-form profile is small") {
  SelfSimilarProfile prof = poisson_profile(2048, 40.0, 12.0);
  CHECK(elliptic_residual(prof) <= 1e-2);
}

TEST_CASE("computed linear profile approximates the closed form") {
  ProblemParams params{1, 1.0, 1.0};
  Grid g{1, 1024, 40.0};
  ProfileOptions opts;
  // Later times shrink the initial-ball smearing bias (~ radius^2 / 3t^2).
  opts.times = {2.0, 4.0};
  opts.dt_max = 2e-3;
  opts.dirac_radius_cells = 2.0;
  SelfSimilarProfile prof = barenblatt_profile(params, 1.0, g, opts);
  CHECK(prof.F0 == doctest::Approx(1.0 / M_PI).epsilon(0.03));
  CHECK(prof.collapse_error <= 0.02);
  CHECK(prof.quantity == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(prof.alpha == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(prof.beta == doctest::Approx(1.0).epsilon(1e-14));
  REQUIRE(prof.snapshot_tails.size() == 2);
  // Over the fitted window [xi_max/4, xi_max/2] the closed form has not yet
  // reached its asymptotic decay, so compare against its slope on the same
  // window rather than the limit exponent.
  {
    std::vector<double> cx, cF;
    for (int i = 0; i < 200; ++i) {
      const double x = 0.2 * prof.xi_max *
                       std::pow(3.0, static_cast<double>(i) / 199.0);
      cx.push_back(x);
      cF.push_back(1.0 / (M_PI * (1.0 + x * x)));
    }
    const TailFit ref =
        tail_exponent_fit(cx, cF, 0.25 * prof.xi_max, 0.5 * prof.xi_max);
    CHECK(prof.tail.exponent == doctest::Approx(ref.exponent).epsilon(0.05));
  }
  CHECK(prof.tail.exponent > 1.2);
  CHECK(prof.tail.exponent < 2.05);
  // Profile values decrease and the window is positive.
  CHECK(prof.xi_max > 1.0);
  REQUIRE(prof.xi.size() > 20);
}

TEST_CASE("profile construction gates") {
  Grid g{1, 256, 20.0};
  CHECK_THROWS_AS(barenblatt_profile({3, 1.0, 0.5}, 1.0, Grid{3, 16, 2.0}, {}),
                  std::domain_error);  // m below m_c
  CHECK_THROWS_AS(barenblatt_profile({1, 1.0, 0.5}, -1.0, g, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(barenblatt_profile({2, 1.0, 0.9}, 1.0, g, {}),
                  std::invalid_argument);  // dimension mismatch
  CHECK_THROWS_AS(marcinkiewicz_profile({1, 1.0, 1.0}, 2.0, 1.0, g, {}),
                  std::domain_error);  // m = 1 has no Marcinkiewicz branch
  CHECK_THROWS_AS(marcinkiewicz_profile({1, 1.0, 0.5}, 1.0, 1.0, g, {}),
                  std::domain_error);  // p must exceed max(1, p_tilde)
  ProfileOptions bad;
  bad.caps = {8.0, 4.0};
  CHECK_THROWS_AS(marcinkiewicz_profile({1, 1.0, 0.5}, 2.0, 1.0, g, bad),
                  std::invalid_argument);
  ProfileOptions empty_times;
  empty_times.times = {};
  CHECK_THROWS_AS(barenblatt_profile({1, 1.0, 1.0}, 1.0, g, empty_times),
                  std::invalid_argument);
}

TEST_CASE("profile export round trip") {
  SelfSimilarProfile prof = poisson_profile(128, 10.0, 5.0);
  const fs::path dir = fs::temp_directory_path() / "ffd_test_profile";
  fs::create_directories(dir);
  const fs::path csv = dir / "profile.csv";
  const fs::path meta = dir / "profile.json";
  write_profile(prof, csv.string(), meta.string());

  std::ifstream cin(csv);
  std::string header;
  std::getline(cin, header);
  CHECK(header == "xi,F");
  int rows = 0;
  std::string line;
  while (std::getline(cin, line))
    if (!line.empty()) ++rows;
  CHECK(rows == static_cast<int>(prof.xi.size()));

  std::ifstream jin(meta);
  nlohmann::json j = nlohmann::json::parse(jin);
  CHECK(j["kind"] == "barenblatt");
  CHECK(j["F0"] == doctest::Approx(1.0 / M_PI));
  CHECK(j["params"]["N"] == 1);
  fs::remove_all(dir);
}

}  // TEST_SUITE
