#include <cmath>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "ffd/rearrange.hpp"
#include "ffd/selfsim.hpp"
#include "ffd/verify.hpp"
#include "json.hpp"

using namespace ffd;
namespace fs = std::filesystem;

namespace {

SelfSimilarProfile poisson_profile() {
  SelfSimilarProfile prof;
  prof.kind = ProfileKind::Barenblatt;
  prof.params = {1, 1.0, 1.0};
  prof.M = 1.0;
  prof.quantity = 1.0;
  prof.alpha = 1.0;
  prof.beta = 1.0;
  prof.grid = Grid{1, 512, 20.0};
  prof.xi_max = 2000.0;
  const int samples = 4000;
  for (int i = 0; i < samples; ++i) {
    const double xi = 1e-3 * std::pow(2e6, static_cast<double>(i) / (samples - 1));
    prof.xi.push_back(xi);
    prof.F.push_back(1.0 / (M_PI * (1.0 + xi * xi)));
  }
  prof.F0 = 1.0 / M_PI;
  prof.tail = tail_exponent_fit(prof.xi, prof.F, 100.0, 1500.0);
  return prof;
}

Field centered_bump(const Grid& g, double mass) {
  Field f = sample_field(g, [](const std::array<double, 3>& x) {
    return std::exp(-x[0] * x[0]);
  });
  const double scale = mass / f.mass();
  for (auto& v : f.values) v *= scale;
  return f;
}

}  // namespace

TEST_SUITE("verify") {

TEST_CASE("theorem tags have stable names") {
  CHECK(theorem_tag_name(TheoremTag::Smoothing) == "Smoothing");
  CHECK(theorem_tag_name(TheoremTag::SmoothingLp) == "SmoothingLp");
  CHECK(theorem_tag_name(TheoremTag::MarcinkiewiczSmoothing) ==
        "MarcinkiewiczSmoothing");
  CHECK(theorem_tag_name(TheoremTag::ConcentrationComparison) ==
        "ConcentrationComparison");
  CHECK(theorem_tag_name(TheoremTag::DiffusivityComparison) ==
        "DiffusivityComparison");
  CHECK(theorem_tag_name(TheoremTag::ExtinctionBound) == "ExtinctionBound");
}

TEST_CASE("profile norms of the closed-form profile") {
  SelfSimilarProfile prof = poisson_profile();
  CHECK(profile_lp_norm(prof, 1.0) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(profile_lp_norm(prof, 2.0) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(0.01));
}

TEST_CASE("constants manifest round trip") {
  SelfSimilarProfile prof = poisson_profile();
  ConstantsManifest manifest;
  manifest.add_profile(prof, {2.0});
  REQUIRE(manifest.entries.size() == 1);
  CHECK(manifest.entries[0].kind == "barenblatt");
  CHECK(manifest.entries[0].F0 == doctest::Approx(1.0 / M_PI).epsilon(1e-12));

  const fs::path path = fs::temp_directory_path() / "ffd_test_constants.json";
  manifest.save(path.string());
  ConstantsManifest back = ConstantsManifest::load(path.string());
  REQUIRE(back.entries.size() == 1);
  CHECK(back.entries[0].F0 == doctest::Approx(manifest.entries[0].F0).epsilon(1e-14));
  REQUIRE(back.entries[0].lp_norms.size() == 1);
  CHECK(back.entries[0].lp_norms[0].second ==
        doctest::Approx(manifest.entries[0].lp_norms[0].second).epsilon(1e-14));

  const ConstantsManifest::Entry* hit =
      back.find("barenblatt", ProblemParams{1, 1.0, 1.0});
  CHECK(hit != nullptr);
  CHECK(back.find("barenblatt", ProblemParams{2, 1.0, 1.0}) == nullptr);
  CHECK(back.find("marcinkiewicz", ProblemParams{1, 1.0, 1.0}, 2.0) == nullptr);
  fs::remove(path);
}

TEST_CASE("report serialization and the pass invariant") {
  Grid g{1, 256, 20.0};
  SolverConfig cfg;
  cfg.t_end = 1.0;
  cfg.dt_initial = 1e-3;
  cfg.dt_growth = 1.2;
  cfg.dt_max = 5e-3;
  cfg.snapshot_times = {0.5, 1.0};
  Trajectory traj = evolve(centered_bump(g, 1.0), power_nonlinearity(1.0),
                           {1, 1.0, 1.0}, cfg);
  EstimateReport rep =
      check_smoothing_L1(traj, {1, 1.0, 1.0}, best_constant_linear(1), 0.02);
  CHECK(rep.pass);
  CHECK(rep.conclusive);
  CHECK(rep.worst_margin <= 1.02);
  CHECK(rep.worst_margin > 0.0);
  REQUIRE(rep.breakdown.size() == 2);

  nlohmann::json j = nlohmann::json::parse(report_to_json(rep));
  CHECK(j["theorem"] == "Smoothing");
  CHECK(j["pass"] == rep.pass);
  CHECK(j["worst_margin"] == doctest::Approx(rep.worst_margin));
  CHECK(j["breakdown"].size() == 2);
  CHECK((rep.worst_margin <= 1.0 + rep.tolerance) == rep.pass);
}

TEST_CASE("smoothing check fails on a fabricated violation") {
  Grid g{1, 4, 1.0};
  Trajectory traj;
  traj.initial_mass = 1.0;
  traj.initial_sup = 1.0;
  Snapshot s;
  s.time = 1.0;
  s.field = Field(g);
  s.field.values = {2.0, 2.0, 2.0, 2.0};  // sup far above F0 = 1/pi
  s.diagnostics.sup_norm = 2.0;
  s.diagnostics.mass = s.field.mass();
  traj.snapshots.push_back(std::move(s));
  EstimateReport rep =
      check_smoothing_L1(traj, {1, 1.0, 1.0}, best_constant_linear(1), 0.05);
  CHECK_FALSE(rep.pass);
  CHECK(rep.worst_margin > 2.0);

  CHECK_THROWS_AS(
      check_smoothing_L1(traj, {1, 1.0, 1.0}, -1.0, 0.05),
      std::invalid_argument);
  CHECK_THROWS_AS(check_smoothing_L1(traj, {3, 1.0, 0.5}, 1.0, 0.05),
                  std::domain_error);  // m below m_c
}

TEST_CASE("Lp smoothing on the linear flow") {
  Grid g{1, 256, 20.0};
  SolverConfig cfg;
  cfg.t_end = 1.0;
  cfg.dt_initial = 2e-3;
  cfg.snapshot_times = {0.5, 1.0};
  Trajectory traj = evolve(centered_bump(g, 2.0), power_nonlinearity(1.0),
                           {1, 1.0, 1.0}, cfg);
  const double Cp = profile_lp_norm(poisson_profile(), 2.0);
  EstimateReport rep = check_smoothing_Lp(traj, {1, 1.0, 1.0}, 2.0, Cp, 0.05);
  CHECK(rep.pass);
  CHECK(rep.worst_margin <= 1.0);
  CHECK_THROWS_AS(check_smoothing_Lp(traj, {1, 1.0, 1.0}, 0.5, Cp, 0.05),
                  std::invalid_argument);
}

TEST_CASE("weak-norm smoothing requires the initial snapshot") {
  Grid g{1, 128, 10.0};
  SolverConfig cfg;
  cfg.t_end = 0.5;
  cfg.dt_initial = 2e-3;
  cfg.epsilon_reg = 4e-3;
  cfg.snapshot_times = {0.25, 0.5};  // t_start itself missing
  Field u0 = sample_field(g, [](const std::array<double, 3>& x) {
    return std::min(std::pow(std::abs(x[0]), -0.5), 4.0);
  });
  Trajectory traj = evolve(u0, power_nonlinearity(0.5), {1, 1.0, 0.5}, cfg);
  CHECK_THROWS_AS(
      check_smoothing_marcinkiewicz(traj, {1, 1.0, 0.5}, 2.0, 1.0, 0.05),
      std::invalid_argument);

  cfg.snapshot_times = {0.0, 0.25, 0.5};
  Trajectory with_init = evolve(u0, power_nonlinearity(0.5), {1, 1.0, 0.5}, cfg);
  // A generous profile constant makes the margin land below one; the point
  // here is the plumbing, not the sharp constant.
  EstimateReport rep =
      check_smoothing_marcinkiewicz(with_init, {1, 1.0, 0.5}, 2.0, 10.0, 0.05);
  CHECK(rep.pass);
  CHECK(rep.breakdown.size() >= 2);
}

TEST_CASE("concentration comparison on a nested pair") {
  Grid g{1, 256, 10.0};
  Field u0 = sample_field(g, [](const std::array<double, 3>& x) {
    return std::exp(-(x[0] - 1.5) * (x[0] - 1.5));
  });
  Field extra = sample_field(g, [](const std::array<double, 3>& x) {
    return 0.4 * std::exp(-4.0 * x[0] * x[0]);
  });
  Field sum(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    sum.values[i] = u0.values[i] + extra.values[i];
  Field v0 = spherical_rearrangement(sum);

  SolverConfig base;
  base.dt_initial = 1e-3;
  base.dt_growth = 1.2;
  base.dt_max = 5e-3;
  base.epsilon_reg = 1e-3;
  EstimateReport rep = check_concentration_monotone(
      u0, v0, power_nonlinearity(0.5), std::nullopt, {1, 1.0, 0.5},
      {0.1, 0.25}, 1e-3, base);
  CHECK(rep.pass);
  CHECK(rep.conclusive);
  CHECK(rep.tag == TheoremTag::ConcentrationComparison);

  // v0 must be radially non-increasing.
  CHECK_THROWS_AS(
      check_concentration_monotone(u0, sum, power_nonlinearity(0.5),
                                   std::nullopt, {1, 1.0, 0.5}, {0.1}, 1e-3,
                                   base),
      std::invalid_argument);
  // u0^# must start below v0.
  Field too_heavy(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    too_heavy.values[i] = 2.0 * u0.values[i];
  CHECK_THROWS_AS(
      check_concentration_monotone(too_heavy, v0, power_nonlinearity(0.5),
                                   std::nullopt, {1, 1.0, 0.5}, {0.1}, 1e-3,
                                   base),
      std::invalid_argument);
  // The comparison nonlinearity must be concave.
  Nonlinearity convex = general_nonlinearity(
      [](double u) { return u * u; }, [](double u) { return 2.0 * u; }, false);
  CHECK_THROWS_AS(
      check_concentration_monotone(u0, v0, convex, std::nullopt,
                                   {1, 1.0, 0.5}, {0.1}, 1e-3, base),
      std::invalid_argument);
}

TEST_CASE("diffusivity order gate in the two-nonlinearity variant") {
  Grid g{1, 128, 10.0};
  Field u0 = centered_bump(g, 1.0);
  Field v0 = spherical_rearrangement(u0);
  SolverConfig base;
  base.dt_initial = 2e-3;
  base.epsilon_reg = 1e-3;

  // A_tilde = 2u is more diffusive than A = u: rejected.
  Nonlinearity faster = general_nonlinearity(
      [](double u) { return 2.0 * u; }, [](double) { return 2.0; }, true, 2.0,
      1.0);
  CHECK_THROWS_AS(
      check_concentration_monotone(u0, v0, power_nonlinearity(1.0), faster,
                                   {1, 1.0, 1.0}, {0.1}, 1e-3, base),
      std::invalid_argument);

  // The admissible direction runs and reports DiffusivityComparison.
  EstimateReport rep = check_concentration_monotone(
      u0, v0, faster, power_nonlinearity(1.0), {1, 1.0, 1.0}, {0.1}, 1e-3,
      base);
  CHECK(rep.tag == TheoremTag::DiffusivityComparison);
  CHECK(rep.pass);
}

TEST_CASE("extinction bound is inconclusive on a short horizon") {
  ProblemParams params{2, 0.5, 0.5};
  Grid g{2, 64, 4.0};
  ExplicitExtinctionSolution U = explicit_extinction_solution(params, 0.2);
  Field u0 = sample_field(g, [&](const std::array<double, 3>& x) {
    const double r = std::hypot(x[0], x[1]);
    return std::min(U(r, 0.0), 1.0);
  });
  SolverConfig cfg;
  cfg.t_end = 0.05;  // far below the bound: cannot conclude
  cfg.dt_initial = 1e-3;
  cfg.dt_growth = 1.2;
  cfg.dt_max = 5e-3;
  cfg.snapshot_times = {0.02, 0.05};
  cfg.epsilon_reg = 1e-3;
  EstimateReport rep = check_extinction_bound(u0, params, cfg, 0.05);
  CHECK_FALSE(rep.conclusive);
  CHECK(rep.tag == TheoremTag::ExtinctionBound);
  // Domination against the explicit solution is still sampled.
  CHECK(rep.breakdown.size() >= 2);
  CHECK(rep.pass);

  CHECK_THROWS_AS(check_extinction_bound(u0, {2, 0.5, 0.9}, cfg, 0.05),
                  std::domain_error);  // m above m_c
}

TEST_CASE("general nonlinearity certificates") {
  ProblemParams params{3, 1.0, 0.5};
  Grid g{3, 32, 2.0};
  Field u0 = sample_field(g, [](const std::array<double, 3>& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    return 1e-4 * std::exp(-4.0 * r2);
  });
  SolverConfig cfg;
  cfg.t_end = 0.1;
  cfg.dt_initial = 2e-3;
  cfg.dt_max = 5e-3;
  // Heavy regularization keeps the inner iteration cheap; the margins under
  // test depend only on the initial gauge and the horizon, not the dynamics.
  cfg.epsilon_reg = 1e-4;

  // An overstated certificate slope is rejected against the sampled A'.
  Nonlinearity lying = general_nonlinearity(
      [](double u) { return std::sqrt(std::max(u, 0.0)); },
      [](double u) { return 0.5 / std::sqrt(std::max(u, 1e-300)); }, true, 0.9,
      0.5);
  CHECK_THROWS_AS(check_general_nonlinearity(u0, lying, params, cfg, 1.0, 0.05),
                  std::runtime_error);

  // Certificate exponent must match params.m.
  Nonlinearity wrong_m = general_nonlinearity(
      [](double u) { return std::sqrt(std::max(u, 0.0)); },
      [](double u) { return 0.5 / std::sqrt(std::max(u, 1e-300)); }, true, 0.5,
      0.6);
  CHECK_THROWS_AS(
      check_general_nonlinearity(u0, wrong_m, params, cfg, 1.0, 0.05),
      std::invalid_argument);

  // A = 2 u^{1/2} has A' = u^{-1/2}: certificate a = 1, so the extinction
  // bound shrinks by m/a = 1/2 against A = u^{1/2} (a = 1/2, factor 1).
  Nonlinearity doubled = general_nonlinearity(
      [](double u) { return 2.0 * std::sqrt(std::max(u, 0.0)); },
      [](double u) { return 1.0 / std::sqrt(std::max(u, 1e-300)); }, true, 1.0,
      0.5);
  EstimateReport rep_doubled =
      check_general_nonlinearity(u0, doubled, params, cfg, 1.0, 0.05);
  Nonlinearity plain = general_nonlinearity(
      [](double u) { return std::sqrt(std::max(u, 0.0)); },
      [](double u) { return 0.5 / std::sqrt(std::max(u, 1e-300)); }, true, 0.5,
      0.5);
  EstimateReport rep_plain =
      check_general_nonlinearity(u0, plain, params, cfg, 1.0, 0.05);
  // The tiny datum cannot extinguish within the horizon, so both runs land in
  // the over-horizon branch whose margin is t_end / bound: the ratio of the
  // margins is the inverse ratio of the bounds.
  REQUIRE(rep_doubled.worst_margin > 2.0);
  REQUIRE(rep_plain.worst_margin > 2.0);
  CHECK(rep_doubled.worst_margin ==
        doctest::Approx(2.0 * rep_plain.worst_margin).epsilon(1e-9));
}

TEST_CASE("minimal solution run is monotone in the cap") {
  ProblemParams params{2, 0.5, 0.5};
  Grid g{2, 64, 6.0};
  SolverConfig cfg;
  cfg.t_end = 0.1;
  cfg.dt_initial = 1e-3;
  cfg.dt_growth = 1.2;
  cfg.dt_max = 5e-3;
  cfg.snapshot_times = {0.05, 0.1};
  cfg.epsilon_reg = 1e-3;
  auto u0_radial = [](double r) { return std::min(1.0 / r, 40.0); };
  MinimalSolutionRun run = minimal_solution_run(
      u0_radial, g, params, power_nonlinearity(0.5), {0.5, 1.0, 2.0}, cfg);
  CHECK(run.monotonicity_defect <= 1e-6);
  CHECK(run.cap_convergence >= 0.0);
  CHECK(run.trajectory.snapshots.size() == 2);
}

}  // TEST_SUITE
