#include "ffd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "ffd/rearrange.hpp"

namespace ffd {

namespace {

void finalize(EstimateReport& report) {
  report.pass = report.worst_margin <= 1.0 + report.tolerance;
}

void push_sample(EstimateReport& report, double time, double ratio,
                 std::string note) {
  report.worst_margin = std::max(report.worst_margin, ratio);
  report.breakdown.push_back({time, ratio, std::move(note)});
}

std::vector<double> log_samples(double lo, double hi, int n) {
  std::vector<double> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  }
  return out;
}

// Largest positive prefix-mass excess of f over g (same grid).
double prefix_gap(const Field& f, const Field& g) {
  const auto pf = prefix_masses(decreasing_rearrangement(f));
  const auto pg = prefix_masses(decreasing_rearrangement(g));
  double gap = 0.0;
  for (std::size_t j = 0; j < pf.size(); ++j) {
    gap = std::max(gap, pf[j] - pg[j]);
  }
  return gap;
}

}  // namespace

std::string theorem_tag_name(TheoremTag tag) {
  switch (tag) {
    case TheoremTag::Smoothing: return "Smoothing";
    case TheoremTag::SmoothingLp: return "SmoothingLp";
    case TheoremTag::MarcinkiewiczSmoothing: return "MarcinkiewiczSmoothing";
    case TheoremTag::ConcentrationComparison: return "ConcentrationComparison";
    case TheoremTag::DiffusivityComparison: return "DiffusivityComparison";
    case TheoremTag::ExtinctionBound: return "ExtinctionBound";
  }
  throw std::logic_error("theorem_tag_name: unknown tag");
}

std::string report_to_json(const EstimateReport& report) {
  nlohmann::ordered_json j;
  j["theorem"] = theorem_tag_name(report.tag);
  j["pass"] = report.pass;
  j["conclusive"] = report.conclusive;
  j["worst_margin"] = report.worst_margin;
  j["tolerance"] = report.tolerance;
  j["params"] = {{"N", report.params.N},
                 {"sigma", report.params.sigma},
                 {"m", report.params.m}};
  if (report.p) {
    j["p"] = *report.p;
  } else {
    j["p"] = nullptr;
  }
  nlohmann::ordered_json breakdown = nlohmann::ordered_json::array();
  for (const auto& s : report.breakdown) {
    breakdown.push_back({{"time", s.time}, {"ratio", s.ratio}, {"note", s.note}});
  }
  j["breakdown"] = breakdown;
  j["config"] = report.config_echo;
  return j.dump(2);
}

double profile_lp_norm(const SelfSimilarProfile& prof, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("profile_lp_norm: needs p >= 1");
  if (prof.xi.size() < 2 || prof.xi.size() != prof.F.size()) {
    throw std::invalid_argument("profile_lp_norm: profile has too few samples");
  }
  const int N = prof.params.N;
  const double surface = N * unit_ball_volume(N);
  const auto fp = [&](double v) { return std::pow(std::max(v, 0.0), p); };

  // flat core inside the first sampled shell
  double total = unit_ball_volume(N) * std::pow(prof.xi.front(), N) *
                 fp(prof.F.front());
  // trapezoidal body
  for (std::size_t i = 0; i + 1 < prof.xi.size(); ++i) {
    const double g0 = surface * std::pow(prof.xi[i], N - 1) * fp(prof.F[i]);
    const double g1 =
        surface * std::pow(prof.xi[i + 1], N - 1) * fp(prof.F[i + 1]);
    total += 0.5 * (g0 + g1) * (prof.xi[i + 1] - prof.xi[i]);
  }
  // analytic tail continuation F ~ F_end (xi/xi_end)^{-gamma}, when integrable
  const double gamma = prof.tail.exponent;
  if (prof.tail.n_samples >= 10 && prof.F.back() > 0.0 && p * gamma > N) {
    total += surface * fp(prof.F.back()) * std::pow(prof.xi.back(), N) /
             (p * gamma - N);
  }
  return std::pow(total, 1.0 / p);
}

void ConstantsManifest::add_profile(const SelfSimilarProfile& prof,
                                    const std::vector<double>& lp_orders) {
  Entry e;
  e.kind = prof.kind == ProfileKind::Barenblatt ? "barenblatt" : "marcinkiewicz";
  e.params = prof.params;
  e.p = prof.p;
  e.collapse_error = prof.collapse_error;
  // the measured quantity (mass or gauge actually realized on the grid) is
  // the normalization authority; fall back to the requested M
  const double M = prof.quantity > 0.0 ? prof.quantity : prof.M;
  const double sig_beta = prof.params.sigma * prof.beta;
  e.F0 = prof.F0 / std::pow(M, sig_beta);
  if (prof.kind == ProfileKind::Barenblatt) {
    const double N = prof.params.N;
    const double m = prof.params.m;
    for (double order : lp_orders) {
      const double expo =
          (prof.beta / order) * (N * (m - 1.0) + prof.params.sigma * order);
      e.lp_norms.emplace_back(order,
                              profile_lp_norm(prof, order) * std::pow(M, -expo));
    }
  }
  entries.push_back(std::move(e));
}

const ConstantsManifest::Entry* ConstantsManifest::find(
    const std::string& kind, const ProblemParams& params,
    std::optional<double> p) const {
  for (const auto& e : entries) {
    if (e.kind != kind || e.params.N != params.N) continue;
    if (std::abs(e.params.sigma - params.sigma) > 1e-9) continue;
    if (std::abs(e.params.m - params.m) > 1e-9) continue;
    if (p.has_value() != e.p.has_value()) continue;
    if (p && std::abs(*e.p - *p) > 1e-9) continue;
    return &e;
  }
  return nullptr;
}

void ConstantsManifest::save(const std::string& path) const {
  nlohmann::ordered_json j;
  j["format"] = "ffd-constants-v1";
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json je;
    je["kind"] = e.kind;
    je["N"] = e.params.N;
    je["sigma"] = e.params.sigma;
    je["m"] = e.params.m;
    if (e.p) {
      je["p"] = *e.p;
    } else {
      je["p"] = nullptr;
    }
    je["F0"] = e.F0;
    nlohmann::ordered_json lp = nlohmann::ordered_json::array();
    for (const auto& [order, norm] : e.lp_norms) {
      lp.push_back({{"p", order}, {"norm", norm}});
    }
    je["lp_norms"] = lp;
    je["collapse_error"] = e.collapse_error;
    arr.push_back(std::move(je));
  }
  j["entries"] = arr;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("ConstantsManifest: cannot open " + path);
  out << j.dump(2) << "\n";
}

ConstantsManifest ConstantsManifest::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("ConstantsManifest: cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "ffd-constants-v1") {
    throw std::runtime_error("ConstantsManifest: unrecognized format in " + path);
  }
  ConstantsManifest manifest;
  for (const auto& je : j.at("entries")) {
    Entry e;
    e.kind = je.at("kind").get<std::string>();
    e.params.N = je.at("N").get<int>();
    e.params.sigma = je.at("sigma").get<double>();
    e.params.m = je.at("m").get<double>();
    if (!je.at("p").is_null()) e.p = je.at("p").get<double>();
    e.F0 = je.at("F0").get<double>();
    for (const auto& lp : je.at("lp_norms")) {
      e.lp_norms.emplace_back(lp.at("p").get<double>(),
                              lp.at("norm").get<double>());
    }
    e.collapse_error = je.value("collapse_error", 0.0);
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

EstimateReport check_smoothing_L1(const Trajectory& traj,
                                  const ProblemParams& params, double F0,
                                  double tol) {
  params.validate();
  if (!(F0 > 0.0)) throw std::invalid_argument("check_smoothing_L1: F0 must be positive");
  const ExponentSet exps = exponent_set(params);
  if (!exps.alpha) {
    throw std::domain_error("check_smoothing_L1: requires m > m_c");
  }
  EstimateReport report;
  report.tag = TheoremTag::Smoothing;
  report.tolerance = tol;
  report.params = params;
  {
    std::ostringstream echo;
    echo << "F0=" << F0 << " alpha=" << *exps.alpha << " beta=" << *exps.beta
         << " mass0=" << traj.initial_mass;
    report.config_echo = echo.str();
  }
  const double mass_pow =
      std::pow(traj.initial_mass, params.sigma * *exps.beta);
  for (const auto& s : traj.snapshots) {
    if (!(s.time > 1e-12)) continue;
    const double ratio = s.diagnostics.sup_norm * std::pow(s.time, *exps.alpha) /
                         (mass_pow * F0);
    push_sample(report, s.time, ratio, "sup*t^alpha/(F0*M^{sigma beta})");
  }
  if (report.breakdown.empty()) {
    throw std::invalid_argument("check_smoothing_L1: no snapshots at positive times");
  }
  finalize(report);
  return report;
}

EstimateReport check_smoothing_Lp(const Trajectory& traj,
                                  const ProblemParams& params, double p,
                                  double Cp, double tol) {
  params.validate();
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw std::invalid_argument("check_smoothing_Lp: needs 1 <= p < inf");
  }
  if (!(Cp > 0.0)) throw std::invalid_argument("check_smoothing_Lp: Cp must be positive");
  const ExponentSet exps = exponent_set(params);
  if (!exps.alpha) {
    throw std::domain_error("check_smoothing_Lp: requires m > m_c");
  }
  EstimateReport report;
  report.tag = TheoremTag::SmoothingLp;
  report.tolerance = tol;
  report.params = params;
  report.p = p;
  const double mass_expo =
      (*exps.beta / p) * (params.N * (params.m - 1.0) + params.sigma * p);
  const double t_expo = *exps.alpha * (p - 1.0) / p;
  {
    std::ostringstream echo;
    echo << "p=" << p << " Cp=" << Cp << " mass_expo=" << mass_expo
         << " t_expo=" << t_expo << " mass0=" << traj.initial_mass;
    report.config_echo = echo.str();
  }
  const double mass_pow = std::pow(traj.initial_mass, mass_expo);
  for (const auto& s : traj.snapshots) {
    if (!(s.time > 1e-12)) continue;
    const double bound = Cp * mass_pow * std::pow(s.time, -t_expo);
    const double ratio = s.field.lp_norm(p) / bound;
    push_sample(report, s.time, ratio, "||u||_p/bound");
  }
  if (report.breakdown.empty()) {
    throw std::invalid_argument("check_smoothing_Lp: no snapshots at positive times");
  }
  finalize(report);
  return report;
}

EstimateReport check_smoothing_marcinkiewicz(const Trajectory& traj,
                                             const ProblemParams& params,
                                             double p, double Fp0,
                                             double tol) {
  params.validate();
  if (!(Fp0 > 0.0)) {
    throw std::invalid_argument("check_smoothing_marcinkiewicz: Fp0 must be positive");
  }
  const ExponentSet exps = exponent_set(params, p);
  if (!exps.alpha_p) {
    throw std::domain_error(
        "check_smoothing_marcinkiewicz: requires p > max(1, p_tilde)");
  }
  if (traj.snapshots.empty() ||
      std::abs(traj.snapshots.front().time - traj.start_time) > 1e-9) {
    throw std::invalid_argument(
        "check_smoothing_marcinkiewicz: trajectory must include the initial snapshot");
  }
  const double gauge = marcinkiewicz_gauge(traj.snapshots.front().field, p,
                                           MarcinkiewiczConvention::Coefficient);
  if (!(gauge > 0.0)) {
    throw std::invalid_argument("check_smoothing_marcinkiewicz: zero initial gauge");
  }
  EstimateReport report;
  report.tag = TheoremTag::MarcinkiewiczSmoothing;
  report.tolerance = tol;
  report.params = params;
  report.p = p;
  {
    std::ostringstream echo;
    echo << "p=" << p << " Fp0=" << Fp0 << " gauge=" << gauge
         << " alpha_p=" << *exps.alpha_p << " beta_p=" << *exps.beta_p;
    report.config_echo = echo.str();
  }
  const double gauge_pow = std::pow(gauge, params.sigma * *exps.beta_p);
  for (const auto& s : traj.snapshots) {
    if (!(s.time > 1e-12)) continue;
    const double ratio = s.diagnostics.sup_norm *
                         std::pow(s.time, *exps.alpha_p) / (gauge_pow * Fp0);
    push_sample(report, s.time, ratio, "sup*t^{alpha_p}/(Fp0*M^{sigma beta_p})");
  }
  if (report.breakdown.empty()) {
    throw std::invalid_argument(
        "check_smoothing_marcinkiewicz: no snapshots at positive times");
  }
  finalize(report);
  return report;
}

EstimateReport check_concentration_monotone(
    const Field& u0, const Field& v0, const Nonlinearity& A,
    const std::optional<Nonlinearity>& A_tilde, const ProblemParams& params,
    const std::vector<double>& times, double tol,
    const SolverConfig& base_cfg) {
  params.validate();
  if (!(u0.grid == v0.grid)) {
    throw std::invalid_argument("check_concentration_monotone: grids differ");
  }
  if (!A.concave) {
    throw std::invalid_argument("check_concentration_monotone: A must be concave");
  }
  if (times.empty()) {
    throw std::invalid_argument("check_concentration_monotone: no times given");
  }
  const double sup_scale = std::max({u0.sup_norm(), v0.sup_norm(), 1e-12});
  if (A_tilde) {
    if (!A_tilde->concave) {
      throw std::invalid_argument(
          "check_concentration_monotone: A_tilde must be concave");
    }
    const auto samples = log_samples(1e-6 * sup_scale, sup_scale, 64);
    if (!diffusivity_order(*A_tilde, A, samples)) {
      throw std::invalid_argument(
          "check_concentration_monotone: A_tilde is not weakly less diffusive than A");
    }
  }
  // v0 must be radially non-increasing: symmetrization must fix it.
  {
    const Field v0s = spherical_rearrangement(v0);
    double diff = 0.0;
    for (std::size_t c = 0; c < v0.values.size(); ++c) {
      diff = std::max(diff, std::abs(v0.values[c] - v0s.values[c]));
    }
    if (diff > 1e-12 * sup_scale) {
      throw std::invalid_argument(
          "check_concentration_monotone: v0 is not radially non-increasing");
    }
  }
  const double mass0 = u0.mass();
  if (!(mass0 > 0.0)) {
    throw std::invalid_argument("check_concentration_monotone: u0 has no mass");
  }
  if (prefix_gap(u0, v0) > 1e-9 * mass0) {
    throw std::invalid_argument(
        "check_concentration_monotone: u0^# is not initially dominated by v0");
  }

  SolverConfig cfg = base_cfg;
  cfg.snapshot_times = times;
  cfg.t_end = times.back() - cfg.t_start;
  Trajectory tu = evolve(u0, A, params, cfg);
  Trajectory tv = evolve(v0, A_tilde ? *A_tilde : A, params, cfg);

  EstimateReport report;
  report.tag = A_tilde ? TheoremTag::DiffusivityComparison
                       : TheoremTag::ConcentrationComparison;
  report.tolerance = tol;
  report.params = params;
  {
    std::ostringstream echo;
    echo << "mass0=" << mass0 << " times=" << times.size()
         << (A_tilde ? " variant=different-diffusivity" : " variant=same-A");
    report.config_echo = echo.str();
  }

  for (double t : times) {
    const Snapshot& su = tu.snapshot_at(t);
    const Snapshot& sv = tv.snapshot_at(t);
    const double gap = prefix_gap(su.field, sv.field);
    push_sample(report, t, 1.0 + std::max(gap, 0.0) / mass0, "prefix gap");
    const double l1 = su.field.mass() / std::max(sv.field.mass(), 1e-300);
    const double l2 =
        su.field.lp_norm(2.0) / std::max(sv.field.lp_norm(2.0), 1e-300);
    const double li =
        su.diagnostics.sup_norm / std::max(sv.diagnostics.sup_norm, 1e-300);
    push_sample(report, t, l1, "L1 ratio");
    push_sample(report, t, l2, "L2 ratio");
    push_sample(report, t, li, "Linf ratio");
  }
  finalize(report);
  return report;
}

EstimateReport check_extinction_bound(const Field& u0,
                                      const ProblemParams& params,
                                      const SolverConfig& cfg, double tol) {
  const ExtinctionCoefficients coef = extinction_coefficients(params);
  const double gauge =
      marcinkiewicz_gauge(u0, coef.p_tilde, MarcinkiewiczConvention::Coefficient);
  if (!(gauge > 0.0) || !std::isfinite(gauge)) {
    throw std::invalid_argument("check_extinction_bound: invalid initial gauge");
  }
  const double bound = coef.d * std::pow(gauge, 1.0 - params.m);
  const double mass0 = u0.mass();

  Trajectory traj = evolve(u0, power_nonlinearity(params.m), params, cfg);

  EstimateReport report;
  report.tag = TheoremTag::ExtinctionBound;
  report.tolerance = tol;
  report.params = params;
  {
    std::ostringstream echo;
    echo << "gauge=" << gauge << " d=" << coef.d << " bound=" << bound
         << " t_end=" << cfg.t_end;
    report.config_echo = echo.str();
  }

  if (traj.extinction_time) {
    const double elapsed = *traj.extinction_time - traj.start_time;
    push_sample(report, *traj.extinction_time, elapsed / bound,
                "extinction time / bound");
  } else if (cfg.t_end > 2.0 * bound) {
    push_sample(report, traj.final_time, cfg.t_end / bound,
                "no extinction within a horizon exceeding twice the bound");
  } else {
    report.conclusive = false;
    report.breakdown.push_back(
        {traj.final_time, 0.0, "no extinction yet; horizon <= 2*bound (inconclusive)"});
  }

  // Domination by the explicit solution with T = bound, on balls away from
  // the periodic images.
  const double one_minus_m = 1.0 - params.m;
  const double expo = params.N - params.sigma / one_minus_m;
  const double surface = params.N * unit_ball_volume(params.N);
  const double r_cut = 0.6 * u0.grid.L;
  for (const auto& s : traj.snapshots) {
    const double elapsed = s.time - traj.start_time;
    if (elapsed < 0.0) continue;
    const RadialProfile prof = decreasing_rearrangement(s.field);
    const auto prefix = prefix_masses(prof);
    const double amp =
        elapsed < bound
            ? coef.C1 * std::pow(bound - elapsed, 1.0 / one_minus_m) * surface / expo
            : 0.0;
    double gap = 0.0;
    for (std::size_t j = 0; j < prefix.size(); ++j) {
      const double R = prof.midpoint_radius(j);
      if (R > r_cut) break;
      gap = std::max(gap, prefix[j] - amp * std::pow(R, expo));
    }
    push_sample(report, s.time, 1.0 + gap / std::max(mass0, 1e-300),
                "prefix gap vs explicit solution");
  }
  finalize(report);
  return report;
}

EstimateReport check_general_nonlinearity(const Field& u0,
                                          const Nonlinearity& A,
                                          const ProblemParams& params,
                                          const SolverConfig& cfg, double F0,
                                          double tol) {
  params.validate();
  if (!A.cert_a || !A.cert_m) {
    throw std::invalid_argument(
        "check_general_nonlinearity: A needs a certificate A'(u) >= a u^{m-1}");
  }
  const double a = *A.cert_a;
  const double m = *A.cert_m;
  if (!(a > 0.0)) {
    throw std::invalid_argument("check_general_nonlinearity: certificate a must be positive");
  }
  if (std::abs(m - params.m) > 1e-12) {
    throw std::invalid_argument(
        "check_general_nonlinearity: params.m must equal the certificate exponent");
  }
  const double sup0 = u0.sup_norm();
  if (!(sup0 > 0.0)) {
    throw std::invalid_argument("check_general_nonlinearity: u0 vanishes");
  }
  for (double u : log_samples(1e-8 * sup0, sup0, 64)) {
    if (A.A_prime(u) < a * std::pow(u, m - 1.0) * (1.0 - 1e-9)) {
      throw std::runtime_error(
          "check_general_nonlinearity: certificate violated at u=" +
          std::to_string(u));
    }
  }

  const ExponentSet exps = exponent_set(params);
  if (params.m > exps.m_c) {
    // smoothing variant with the extra factor (m/a)^alpha
    if (!(F0 > 0.0)) {
      throw std::invalid_argument("check_general_nonlinearity: F0 must be positive");
    }
    Trajectory traj = evolve(u0, A, params, cfg);
    const double factor = std::pow(m / a, *exps.alpha);
    EstimateReport report;
    report.tag = TheoremTag::Smoothing;
    report.tolerance = tol;
    report.params = params;
    {
      std::ostringstream echo;
      echo << "general-A smoothing: a=" << a << " m=" << m
           << " factor=" << factor << " F0=" << F0;
      report.config_echo = echo.str();
    }
    const double mass_pow =
        std::pow(traj.initial_mass, params.sigma * *exps.beta);
    for (const auto& s : traj.snapshots) {
      if (!(s.time > 1e-12)) continue;
      const double ratio = s.diagnostics.sup_norm *
                           std::pow(s.time, *exps.alpha) /
                           (factor * F0 * mass_pow);
      push_sample(report, s.time, ratio, "sup*t^alpha/((m/a)^alpha F0 M^{sigma beta})");
    }
    if (report.breakdown.empty()) {
      throw std::invalid_argument(
          "check_general_nonlinearity: no snapshots at positive times");
    }
    finalize(report);
    return report;
  }

  // extinction variant: T <= (m/a) d M^{1-m}
  const ExtinctionCoefficients coef = extinction_coefficients(params);
  const double gauge =
      marcinkiewicz_gauge(u0, coef.p_tilde, MarcinkiewiczConvention::Coefficient);
  const double bound = (m / a) * coef.d * std::pow(gauge, 1.0 - params.m);
  Trajectory traj = evolve(u0, A, params, cfg);
  EstimateReport report;
  report.tag = TheoremTag::ExtinctionBound;
  report.tolerance = tol;
  report.params = params;
  {
    std::ostringstream echo;
    echo << "general-A extinction: a=" << a << " m=" << m << " gauge=" << gauge
         << " bound=" << bound;
    report.config_echo = echo.str();
  }
  if (traj.extinction_time) {
    const double elapsed = *traj.extinction_time - traj.start_time;
    push_sample(report, *traj.extinction_time, elapsed / bound,
                "extinction time / rescaled bound");
  } else if (cfg.t_end > 2.0 * bound) {
    push_sample(report, traj.final_time, cfg.t_end / bound,
                "no extinction within a horizon exceeding twice the bound");
  } else {
    report.conclusive = false;
    report.breakdown.push_back(
        {traj.final_time, 0.0, "no extinction yet; horizon <= 2*bound (inconclusive)"});
  }
  finalize(report);
  return report;
}

MinimalSolutionRun minimal_solution_run(
    const std::function<double(double)>& u0_radial, const Grid& grid,
    const ProblemParams& params, const Nonlinearity& A,
    const std::vector<double>& caps, const SolverConfig& cfg,
    double monotone_tol) {
  params.validate();
  grid.validate();
  if (caps.empty()) {
    throw std::invalid_argument("minimal_solution_run: caps must be non-empty");
  }
  for (std::size_t i = 0; i + 1 < caps.size(); ++i) {
    if (!(caps[i] < caps[i + 1])) {
      throw std::invalid_argument("minimal_solution_run: caps must strictly increase");
    }
  }
  const std::size_t size = grid.size();
  MinimalSolutionRun out;
  std::vector<Snapshot> prev_snaps;
  Trajectory prev_traj;
  for (std::size_t k = 0; k < caps.size(); ++k) {
    Field u0(grid);
    for (std::size_t c = 0; c < size; ++c) {
      u0.values[c] = std::min(u0_radial(grid.radius(c)), caps[k]);
    }
    Trajectory traj = evolve(u0, A, params, cfg);
    if (k > 0) {
      if (traj.snapshots.size() != prev_snaps.size()) {
        throw std::runtime_error("minimal_solution_run: snapshot count mismatch");
      }
      for (std::size_t s = 0; s < traj.snapshots.size(); ++s) {
        const auto& cur = traj.snapshots[s].field.values;
        const auto& prv = prev_snaps[s].field.values;
        const double scale =
            std::max(traj.snapshots[s].diagnostics.sup_norm, 1e-300);
        for (std::size_t c = 0; c < size; ++c) {
          const double defect = (prv[c] - cur[c]) / scale;
          out.monotonicity_defect = std::max(out.monotonicity_defect, defect);
        }
      }
      if (out.monotonicity_defect > monotone_tol) {
        throw std::runtime_error(
            "minimal_solution_run: snapshots decreased with the cap (defect " +
            std::to_string(out.monotonicity_defect) + ")");
      }
      if (k + 1 == caps.size() && !traj.snapshots.empty()) {
        const auto& last = traj.snapshots.back().field.values;
        const auto& before = prev_snaps.back().field.values;
        double diff = 0.0, sup = 0.0;
        for (std::size_t c = 0; c < size; ++c) {
          diff = std::max(diff, std::abs(last[c] - before[c]));
          sup = std::max(sup, std::abs(last[c]));
        }
        out.cap_convergence = sup > 0.0 ? diff / sup : 0.0;
      }
    }
    prev_snaps = traj.snapshots;
    prev_traj = std::move(traj);
  }
  out.trajectory = std::move(prev_traj);
  return out;
}

}  // namespace ffd
