#include "ffd/selfsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "ffd/fraclap.hpp"
#include "ffd/rearrange.hpp"

namespace ffd {

TailFit tail_exponent_fit(const std::vector<double>& xi,
                          const std::vector<double>& F, double window_lo,
                          double window_hi) {
  if (xi.size() != F.size()) {
    throw std::invalid_argument("tail_exponent_fit: size mismatch");
  }
  if (!(window_hi > window_lo) || !(window_lo > 0.0)) {
    throw std::invalid_argument("tail_exponent_fit: bad window");
  }
  std::vector<double> lx, lf;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    if (xi[i] >= window_lo && xi[i] <= window_hi && F[i] > 0.0) {
      lx.push_back(std::log(xi[i]));
      lf.push_back(std::log(F[i]));
    }
  }
  const int n = static_cast<int>(lx.size());
  if (n < 10) {
    throw std::runtime_error(
        "tail_exponent_fit: fewer than 10 positive samples in the window");
  }
  double mx = 0.0, mf = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += lx[i];
    mf += lf[i];
  }
  mx /= n;
  mf /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (lf[i] - mf);
  }
  if (!(sxx > 0.0)) {
    throw std::runtime_error("tail_exponent_fit: degenerate abscissae");
  }
  const double slope = sxy / sxx;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = lf[i] - mf - slope * (lx[i] - mx);
    ss += e * e;
  }
  TailFit fit;
  fit.exponent = -slope;
  fit.n_samples = n;
  fit.half_width = 2.0 * std::sqrt(ss / std::max(n - 2, 1) / sxx);
  return fit;
}

RadialSamples shell_average(const Field& f, int n_bins) {
  f.grid.validate();
  if (n_bins < 8) throw std::invalid_argument("shell_average: n_bins too small");
  const double h = f.grid.h();
  const double r_min =
      0.5 * h * std::sqrt(static_cast<double>(f.grid.N)) * (1.0 - 1e-12);
  const double r_max = f.grid.L;
  const double log_span = std::log(r_max / r_min);
  std::vector<double> sum_v(n_bins, 0.0), sum_r(n_bins, 0.0);
  std::vector<long> count(n_bins, 0);
  const std::size_t size = f.grid.size();
  for (std::size_t c = 0; c < size; ++c) {
    const double r = f.grid.radius(c);
    if (r > r_max) continue;  // corner shells: partially covered, excluded
    int j = static_cast<int>(std::floor(n_bins * std::log(r / r_min) / log_span));
    j = std::clamp(j, 0, n_bins - 1);
    sum_v[j] += f.values[c];
    sum_r[j] += r;
    count[j] += 1;
  }
  RadialSamples out;
  for (int j = 0; j < n_bins; ++j) {
    if (count[j] == 0) continue;
    out.radius.push_back(sum_r[j] / count[j]);
    out.value.push_back(sum_v[j] / count[j]);
  }
  return out;
}

double profile_interpolate(const std::vector<double>& xi,
                           const std::vector<double>& F, double r) {
  if (xi.empty() || xi.size() != F.size()) {
    throw std::invalid_argument("profile_interpolate: bad profile");
  }
  if (r <= xi.front()) return F.front();
  const std::size_t n = xi.size();
  if (r >= xi.back()) {
    if (n >= 2 && F[n - 1] > 0.0 && F[n - 2] > 0.0 && xi[n - 1] > xi[n - 2]) {
      const double slope =
          std::log(F[n - 1] / F[n - 2]) / std::log(xi[n - 1] / xi[n - 2]);
      return F[n - 1] * std::pow(r / xi[n - 1], slope);
    }
    return F.back();
  }
  const auto it = std::upper_bound(xi.begin(), xi.end(), r);
  const std::size_t i = static_cast<std::size_t>(it - xi.begin()) - 1;
  const double x0 = xi[i], x1 = xi[i + 1];
  const double f0 = F[i], f1 = F[i + 1];
  if (f0 > 0.0 && f1 > 0.0) {
    const double w = std::log(r / x0) / std::log(x1 / x0);
    return f0 * std::pow(f1 / f0, w);
  }
  const double w = (r - x0) / (x1 - x0);
  return f0 + w * (f1 - f0);
}

namespace {

struct SnapshotProfile {
  double time = 0.0;
  std::vector<double> xi;
  std::vector<double> F;
  double trusted = 0.0;  // L * t^{-beta} / 2
  double F0 = 0.0;
  double mass = 0.0;
};

SnapshotProfile rescale_snapshot(const Snapshot& snap, double alpha,
                                 double beta, int n_bins) {
  SnapshotProfile out;
  out.time = snap.time;
  const double ta = std::pow(snap.time, alpha);
  const double tb = std::pow(snap.time, -beta);
  RadialSamples rs = shell_average(snap.field, n_bins);
  out.xi.reserve(rs.radius.size());
  out.F.reserve(rs.radius.size());
  for (std::size_t i = 0; i < rs.radius.size(); ++i) {
    out.xi.push_back(rs.radius[i] * tb);
    out.F.push_back(ta * rs.value[i]);
  }
  out.trusted = snap.field.grid.L * tb * 0.5;
  out.F0 = ta * snap.diagnostics.sup_norm;
  out.mass = snap.diagnostics.mass;
  return out;
}

TailFit guarded_tail(const std::vector<double>& xi, const std::vector<double>& F,
                     double lo, double hi) {
  try {
    return tail_exponent_fit(xi, F, lo, hi);
  } catch (const std::exception&) {
    return TailFit{};  // n_samples == 0 marks "no fit available"
  }
}

// Interpolate every rescaled snapshot onto a common log grid over the joint
// trusted window, average, and record the worst pairwise distance.
void combine_snapshots(SelfSimilarProfile& prof,
                       const std::vector<SnapshotProfile>& snaps, int n_bins) {
  double xi_lo = 0.0;
  double xi_hi = std::numeric_limits<double>::infinity();
  for (const auto& s : snaps) {
    if (s.xi.empty()) throw std::runtime_error("selfsim: empty shell profile");
    xi_lo = std::max(xi_lo, s.xi.front());
    xi_hi = std::min({xi_hi, s.trusted, s.xi.back()});
  }
  if (!(xi_hi > 1.02 * xi_lo)) {
    throw std::runtime_error(
        "selfsim: trusted windows of the snapshots do not overlap");
  }
  std::vector<double> common(n_bins);
  for (int i = 0; i < n_bins; ++i) {
    common[i] =
        xi_lo * std::pow(xi_hi / xi_lo, static_cast<double>(i) / (n_bins - 1));
  }
  std::vector<std::vector<double>> vals(snaps.size(),
                                        std::vector<double>(n_bins));
  for (std::size_t s = 0; s < snaps.size(); ++s) {
    for (int i = 0; i < n_bins; ++i) {
      vals[s][i] = profile_interpolate(snaps[s].xi, snaps[s].F, common[i]);
    }
  }
  std::vector<double> avg(n_bins, 0.0);
  for (const auto& col : vals) {
    for (int i = 0; i < n_bins; ++i) avg[i] += col[i];
  }
  double sup_avg = 0.0;
  for (int i = 0; i < n_bins; ++i) {
    avg[i] /= static_cast<double>(snaps.size());
    sup_avg = std::max(sup_avg, std::abs(avg[i]));
  }
  if (!(sup_avg > 0.0)) throw std::runtime_error("selfsim: profile vanished");

  double worst = 0.0;
  for (std::size_t a = 0; a + 1 < snaps.size(); ++a) {
    for (std::size_t b = a + 1; b < snaps.size(); ++b) {
      double d = 0.0;
      for (int i = 0; i < n_bins; ++i) {
        d = std::max(d, std::abs(vals[a][i] - vals[b][i]));
      }
      worst = std::max(worst, d / sup_avg);
    }
  }

  prof.xi = std::move(common);
  prof.F = std::move(avg);
  prof.xi_max = xi_hi;
  prof.collapse_error = worst;
  double f0 = 0.0;
  for (const auto& s : snaps) f0 += s.F0;
  prof.F0 = f0 / static_cast<double>(snaps.size());
  prof.tail = guarded_tail(prof.xi, prof.F, 0.25 * xi_hi, 0.5 * xi_hi);
  prof.snapshot_times.clear();
  prof.snapshot_tails.clear();
  for (const auto& s : snaps) {
    prof.snapshot_times.push_back(s.time);
    prof.snapshot_tails.push_back(
        guarded_tail(s.xi, s.F, 0.25 * s.trusted, 0.5 * s.trusted));
  }
}

SolverConfig profile_solver_config(const ProfileOptions& opts,
                                   const Field& u0) {
  SolverConfig cfg;
  cfg.t_start = 0.0;
  cfg.t_end = opts.times.back();
  cfg.snapshot_times = opts.times;
  cfg.dt_initial = opts.dt_initial;
  cfg.dt_max = opts.dt_max;
  cfg.dt_growth = opts.dt_growth;
  cfg.newton_tol = opts.newton_tol;
  // Profile runs never approach extinction; a moderate regularization keeps
  // the inner iteration well conditioned at an O((eps/u)^2) model error.
  cfg.epsilon_reg = opts.epsilon_reg ? *opts.epsilon_reg
                                     : 1e-4 * std::max(u0.sup_norm(), 1e-30);
  cfg.lp_diagnostics = {1.0, 2.0};
  return cfg;
}

void check_profile_options(const ProfileOptions& opts) {
  if (opts.times.empty()) {
    throw std::invalid_argument("selfsim: at least one snapshot time required");
  }
  double prev = 0.0;
  for (double t : opts.times) {
    if (!(t > prev)) {
      throw std::invalid_argument("selfsim: times must be positive, increasing");
    }
    prev = t;
  }
  if (opts.n_bins < 32) {
    throw std::invalid_argument("selfsim: n_bins too small");
  }
}

}  // namespace

SelfSimilarProfile barenblatt_profile(const ProblemParams& params, double M,
                                      const Grid& resolution,
                                      const ProfileOptions& opts) {
  params.validate();
  resolution.validate();
  check_profile_options(opts);
  if (resolution.N != params.N) {
    throw std::invalid_argument("barenblatt_profile: grid/params dimension mismatch");
  }
  if (!(M > 0.0)) throw std::invalid_argument("barenblatt_profile: M must be positive");
  const ExponentSet exps = exponent_set(params);
  if (!exps.beta) {
    throw std::domain_error("barenblatt_profile: requires m > m_c = (N - sigma)/N");
  }

  SelfSimilarProfile prof;
  prof.kind = ProfileKind::Barenblatt;
  prof.params = params;
  prof.M = M;
  prof.alpha = *exps.alpha;
  prof.beta = *exps.beta;
  prof.grid = resolution;

  // Dirac approximation: indicator of the ball of radius rho = k h,
  // normalized to carry exactly mass M on the grid.
  const double rho = opts.dirac_radius_cells * resolution.h();
  Field u0(resolution);
  long inside = 0;
  const std::size_t size = resolution.size();
  for (std::size_t c = 0; c < size; ++c) {
    if (resolution.radius(c) < rho) ++inside;
  }
  if (inside == 0) {
    throw std::invalid_argument("barenblatt_profile: grid too coarse for the Dirac ball");
  }
  const double value = M / (static_cast<double>(inside) * resolution.cell_measure());
  for (std::size_t c = 0; c < size; ++c) {
    if (resolution.radius(c) < rho) u0.values[c] = value;
  }

  SolverConfig cfg = profile_solver_config(opts, u0);
  Trajectory traj = evolve(u0, power_nonlinearity(params.m), params, cfg);

  std::vector<SnapshotProfile> snaps;
  snaps.reserve(traj.snapshots.size());
  double mass_acc = 0.0;
  for (const auto& s : traj.snapshots) {
    snaps.push_back(rescale_snapshot(s, prof.alpha, prof.beta, opts.n_bins));
    mass_acc += s.diagnostics.mass;
  }
  combine_snapshots(prof, snaps, opts.n_bins);
  prof.quantity = mass_acc / static_cast<double>(snaps.size());

  if (opts.enforce_collapse && prof.collapse_error > opts.collapse_tolerance) {
    throw std::runtime_error(
        "barenblatt_profile: rescaled snapshots fail to collapse (distance " +
        std::to_string(prof.collapse_error) + " > tolerance " +
        std::to_string(opts.collapse_tolerance) + "); under-resolution likely");
  }
  return prof;
}

SelfSimilarProfile marcinkiewicz_profile(const ProblemParams& params, double p,
                                         double M, const Grid& resolution,
                                         const ProfileOptions& opts) {
  params.validate();
  resolution.validate();
  check_profile_options(opts);
  if (resolution.N != params.N) {
    throw std::invalid_argument("marcinkiewicz_profile: grid/params dimension mismatch");
  }
  if (!(M > 0.0)) throw std::invalid_argument("marcinkiewicz_profile: M must be positive");
  if (params.m == 1.0) {
    throw std::domain_error(
        "marcinkiewicz_profile: m = 1 leaves the rescaling exponent mu = sigma/(1-m) undefined");
  }
  const ExponentSet exps = exponent_set(params, p);
  if (!exps.beta_p) {
    throw std::domain_error(
        "marcinkiewicz_profile: requires p > max(1, p_tilde)");
  }
  if (opts.caps.empty()) {
    throw std::invalid_argument("marcinkiewicz_profile: caps must be non-empty");
  }
  for (std::size_t i = 0; i + 1 < opts.caps.size(); ++i) {
    if (!(opts.caps[i] < opts.caps[i + 1])) {
      throw std::invalid_argument("marcinkiewicz_profile: caps must increase");
    }
  }

  SelfSimilarProfile prof;
  prof.kind = ProfileKind::Marcinkiewicz;
  prof.params = params;
  prof.M = M;
  prof.p = p;
  prof.alpha = *exps.alpha_p;
  prof.beta = *exps.beta_p;
  prof.grid = resolution;

  const double tail_power = static_cast<double>(params.N) / p;
  const std::size_t size = resolution.size();

  std::vector<SelfSimilarProfile> per_cap;
  for (double cap : opts.caps) {
    if (!(cap > 0.0)) {
      throw std::invalid_argument("marcinkiewicz_profile: caps must be positive");
    }
    Field u0(resolution);
    for (std::size_t c = 0; c < size; ++c) {
      const double r = resolution.radius(c);
      u0.values[c] = std::min(M * std::pow(r, -tail_power), cap);
    }
    SolverConfig cfg = profile_solver_config(opts, u0);
    Trajectory traj = evolve(u0, power_nonlinearity(params.m), params, cfg);

    SelfSimilarProfile cand = prof;
    std::vector<SnapshotProfile> snaps;
    snaps.reserve(traj.snapshots.size());
    for (const auto& s : traj.snapshots) {
      snaps.push_back(rescale_snapshot(s, prof.alpha, prof.beta, opts.n_bins));
    }
    combine_snapshots(cand, snaps, opts.n_bins);
    cand.quantity = marcinkiewicz_gauge(traj.snapshots.back().field, p,
                                        MarcinkiewiczConvention::Coefficient);
    per_cap.push_back(std::move(cand));
  }

  prof = per_cap.back();
  if (per_cap.size() >= 2) {
    const SelfSimilarProfile& a = per_cap[per_cap.size() - 2];
    const SelfSimilarProfile& b = per_cap.back();
    const double lo = std::max(a.xi.front(), b.xi.front());
    const double hi = std::min(a.xi_max, b.xi_max);
    double sup_b = 0.0, diff = 0.0;
    for (double x : b.xi) {
      if (x < lo || x > hi) continue;
      const double vb = profile_interpolate(b.xi, b.F, x);
      const double va = profile_interpolate(a.xi, a.F, x);
      sup_b = std::max(sup_b, std::abs(vb));
      diff = std::max(diff, std::abs(va - vb));
    }
    prof.cap_sensitivity = sup_b > 0.0 ? diff / sup_b : 0.0;
  }

  if (opts.enforce_collapse && prof.collapse_error > opts.collapse_tolerance) {
    throw std::runtime_error(
        "marcinkiewicz_profile: rescaled snapshots fail to collapse (distance " +
        std::to_string(prof.collapse_error) + " > tolerance " +
        std::to_string(opts.collapse_tolerance) + ")");
  }
  return prof;
}

double elliptic_residual(const SelfSimilarProfile& prof) {
  prof.params.validate();
  prof.grid.validate();
  if (prof.xi.empty() || prof.xi.size() != prof.F.size()) {
    throw std::invalid_argument("elliptic_residual: profile has no samples");
  }
  const Grid& grid = prof.grid;
  const int n = grid.n;
  const double h = grid.h();
  const std::size_t size = grid.size();

  Field F(grid), Fm(grid);
  for (std::size_t c = 0; c < size; ++c) {
    const double v = profile_interpolate(prof.xi, prof.F, grid.radius(c));
    F.values[c] = v;
    Fm.values[c] = std::pow(std::max(v, 0.0), prof.params.m);
  }

  SpectralOperator op(grid, prof.params.sigma);
  Field lhs = op.apply(Fm);

  // xi . grad F with centered differences, periodic wrap.
  Field xg(grid);
  for (std::size_t c = 0; c < size; ++c) {
    const auto idx = grid.unflatten(c);
    const auto x = grid.cell_center(c);
    double acc = 0.0;
    for (int d = 0; d < grid.N; ++d) {
      auto ip = idx, im = idx;
      ip[d] = (idx[d] + 1) % n;
      im[d] = (idx[d] + n - 1) % n;
      const double dF =
          (F.values[grid.flat_index(ip)] - F.values[grid.flat_index(im)]) /
          (2.0 * h);
      acc += x[d] * dF;
    }
    xg.values[c] = acc;
  }

  const double r_lo = std::max(3.0 * h, 1.5 * prof.xi.front());
  const double r_hi = std::min(prof.xi_max, 0.9 * grid.L);
  if (!(r_hi > r_lo)) {
    throw std::runtime_error("elliptic_residual: empty interior annulus");
  }

  double sum_res = 0.0;
  long count = 0;
  std::vector<std::size_t> cells;
  for (std::size_t c = 0; c < size; ++c) {
    const double r = grid.radius(c);
    if (r < r_lo || r > r_hi) continue;
    cells.push_back(c);
    sum_res += lhs.values[c] -
               (prof.alpha * F.values[c] + prof.beta * xg.values[c]);
    ++count;
  }
  if (count == 0) {
    throw std::runtime_error("elliptic_residual: annulus contains no cells");
  }
  const double mean_res = sum_res / static_cast<double>(count);

  double num = 0.0, den = 0.0;
  for (std::size_t c : cells) {
    const double rhs = prof.alpha * F.values[c] + prof.beta * xg.values[c];
    const double res = lhs.values[c] - rhs - mean_res;
    num += res * res;
    den += rhs * rhs;
  }
  if (!(den > 0.0)) {
    throw std::runtime_error("elliptic_residual: vanishing right-hand side");
  }
  return std::sqrt(num / den);
}

double ExplicitExtinctionSolution::operator()(double r, double t) const {
  if (!(r > 0.0)) {
    throw std::domain_error("ExplicitExtinctionSolution: needs r > 0");
  }
  if (t >= T) return 0.0;
  const double one_minus_m = 1.0 - params.m;
  return coeff.C1 * std::pow(T - t, 1.0 / one_minus_m) *
         std::pow(r, -params.sigma / one_minus_m);
}

ExplicitExtinctionSolution explicit_extinction_solution(
    const ProblemParams& params, double T) {
  if (!(T > 0.0)) {
    throw std::invalid_argument("explicit_extinction_solution: T must be positive");
  }
  ExplicitExtinctionSolution sol;
  sol.params = params;
  sol.T = T;
  sol.coeff = extinction_coefficients(params);  // gates 0 < m < m_c
  return sol;
}

double expected_tail_exponent(const ProblemParams& params,
                              std::optional<double> p) {
  params.validate();
  if (p) {
    if (!(*p > 0.0)) {
      throw std::invalid_argument("expected_tail_exponent: p must be positive");
    }
    return static_cast<double>(params.N) / *p;
  }
  const ExponentSet exps = exponent_set(params);
  if (!(params.m > exps.m_c)) {
    throw std::domain_error("expected_tail_exponent: requires m > m_c");
  }
  if (params.m < exps.m_one) {
    return params.sigma / (1.0 - params.m);
  }
  return static_cast<double>(params.N) + params.sigma;
}

void write_profile(const SelfSimilarProfile& prof, const std::string& csv_path,
                   const std::string& json_path) {
  {
    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw std::runtime_error("write_profile: cannot open " + csv_path);
    csv << "xi,F\n";
    char line[96];
    for (std::size_t i = 0; i < prof.xi.size(); ++i) {
      std::snprintf(line, sizeof(line), "%.17g,%.17g\n", prof.xi[i], prof.F[i]);
      csv << line;
    }
  }

  nlohmann::ordered_json meta;
  meta["kind"] =
      prof.kind == ProfileKind::Barenblatt ? "barenblatt" : "marcinkiewicz";
  meta["params"] = {{"N", prof.params.N},
                    {"sigma", prof.params.sigma},
                    {"m", prof.params.m}};
  meta["M"] = prof.M;
  if (prof.p) meta["p"] = *prof.p;
  meta["alpha"] = prof.alpha;
  meta["beta"] = prof.beta;
  meta["grid"] = {{"N", prof.grid.N}, {"n", prof.grid.n}, {"L", prof.grid.L}};
  meta["F0"] = prof.F0;
  meta["xi_max"] = prof.xi_max;
  meta["collapse_error"] = prof.collapse_error;
  meta["cap_sensitivity"] = prof.cap_sensitivity;
  meta["quantity"] = prof.quantity;
  meta["tail"] = {{"exponent", prof.tail.exponent},
                  {"half_width", prof.tail.half_width},
                  {"n_samples", prof.tail.n_samples}};
  meta["snapshot_times"] = prof.snapshot_times;
  nlohmann::ordered_json tails = nlohmann::ordered_json::array();
  for (const auto& t : prof.snapshot_tails) {
    tails.push_back({{"exponent", t.exponent},
                     {"half_width", t.half_width},
                     {"n_samples", t.n_samples}});
  }
  meta["snapshot_tails"] = tails;

  std::ofstream out(json_path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_profile: cannot open " + json_path);
  out << meta.dump(2) << "\n";
}

}  // namespace ffd
