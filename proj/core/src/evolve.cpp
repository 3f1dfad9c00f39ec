#include "ffd/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "ffd/fraclap.hpp"
#include "ffd/rearrange.hpp"

namespace ffd {

void SolverConfig::validate() const {
  if (!(dt_initial > 0.0)) throw std::invalid_argument("SolverConfig: dt_initial must be positive");
  if (!(t_end > 0.0)) throw std::invalid_argument("SolverConfig: t_end must be positive");
  if (!(newton_tol > 0.0)) throw std::invalid_argument("SolverConfig: newton_tol must be positive");
  if (max_inner_iters < 1) throw std::invalid_argument("SolverConfig: max_inner_iters must be >= 1");
  if (anderson_depth < 0 || anderson_depth > 4) {
    throw std::invalid_argument("SolverConfig: anderson_depth must lie in [0, 4]");
  }
  if (!(dt_growth >= 1.0)) throw std::invalid_argument("SolverConfig: dt_growth must be >= 1");
  if (max_halvings < 0) throw std::invalid_argument("SolverConfig: max_halvings must be >= 0");
  if (!(extinction_threshold > 0.0)) {
    throw std::invalid_argument("SolverConfig: extinction_threshold must be positive");
  }
  if (epsilon_reg && !(*epsilon_reg >= 0.0)) {
    throw std::invalid_argument("SolverConfig: epsilon_reg must be >= 0");
  }
  if (dt_max && !(*dt_max > 0.0)) {
    throw std::invalid_argument("SolverConfig: dt_max must be positive");
  }
  const double slack = 1e-9 * std::max(1.0, t_end);
  double prev = t_start - slack;
  for (double t : snapshot_times) {
    if (t < prev) throw std::invalid_argument("SolverConfig: snapshot_times must be sorted");
    if (t < t_start - slack || t > t_start + t_end + slack) {
      throw std::invalid_argument("SolverConfig: snapshot_times must lie in [t_start, t_start + t_end]");
    }
    prev = t;
  }
  for (double p : lp_diagnostics) {
    if (!(p >= 1.0)) throw std::invalid_argument("SolverConfig: lp_diagnostics entries must be >= 1");
  }
  if (gauge_p && !(*gauge_p > 0.0)) {
    throw std::invalid_argument("SolverConfig: gauge_p must be positive");
  }
}

const Snapshot& Trajectory::snapshot_at(double time, double tol) const {
  const double abs_tol = tol * std::max(1.0, std::abs(time));
  for (const auto& s : snapshots) {
    if (std::abs(s.time - time) <= abs_tol) return s;
  }
  throw std::out_of_range("Trajectory: no snapshot near the requested time");
}

namespace {

// Regularized diffusion nonlinearity: odd extension of
// A(sqrt(u^2 + eps^2)) - A(eps), so the effective diffusivity stays finite
// at the origin and transient negative iterates see a monotone map.
struct RegNonlinearity {
  const Nonlinearity* A = nullptr;
  double eps = 0.0;

  double value(double u) const {
    const double au = std::abs(u);
    double v;
    if (eps == 0.0) {
      v = A->A(au);
    } else {
      v = A->A(std::sqrt(au * au + eps * eps)) - A->A(eps);
    }
    return u < 0.0 ? -v : v;
  }

  double deriv(double u) const {
    const double au = std::abs(u);
    if (eps == 0.0) return A->A_prime(au);
    const double s = std::sqrt(au * au + eps * eps);
    return A->A_prime(s) * au / s;
  }
};

bool degenerate_at_origin(const Nonlinearity& A) {
  if (A.is_power) return A.power_m < 1.0;
  if (A.cert_m) return *A.cert_m < 1.0;
  return true;  // unknown derivative growth: regularize to be safe
}

// Upper bound on the regularized diffusivity, used as the stabilization
// weight of the inner fixed-point iteration. For concave A the supremum of
// A'(s) |u|/s over u is at most A'(eps); otherwise sample.
double lambda_bound(const RegNonlinearity& reg, double sup_scale) {
  const Nonlinearity& A = *reg.A;
  if (A.concave) {
    return A.A_prime(reg.eps);
  }
  double lo = std::max(reg.eps * 1e-3, sup_scale * 1e-12);
  if (!(lo > 0.0)) lo = 1e-12;
  const double hi = std::max({sup_scale * 2.0, reg.eps * 16.0, lo * 2.0});
  double best = 0.0;
  const int samples = 256;
  for (int i = 0; i <= samples; ++i) {
    const double u = lo * std::pow(hi / lo, static_cast<double>(i) / samples);
    best = std::max(best, reg.deriv(u));
  }
  return 1.25 * best;
}

// Anderson mixing on the fixed point v = G(v). Works on raw value arrays;
// every produced iterate is an affine combination of G-values, so any
// quantity G preserves linearly (here: the mass mode) is preserved exactly.
class AndersonMixer {
 public:
  explicit AndersonMixer(int depth) : depth_(depth) {}

  std::vector<double> next(const std::vector<double>& v,
                           const std::vector<double>& g) {
    const std::size_t n = v.size();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = g[i] - v[i];
    hist_g_.push_back(g);
    hist_r_.push_back(std::move(r));
    while (hist_g_.size() > static_cast<std::size_t>(depth_) + 1) {
      hist_g_.pop_front();
      hist_r_.pop_front();
    }
    const int s = static_cast<int>(hist_g_.size());
    if (depth_ == 0 || s < 2) return g;

    const int cols = s - 1;
    double gram[4][4] = {};
    double rhs[4] = {};
    const std::vector<double>& r_last = hist_r_.back();
    for (int a = 0; a < cols; ++a) {
      for (int b = a; b < cols; ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          acc += (hist_r_[a + 1][i] - hist_r_[a][i]) *
                 (hist_r_[b + 1][i] - hist_r_[b][i]);
        }
        gram[a][b] = acc;
        gram[b][a] = acc;
      }
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += (hist_r_[a + 1][i] - hist_r_[a][i]) * r_last[i];
      }
      rhs[a] = acc;
    }
    double trace = 0.0;
    for (int a = 0; a < cols; ++a) trace += gram[a][a];
    for (int a = 0; a < cols; ++a) gram[a][a] += 1e-12 * trace + 1e-300;

    double gamma[4] = {};
    if (!solve_small(gram, rhs, gamma, cols)) return g;
    double gmax = 0.0;
    for (int a = 0; a < cols; ++a) gmax = std::max(gmax, std::abs(gamma[a]));
    if (!(gmax < 1e4)) return g;

    std::vector<double> out = g;
    for (int a = 0; a < cols; ++a) {
      const double ga = gamma[a];
      if (ga == 0.0) continue;
      const std::vector<double>& hi = hist_g_[a + 1];
      const std::vector<double>& lo2 = hist_g_[a];
      for (std::size_t i = 0; i < n; ++i) out[i] -= ga * (hi[i] - lo2[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(out[i])) return g;
    }
    return out;
  }

 private:
  static bool solve_small(double a[4][4], double b[4], double x[4], int n) {
    int perm[4] = {0, 1, 2, 3};
    for (int c = 0; c < n; ++c) {
      int piv = c;
      for (int rw = c + 1; rw < n; ++rw) {
        if (std::abs(a[perm[rw]][c]) > std::abs(a[perm[piv]][c])) piv = rw;
      }
      std::swap(perm[c], perm[piv]);
      const double d = a[perm[c]][c];
      if (!(std::abs(d) > 0.0) || !std::isfinite(d)) return false;
      for (int rw = c + 1; rw < n; ++rw) {
        const double f = a[perm[rw]][c] / d;
        for (int cc = c; cc < n; ++cc) a[perm[rw]][cc] -= f * a[perm[c]][cc];
        b[perm[rw]] -= f * b[perm[c]];
      }
    }
    for (int c = n - 1; c >= 0; --c) {
      double acc = b[perm[c]];
      for (int cc = c + 1; cc < n; ++cc) acc -= a[perm[c]][cc] * x[cc];
      x[c] = acc / a[perm[c]][c];
      if (!std::isfinite(x[c])) return false;
    }
    return true;
  }

  int depth_;
  std::deque<std::vector<double>> hist_g_;
  std::deque<std::vector<double>> hist_r_;
};

bool all_finite(const Field& f) {
  for (double v : f.values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// One backward-Euler step: solve u + dt Op A(u) = b by the stabilized
// iteration v <- (I + lambda dt Op)^{-1} [b + dt Op(lambda v - A(v))],
// optionally Anderson-accelerated. Returns nothing on divergence.
std::optional<Field> semi_implicit_step(const SpectralOperator& op,
                                        const RegNonlinearity& reg,
                                        const Field& b, double dt,
                                        double lambda, double tol,
                                        int max_iters, int depth, int& iters) {
  op.load_rhs(b);
  Field v = b;
  Field gfield(b.grid);
  AndersonMixer mixer(depth);
  const double bscale = b.sup_norm() + 1e-300;
  for (int k = 1; k <= max_iters; ++k) {
    iters = k;
    for (std::size_t i = 0; i < v.values.size(); ++i) {
      const double u = v.values[i];
      gfield.values[i] = lambda * u - reg.value(u);
    }
    Field g = op.stabilized_solve(gfield, dt, lambda);
    if (!all_finite(g)) return std::nullopt;
    double diff = 0.0;
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      diff = std::max(diff, std::abs(g.values[i] - v.values[i]));
    }
    const double scale = std::max(g.sup_norm(), 1e-9 * bscale);
    if (diff <= tol * scale) return g;
    v.values = mixer.next(v.values, g.values);
  }
  return std::nullopt;
}

std::optional<Field> explicit_step(const SpectralOperator& op,
                                   const RegNonlinearity& reg, const Field& u,
                                   const Field& b, double dt) {
  Field av(u.grid);
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    av.values[i] = reg.value(u.values[i]);
  }
  Field lu = op.apply(av);
  Field out(u.grid);
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    out.values[i] = b.values[i] - dt * lu.values[i];
  }
  if (!all_finite(out)) return std::nullopt;
  return out;
}

SnapshotDiagnostics make_diagnostics(const Field& u, const SolverConfig& cfg) {
  SnapshotDiagnostics d;
  d.mass = u.mass();
  d.sup_norm = u.sup_norm();
  d.lp_orders = cfg.lp_diagnostics;
  d.lp_norms.reserve(cfg.lp_diagnostics.size());
  for (double p : cfg.lp_diagnostics) d.lp_norms.push_back(u.lp_norm(p));
  if (cfg.gauge_p) {
    d.gauge =
        marcinkiewicz_gauge(u, *cfg.gauge_p, MarcinkiewiczConvention::Coefficient);
  }
  return d;
}

}  // namespace

Trajectory evolve(const Field& u0, const Nonlinearity& A,
                  const std::function<Field(double)>& source,
                  const ProblemParams& params, const SolverConfig& cfg) {
  cfg.validate();
  params.validate();
  if (u0.grid.N != params.N) {
    throw std::invalid_argument("evolve: grid dimension does not match params.N");
  }
  u0.require_finite("evolve initial data");
  const double sup0 = u0.sup_norm();
  if (u0.min_value() < -1e-12 * std::max(sup0, 1.0)) {
    throw std::invalid_argument("evolve: initial data must be nonnegative");
  }

  Trajectory traj;
  traj.start_time = cfg.t_start;
  traj.initial_sup = sup0;

  Field u = u0;
  for (double& v : u.values) v = std::max(v, 0.0);
  traj.initial_mass = u.mass();

  const bool linear_exact = A.is_power && A.power_m == 1.0;
  const bool degen = degenerate_at_origin(A) && !linear_exact;
  const double eps =
      cfg.epsilon_reg ? *cfg.epsilon_reg
                      : (degen ? 1e-8 * (sup0 > 0.0 ? sup0 : 1.0) : 0.0);
  if (degen && !(eps > 0.0)) {
    throw std::invalid_argument(
        "evolve: degenerate nonlinearity requires epsilon_reg > 0");
  }
  const RegNonlinearity reg{&A, eps};

  SpectralOperator op(u0.grid, params.sigma);

  const double t_goal = cfg.t_start + cfg.t_end;
  const double time_tol = 1e-9 * std::max(1.0, cfg.t_end);
  std::deque<double> pending(cfg.snapshot_times.begin(),
                             cfg.snapshot_times.end());

  const auto emit = [&](double t, const Field& state) {
    Snapshot snap;
    snap.time = t;
    snap.field = state;
    snap.diagnostics = make_diagnostics(state, cfg);
    traj.snapshots.push_back(std::move(snap));
  };
  while (!pending.empty() && pending.front() <= cfg.t_start + time_tol) {
    emit(pending.front(), u);
    pending.pop_front();
  }

  const double lambda_concave =
      (!linear_exact && A.concave) ? lambda_bound(reg, sup0) : 0.0;

  double t = cfg.t_start;
  double dt_base = cfg.dt_initial;
  if (cfg.dt_max) dt_base = std::min(dt_base, *cfg.dt_max);
  const double dt_floor = cfg.dt_initial * std::pow(0.5, cfg.max_halvings);

  while (t < t_goal - time_tol) {
    double next_event = t_goal;
    if (!pending.empty()) next_event = std::min(next_event, pending.front());
    double dt = std::min(dt_base, next_event - t);
    if (dt <= 0.0) {  // roundoff stall: snap to the event and emit
      t = next_event;
      while (!pending.empty() && pending.front() <= t + time_tol) {
        emit(pending.front(), u);
        pending.pop_front();
      }
      continue;
    }

    Field b = u;
    if (source) {
      Field f = source(t + dt);
      if (!(f.grid == u.grid)) {
        throw std::invalid_argument("evolve: source grid mismatch");
      }
      for (std::size_t i = 0; i < b.values.size(); ++i) {
        b.values[i] += dt * f.values[i];
      }
    }

    std::optional<Field> next;
    int iters = 1;
    if (linear_exact && cfg.scheme == TimeScheme::SemiImplicit) {
      next = op.resolvent(b, dt);
      if (next && !all_finite(*next)) next.reset();
    } else if (cfg.scheme == TimeScheme::SemiImplicit) {
      const double lambda =
          A.concave ? lambda_concave : lambda_bound(reg, u.sup_norm());
      next = semi_implicit_step(op, reg, b, dt, lambda, cfg.newton_tol,
                                cfg.max_inner_iters, cfg.anderson_depth, iters);
    } else {
      next = explicit_step(op, reg, u, b, dt);
      if (next && next->sup_norm() > 10.0 * std::max(sup0, b.sup_norm())) {
        next.reset();  // forward-Euler blow-up guard
      }
    }

    if (!next) {
      traj.rejected_steps += 1;
      dt_base = 0.5 * dt;
      if (dt_base < dt_floor) {
        throw std::runtime_error("evolve: step size underflow at t = " +
                                 std::to_string(t));
      }
      continue;
    }

    u = std::move(*next);
    for (double& v : u.values) {
      if (v < 0.0) {
        traj.clipped_mass += -v;
        v = 0.0;
      }
    }
    t += dt;
    traj.accepted_steps += 1;
    traj.total_inner_iterations += iters;
    StepRecord rec;
    rec.time = t;
    rec.dt = dt;
    rec.sup_norm = u.sup_norm();
    rec.mass = u.mass();
    rec.inner_iterations = iters;
    traj.steps.push_back(rec);

    while (!pending.empty() && pending.front() <= t + time_tol) {
      emit(pending.front(), u);
      pending.pop_front();
    }

    if (iters <= std::max(8, cfg.max_inner_iters / 8)) {
      dt_base = dt_base * cfg.dt_growth;
      if (cfg.dt_max) dt_base = std::min(dt_base, *cfg.dt_max);
    }
  }
  traj.clipped_mass *= u.grid.cell_measure();

  while (!pending.empty()) {  // events at t_goal within roundoff
    emit(pending.front(), u);
    pending.pop_front();
  }

  traj.final_state = std::move(u);
  traj.final_time = t;
  traj.extinction_time =
      detect_extinction(traj, cfg.extinction_threshold * (sup0 > 0.0 ? sup0 : 1.0));
  return traj;
}

Trajectory evolve(const Field& u0, const Nonlinearity& A,
                  const ProblemParams& params, const SolverConfig& cfg) {
  return evolve(u0, A, std::function<Field(double)>(), params, cfg);
}

std::optional<double> detect_extinction(const Trajectory& traj,
                                        double threshold) {
  std::vector<std::pair<double, double>> records;
  if (!traj.steps.empty()) {
    records.emplace_back(traj.start_time, traj.initial_sup);
    for (const auto& s : traj.steps) records.emplace_back(s.time, s.sup_norm);
  } else {
    for (const auto& s : traj.snapshots) {
      records.emplace_back(s.time, s.diagnostics.sup_norm);
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].second < threshold) {
      if (i == 0) return records[0].first;
      const auto& [t0, s0] = records[i - 1];
      const auto& [t1, s1] = records[i];
      const double drop = s0 - s1;
      if (!(drop > 0.0)) return t1;
      return t0 + (s0 - threshold) / drop * (t1 - t0);
    }
  }
  return std::nullopt;
}

void write_trajectory(const Trajectory& traj, const SolverConfig& cfg,
                      const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);

  nlohmann::ordered_json manifest;
  manifest["format"] = "ffd-trajectory-v1";

  nlohmann::ordered_json config;
  config["dt_initial"] = cfg.dt_initial;
  config["t_end"] = cfg.t_end;
  config["t_start"] = cfg.t_start;
  config["scheme"] =
      cfg.scheme == TimeScheme::SemiImplicit ? "semi-implicit" : "explicit-oracle";
  if (cfg.epsilon_reg) config["epsilon_reg"] = *cfg.epsilon_reg;
  config["newton_tol"] = cfg.newton_tol;
  config["max_inner_iters"] = cfg.max_inner_iters;
  config["anderson_depth"] = cfg.anderson_depth;
  config["dt_growth"] = cfg.dt_growth;
  if (cfg.dt_max) config["dt_max"] = *cfg.dt_max;
  config["max_halvings"] = cfg.max_halvings;
  config["extinction_threshold"] = cfg.extinction_threshold;
  config["snapshot_times"] = cfg.snapshot_times;
  config["lp_diagnostics"] = cfg.lp_diagnostics;
  if (cfg.gauge_p) config["gauge_p"] = *cfg.gauge_p;
  manifest["config"] = config;

  nlohmann::ordered_json solver;
  solver["start_time"] = traj.start_time;
  solver["final_time"] = traj.final_time;
  solver["initial_mass"] = traj.initial_mass;
  solver["initial_sup"] = traj.initial_sup;
  solver["accepted_steps"] = traj.accepted_steps;
  solver["rejected_steps"] = traj.rejected_steps;
  solver["total_inner_iterations"] = traj.total_inner_iterations;
  solver["clipped_mass"] = traj.clipped_mass;
  if (traj.extinction_time) {
    solver["extinction_time"] = *traj.extinction_time;
  } else {
    solver["extinction_time"] = nullptr;
  }
  manifest["solver"] = solver;

  nlohmann::ordered_json snaps = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const Snapshot& s = traj.snapshots[i];
    char name[64];
    std::snprintf(name, sizeof(name), "snapshot_%03zu.field", i);
    write_field_binary(s.field, (fs::path(directory) / name).string());
    nlohmann::ordered_json entry;
    entry["time"] = s.time;
    entry["file"] = name;
    entry["mass"] = s.diagnostics.mass;
    entry["sup_norm"] = s.diagnostics.sup_norm;
    entry["lp_orders"] = s.diagnostics.lp_orders;
    entry["lp_norms"] = s.diagnostics.lp_norms;
    entry["gauge"] = s.diagnostics.gauge;
    snaps.push_back(entry);
  }
  manifest["snapshots"] = snaps;

  std::ofstream out(fs::path(directory) / "manifest.json",
                    std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("write_trajectory: cannot open manifest for writing");
  }
  out << manifest.dump(2) << "\n";
}

}  // namespace ffd
