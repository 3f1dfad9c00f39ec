#include "suites.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

#include "ffd/rearrange.hpp"
#include "ffd/selfsim.hpp"

namespace ffd::suites {

bool SuiteResult::all_pass() const {
  for (const auto& r : reports) {
    if (!r.report.pass) return false;
  }
  return true;
}

Field random_bump_field(const Grid& grid, std::uint64_t seed, int n_bumps) {
  if (n_bumps < 1) {
    throw std::invalid_argument("random_bump_field: need at least one bump");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Bump {
    std::array<double, 3> center{};
    double inv_w2 = 0.0;
    double amplitude = 0.0;
  };
  std::vector<Bump> bumps(static_cast<std::size_t>(n_bumps));
  for (auto& b : bumps) {
    for (int d = 0; d < grid.N; ++d) {
      b.center[d] = (2.0 * unit(rng) - 1.0) * grid.L / 3.0;
    }
    const double w = (0.35 + 0.9 * unit(rng)) * grid.L / 8.0;
    b.inv_w2 = 1.0 / (w * w);
    b.amplitude = 0.3 + 0.7 * unit(rng);
  }
  const int N = grid.N;
  return sample_field(grid, [bumps, N](const std::array<double, 3>& x) {
    double v = 0.0;
    for (const auto& b : bumps) {
      double q = 0.0;
      for (int d = 0; d < N; ++d) {
        const double dx = x[d] - b.center[d];
        q += dx * dx;
      }
      v += b.amplitude * std::exp(-q * b.inv_w2);
    }
    return v;
  });
}

Field dirac_ball_field(const Grid& grid, double radius_cells) {
  if (!(radius_cells > 0.0)) {
    throw std::invalid_argument("dirac_ball_field: radius must be positive");
  }
  const double rho = radius_cells * grid.h();
  Field f(grid);
  std::size_t inside = 0;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    if (grid.radius(c) <= rho) {
      f.values[c] = 1.0;
      ++inside;
    }
  }
  if (inside == 0) {
    throw std::invalid_argument("dirac_ball_field: radius below the grid scale");
  }
  const double scale = 1.0 / (static_cast<double>(inside) * grid.cell_measure());
  for (auto& v : f.values) v *= scale;
  return f;
}

Field truncated_extinction_field(const Grid& grid, const ProblemParams& params,
                                 double T, double r_trunc) {
  if (!(r_trunc > 0.0)) {
    throw std::invalid_argument(
        "truncated_extinction_field: truncation radius must be positive");
  }
  const ExplicitExtinctionSolution U = explicit_extinction_solution(params, T);
  const double cap = U(r_trunc, 0.0);
  Field f(grid);
  for (std::size_t c = 0; c < grid.size(); ++c) {
    f.values[c] = std::min(U(grid.radius(c), 0.0), cap);
  }
  return f;
}

void fan_out(int jobs, int count, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  const int workers = std::min(std::max(jobs, 1), count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto body = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

std::uint64_t item_seed(std::uint64_t base, int index) {
  // splitmix64 step keeps per-item streams decorrelated.
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SolverConfig with_times(SolverConfig cfg, const std::vector<double>& times,
                        bool include_start) {
  if (times.empty()) {
    throw std::invalid_argument("suite: snapshot times must be non-empty");
  }
  cfg.snapshot_times.clear();
  if (include_start) cfg.snapshot_times.push_back(cfg.t_start);
  for (double t : times) cfg.snapshot_times.push_back(cfg.t_start + t);
  cfg.t_end = times.back();
  return cfg;
}

void default_epsilon(SolverConfig& cfg, double scale) {
  if (!cfg.epsilon_reg) cfg.epsilon_reg = scale;
}

}  // namespace

SuiteResult smoothing_suite(const SmoothingSuiteOptions& opt) {
  opt.params.validate();
  opt.grid.validate();
  double F0 = opt.F0;
  if (!(F0 > 0.0)) {
    if (opt.params.m == 1.0) {
      F0 = best_constant_linear(opt.params.N);
    } else {
      throw std::invalid_argument(
          "smoothing_suite: F0 must be supplied (constants manifest) unless m = 1");
    }
  }
  if (opt.mode == SmoothingMode::Lp && !(opt.Cp > 0.0)) {
    throw std::invalid_argument("smoothing_suite: Lp mode needs a positive Cp");
  }
  if (opt.data < 1 && !opt.include_dirac) {
    throw std::invalid_argument("smoothing_suite: no data requested");
  }

  std::vector<Field> data;
  std::vector<std::string> labels;
  for (int i = 0; i < opt.data; ++i) {
    data.push_back(random_bump_field(opt.grid, item_seed(opt.seed, i), 1 + i % 3));
    labels.push_back("random-" + std::to_string(i));
  }
  if (opt.include_dirac) {
    data.push_back(dirac_ball_field(opt.grid, opt.dirac_radius_cells));
    labels.push_back("dirac");
  }

  SuiteResult out;
  out.reports.resize(data.size());
  fan_out(opt.jobs, static_cast<int>(data.size()), [&](int i) {
    SolverConfig cfg = with_times(opt.solver, opt.times, false);
    default_epsilon(cfg, 1e-6 * data[static_cast<std::size_t>(i)].sup_norm());
    Trajectory traj = evolve(data[static_cast<std::size_t>(i)],
                             power_nonlinearity(opt.params.m), opt.params, cfg);
    EstimateReport rep =
        opt.mode == SmoothingMode::L1
            ? check_smoothing_L1(traj, opt.params, F0, opt.tol)
            : check_smoothing_Lp(traj, opt.params, opt.p, opt.Cp, opt.tol);
    out.reports[static_cast<std::size_t>(i)] =
        LabeledReport{labels[static_cast<std::size_t>(i)], std::move(rep)};
  });
  return out;
}

SuiteResult marcinkiewicz_suite(const MarcinkiewiczSuiteOptions& opt) {
  opt.params.validate();
  opt.grid.validate();
  if (!(opt.Fp0 > 0.0)) {
    throw std::invalid_argument(
        "marcinkiewicz_suite: Fp0 must be supplied (constants manifest entry)");
  }
  if (opt.data < 1) {
    throw std::invalid_argument("marcinkiewicz_suite: no data requested");
  }
  const double tail_power = static_cast<double>(opt.params.N) / opt.p;

  SuiteResult out;
  out.reports.resize(static_cast<std::size_t>(opt.data));
  fan_out(opt.jobs, opt.data, [&](int i) {
    std::mt19937_64 rng(item_seed(opt.seed, i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double amplitude = 0.5 + 1.5 * unit(rng);
    const double cap = 2.0 + 6.0 * unit(rng);
    Field u0(opt.grid);
    for (std::size_t c = 0; c < opt.grid.size(); ++c) {
      u0.values[c] =
          std::min(amplitude * std::pow(opt.grid.radius(c), -tail_power), cap);
    }
    SolverConfig cfg = with_times(opt.solver, opt.times, true);
    default_epsilon(cfg, 1e-4 * cap);
    Trajectory traj =
        evolve(u0, power_nonlinearity(opt.params.m), opt.params, cfg);
    out.reports[static_cast<std::size_t>(i)] = LabeledReport{
        "power-" + std::to_string(i),
        check_smoothing_marcinkiewicz(traj, opt.params, opt.p, opt.Fp0, opt.tol)};
  });
  return out;
}

SuiteResult concentration_suite(const ConcentrationSuiteOptions& opt) {
  opt.grid.validate();
  if (opt.pairs < 1) {
    throw std::invalid_argument("concentration_suite: need at least one pair");
  }
  SuiteResult out;
  out.reports.resize(static_cast<std::size_t>(opt.pairs));
  fan_out(opt.jobs, opt.pairs, [&](int i) {
    const std::uint64_t ps = item_seed(opt.seed, i);
    std::mt19937_64 rng(ps ^ 0xD1B54A32D192ED03ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Field u0 = random_bump_field(opt.grid, ps, 2 + i % 2);
    const double w = (0.5 + 0.5 * unit(rng)) * opt.grid.L / 10.0;
    const double a = (0.2 + 0.4 * unit(rng)) * u0.sup_norm();
    const double inv_w2 = 1.0 / (w * w);
    const int N = opt.grid.N;
    Field extra = sample_field(opt.grid, [a, inv_w2, N](const std::array<double, 3>& x) {
      double q = 0.0;
      for (int d = 0; d < N; ++d) q += x[d] * x[d];
      return a * std::exp(-q * inv_w2);
    });
    Field sum(opt.grid);
    for (std::size_t c = 0; c < opt.grid.size(); ++c) {
      sum.values[c] = u0.values[c] + extra.values[c];
    }
    Field v0 = spherical_rearrangement(sum);

    const double m_pair =
        opt.different_diffusivity ? 0.5 : (i % 2 == 0 ? 0.5 : 0.8);
    const ProblemParams params{opt.N, opt.sigma, m_pair};

    SolverConfig cfg = opt.solver;
    default_epsilon(cfg, 1e-3 * std::max(u0.sup_norm(), v0.sup_norm()));

    EstimateReport rep;
    if (opt.different_diffusivity) {
      Nonlinearity A = general_nonlinearity(
          [](double u) { return u <= 0.0 ? 0.0 : std::sqrt(u) + u; },
          [](double u) { return 0.5 / std::sqrt(std::max(u, 1e-300)) + 1.0; },
          true);
      rep = check_concentration_monotone(u0, v0, A, power_nonlinearity(0.5),
                                         params, opt.times, opt.tol, cfg);
    } else {
      rep = check_concentration_monotone(u0, v0, power_nonlinearity(m_pair),
                                         std::nullopt, params, opt.times,
                                         opt.tol, cfg);
    }
    out.reports[static_cast<std::size_t>(i)] =
        LabeledReport{"pair-" + std::to_string(i), std::move(rep)};
  });
  return out;
}

SuiteResult extinction_suite(const ExtinctionSuiteOptions& opt) {
  opt.params.validate();
  opt.grid.validate();
  Field u0 = truncated_extinction_field(opt.grid, opt.params, opt.T, opt.r_trunc);
  SolverConfig cfg = opt.solver;
  cfg.t_end = opt.t_end;
  if (cfg.snapshot_times.empty()) {
    cfg.snapshot_times = {cfg.t_start + 0.3 * opt.t_end,
                          cfg.t_start + 0.6 * opt.t_end,
                          cfg.t_start + 0.9 * opt.t_end};
  }
  default_epsilon(cfg, 1e-3 * u0.sup_norm());
  SuiteResult out;
  out.reports.push_back(LabeledReport{
      "extinction-bound", check_extinction_bound(u0, opt.params, cfg, opt.tol)});
  return out;
}

SuiteResult general_suite(const GeneralSuiteOptions& opt) {
  opt.params.validate();
  opt.grid.validate();
  Field u0 = truncated_extinction_field(opt.grid, opt.params, opt.T, opt.r_trunc);
  SolverConfig cfg = opt.solver;
  cfg.t_end = opt.t_end;
  if (cfg.snapshot_times.empty()) {
    cfg.snapshot_times = {cfg.t_start + 0.5 * opt.t_end,
                          cfg.t_start + opt.t_end};
  }
  default_epsilon(cfg, 1e-3 * u0.sup_norm());
  // A(u) = u^{1/2} + u is concave with certificate A'(u) >= (1/2) u^{-1/2}.
  Nonlinearity A = general_nonlinearity(
      [](double u) { return u <= 0.0 ? 0.0 : std::sqrt(u) + u; },
      [](double u) { return 0.5 / std::sqrt(std::max(u, 1e-300)) + 1.0; }, true,
      0.5, opt.params.m);
  SuiteResult out;
  out.reports.push_back(LabeledReport{
      "general-certificate",
      check_general_nonlinearity(u0, A, opt.params, cfg, opt.F0, opt.tol)});
  return out;
}

}  // namespace ffd::suites
