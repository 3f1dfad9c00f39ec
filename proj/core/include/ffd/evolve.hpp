#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ffd/exponents.hpp"
#include "ffd/grid.hpp"

namespace ffd {

enum class TimeScheme {
  SemiImplicit,    // backward Euler, stabilized fixed-point inner solver
  ExplicitOracle,  // forward Euler; independent cross-check, tiny steps
};

/// Configuration of a single evolution run of u_t + Op A(u) = f.
struct SolverConfig {
  double dt_initial = 1e-3;
  double t_end = 1.0;
  TimeScheme scheme = TimeScheme::SemiImplicit;

  /// Regularization width for degenerate diffusivity: A is replaced by the
  /// odd extension of A(sqrt(u^2 + eps^2)) - A(eps). Unset means
  /// 1e-8 * sup|u0| when A is degenerate at the origin, 0 otherwise.
  std::optional<double> epsilon_reg;

  double newton_tol = 1e-10;  // relative inner-iteration tolerance
  int max_inner_iters = 200;
  int anderson_depth = 2;     // 0 disables the acceleration

  /// Requested output times (absolute, sorted, within [t_start, t_start+t_end]).
  std::vector<double> snapshot_times;

  /// Absolute time of u0. Snapshots and step records carry absolute times;
  /// the run integrates over [t_start, t_start + t_end].
  double t_start = 0.0;

  double dt_growth = 1.0;                 // >1 grows dt after easy steps
  std::optional<double> dt_max;           // cap on the step size
  int max_halvings = 20;                  // dt reductions before giving up

  /// Sup-norm fraction of sup|u0| below which the run is declared extinct.
  double extinction_threshold = 1e-6;

  /// Additional per-snapshot diagnostics.
  std::vector<double> lp_diagnostics{1.0, 2.0};
  std::optional<double> gauge_p;  // record the Marcinkiewicz gauge at this p

  void validate() const;
};

struct SnapshotDiagnostics {
  double mass = 0.0;
  double sup_norm = 0.0;
  std::vector<double> lp_orders;  // echo of lp_diagnostics
  std::vector<double> lp_norms;
  double gauge = 0.0;             // 0 when gauge_p is unset
};

struct Snapshot {
  double time = 0.0;
  Field field;
  SnapshotDiagnostics diagnostics;
};

struct StepRecord {
  double time = 0.0;  // absolute time reached by the step
  double dt = 0.0;
  double sup_norm = 0.0;
  double mass = 0.0;
  int inner_iterations = 0;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;  // at the requested times, increasing
  std::vector<StepRecord> steps;    // every accepted step
  std::optional<double> extinction_time;  // set iff sup fell below threshold
  Field final_state;
  double start_time = 0.0;
  double final_time = 0.0;
  long accepted_steps = 0;
  long rejected_steps = 0;
  long total_inner_iterations = 0;
  double clipped_mass = 0.0;  // total mass added by clipping negatives
  double initial_mass = 0.0;
  double initial_sup = 0.0;

  const Snapshot& snapshot_at(double time, double tol = 1e-9) const;
};

/// Integrate u_t + (-Delta)^{sigma/2} A(u) = source from u0 (given at
/// absolute time cfg.t_start). The source callback, when non-empty, is
/// evaluated at the end time of each step (backward Euler). Throws
/// std::runtime_error on inner-solver divergence or step-size underflow.
Trajectory evolve(const Field& u0, const Nonlinearity& A,
                  const std::function<Field(double)>& source,
                  const ProblemParams& params, const SolverConfig& cfg);

/// Homogeneous convenience overload.
Trajectory evolve(const Field& u0, const Nonlinearity& A,
                  const ProblemParams& params, const SolverConfig& cfg);

/// First time the recorded sup-norm drops below `threshold`, linearly
/// interpolated between consecutive records (step log when available,
/// snapshots otherwise). Empty optional if the norm never crosses.
std::optional<double> detect_extinction(const Trajectory& traj,
                                        double threshold);

/// Write the trajectory as a directory: one Field binary per snapshot plus
/// manifest.json (times, diagnostics, config echo, solver metadata).
void write_trajectory(const Trajectory& traj, const SolverConfig& cfg,
                      const std::string& directory);

}  // namespace ffd
