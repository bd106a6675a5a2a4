#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "mdik/baselines.hpp"
#include "mdik/model.hpp"
#include "mdik/solver.hpp"

namespace mdik {

enum class SolverId { jt, lm, md, amd, samd };

std::string to_string(SolverId id);
SolverId solver_from_string(const std::string& name);

/// Sinusoidal reference around a center pose. Components 0-2 of amplitude,
/// frequency and phase drive the position axes (meters), 3-5 a world-frame
/// rotation-vector offset (radians). Frequencies stay in (0, 0.5] Hz.
struct TrajectorySpec {
  Pose center;
  Eigen::Matrix<double, 6, 1> amplitude = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 1> frequency = Eigen::Matrix<double, 6, 1>::Constant(0.5);
  Eigen::Matrix<double, 6, 1> phase = Eigen::Matrix<double, 6, 1>::Zero();
  double duration = 12.5;
  double dt = 5e-3;

  void validate() const;
};

/// Reference pose at time t: center + amplitude*sin(2*pi*f*t + phase) on the
/// position axes, and the rotation-vector offset applied to the center
/// orientation through the exponential map.
Pose gen_reference(const TrajectorySpec& spec, double t);

struct TickRecord {
  double time = 0.0;
  double objective = 0.0;   // E at the returned iterate
  double error_norm = 0.0;  // ||e|| at the returned iterate
  Eigen::VectorXd q_ref;
  int iterations = 0;
  double solve_time = 0.0;  // seconds; 0 in iteration_count mode for reproducibility
  SolveStatus status = SolveStatus::converged;
  bool at_box_boundary = false;      // some non-degenerate joint sits on the full box bound
  double feasibility_violation = 0.0;  // harness-side recheck, 0 when feasible
};

struct TrialResult {
  SolverId solver = SolverId::samd;
  int trial_index = 0;
  std::uint64_t seed = 0;
  std::vector<TickRecord> ticks;

  double mean_error_norm() const;
  double joint_fluctuation_value() const;  // mean second-difference norm
  double boundary_hit_rate() const;
  double max_feasibility_violation() const;
};

struct Metrics {
  int trials = 0;
  double mean_error_norm = 0.0;
  double median_error_norm = 0.0;
  double joint_fluctuation = 0.0;
  double mean_solve_time = 0.0;
  double p99_solve_time = 0.0;
  double deadline_miss_rate = 0.0;  // fraction of ticks that did not converge
  int excluded_trials = 0;
};

struct SolverSummary {
  SolverId solver;
  Metrics metrics;
};

struct AggregateReport {
  std::vector<SolverSummary> per_solver;
  std::vector<int> excluded_trial_indices;
};

/// Smoothness proxy: mean over interior samples of ||q[t+1] - 2q[t] + q[t-1]||,
/// or of the first difference when `first_difference` is set. Needs at least
/// three (two) samples; translation-invariant by construction.
double joint_fluctuation(const std::vector<Eigen::VectorXd>& qs, bool first_difference = false);

struct TrialOptions {
  SolverId solver = SolverId::samd;
  std::string frame;
  SolverConfig config;
  double lambda_min = 1e-3;
  bool adaptive_damping = true;
};

/// Derives the per-trial seed from a master seed and the trial index; the
/// same derivation on the same master always yields the same trial stream.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream);

/// The start configuration a given seed produces (interior-uniform sample);
/// exposed so callers can pair trajectories with their start.
Eigen::VectorXd trial_start_config(const RobotModel& model, std::uint64_t seed);

/// Samples the randomized tracking reference for one trial: the center is the
/// FK pose of the seed's start configuration, position amplitudes are uniform
/// within a reachability envelope estimated by FK sampling, rotation
/// amplitudes uniform up to a fixed cap, frequencies uniform on (0, 0.5] Hz
/// and phases on [0, 2pi).
TrajectorySpec sample_trajectory(const RobotModel& model, const std::string& frame,
                                 std::uint64_t seed, double duration, double dt);

/// Runs one tracking trial under ideal kinematic execution: the observation
/// of tick n+1 is the reference returned at tick n. samd carries its
/// accelerator state across ticks; every other solver starts each tick fresh.
/// The per-tick box feasibility is rechecked here, independent of the solver.
TrialResult run_trial(const RobotModel& model, const TrialOptions& options,
                      const TrajectorySpec& spec, std::uint64_t seed);

/// Per-solver metrics with the outlier-trial exclusion rule: a trial is
/// dropped when every solver's mean error norm exceeds the given percentile
/// of the pooled per-trial means.
AggregateReport aggregate(const std::vector<TrialResult>& results,
                          double outlier_percentile = 95.0);

/// Writes ticks.csv and summary.csv under `dir` (created if missing); floats
/// are shortest round-trip decimals.
void write_csv(const std::vector<TrialResult>& results, const AggregateReport& report,
               const std::string& dir);
void write_csv(const std::vector<TrialResult>& results, const std::string& dir);

}  // namespace mdik
