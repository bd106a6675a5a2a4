#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "mdik/kinematics.hpp"
#include "mdik/model.hpp"

namespace mdik {

/// Per-tick joint bounds: hardware limits intersected with the reach allowed
/// by the velocity caps over one control period.
struct BoxConstraint {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int size() const { return static_cast<int>(lower.size()); }

  /// A dimension collapses when lower == upper (e.g. zero velocity cap);
  /// mirror-space math is skipped there and the joint is pinned to upper.
  bool degenerate(int i) const { return !(upper[i] > lower[i]); }

  double width(int i) const { return upper[i] - lower[i]; }

  void clamp_into(Eigen::VectorXd& q) const {
    q = q.cwiseMax(lower).cwiseMin(upper);
  }

  bool contains(const Eigen::VectorXd& q, double tol) const {
    return (q.array() >= lower.array() - tol).all() &&
           (q.array() <= upper.array() + tol).all();
  }
};

/// Reference poses for one or more end effectors plus the diagonal task
/// weights, stored as a 6M vector (linear xyz then angular xyz per frame).
struct TaskSet {
  std::vector<std::string> frames;
  std::vector<Pose> targets;
  Eigen::VectorXd weights;

  static TaskSet single(const std::string& frame, const Pose& target);

  int task_dim() const { return 6 * static_cast<int>(frames.size()); }
  void validate() const;
};

enum class DeadlineMode { wall_clock, iteration_count };

/// Solver hyperparameters. Defaults are the reference configuration: unit
/// step size, 1e-10 convergence threshold, 1e-2 margin, r=5, gamma=2,
/// eta=0.5, with a 5 ms control period and 20% of it as the solve budget.
struct SolverConfig {
  double alpha = 1.0;    // gradient step size
  double delta = 1e-10;  // convergence threshold on the objective
  double dt = 5e-3;      // control period (s)
  double zeta = 0.2;     // fraction of dt available for solving
  double epsilon = 1e-2; // sigmoid endpoint level and clamping margin
  double r = 5.0;        // smoothness of switching between PG and MD updates
  double gamma = 2.0;    // PG step-size reduction
  double eta = 0.5;      // smooth-reset ratio
  int max_iters = 0;     // hard iteration cap, 0 = none (required in iteration_count mode)
  DeadlineMode deadline_mode = DeadlineMode::wall_clock;
  bool refresh_jacobian = false;  // experimental: rebuild J every iteration

  /// Throws std::invalid_argument when a parameter is out of range.
  void validate() const;
};

/// Accelerator state carried across control ticks. k is real-valued because
/// the smooth reset scales it by eta.
struct SolverState {
  Eigen::VectorXd z;
  double k = 0.0;
  bool initialized = false;
};

enum class SolveStatus { converged, deadline, iter_cap, numerical_failure };

std::string to_string(SolveStatus status);

struct SolveResult {
  Eigen::VectorXd q_ref;
  double objective = 0.0;
  int iterations = 0;
  double elapsed = 0.0;  // wall seconds, measured in every mode
  bool converged = false;
  SolveStatus status = SolveStatus::converged;
};

enum class Variant { md, amd, samd };

/// lower = max(q_low, q_obs - vmax*dt), upper = min(q_up, q_obs + vmax*dt).
/// An observation outside the hardware limits is clamped into them first;
/// `obs_clamped`, when given, reports that this happened.
BoxConstraint compute_box(const RobotModel& model, const Eigen::VectorXd& q_obs, double dt,
                          bool* obs_clamped = nullptr);

/// Task error at q: per frame [p_ref - p(q); log(Q_ref * Q(q)^-1)], stacked
/// in TaskSet order.
Eigen::VectorXd task_error(const RobotModel& model, const Eigen::VectorXd& q,
                           const TaskSet& tasks);

/// E = 1/2 sum_i w_i e_i^2.
double objective(const Eigen::VectorXd& e, const Eigen::VectorXd& weights);

/// g = -J^T (w o e).
Eigen::VectorXd gradient(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& weights,
                         const Eigen::VectorXd& e);

/// Logistic map scaled so sigmoid(0, eps) = eps and sigmoid(1, eps) = 1-eps;
/// gain a = 2*ln((1-eps)/eps).
double sigmoid(double x, double eps);

/// Inverse of the above; throws std::domain_error outside (0, 1).
double sigmoid_inv(double y, double eps);

/// nu(q) = (q - lower)/(upper - lower) element-wise; degenerate dimensions
/// map to 0.5 by convention and must be pinned to upper by the caller.
Eigen::VectorXd normalize(const Eigen::VectorXd& q, const BoxConstraint& box);
Eigen::VectorXd denormalize(const Eigen::VectorXd& u, const BoxConstraint& box);

/// One mirror-descent update: the iterate is pulled to the unconstrained
/// mirror space through sigmoid_inv(normalize(.)), stepped by -alpha*g, and
/// mapped back. Output is strictly interior on non-degenerate dimensions and
/// exactly upper on degenerate ones.
Eigen::VectorXd md_step(const Eigen::VectorXd& q_ref, const Eigen::VectorXd& g,
                        const BoxConstraint& box, double alpha, double eps);

/// Software margin: clamps normalize(q) to [eps, 1-eps] and denormalizes,
/// i.e. projects onto the eps-shrunk box.
Eigen::VectorXd eps_clamp(const Eigen::VectorXd& q_ref, const BoxConstraint& box, double eps);

/// Companion projected-gradient update and interpolation:
///   z     <- clamp(z - (k*alpha)/(r*gamma) * g, box)
///   q_ref <- beta*z + (1-beta)*q_ref,  beta = 1/(1 + k/r)
/// The caller increments state.k afterwards, once per iteration.
void accel_step(SolverState& state, Eigen::VectorXd& q_ref, const Eigen::VectorXd& g,
                const BoxConstraint& box, double alpha, double r, double gamma);

/// Warm start across ticks: first call sets z = q_obs, k = 1; later calls
/// blend z <- clamp(eta*z + (1-eta)*q_obs, box) and scale k <- eta*k.
void smooth_reset(SolverState& state, const Eigen::VectorXd& q_obs, const BoxConstraint& box,
                  double eta);

/// Full solve of one control tick: builds the box, fixes the Jacobian at
/// q_obs, and iterates (mirror step, margin clamp, optional acceleration)
/// until E < delta or the deadline. For samd the passed state is warm-started
/// via smooth_reset and carried; for amd it is reset fresh (z = q_obs, k = 1);
/// for md it is untouched. The returned iterate always lies in the eps-shrunk
/// box on non-degenerate dimensions.
SolveResult solve(const RobotModel& model, const TaskSet& tasks, const Eigen::VectorXd& q_obs,
                  const SolverConfig& config, SolverState& state, Variant variant);

}  // namespace mdik
