#pragma once

#include <Eigen/Core>

#include "mdik/solver.hpp"

namespace mdik {

/// Levenberg-Marquardt settings on top of the shared loop configuration.
/// Damping is lambda = E + lambda_min by default; adaptive_damping = false
/// freezes it at the floor for sensitivity checks.
struct LMConfig {
  SolverConfig base;
  double lambda_min = 1e-3;
  bool adaptive_damping = true;

  void validate() const;
};

/// Clamped Jacobian-transpose baseline: q_ref <- clamp(q_ref - alpha*g, box)
/// under the same fixed-Jacobian, deadline/threshold loop as the mirror
/// solver. No mirror mapping, no margin, no acceleration.
SolveResult jt_solve(const RobotModel& model, const TaskSet& tasks,
                     const Eigen::VectorXd& q_obs, const SolverConfig& config);

/// Clamped Levenberg-Marquardt baseline: per iteration solves
/// (J^T W J + lambda*I) dq = J^T W e and clamps q_ref + dq into the box.
/// A failed linear solve aborts with status numerical_failure.
SolveResult lm_solve(const RobotModel& model, const TaskSet& tasks,
                     const Eigen::VectorXd& q_obs, const LMConfig& config);

/// Raised when the damped system cannot be solved to tolerance.
class LinearSolveError : public std::runtime_error {
 public:
  explicit LinearSolveError(const std::string& what) : std::runtime_error(what) {}
};

/// Direct dense solve of a damped SPD system; the result satisfies
/// ||Ax - b|| <= 1e-10 * (1 + ||b||) or LinearSolveError is thrown.
/// Non-finite input raises std::invalid_argument.
Eigen::VectorXd solve_damped_system(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

}  // namespace mdik
