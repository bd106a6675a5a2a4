#include "mdik/baselines.hpp"

#include <Eigen/Cholesky>

#include "ik_loop.hpp"

namespace mdik {

namespace {

Eigen::VectorXd clamp_to_limits(const RobotModel& model, const Eigen::VectorXd& q) {
  return q.cwiseMax(model.lower_limits()).cwiseMin(model.upper_limits());
}

}  // namespace

void LMConfig::validate() const {
  base.validate();
  if (!(lambda_min > 0.0)) throw std::invalid_argument("LMConfig: lambda_min must be > 0");
}

SolveResult jt_solve(const RobotModel& model, const TaskSet& tasks,
                     const Eigen::VectorXd& q_obs, const SolverConfig& config) {
  config.validate();
  if (q_obs.size() != model.dof()) {
    throw std::invalid_argument("jt_solve: q_obs size does not match model dof");
  }
  const Eigen::VectorXd q_start = clamp_to_limits(model, q_obs);
  const BoxConstraint box = compute_box(model, q_start, config.dt);

  auto step = [&](Eigen::VectorXd& q, const Eigen::VectorXd&, double, const Eigen::VectorXd& g,
                  const Eigen::MatrixXd&) {
    q -= config.alpha * g;
    box.clamp_into(q);
    return true;
  };
  auto finish = [](Eigen::VectorXd&) { return false; };
  return detail::run_ik_loop(model, tasks, q_start, q_start, config, step, finish);
}

SolveResult lm_solve(const RobotModel& model, const TaskSet& tasks,
                     const Eigen::VectorXd& q_obs, const LMConfig& config) {
  config.validate();
  if (q_obs.size() != model.dof()) {
    throw std::invalid_argument("lm_solve: q_obs size does not match model dof");
  }
  const Eigen::VectorXd q_start = clamp_to_limits(model, q_obs);
  const BoxConstraint box = compute_box(model, q_start, config.base.dt);

  Eigen::MatrixXd normal;  // J^T W J, cached while J stays fixed
  bool have_normal = false;
  auto step = [&](Eigen::VectorXd& q, const Eigen::VectorXd&, double energy,
                  const Eigen::VectorXd& g, const Eigen::MatrixXd& jacobian) {
    if (!have_normal || config.base.refresh_jacobian) {
      normal = jacobian.transpose() * tasks.weights.asDiagonal() * jacobian;
      have_normal = true;
    }
    const double lambda = (config.adaptive_damping ? energy : 0.0) + config.lambda_min;
    Eigen::MatrixXd damped = normal;
    damped.diagonal().array() += lambda;
    Eigen::VectorXd dq;
    try {
      dq = solve_damped_system(damped, -g);  // J^T W e = -g
    } catch (const LinearSolveError&) {
      return false;
    } catch (const std::invalid_argument&) {
      return false;  // non-finite system from a diverged iterate
    }
    q += dq;
    box.clamp_into(q);
    return true;
  };
  auto finish = [](Eigen::VectorXd&) { return false; };
  return detail::run_ik_loop(model, tasks, q_start, q_start, config.base, step, finish);
}

Eigen::VectorXd solve_damped_system(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  if (A.rows() != A.cols() || A.rows() != b.size()) {
    throw std::invalid_argument("solve_damped_system: shapes do not conform");
  }
  if (!A.allFinite() || !b.allFinite()) {
    throw std::invalid_argument("solve_damped_system: non-finite entries");
  }
  Eigen::VectorXd x;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) {
    x = llt.solve(b);
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success) {
      throw LinearSolveError("solve_damped_system: factorization failed");
    }
    x = ldlt.solve(b);
  }
  if (!x.allFinite() || (A * x - b).norm() > 1e-10 * (1.0 + b.norm())) {
    throw LinearSolveError("solve_damped_system: residual tolerance not met");
  }
  return x;
}

}  // namespace mdik
