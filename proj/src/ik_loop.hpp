#pragma once

#include <chrono>
#include <stdexcept>
#include <utility>

#include "mdik/kinematics.hpp"
#include "mdik/solver.hpp"

// Shared scaffolding of the iterative solvers: task resolution, the Jacobian
// fixed at the observed configuration, and the convergence/deadline loop.
// Variant-specific updates are injected as callables.

namespace mdik::detail {

struct ResolvedTasks {
  std::vector<int> ee_indices;
  const TaskSet* tasks = nullptr;
};

inline ResolvedTasks resolve_tasks(const RobotModel& model, const TaskSet& tasks) {
  tasks.validate();
  ResolvedTasks rt;
  rt.tasks = &tasks;
  rt.ee_indices.reserve(tasks.frames.size());
  for (const std::string& frame : tasks.frames) {
    rt.ee_indices.push_back(model.end_effector_index(frame));
  }
  return rt;
}

inline void error_into(const RobotModel& model, const FkWorkspace& ws, const ResolvedTasks& rt,
                       Eigen::VectorXd& e) {
  for (size_t f = 0; f < rt.ee_indices.size(); ++f) {
    const Pose cur = frame_pose(model, ws, rt.ee_indices[f]);
    const Pose& ref = rt.tasks->targets[f];
    const auto row = static_cast<Eigen::Index>(6 * f);
    e.segment<3>(row) = ref.position - cur.position;
    e.segment<3>(row + 3) =
        rotation_vector(quat_mul(ref.orientation, quat_inverse(cur.orientation)));
  }
}

// step(q_ref, e, E, g, J) -> false aborts with numerical_failure.
// finish(q_ref) -> true when it moved the iterate; E is then re-evaluated.
template <class StepFn, class FinishFn>
SolveResult run_ik_loop(const RobotModel& model, const TaskSet& tasks,
                        const Eigen::VectorXd& q_obs, Eigen::VectorXd q_ref,
                        const SolverConfig& cfg, StepFn&& step, FinishFn&& finish) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  const auto elapsed = [&t_start] {
    return std::chrono::duration<double>(clock::now() - t_start).count();
  };

  const ResolvedTasks rt = resolve_tasks(model, tasks);
  if (q_obs.size() != model.dof()) {
    throw std::invalid_argument("solve: observed configuration size does not match model dof");
  }

  FkWorkspace ws;
  forward_all(model, q_obs, ws);
  Eigen::MatrixXd jacobian = stack_tasks_resolved(model, ws, rt.ee_indices);

  const Eigen::VectorXd& weights = tasks.weights;
  Eigen::VectorXd e(tasks.task_dim());
  Eigen::VectorXd g(model.dof());
  const double budget = cfg.zeta * cfg.dt;

  int iters = 0;
  double energy = 0.0;
  SolveStatus status = SolveStatus::converged;
  while (true) {
    forward_all(model, q_ref, ws);
    error_into(model, ws, rt, e);
    energy = objective(e, weights);
    if (energy < cfg.delta) {
      status = SolveStatus::converged;
      break;
    }
    if (cfg.deadline_mode == DeadlineMode::wall_clock && elapsed() > budget) {
      status = SolveStatus::deadline;
      break;
    }
    if (cfg.max_iters > 0 && iters >= cfg.max_iters) {
      status = SolveStatus::iter_cap;
      break;
    }
    if (cfg.refresh_jacobian && iters > 0) {
      jacobian = stack_tasks_resolved(model, ws, rt.ee_indices);  // ws holds q_ref
    }
    g.noalias() = -(jacobian.transpose() * weights.cwiseProduct(e));
    if (!step(q_ref, e, energy, g, jacobian)) {
      status = SolveStatus::numerical_failure;
      break;
    }
    ++iters;
  }

  if (finish(q_ref)) {
    forward_all(model, q_ref, ws);
    error_into(model, ws, rt, e);
    energy = objective(e, weights);
  }

  SolveResult out;
  out.q_ref = std::move(q_ref);
  out.objective = energy;
  out.iterations = iters;
  out.elapsed = elapsed();
  out.converged = energy < cfg.delta;
  out.status = status;
  return out;
}

}  // namespace mdik::detail
