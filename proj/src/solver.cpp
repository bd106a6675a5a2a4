#include "mdik/solver.hpp"

#include <cmath>
#include <stdexcept>

#include "ik_loop.hpp"

namespace mdik {

namespace {

double sigmoid_gain(double eps) { return 2.0 * std::log((1.0 - eps) / eps); }

Eigen::VectorXd clamp_to_limits(const RobotModel& model, const Eigen::VectorXd& q,
                                bool* clamped) {
  Eigen::VectorXd out = q.cwiseMax(model.lower_limits()).cwiseMin(model.upper_limits());
  if (clamped) {
    *clamped = out.size() > 0 && (out - q).cwiseAbs().maxCoeff() > 0.0;
  }
  return out;
}

}  // namespace

TaskSet TaskSet::single(const std::string& frame, const Pose& target) {
  TaskSet tasks;
  tasks.frames = {frame};
  tasks.targets = {target};
  tasks.weights = Eigen::VectorXd::Ones(6);
  return tasks;
}

void TaskSet::validate() const {
  if (frames.empty()) throw std::invalid_argument("TaskSet: empty task set");
  if (frames.size() != targets.size()) {
    throw std::invalid_argument("TaskSet: frames and targets differ in length");
  }
  if (weights.size() != task_dim()) {
    throw std::invalid_argument("TaskSet: weights must have 6 entries per frame");
  }
  if ((weights.array() < 0.0).any()) {
    throw std::invalid_argument("TaskSet: weights must be nonnegative");
  }
}

void SolverConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("SolverConfig: alpha must be > 0");
  if (!(delta > 0.0)) throw std::invalid_argument("SolverConfig: delta must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("SolverConfig: dt must be > 0");
  if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("SolverConfig: zeta must be in (0,1)");
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw std::invalid_argument("SolverConfig: epsilon must be in (0, 0.5)");
  }
  if (!(r > 0.0)) throw std::invalid_argument("SolverConfig: r must be > 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("SolverConfig: gamma must be > 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("SolverConfig: eta must be in [0,1]");
  if (max_iters < 0) throw std::invalid_argument("SolverConfig: max_iters must be >= 0");
  if (deadline_mode == DeadlineMode::iteration_count && max_iters == 0) {
    throw std::invalid_argument("SolverConfig: iteration_count mode needs max_iters > 0");
  }
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::deadline: return "deadline";
    case SolveStatus::iter_cap: return "iter_cap";
    case SolveStatus::numerical_failure: return "failed";
  }
  return "?";
}

BoxConstraint compute_box(const RobotModel& model, const Eigen::VectorXd& q_obs, double dt,
                          bool* obs_clamped) {
  if (q_obs.size() != model.dof()) {
    throw std::invalid_argument("compute_box: q_obs size does not match model dof");
  }
  const Eigen::VectorXd q = clamp_to_limits(model, q_obs, obs_clamped);
  BoxConstraint box;
  box.lower = model.lower_limits().cwiseMax(q - model.velocity_limits() * dt);
  box.upper = model.upper_limits().cwiseMin(q + model.velocity_limits() * dt);
  return box;
}

Eigen::VectorXd task_error(const RobotModel& model, const Eigen::VectorXd& q,
                           const TaskSet& tasks) {
  const detail::ResolvedTasks rt = detail::resolve_tasks(model, tasks);
  FkWorkspace ws;
  forward_all(model, q, ws);
  Eigen::VectorXd e(tasks.task_dim());
  detail::error_into(model, ws, rt, e);
  return e;
}

double objective(const Eigen::VectorXd& e, const Eigen::VectorXd& weights) {
  if (e.size() != weights.size()) {
    throw std::invalid_argument("objective: error and weight lengths differ");
  }
  return 0.5 * e.cwiseProduct(weights).dot(e);
}

Eigen::VectorXd gradient(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& weights,
                         const Eigen::VectorXd& e) {
  if (jacobian.rows() != e.size() || e.size() != weights.size()) {
    throw std::invalid_argument("gradient: shapes do not conform");
  }
  return -(jacobian.transpose() * weights.cwiseProduct(e));
}

double sigmoid(double x, double eps) {
  const double a = sigmoid_gain(eps);
  return 1.0 / (1.0 + std::exp(-a * (x - 0.5)));
}

double sigmoid_inv(double y, double eps) {
  if (!(y > 0.0 && y < 1.0)) {
    throw std::domain_error("sigmoid_inv: argument must lie in (0, 1)");
  }
  const double a = sigmoid_gain(eps);
  return 0.5 + std::log(y / (1.0 - y)) / a;
}

Eigen::VectorXd normalize(const Eigen::VectorXd& q, const BoxConstraint& box) {
  Eigen::VectorXd u(q.size());
  for (int i = 0; i < q.size(); ++i) {
    u[i] = box.degenerate(i) ? 0.5 : (q[i] - box.lower[i]) / box.width(i);
  }
  return u;
}

Eigen::VectorXd denormalize(const Eigen::VectorXd& u, const BoxConstraint& box) {
  Eigen::VectorXd q(u.size());
  for (int i = 0; i < u.size(); ++i) {
    q[i] = box.degenerate(i) ? box.upper[i] : box.lower[i] + u[i] * box.width(i);
  }
  return q;
}

Eigen::VectorXd md_step(const Eigen::VectorXd& q_ref, const Eigen::VectorXd& g,
                        const BoxConstraint& box, double alpha, double eps) {
  const double a = sigmoid_gain(eps);
  Eigen::VectorXd out(q_ref.size());
  for (int i = 0; i < q_ref.size(); ++i) {
    if (box.degenerate(i)) {
      out[i] = box.upper[i];
      continue;
    }
    const double width = box.width(i);
    const double nu = (q_ref[i] - box.lower[i]) / width;
    const double mirrored = 0.5 + std::log(nu / (1.0 - nu)) / a - alpha * g[i];
    out[i] = width / (1.0 + std::exp(-a * (mirrored - 0.5))) + box.lower[i];
  }
  return out;
}

Eigen::VectorXd eps_clamp(const Eigen::VectorXd& q_ref, const BoxConstraint& box, double eps) {
  Eigen::VectorXd out(q_ref.size());
  for (int i = 0; i < q_ref.size(); ++i) {
    if (box.degenerate(i)) {
      out[i] = box.upper[i];
      continue;
    }
    const double width = box.width(i);
    double nu = (q_ref[i] - box.lower[i]) / width;
    nu = std::min(std::max(nu, eps), 1.0 - eps);
    out[i] = box.lower[i] + nu * width;
  }
  return out;
}

void accel_step(SolverState& state, Eigen::VectorXd& q_ref, const Eigen::VectorXd& g,
                const BoxConstraint& box, double alpha, double r, double gamma) {
  if (!state.initialized || state.z.size() != q_ref.size()) {
    throw std::invalid_argument("accel_step: state not initialized for this problem size");
  }
  const double alpha_z = state.k * alpha / (r * gamma);
  state.z -= alpha_z * g;
  box.clamp_into(state.z);
  const double beta = 1.0 / (1.0 + state.k / r);
  q_ref = beta * state.z + (1.0 - beta) * q_ref;
}

void smooth_reset(SolverState& state, const Eigen::VectorXd& q_obs, const BoxConstraint& box,
                  double eta) {
  if (!state.initialized) {
    state.z = q_obs;
    state.k = 1.0;
    state.initialized = true;
  } else {
    if (state.z.size() != q_obs.size()) {
      throw std::invalid_argument("smooth_reset: carried state size does not match");
    }
    state.z = eta * state.z + (1.0 - eta) * q_obs;
    state.k = eta * state.k;
  }
  box.clamp_into(state.z);
}

SolveResult solve(const RobotModel& model, const TaskSet& tasks, const Eigen::VectorXd& q_obs,
                  const SolverConfig& config, SolverState& state, Variant variant) {
  config.validate();
  if (q_obs.size() != model.dof()) {
    throw std::invalid_argument("solve: q_obs size does not match model dof");
  }

  const Eigen::VectorXd q_start = clamp_to_limits(model, q_obs, nullptr);
  const BoxConstraint box = compute_box(model, q_start, config.dt);

  if (variant == Variant::amd) {
    state = SolverState{};  // fresh z = q_obs, k = 1 every tick
    smooth_reset(state, q_start, box, config.eta);
  } else if (variant == Variant::samd) {
    smooth_reset(state, q_start, box, config.eta);
  }

  // Start from the margin-clamped observation so the mirror map always sees a
  // strictly interior iterate. An observation at the box edge would otherwise
  // map to an infinite mirror value.
  Eigen::VectorXd q_ref = eps_clamp(q_start, box, config.epsilon);

  const bool accelerated = variant != Variant::md;
  auto step = [&](Eigen::VectorXd& q, const Eigen::VectorXd&, double, const Eigen::VectorXd& g,
                  const Eigen::MatrixXd&) {
    q = md_step(q, g, box, config.alpha, config.epsilon);
    q = eps_clamp(q, box, config.epsilon);
    if (accelerated) {
      accel_step(state, q, g, box, config.alpha, config.r, config.gamma);
      state.k += 1.0;
    }
    return true;
  };
  // The accelerated interpolation can leave the shrunk box (z only honors the
  // full box), so the returned iterate gets one more margin projection.
  auto finish = [&](Eigen::VectorXd& q) {
    Eigen::VectorXd clamped = eps_clamp(q, box, config.epsilon);
    const bool changed = q.size() > 0 && (clamped - q).cwiseAbs().maxCoeff() > 0.0;
    q = std::move(clamped);
    return changed;
  };

  return detail::run_ik_loop(model, tasks, q_start, std::move(q_ref), config, step, finish);
}

}  // namespace mdik
