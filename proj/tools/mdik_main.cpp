#include <CLI11.hpp>

#include <atomic>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include "mdik/bench.hpp"

namespace {

using namespace mdik;

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  double v;
  while (in >> v) out.push_back(v);
  if (!in.eof()) throw std::invalid_argument("expected a whitespace-separated list of numbers");
  return out;
}

// "x y z qw qx qy qz"; the quaternion is renormalized when within 1e-6 of
// unit norm and rejected otherwise.
Pose parse_pose_literal(const std::string& text) {
  const std::vector<double> v = parse_numbers(text);
  if (v.size() != 7) {
    throw std::invalid_argument("pose literal needs 7 numbers: x y z qw qx qy qz");
  }
  const double norm = std::sqrt(v[3] * v[3] + v[4] * v[4] + v[5] * v[5] + v[6] * v[6]);
  if (std::abs(norm - 1.0) > 1e-6) {
    throw std::invalid_argument("pose quaternion norm " + std::to_string(norm) +
                                " deviates from 1 by more than 1e-6");
  }
  Pose pose;
  pose.position = {v[0], v[1], v[2]};
  pose.orientation = UnitQuaternion(v[3], v[4], v[5], v[6]);
  return pose;
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw std::invalid_argument("--set " + key + ": expected a boolean (0/1/true/false)");
}

DeadlineMode parse_deadline_mode(const std::string& value) {
  if (value == "wall" || value == "wall_clock") return DeadlineMode::wall_clock;
  if (value == "iters" || value == "iteration_count") return DeadlineMode::iteration_count;
  throw std::invalid_argument("deadline mode must be 'wall' or 'iters'");
}

struct EffectiveConfig {
  SolverConfig solver;
  double lambda_min = 1e-3;
  bool adaptive_damping = true;
};

void apply_overrides(const std::vector<std::string>& sets, EffectiveConfig& cfg) {
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    }
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    const auto num = [&] {
      size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) {
        throw std::invalid_argument("--set " + key + ": bad numeric value '" + value + "'");
      }
      return v;
    };
    if (key == "alpha") cfg.solver.alpha = num();
    else if (key == "delta") cfg.solver.delta = num();
    else if (key == "dt") cfg.solver.dt = num();
    else if (key == "zeta") cfg.solver.zeta = num();
    else if (key == "epsilon") cfg.solver.epsilon = num();
    else if (key == "r") cfg.solver.r = num();
    else if (key == "gamma") cfg.solver.gamma = num();
    else if (key == "eta") cfg.solver.eta = num();
    else if (key == "max_iters") cfg.solver.max_iters = static_cast<int>(num());
    else if (key == "deadline_mode") cfg.solver.deadline_mode = parse_deadline_mode(value);
    else if (key == "refresh_jacobian") cfg.solver.refresh_jacobian = parse_bool(value, key);
    else if (key == "lambda_min") cfg.lambda_min = num();
    else if (key == "adaptive_damping") cfg.adaptive_damping = parse_bool(value, key);
    else throw std::invalid_argument("--set: unknown config key '" + key + "'");
  }
}

void echo_config(const EffectiveConfig& cfg) {
  const SolverConfig& s = cfg.solver;
  std::cout << "config: alpha=" << s.alpha << " delta=" << s.delta << " dt=" << s.dt
            << " zeta=" << s.zeta << " epsilon=" << s.epsilon << " r=" << s.r
            << " gamma=" << s.gamma << " eta=" << s.eta << " max_iters=" << s.max_iters
            << " deadline_mode="
            << (s.deadline_mode == DeadlineMode::wall_clock ? "wall" : "iters")
            << " refresh_jacobian=" << (s.refresh_jacobian ? 1 : 0)
            << " lambda_min=" << cfg.lambda_min
            << " adaptive_damping=" << (cfg.adaptive_damping ? 1 : 0) << "\n";
  if (s.deadline_mode == DeadlineMode::wall_clock) {
    std::cout << "per-tick budget: " << s.zeta * s.dt << " s\n";
  }
}

SolveResult dispatch_solve(const RobotModel& model, const TaskSet& tasks,
                           const Eigen::VectorXd& q0, const EffectiveConfig& cfg, SolverId id,
                           SolverState& state) {
  switch (id) {
    case SolverId::jt: return jt_solve(model, tasks, q0, cfg.solver);
    case SolverId::lm: return lm_solve(model, tasks, q0, {cfg.solver, cfg.lambda_min, cfg.adaptive_damping});
    case SolverId::md: return solve(model, tasks, q0, cfg.solver, state, Variant::md);
    case SolverId::amd: return solve(model, tasks, q0, cfg.solver, state, Variant::amd);
    case SolverId::samd: return solve(model, tasks, q0, cfg.solver, state, Variant::samd);
  }
  throw std::logic_error("unreachable");
}

int cmd_info(const std::string& model_path) {
  const RobotModel model = parse_model_file(model_path);
  std::cout << "model: " << model.name() << "\n";
  std::cout << "dof: " << model.dof() << "\n";
  if (model.dof() == 0) {
    std::cout << "warning: model has no actuated joints\n";
  }
  std::cout << "joints:\n";
  for (const JointSpec& j : model.joints()) {
    std::cout << "  " << std::left << std::setw(16) << j.name << std::setw(10)
              << to_string(j.kind) << " parent="
              << (j.parent == -1 ? std::string("root") : model.joint(j.parent).name);
    if (j.kind != JointKind::fixed) {
      std::cout << " limits=[" << j.lower << ", " << j.upper << "] max_velocity=" << j.max_velocity;
    }
    std::cout << "\n";
  }
  const Eigen::VectorXd q0 = Eigen::VectorXd::Zero(model.dof());
  std::cout << "end effectors (pose at zero configuration):\n";
  for (const EndEffector& ee : model.end_effectors()) {
    const Pose pose = forward_kinematics(model, q0, ee.name);
    std::cout << "  " << ee.name << ": position (" << pose.position.x() << ", "
              << pose.position.y() << ", " << pose.position.z() << ")  orientation (w="
              << pose.orientation.w << ", x=" << pose.orientation.x
              << ", y=" << pose.orientation.y << ", z=" << pose.orientation.z << ")\n";
  }
  return 0;
}

int cmd_solve(const std::string& model_path, const std::string& frame, const std::string& target,
              const std::string& solver_name, const std::string& q0_text,
              const std::vector<std::string>& sets) {
  const RobotModel model = parse_model_file(model_path);
  const SolverId id = solver_from_string(solver_name);
  const TaskSet tasks = TaskSet::single(frame, parse_pose_literal(target));

  EffectiveConfig cfg;
  cfg.solver.deadline_mode = DeadlineMode::iteration_count;
  cfg.solver.max_iters = 500;
  apply_overrides(sets, cfg);
  cfg.solver.validate();
  echo_config(cfg);

  Eigen::VectorXd q0 = Eigen::VectorXd::Zero(model.dof());
  if (!q0_text.empty()) {
    const std::vector<double> values = parse_numbers(q0_text);
    if (static_cast<int>(values.size()) != model.dof()) {
      throw std::invalid_argument("--q0 needs " + std::to_string(model.dof()) + " numbers");
    }
    q0 = Eigen::Map<const Eigen::VectorXd>(values.data(), model.dof());
  }
  bool q0_clamped = false;
  compute_box(model, q0, cfg.solver.dt, &q0_clamped);
  if (q0_clamped) {
    std::cout << "warning: start configuration clamped into hardware limits\n";
  }

  SolverState state;
  const SolveResult res = dispatch_solve(model, tasks, q0, cfg, id, state);

  std::cout << std::setprecision(12);
  std::cout << "q_ref:";
  for (int i = 0; i < res.q_ref.size(); ++i) std::cout << " " << res.q_ref[i];
  std::cout << "\n";
  std::cout << "objective: " << res.objective << "\n";
  std::cout << "iterations: " << res.iterations << "\n";
  std::cout << "elapsed_s: " << res.elapsed << "\n";
  std::cout << "status: " << to_string(res.status) << "\n";
  return res.converged ? 0 : 2;
}

int cmd_track(const std::string& model_path, const std::string& solvers_csv, int trials,
              std::uint64_t seed, double dt, double zeta, double duration,
              const std::string& deadline_mode, int max_iters, const std::string& out_dir,
              int jobs, std::string frame, const std::vector<std::string>& sets) {
  const RobotModel model = parse_model_file(model_path);
  if (model.end_effectors().empty()) {
    throw std::invalid_argument("model has no end effectors to track");
  }
  if (frame.empty()) frame = model.end_effectors().front().name;
  if (trials <= 0) throw std::invalid_argument("--trials must be positive");
  if (jobs <= 0) jobs = 1;

  std::vector<SolverId> solver_ids;
  {
    std::istringstream in(solvers_csv);
    std::string token;
    while (std::getline(in, token, ',')) {
      if (!token.empty()) solver_ids.push_back(solver_from_string(token));
    }
  }
  if (solver_ids.empty()) throw std::invalid_argument("--solvers resolved to an empty list");

  EffectiveConfig cfg;
  cfg.solver.dt = dt;
  cfg.solver.zeta = zeta;
  cfg.solver.deadline_mode = parse_deadline_mode(deadline_mode);
  cfg.solver.max_iters = max_iters;
  if (cfg.solver.deadline_mode == DeadlineMode::iteration_count && cfg.solver.max_iters == 0) {
    cfg.solver.max_iters = 40;
  }
  apply_overrides(sets, cfg);
  cfg.solver.validate();

  std::cout << "model: " << model.name() << "  frame: " << frame << "\n";
  std::cout << "protocol: trials=" << trials << " seed=" << seed << " duration=" << duration
            << " dt=" << cfg.solver.dt << " zeta=" << cfg.solver.zeta << " jobs=" << jobs << "\n";
  echo_config(cfg);

  const size_t n_solvers = solver_ids.size();
  std::vector<TrialResult> results(static_cast<size_t>(trials) * n_solvers);

  std::atomic<int> next_trial{0};
  auto worker = [&] {
    while (true) {
      const int trial = next_trial.fetch_add(1);
      if (trial >= trials) break;
      const std::uint64_t trial_seed = mix_seed(seed, static_cast<std::uint64_t>(trial));
      const TrajectorySpec traj =
          sample_trajectory(model, frame, trial_seed, duration, cfg.solver.dt);
      for (size_t s = 0; s < n_solvers; ++s) {
        TrialOptions opt;
        opt.solver = solver_ids[s];
        opt.frame = frame;
        opt.config = cfg.solver;
        opt.lambda_min = cfg.lambda_min;
        opt.adaptive_damping = cfg.adaptive_damping;
        TrialResult r = run_trial(model, opt, traj, trial_seed);
        r.trial_index = trial;
        results[static_cast<size_t>(trial) * n_solvers + s] = std::move(r);
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  const AggregateReport report = aggregate(results);
  std::cout << std::left << std::setw(6) << "solver" << std::right << std::setw(8) << "trials"
            << std::setw(14) << "mean_err" << std::setw(14) << "median_err" << std::setw(14)
            << "fluctuation" << std::setw(14) << "mean_time_s" << std::setw(14) << "p99_time_s"
            << std::setw(11) << "miss_rate" << std::setw(10) << "excluded" << "\n";
  std::cout << std::setprecision(5);
  for (const SolverSummary& s : report.per_solver) {
    const Metrics& m = s.metrics;
    std::cout << std::left << std::setw(6) << to_string(s.solver) << std::right << std::setw(8)
              << m.trials << std::setw(14) << m.mean_error_norm << std::setw(14)
              << m.median_error_norm << std::setw(14) << m.joint_fluctuation << std::setw(14)
              << m.mean_solve_time << std::setw(14) << m.p99_solve_time << std::setw(11)
              << m.deadline_miss_rate << std::setw(10) << m.excluded_trials << "\n";
  }
  write_csv(results, report, out_dir);
  std::cout << "wrote " << out_dir << "/ticks.csv and " << out_dir << "/summary.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Box-constrained inverse kinematics toolkit"};
  app.require_subcommand(1);

  std::string model_path;
  std::vector<std::string> sets;

  CLI::App* info = app.add_subcommand("info", "Inspect a robot model file");
  info->add_option("model", model_path, "model JSON file")->required();

  CLI::App* solve_cmd = app.add_subcommand("solve", "One-shot IK solve from a start configuration");
  std::string frame, target, solver_name = "samd", q0_text;
  solve_cmd->add_option("model", model_path, "model JSON file")->required();
  solve_cmd->add_option("--frame", frame, "end-effector frame")->required();
  solve_cmd->add_option("--target", target, "pose literal: \"x y z qw qx qy qz\"")->required();
  solve_cmd->add_option("--solver", solver_name, "jt|lm|md|amd|samd (default samd)");
  solve_cmd->add_option("--q0", q0_text, "start configuration (default zeros)");
  solve_cmd->add_option("--set", sets, "config override key=value (repeatable)");

  CLI::App* track = app.add_subcommand("track", "Randomized sinusoidal tracking benchmark");
  std::string solvers_csv = "jt,lm,md,amd,samd";
  std::string deadline_mode = "wall";
  std::string out_dir = "mdik_out";
  std::string track_frame;
  int trials = 20;
  std::uint64_t seed = 1;
  double dt = 5e-3, zeta = 0.2, duration = 12.5;
  int max_iters = 0;
  int jobs = 1;
  track->add_option("model", model_path, "model JSON file")->required();
  track->add_option("--solvers", solvers_csv, "comma-separated solver list");
  track->add_option("--trials", trials, "number of randomized trials");
  track->add_option("--seed", seed, "master seed");
  track->add_option("--dt", dt, "control period (s)");
  track->add_option("--zeta", zeta, "fraction of dt available for solving");
  track->add_option("--duration", duration, "trial duration (s)");
  track->add_option("--deadline-mode", deadline_mode, "wall|iters");
  track->add_option("--max-iters", max_iters, "iteration cap (default 40 in iters mode)");
  track->add_option("--out", out_dir, "output directory for CSV files");
  track->add_option("--jobs", jobs, "parallel trial workers");
  track->add_option("--frame", track_frame, "tracked frame (default: first end effector)");
  track->add_option("--set", sets, "config override key=value (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(info)) return cmd_info(model_path);
    if (app.got_subcommand(solve_cmd)) {
      return cmd_solve(model_path, frame, target, solver_name, q0_text, sets);
    }
    if (app.got_subcommand(track)) {
      return cmd_track(model_path, solvers_csv, trials, seed, dt, zeta, duration, deadline_mode,
                       max_iters, out_dir, jobs, track_frame, sets);
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
