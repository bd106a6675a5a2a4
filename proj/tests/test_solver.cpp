#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mdik/solver.hpp"
#include "test_util.hpp"

using namespace mdik;
using testutil::urand;

namespace {

// Wide-box one-shot configuration: dt large enough that the velocity caps
// never bind, deterministic iteration budget, step sizes sized for full-range
// boxes (the unit default targets narrow per-tick boxes).
SolverConfig wide_box_config(int iters = 2000) {
  SolverConfig cfg;
  cfg.alpha = 0.05;
  cfg.gamma = 0.5;
  cfg.dt = 10.0;
  cfg.deadline_mode = DeadlineMode::iteration_count;
  cfg.max_iters = iters;
  return cfg;
}

BoxConstraint make_box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  BoxConstraint box;
  box.lower = Eigen::VectorXd(static_cast<Eigen::Index>(lo.size()));
  box.upper = Eigen::VectorXd(static_cast<Eigen::Index>(hi.size()));
  int i = 0;
  for (double v : lo) box.lower[i++] = v;
  i = 0;
  for (double v : hi) box.upper[i++] = v;
  return box;
}

Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd out(1);
  out << v;
  return out;
}

}  // namespace

TEST_CASE("compute_box merges limits with velocity reach") {
  const RobotModel arm = testutil::planar_2r(-1.0, 1.0, 10.0);
  Eigen::VectorXd q(2);
  q << 0.9, 0.0;
  const BoxConstraint box = compute_box(arm, q, 0.005);
  CHECK(box.lower[0] == doctest::Approx(0.85).epsilon(1e-12));
  CHECK(box.upper[0] == doctest::Approx(0.95).epsilon(1e-12));
  CHECK(box.lower[1] == doctest::Approx(-0.05).epsilon(1e-12));
  CHECK(box.upper[1] == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("compute_box freezes joints with zero velocity cap") {
  const RobotModel arm = testutil::planar_2r(-1.0, 1.0, 0.0);
  Eigen::VectorXd q(2);
  q << 0.25, -0.5;
  const BoxConstraint box = compute_box(arm, q, 0.005);
  CHECK(box.lower[0] == q[0]);
  CHECK(box.upper[0] == q[0]);
  CHECK(box.degenerate(0));
  CHECK(box.degenerate(1));
}

TEST_CASE("compute_box saturates at hardware limits for huge velocity caps") {
  const RobotModel arm = testutil::planar_2r(-1.0, 1.0, 1e9);
  Eigen::VectorXd q(2);
  q << 0.0, 0.0;
  const BoxConstraint box = compute_box(arm, q, 0.005);
  CHECK(box.lower[0] == -1.0);
  CHECK(box.upper[0] == 1.0);
}

TEST_CASE("compute_box clamps an out-of-limit observation and flags it") {
  const RobotModel arm = testutil::planar_2r(-1.0, 1.0, 10.0);
  Eigen::VectorXd q(2);
  q << 1.2, 0.0;  // beyond the upper limit
  bool clamped = false;
  const BoxConstraint box = compute_box(arm, q, 0.005, &clamped);
  CHECK(clamped);
  CHECK(box.upper[0] == 1.0);
  CHECK(box.lower[0] == doctest::Approx(0.95).epsilon(1e-12));
  CHECK(box.lower[0] <= box.upper[0]);
}

TEST_CASE("task_error vanishes at the exact solution") {
  const RobotModel arm = testutil::planar_2r();
  Eigen::VectorXd q(2);
  q << 0.7, -0.3;
  const TaskSet tasks = TaskSet::single("tip", forward_kinematics(arm, q, "tip"));
  CHECK(task_error(arm, q, tasks).norm() < 1e-14);
}

TEST_CASE("task_error reports a pure orientation offset as a rotation vector") {
  const RobotModel arm = testutil::planar_2r();
  Eigen::VectorXd q(2);
  q << 0.0, 0.0;
  Pose target = forward_kinematics(arm, q, "tip");
  target.orientation = quat_mul(quat_from_axis_angle(Eigen::Vector3d::UnitZ(), M_PI / 2.0),
                                target.orientation);
  const Eigen::VectorXd e = task_error(arm, q, TaskSet::single("tip", target));
  CHECK(e.head<3>().norm() < 1e-14);
  CHECK(e[3] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(e[4] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(e[5] == doctest::Approx(M_PI / 2.0).epsilon(1e-12));
}

TEST_CASE("task_error matches an independent FK recomputation") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const RobotModel model = testutil::random_chain(rng, 5);
    const Eigen::VectorXd q = testutil::random_config(rng, model);
    Pose target;
    target.position = {urand(rng, -1, 1), urand(rng, -1, 1), urand(rng, -1, 1)};
    target.orientation = testutil::random_quat(rng);
    const Eigen::VectorXd e = task_error(model, q, TaskSet::single("tool", target));

    const Pose cur = forward_kinematics(model, q, "tool");
    CHECK((e.head<3>() - (target.position - cur.position)).norm() < 1e-14);
    const Eigen::Vector3d rot =
        rotation_vector(quat_mul(target.orientation, quat_inverse(cur.orientation)));
    CHECK((e.tail<3>() - rot).norm() < 1e-14);
  }
}

TEST_CASE("objective basics and brute-force agreement") {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(6);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(6);
  CHECK(objective(e, w) == 0.0);
  e[0] = 1.0;
  CHECK(objective(e, w) == 0.5);

  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 12);
    Eigen::VectorXd ev(n), wv(n);
    for (int i = 0; i < n; ++i) {
      ev[i] = urand(rng, -2, 2);
      wv[i] = urand(rng, 0, 3);
    }
    double brute = 0.0;
    for (int i = 0; i < n; ++i) brute += wv[i] * ev[i] * ev[i];
    brute *= 0.5;
    CHECK(objective(ev, wv) == doctest::Approx(brute).epsilon(1e-12));
  }
  CHECK_THROWS_AS(objective(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(4)),
                  std::invalid_argument);
}

TEST_CASE("gradient basics") {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(6, 1);
  jac(0, 0) = 1.0;
  Eigen::VectorXd w = Eigen::VectorXd::Ones(6);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(6);
  CHECK(gradient(jac, w, e).norm() == 0.0);
  e[0] = 2.0;
  CHECK(gradient(jac, w, e)[0] == doctest::Approx(-2.0));
}

TEST_CASE("gradient matches finite differences of the objective") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 25; ++trial) {
    const RobotModel model = testutil::random_chain(rng, 4 + static_cast<int>(rng() % 4));
    const Eigen::VectorXd q = testutil::random_config(rng, model);
    Eigen::VectorXd q_goal = testutil::random_config(rng, model);
    TaskSet tasks = TaskSet::single("tool", forward_kinematics(model, q_goal, "tool"));
    // Position and rotation blocks may carry different weights; the three
    // rotation weights stay equal so the log-map gradient stays exact.
    const double wp = urand(rng, 0.2, 2.0);
    const double wr = urand(rng, 0.2, 2.0);
    tasks.weights << wp, wp, wp, wr, wr, wr;

    const Eigen::VectorXd e = task_error(model, q, tasks);
    const Eigen::MatrixXd jac = stack_tasks(model, q, tasks.frames);
    const Eigen::VectorXd g = gradient(jac, tasks.weights, e);
    const Eigen::VectorXd fd = testutil::fd_gradient(model, q, tasks);
    CHECK((g - fd).norm() <= 1e-4 * (1.0 + fd.norm()));
  }
}

TEST_CASE("sigmoid hits the margin conditions and inverts") {
  CHECK(sigmoid(0.5, 0.01) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(sigmoid(0.0, 0.01) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(sigmoid(1.0, 0.01) == doctest::Approx(0.99).epsilon(1e-12));

  // Mutual inversion on the operating range [eps, 1-eps] (x in [0, 1]).
  for (double x = 0.0; x <= 1.0; x += 0.001) {
    CHECK(std::abs(sigmoid_inv(sigmoid(x, 0.01), 0.01) - x) < 1e-12);
  }
  for (double y = 0.01; y <= 0.99; y += 0.001) {
    CHECK(std::abs(sigmoid(sigmoid_inv(y, 0.01), 0.01) - y) < 1e-12);
  }
  // Far outside [0, 1] the stored sigmoid value saturates toward 1 and the
  // recoverable precision degrades to ~ulp(1)/sigma'; 1e-7 covers x = 3.
  for (double x = -2.0; x <= 3.0; x += 0.01) {
    CHECK(std::abs(sigmoid_inv(sigmoid(x, 0.01), 0.01) - x) < 1e-7);
  }
  double prev = -1.0;
  for (double x = -4.0; x <= 4.0; x += 0.05) {  // saturates to exactly 1 past ~4.5
    const double y = sigmoid(x, 0.01);
    CHECK(y > prev);
    prev = y;
  }
  CHECK_THROWS_AS(sigmoid_inv(0.0, 0.01), std::domain_error);
  CHECK_THROWS_AS(sigmoid_inv(1.0, 0.01), std::domain_error);
  CHECK_THROWS_AS(sigmoid_inv(-0.2, 0.01), std::domain_error);
}

TEST_CASE("normalize and denormalize") {
  const BoxConstraint box = make_box({0.85}, {0.95});
  CHECK(normalize(vec1(0.85), box)[0] == doctest::Approx(0.0));
  CHECK(normalize(vec1(0.95), box)[0] == doctest::Approx(1.0));
  CHECK(normalize(vec1(0.9), box)[0] == doctest::Approx(0.5).epsilon(1e-12));

  std::mt19937_64 rng(53);
  const BoxConstraint wide = make_box({-2.0, 0.1}, {1.0, 4.0});
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd q(2);
    q << urand(rng, -2, 1), urand(rng, 0.1, 4);
    CHECK((denormalize(normalize(q, wide), wide) - q).cwiseAbs().maxCoeff() < 1e-12);
  }

  const BoxConstraint degen = make_box({0.3}, {0.3});
  CHECK(degen.degenerate(0));
  CHECK(normalize(vec1(0.3), degen)[0] == 0.5);
  CHECK(denormalize(vec1(0.77), degen)[0] == 0.3);
}

TEST_CASE("md_step holds its fixed point at zero gradient") {
  const BoxConstraint box = make_box({-1.5, 0.0}, {0.5, 2.0});
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd q(2);
    q << urand(rng, -1.4, 0.4), urand(rng, 0.1, 1.9);
    const Eigen::VectorXd q2 = md_step(q, Eigen::VectorXd::Zero(2), box, 1.0, 0.01);
    CHECK((q2 - q).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("md_step stays strictly interior and pins degenerate dims") {
  const BoxConstraint box = make_box({-1.0, 0.4}, {1.0, 0.4});
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::VectorXd q(2);
    q << urand(rng, -0.96, 0.96), 0.4;
    Eigen::VectorXd g(2);
    g << urand(rng, -3, 3), urand(rng, -3, 3);
    const Eigen::VectorXd q2 = md_step(q, g, box, 1.0, 0.01);
    CHECK(q2[0] > box.lower[0]);
    CHECK(q2[0] < box.upper[0]);
    CHECK(q2[1] == 0.4);
  }
  // Extreme gradients saturate the sigmoid to the box bound at machine
  // precision but never step past it; the margin clamp that always follows
  // restores the interior.
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd q(2);
    q << urand(rng, -0.96, 0.96), 0.4;
    Eigen::VectorXd g(2);
    g << urand(rng, -1e4, 1e4), 0.0;
    const Eigen::VectorXd q2 = md_step(q, g, box, 1.0, 0.01);
    CHECK(q2[0] >= box.lower[0]);
    CHECK(q2[0] <= box.upper[0]);
    const Eigen::VectorXd back = eps_clamp(q2, box, 0.01);
    CHECK(back[0] > box.lower[0]);
    CHECK(back[0] < box.upper[0]);
  }
}

TEST_CASE("md_step scalar case matches direct evaluation of the composite map") {
  const BoxConstraint box = make_box({0.0}, {1.0});
  const double eps = 0.01;
  const double alpha = 1.0;

  // sigma_inv(0.5) = 0.5, so g = -0.5 lands on sigma(1) = 1 - eps.
  Eigen::VectorXd q = vec1(0.5);
  Eigen::VectorXd g = vec1(-0.5);
  CHECK(md_step(q, g, box, alpha, eps)[0] == doctest::Approx(0.99).epsilon(1e-12));

  // Independent arithmetic for a generic input.
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 100; ++trial) {
    const double qv = urand(rng, 0.05, 0.95);
    const double gv = urand(rng, -2, 2);
    const double a = 2.0 * std::log((1.0 - eps) / eps);
    const double mirror = 0.5 + std::log(qv / (1.0 - qv)) / a - alpha * gv;
    const double expect = 1.0 / (1.0 + std::exp(-a * (mirror - 0.5)));
    CHECK(md_step(vec1(qv), vec1(gv), box, alpha, eps)[0] ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("eps_clamp projects onto the shrunk box") {
  const BoxConstraint unit = make_box({0.0}, {1.0});
  CHECK(eps_clamp(vec1(0.999), unit, 0.01)[0] == doctest::Approx(0.99).epsilon(1e-12));
  CHECK(eps_clamp(vec1(0.5), unit, 0.01)[0] == 0.5);

  const BoxConstraint sym = make_box({-1.0}, {1.0});
  CHECK(eps_clamp(vec1(5.0), sym, 0.01)[0] == doctest::Approx(0.98).epsilon(1e-12));
  CHECK(eps_clamp(vec1(-5.0), sym, 0.01)[0] == doctest::Approx(-0.98).epsilon(1e-12));
}

TEST_CASE("accel_step algebra") {
  const BoxConstraint box = make_box({-2.0}, {2.0});
  SolverState state;
  state.z = vec1(1.0);
  state.initialized = true;

  SUBCASE("k = r blends evenly") {
    state.k = 5.0;
    Eigen::VectorXd q = vec1(0.0);
    accel_step(state, q, vec1(0.0), box, 1.0, 5.0, 2.0);
    CHECK(q[0] == doctest::Approx(0.5).epsilon(1e-15));  // beta = 0.5
  }
  SUBCASE("alpha_z arithmetic: k=5, r=5, gamma=2, alpha=1 gives 0.5") {
    state.k = 5.0;
    Eigen::VectorXd q = vec1(0.0);
    accel_step(state, q, vec1(1.0), box, 1.0, 5.0, 2.0);
    CHECK(state.z[0] == doctest::Approx(1.0 - 0.5).epsilon(1e-15));
  }
  SUBCASE("large k hands the update to the mirror iterate") {
    state.k = 1e9;
    Eigen::VectorXd q = vec1(0.25);
    accel_step(state, q, vec1(0.0), box, 1.0, 5.0, 2.0);
    CHECK(q[0] == doctest::Approx(0.25).epsilon(1e-6));
  }
  SUBCASE("z stays inside the box") {
    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 200; ++trial) {
      state.z = vec1(urand(rng, -2, 2));
      state.k = urand(rng, 0, 50);
      Eigen::VectorXd q = vec1(urand(rng, -2, 2));
      accel_step(state, q, vec1(urand(rng, -100, 100)), box, 1.0, 5.0, 2.0);
      CHECK(state.z[0] >= box.lower[0]);
      CHECK(state.z[0] <= box.upper[0]);
    }
  }
}

TEST_CASE("smooth_reset") {
  const BoxConstraint box = make_box({-2.0}, {2.0});

  SUBCASE("first call initializes z = q_obs, k = 1") {
    SolverState state;
    smooth_reset(state, vec1(0.7), box, 0.5);
    CHECK(state.initialized);
    CHECK(state.z[0] == 0.7);
    CHECK(state.k == 1.0);
  }
  SUBCASE("eta = 0 is a full reset with k = 0") {
    SolverState state;
    smooth_reset(state, vec1(1.0), box, 0.0);
    smooth_reset(state, vec1(0.0), box, 0.0);
    CHECK(state.z[0] == 0.0);
    CHECK(state.k == 0.0);
  }
  SUBCASE("eta = 1 keeps z and k, modulo clamping") {
    SolverState state;
    state.initialized = true;
    state.z = vec1(3.0);  // outside the box on purpose
    state.k = 7.0;
    smooth_reset(state, vec1(0.0), box, 1.0);
    CHECK(state.z[0] == 2.0);
    CHECK(state.k == 7.0);
  }
  SUBCASE("eta = 0.5 halves both") {
    SolverState state;
    state.initialized = true;
    state.z = vec1(1.0);
    state.k = 6.0;
    smooth_reset(state, vec1(0.0), box, 0.5);
    CHECK(state.z[0] == 0.5);
    CHECK(state.k == 3.0);
  }
}

TEST_CASE("solve returns immediately when the target is already met") {
  const RobotModel arm = testutil::planar_2r();
  Eigen::VectorXd q(2);
  q << 0.4, -0.2;
  const TaskSet tasks = TaskSet::single("tip", forward_kinematics(arm, q, "tip"));
  SolverState state;
  const SolveResult res = solve(arm, tasks, q, wide_box_config(), state, Variant::md);
  CHECK(res.converged);
  CHECK(res.status == SolveStatus::converged);
  CHECK(res.iterations == 0);
  CHECK((res.q_ref - q).norm() < 1e-15);
}

TEST_CASE("solve reaches reachable interior targets on the 2R arm") {
  const RobotModel arm = testutil::planar_2r(-1.0, 1.0, 10.0);
  std::mt19937_64 rng(73);
  int hits = 0;
  const int trials = 40;
  for (int trial = 0; trial < trials; ++trial) {
    Eigen::VectorXd q_goal(2);
    q_goal << urand(rng, -0.9, 0.9), urand(rng, -0.9, 0.9);
    const TaskSet tasks = TaskSet::single("tip", forward_kinematics(arm, q_goal, "tip"));
    SolverState state;
    const SolveResult res =
        solve(arm, tasks, Eigen::VectorXd::Zero(2), wide_box_config(), state, Variant::samd);
    if (res.objective < 1e-8) ++hits;
  }
  CHECK(hits >= trials * 95 / 100);
}

TEST_CASE("solve against a dense grid oracle on one fixture") {
  const RobotModel arm = testutil::planar_2r(-1.0, 1.0, 10.0);
  Eigen::VectorXd q_goal(2);
  q_goal << 0.31, -0.62;
  const TaskSet tasks = TaskSet::single("tip", forward_kinematics(arm, q_goal, "tip"));
  SolverState state;
  const SolveResult res =
      solve(arm, tasks, Eigen::VectorXd::Zero(2), wide_box_config(), state, Variant::amd);

  double best = std::numeric_limits<double>::max();
  const int grid = 200;
  Eigen::VectorXd q(2);
  for (int i = 0; i <= grid; ++i) {
    for (int j = 0; j <= grid; ++j) {
      q << -1.0 + 2.0 * i / grid, -1.0 + 2.0 * j / grid;
      best = std::min(best, objective(task_error(arm, q, tasks), tasks.weights));
    }
  }
  CHECK(res.objective < 1e-8);
  CHECK(std::abs(res.objective - best) < 1e-3);  // grid resolution bound
}

TEST_CASE("unreachable per-tick targets still improve and stay feasible") {
  const RobotModel arm = testutil::planar_2r(-1.0, 1.0, 2.0);
  Eigen::VectorXd q0(2);
  q0 << 0.0, 0.0;
  Eigen::VectorXd q_goal(2);
  q_goal << 0.8, -0.8;  // far beyond one tick of motion
  const TaskSet tasks = TaskSet::single("tip", forward_kinematics(arm, q_goal, "tip"));

  SolverConfig cfg;  // narrow per-tick box, reference step size
  cfg.deadline_mode = DeadlineMode::iteration_count;
  cfg.max_iters = 50;
  const double e0 = objective(task_error(arm, q0, tasks), Eigen::VectorXd::Ones(6));

  for (Variant variant : {Variant::md, Variant::amd, Variant::samd}) {
    SolverState state;
    const SolveResult res = solve(arm, tasks, q0, cfg, state, variant);
    CHECK(res.status == SolveStatus::iter_cap);
    CHECK(res.objective < e0);

    const BoxConstraint box = compute_box(arm, q0, cfg.dt);
    for (int i = 0; i < 2; ++i) {
      const double w = box.width(i);
      CHECK(res.q_ref[i] >= box.lower[i] + cfg.epsilon * w - 1e-12);
      CHECK(res.q_ref[i] <= box.upper[i] - cfg.epsilon * w + 1e-12);
    }
  }
}

TEST_CASE("every variant respects the shrunk box on random problems") {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 30; ++trial) {
    const RobotModel model = testutil::random_chain(rng, 5);
    const Eigen::VectorXd q0 = testutil::random_config(rng, model, 0.01);
    Pose target;
    target.position = {urand(rng, -1.5, 1.5), urand(rng, -1.5, 1.5), urand(rng, -0.5, 1.5)};
    target.orientation = testutil::random_quat(rng);
    const TaskSet tasks = TaskSet::single("tool", target);

    SolverConfig cfg;
    cfg.deadline_mode = DeadlineMode::iteration_count;
    cfg.max_iters = 10 + static_cast<int>(rng() % 30);
    for (Variant variant : {Variant::md, Variant::amd, Variant::samd}) {
      SolverState state;
      const SolveResult res = solve(model, tasks, q0, cfg, state, variant);
      const BoxConstraint box = compute_box(model, q0, cfg.dt);
      for (int i = 0; i < box.size(); ++i) {
        if (box.degenerate(i)) {
          CHECK(res.q_ref[i] == box.upper[i]);
        } else {
          const double w = box.width(i);
          CHECK(res.q_ref[i] >= box.lower[i] + cfg.epsilon * w - 1e-12);
          CHECK(res.q_ref[i] <= box.upper[i] - cfg.epsilon * w + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("one small mirror step never increases the objective (statistical)") {
  std::mt19937_64 rng(83);
  int ok = 0;
  const int samples = 1000;
  for (int s = 0; s < samples; ++s) {
    const RobotModel model = testutil::random_chain(rng, 4);
    const Eigen::VectorXd q = testutil::random_config(rng, model);
    const Eigen::VectorXd q_goal = testutil::random_config(rng, model);
    const TaskSet tasks = TaskSet::single("tool", forward_kinematics(model, q_goal, "tool"));
    const BoxConstraint box = compute_box(model, q, 1.0);

    const Eigen::VectorXd q_in = eps_clamp(q, box, 0.01);
    const double e0 = objective(task_error(model, q_in, tasks), tasks.weights);
    const Eigen::VectorXd e = task_error(model, q_in, tasks);
    const Eigen::MatrixXd jac = stack_tasks(model, q_in, tasks.frames);
    const Eigen::VectorXd g = gradient(jac, tasks.weights, e);

    const Eigen::VectorXd q_next = md_step(q_in, g, box, 1e-3, 0.01);
    const double e1 = objective(task_error(model, q_next, tasks), tasks.weights);
    if (e1 <= e0 + 1e-15) ++ok;
  }
  CHECK(ok >= samples * 99 / 100);
}

TEST_CASE("iteration-count solves are bit-identical across runs") {
  const RobotModel arm = testutil::planar_2r(-1.0, 1.0, 2.0);
  Eigen::VectorXd q0(2);
  q0 << 0.1, -0.2;
  Eigen::VectorXd q_goal(2);
  q_goal << 0.6, 0.4;
  const TaskSet tasks = TaskSet::single("tip", forward_kinematics(arm, q_goal, "tip"));
  SolverConfig cfg;
  cfg.deadline_mode = DeadlineMode::iteration_count;
  cfg.max_iters = 37;

  SolverState s1, s2;
  const SolveResult a = solve(arm, tasks, q0, cfg, s1, Variant::samd);
  const SolveResult b = solve(arm, tasks, q0, cfg, s2, Variant::samd);
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
  for (int i = 0; i < 2; ++i) CHECK(a.q_ref[i] == b.q_ref[i]);
  CHECK(s1.k == s2.k);
  for (int i = 0; i < 2; ++i) CHECK(s1.z[i] == s2.z[i]);
}

TEST_CASE("a fresh smooth_reset state makes samd behave exactly like amd") {
  const RobotModel arm = testutil::planar_2r(-1.0, 1.0, 2.0);
  Eigen::VectorXd q0(2);
  q0 << -0.3, 0.2;
  Eigen::VectorXd q_goal(2);
  q_goal << 0.5, -0.6;
  const TaskSet tasks = TaskSet::single("tip", forward_kinematics(arm, q_goal, "tip"));
  SolverConfig cfg;
  cfg.deadline_mode = DeadlineMode::iteration_count;
  cfg.max_iters = 25;

  SolverState fresh;  // samd's first tick runs the first-time reset: z = q_obs, k = 1
  const SolveResult samd = solve(arm, tasks, q0, cfg, fresh, Variant::samd);
  SolverState amd_state;
  const SolveResult amd = solve(arm, tasks, q0, cfg, amd_state, Variant::amd);
  CHECK(samd.objective == amd.objective);
  for (int i = 0; i < 2; ++i) CHECK(samd.q_ref[i] == amd.q_ref[i]);
}

TEST_CASE("per-iteration jacobian refresh still converges and stays feasible") {
  const RobotModel arm = testutil::planar_2r(-1.0, 1.0, 10.0);
  Eigen::VectorXd q_goal(2);
  q_goal << 0.55, -0.4;
  const TaskSet tasks = TaskSet::single("tip", forward_kinematics(arm, q_goal, "tip"));
  SolverConfig cfg = wide_box_config();
  cfg.refresh_jacobian = true;
  SolverState state;
  const SolveResult res = solve(arm, tasks, Eigen::VectorXd::Zero(2), cfg, state, Variant::samd);
  CHECK(res.objective < 1e-8);
  const BoxConstraint box = compute_box(arm, Eigen::VectorXd::Zero(2), cfg.dt);
  CHECK(box.contains(res.q_ref, 1e-12));
}

TEST_CASE("solve rejects bad inputs") {
  const RobotModel arm = testutil::planar_2r();
  SolverState state;
  SolverConfig cfg = wide_box_config();

  TaskSet empty;
  CHECK_THROWS_AS(solve(arm, empty, Eigen::VectorXd::Zero(2), cfg, state, Variant::md),
                  std::invalid_argument);
  const TaskSet tasks = TaskSet::single("tip", Pose{});
  CHECK_THROWS_AS(solve(arm, tasks, Eigen::VectorXd::Zero(3), cfg, state, Variant::md),
                  std::invalid_argument);

  SolverConfig bad = cfg;
  bad.epsilon = 0.7;
  CHECK_THROWS_AS(solve(arm, tasks, Eigen::VectorXd::Zero(2), bad, state, Variant::md),
                  std::invalid_argument);
  SolverConfig iters_without_cap;
  iters_without_cap.deadline_mode = DeadlineMode::iteration_count;
  iters_without_cap.max_iters = 0;
  CHECK_THROWS_AS(iters_without_cap.validate(), std::invalid_argument);
}
