#include "mdik/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include "mdik/kinematics.hpp"

namespace mdik {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

// Fraction of the sampled reach envelope used for position amplitudes, and
// the cap on per-axis rotation amplitudes. Chosen so that a healthy share of
// trials saturates the per-tick velocity box without becoming untrackable.
constexpr double kPositionAmplitudeScale = 0.5;
constexpr double kRotationAmplitudeMax = 0.35;
constexpr int kEnvelopeSamples = 256;
constexpr std::uint64_t kEnvelopeSeed = 0x6d64696bULL;
constexpr double kStartMargin = 0.05;  // interior margin for sampled starts

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Deterministic uniform doubles straight from the engine's 64-bit output;
// avoids the implementation-defined std::uniform_real_distribution.
struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double unit() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + unit() * (hi - lo); }
};

Eigen::VectorXd sample_start(const RobotModel& model, Rng& rng) {
  Eigen::VectorXd q(model.dof());
  for (int i = 0; i < model.dof(); ++i) {
    const double lo = model.lower_limits()[i];
    const double hi = model.upper_limits()[i];
    const double margin = kStartMargin * (hi - lo);
    q[i] = rng.uniform(lo + margin, hi - margin);
  }
  return q;
}

Eigen::Vector3d reach_envelope(const RobotModel& model, const std::string& frame) {
  Rng rng(kEnvelopeSeed);
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::max());
  Eigen::Vector3d hi = Eigen::Vector3d::Constant(std::numeric_limits<double>::lowest());
  Eigen::VectorXd q(model.dof());
  for (int s = 0; s < kEnvelopeSamples; ++s) {
    for (int i = 0; i < model.dof(); ++i) {
      q[i] = rng.uniform(model.lower_limits()[i], model.upper_limits()[i]);
    }
    const Eigen::Vector3d p = forward_kinematics(model, q, frame).position;
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return 0.5 * (hi - lo);
}

std::string fmt_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(rank));
  const auto hi = static_cast<size_t>(std::ceil(rank));
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

std::string to_string(SolverId id) {
  switch (id) {
    case SolverId::jt: return "jt";
    case SolverId::lm: return "lm";
    case SolverId::md: return "md";
    case SolverId::amd: return "amd";
    case SolverId::samd: return "samd";
  }
  return "?";
}

SolverId solver_from_string(const std::string& name) {
  if (name == "jt") return SolverId::jt;
  if (name == "lm") return SolverId::lm;
  if (name == "md") return SolverId::md;
  if (name == "amd") return SolverId::amd;
  if (name == "samd") return SolverId::samd;
  throw std::invalid_argument("unknown solver '" + name + "' (expected jt|lm|md|amd|samd)");
}

void TrajectorySpec::validate() const {
  if (!(duration > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("TrajectorySpec: duration and dt must be > 0");
  }
  for (int c = 0; c < 6; ++c) {
    if (!(frequency[c] > 0.0 && frequency[c] <= 0.5)) {
      throw std::invalid_argument("TrajectorySpec: frequency must lie in (0, 0.5] Hz");
    }
    if (!std::isfinite(amplitude[c]) || !std::isfinite(phase[c])) {
      throw std::invalid_argument("TrajectorySpec: non-finite amplitude or phase");
    }
  }
}

Pose gen_reference(const TrajectorySpec& spec, double t) {
  Pose out;
  for (int c = 0; c < 3; ++c) {
    out.position[c] = spec.center.position[c] +
                      spec.amplitude[c] * std::sin(kTwoPi * spec.frequency[c] * t + spec.phase[c]);
  }
  Eigen::Vector3d rot_offset;
  for (int c = 0; c < 3; ++c) {
    rot_offset[c] =
        spec.amplitude[3 + c] * std::sin(kTwoPi * spec.frequency[3 + c] * t + spec.phase[3 + c]);
  }
  out.orientation = quat_mul(quat_from_rotation_vector(rot_offset), spec.center.orientation);
  return out;
}

double joint_fluctuation(const std::vector<Eigen::VectorXd>& qs, bool first_difference) {
  if (first_difference) {
    if (qs.size() < 2) throw std::invalid_argument("joint_fluctuation: need at least 2 samples");
    double sum = 0.0;
    for (size_t t = 0; t + 1 < qs.size(); ++t) sum += (qs[t + 1] - qs[t]).norm();
    return sum / static_cast<double>(qs.size() - 1);
  }
  if (qs.size() < 3) throw std::invalid_argument("joint_fluctuation: need at least 3 samples");
  double sum = 0.0;
  for (size_t t = 1; t + 1 < qs.size(); ++t) {
    sum += (qs[t + 1] - 2.0 * qs[t] + qs[t - 1]).norm();
  }
  return sum / static_cast<double>(qs.size() - 2);
}

double TrialResult::mean_error_norm() const {
  std::vector<double> errs;
  errs.reserve(ticks.size());
  for (const TickRecord& rec : ticks) errs.push_back(rec.error_norm);
  return mean(errs);
}

double TrialResult::joint_fluctuation_value() const {
  if (ticks.size() < 3) return 0.0;
  std::vector<Eigen::VectorXd> qs;
  qs.reserve(ticks.size());
  for (const TickRecord& rec : ticks) qs.push_back(rec.q_ref);
  return joint_fluctuation(qs);
}

double TrialResult::boundary_hit_rate() const {
  if (ticks.empty()) return 0.0;
  int hits = 0;
  for (const TickRecord& rec : ticks) hits += rec.at_box_boundary ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ticks.size());
}

double TrialResult::max_feasibility_violation() const {
  double worst = 0.0;
  for (const TickRecord& rec : ticks) worst = std::max(worst, rec.feasibility_violation);
  return worst;
}

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master + 0x9E3779B97F4A7C15ULL * (stream + 1));
}

Eigen::VectorXd trial_start_config(const RobotModel& model, std::uint64_t seed) {
  Rng rng(seed);
  return sample_start(model, rng);
}

TrajectorySpec sample_trajectory(const RobotModel& model, const std::string& frame,
                                 std::uint64_t seed, double duration, double dt) {
  Rng rng(seed);
  const Eigen::VectorXd q_start = sample_start(model, rng);  // same stream as run_trial
  TrajectorySpec spec;
  spec.center = forward_kinematics(model, q_start, frame);
  spec.duration = duration;
  spec.dt = dt;
  const Eigen::Vector3d envelope = reach_envelope(model, frame);
  for (int c = 0; c < 3; ++c) {
    spec.amplitude[c] = rng.uniform(0.0, kPositionAmplitudeScale * envelope[c]);
    spec.amplitude[3 + c] = rng.uniform(0.0, kRotationAmplitudeMax);
  }
  for (int c = 0; c < 6; ++c) {
    spec.frequency[c] = 0.5 * (1.0 - rng.unit());  // uniform on (0, 0.5]
    spec.phase[c] = rng.uniform(0.0, kTwoPi);
  }
  return spec;
}

TrialResult run_trial(const RobotModel& model, const TrialOptions& options,
                      const TrajectorySpec& spec, std::uint64_t seed) {
  spec.validate();
  SolverConfig cfg = options.config;
  cfg.dt = spec.dt;  // the control period comes from the protocol
  cfg.validate();
  LMConfig lm_cfg{cfg, options.lambda_min, options.adaptive_damping};

  Rng rng(seed);
  Eigen::VectorXd q = sample_start(model, rng);  // seed determines the start
  const int ticks = static_cast<int>(std::floor(spec.duration / spec.dt + 1e-9));

  TrialResult out;
  out.solver = options.solver;
  out.seed = seed;
  out.ticks.reserve(static_cast<size_t>(ticks));

  TaskSet tasks = TaskSet::single(options.frame, Pose{});
  SolverState carried;  // samd keeps this across ticks
  SolverState scratch;
  const bool shrunk_box = options.solver == SolverId::md || options.solver == SolverId::amd ||
                          options.solver == SolverId::samd;

  for (int n = 0; n < ticks; ++n) {
    const double t = static_cast<double>(n) * spec.dt;
    tasks.targets[0] = gen_reference(spec, t);
    // Box rebuilt here so feasibility is checked against an independent copy,
    // not whatever the solver used internally.
    const BoxConstraint box = compute_box(model, q, spec.dt);

    SolveResult res;
    try {
      switch (options.solver) {
        case SolverId::jt: res = jt_solve(model, tasks, q, cfg); break;
        case SolverId::lm: res = lm_solve(model, tasks, q, lm_cfg); break;
        case SolverId::md: res = solve(model, tasks, q, cfg, scratch, Variant::md); break;
        case SolverId::amd: res = solve(model, tasks, q, cfg, scratch, Variant::amd); break;
        case SolverId::samd: res = solve(model, tasks, q, cfg, carried, Variant::samd); break;
      }
    } catch (const std::exception& err) {
      throw std::runtime_error("trial tick " + std::to_string(n) + ": " + err.what());
    }

    TickRecord rec;
    rec.time = t;
    rec.objective = res.objective;
    rec.error_norm = task_error(model, res.q_ref, tasks).norm();
    rec.q_ref = res.q_ref;
    rec.iterations = res.iterations;
    rec.solve_time = cfg.deadline_mode == DeadlineMode::wall_clock ? res.elapsed : 0.0;
    rec.status = res.status;
    for (int i = 0; i < box.size(); ++i) {
      double lo = box.lower[i];
      double hi = box.upper[i];
      if (box.degenerate(i)) {
        rec.feasibility_violation =
            std::max(rec.feasibility_violation, std::abs(res.q_ref[i] - hi));
        continue;
      }
      if (std::min(res.q_ref[i] - lo, hi - res.q_ref[i]) <= 1e-9) {
        rec.at_box_boundary = true;
      }
      if (shrunk_box) {
        const double width = hi - lo;
        lo += cfg.epsilon * width;
        hi -= cfg.epsilon * width;
      }
      rec.feasibility_violation = std::max(
          rec.feasibility_violation, std::max(lo - res.q_ref[i], res.q_ref[i] - hi));
    }
    rec.feasibility_violation = std::max(rec.feasibility_violation, 0.0);
    out.ticks.push_back(std::move(rec));

    q = res.q_ref;  // ideal kinematic execution
  }
  return out;
}

AggregateReport aggregate(const std::vector<TrialResult>& results, double outlier_percentile) {
  if (results.empty()) throw std::invalid_argument("aggregate: no results");

  std::vector<double> pooled_means;
  std::map<int, std::vector<const TrialResult*>> by_trial;
  for (const TrialResult& r : results) {
    pooled_means.push_back(r.mean_error_norm());
    by_trial[r.trial_index].push_back(&r);
  }
  const double threshold = percentile(pooled_means, outlier_percentile);

  // A trial is excluded only when no solver could follow it.
  std::set<int> excluded;
  for (const auto& [trial, rs] : by_trial) {
    bool all_over = true;
    for (const TrialResult* r : rs) all_over = all_over && r->mean_error_norm() > threshold;
    if (all_over) excluded.insert(trial);
  }

  AggregateReport report;
  report.excluded_trial_indices.assign(excluded.begin(), excluded.end());

  for (SolverId id : {SolverId::jt, SolverId::lm, SolverId::md, SolverId::amd, SolverId::samd}) {
    std::vector<double> trial_means, trial_flucts, tick_times;
    long converged_ticks = 0, total_ticks = 0;
    for (const TrialResult& r : results) {
      if (r.solver != id || excluded.count(r.trial_index)) continue;
      trial_means.push_back(r.mean_error_norm());
      trial_flucts.push_back(r.joint_fluctuation_value());
      for (const TickRecord& rec : r.ticks) {
        tick_times.push_back(rec.solve_time);
        converged_ticks += rec.status == SolveStatus::converged ? 1 : 0;
        ++total_ticks;
      }
    }
    if (trial_means.empty()) continue;
    Metrics m;
    m.trials = static_cast<int>(trial_means.size());
    m.mean_error_norm = mean(trial_means);
    m.median_error_norm = percentile(trial_means, 50.0);
    m.joint_fluctuation = mean(trial_flucts);
    m.mean_solve_time = mean(tick_times);
    m.p99_solve_time = percentile(tick_times, 99.0);
    m.deadline_miss_rate =
        total_ticks == 0 ? 0.0
                         : 1.0 - static_cast<double>(converged_ticks) / static_cast<double>(total_ticks);
    m.excluded_trials = static_cast<int>(excluded.size());
    report.per_solver.push_back(SolverSummary{id, m});
  }
  return report;
}

void write_csv(const std::vector<TrialResult>& results, const AggregateReport& report,
               const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("write_csv: cannot create directory '" + dir + "': " + ec.message());

  const std::string ticks_path = (fs::path(dir) / "ticks.csv").string();
  std::ofstream ticks(ticks_path);
  if (!ticks) throw std::runtime_error("write_csv: cannot open '" + ticks_path + "'");

  int dof = 0;
  for (const TrialResult& r : results) {
    if (!r.ticks.empty()) {
      dof = static_cast<int>(r.ticks.front().q_ref.size());
      break;
    }
  }
  ticks << "trial,solver,tick,time_s,error_norm,objective,iterations,solve_time_s,status";
  for (int i = 0; i < dof; ++i) ticks << ",q_" << i;
  ticks << "\n";
  for (const TrialResult& r : results) {
    for (size_t n = 0; n < r.ticks.size(); ++n) {
      const TickRecord& rec = r.ticks[n];
      ticks << r.trial_index << ',' << to_string(r.solver) << ',' << n << ','
            << fmt_double(rec.time) << ',' << fmt_double(rec.error_norm) << ','
            << fmt_double(rec.objective) << ',' << rec.iterations << ','
            << fmt_double(rec.solve_time) << ',' << to_string(rec.status);
      for (int i = 0; i < rec.q_ref.size(); ++i) ticks << ',' << fmt_double(rec.q_ref[i]);
      ticks << "\n";
    }
  }
  if (!ticks.good()) throw std::runtime_error("write_csv: write failed for '" + ticks_path + "'");
  ticks.close();

  const std::string summary_path = (fs::path(dir) / "summary.csv").string();
  std::ofstream summary(summary_path);
  if (!summary) throw std::runtime_error("write_csv: cannot open '" + summary_path + "'");
  summary << "solver,trials,mean_error_norm,median_error_norm,joint_fluctuation,"
             "mean_solve_time_s,p99_solve_time_s,deadline_miss_rate,excluded_trials\n";
  for (const SolverSummary& s : report.per_solver) {
    const Metrics& m = s.metrics;
    summary << to_string(s.solver) << ',' << m.trials << ',' << fmt_double(m.mean_error_norm)
            << ',' << fmt_double(m.median_error_norm) << ',' << fmt_double(m.joint_fluctuation)
            << ',' << fmt_double(m.mean_solve_time) << ',' << fmt_double(m.p99_solve_time) << ','
            << fmt_double(m.deadline_miss_rate) << ',' << m.excluded_trials << "\n";
  }
  if (!summary.good()) throw std::runtime_error("write_csv: write failed for '" + summary_path + "'");
}

void write_csv(const std::vector<TrialResult>& results, const std::string& dir) {
  if (results.empty()) {
    // Header-only files keep downstream tooling happy.
    AggregateReport empty;
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("write_csv: cannot create directory '" + dir + "'");
    std::ofstream ticks((fs::path(dir) / "ticks.csv").string());
    ticks << "trial,solver,tick,time_s,error_norm,objective,iterations,solve_time_s,status\n";
    std::ofstream summary((fs::path(dir) / "summary.csv").string());
    summary << "solver,trials,mean_error_norm,median_error_norm,joint_fluctuation,"
               "mean_solve_time_s,p99_solve_time_s,deadline_miss_rate,excluded_trials\n";
    return;
  }
  write_csv(results, aggregate(results), dir);
}

}  // namespace mdik
