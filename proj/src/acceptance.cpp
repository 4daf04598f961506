#include "tether/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "tether/analysis.hpp"
#include "tether/commands.hpp"
#include "tether/config.hpp"
#include "tether/control.hpp"
#include "tether/model.hpp"
#include "tether/path.hpp"
#include "tether/random.hpp"
#include "tether/sim.hpp"

namespace tether {
namespace {

namespace fs = std::filesystem;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string format(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

double state_distance(const SystemState& a, const SystemState& b) {
  return std::sqrt((a.human_pos - b.human_pos).squared_norm() +
                   (a.human_vel - b.human_vel).squared_norm() +
                   (a.robot_pos - b.robot_pos).squared_norm() +
                   (a.robot_vel - b.robot_vel).squared_norm());
}

std::size_t index_at(const Trajectory& traj, double t) {
  const auto i = static_cast<std::size_t>(std::llround(t / traj.dt));
  return std::min(i, traj.records.size() - 1);
}

// Waypoints with strictly increasing, well-separated x and bounded y produce
// curved but self-intersection-free splines with a healthy tangent.
std::vector<Vec3> random_open_waypoints(Rng& rng, int count, double y_span) {
  std::vector<Vec3> wps;
  for (int i = 0; i < count; ++i) {
    const double x = -3.0 + 2.0 * i + rng.uniform(-0.4, 0.4);
    wps.push_back(Vec3{x, rng.uniform(-y_span, y_span), 0.0});
  }
  return wps;
}

// ---------------------------------------------------------------------------
// 1. Rest states are exact fixed points and attract perturbed starts.

CriterionResult criterion_equilibrium() {
  CriterionResult r{1, "equilibrium-rest-and-convergence", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const double scale = tolerance_scale();
  const double tol_rhs = 1e-12 * scale;
  const double tol_conv = 1e-3 * scale;

  Rng rng(mix_seed(1001, 0));
  double worst_rhs = 0.0;
  double worst_final = 0.0;
  int aborted = 0;
  for (int i = 0; i < 20; ++i) {
    SystemParams params;
    params.human.damping = Diag3{6.0, 6.0, 6.0};
    const Vec3 target{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), 0.0};
    const Vec3 f_ref{0.0, 0.0, rng.uniform(1.0, 8.0)};
    const GuidanceRefs refs = make_guidance_refs(target, f_ref, params.cable);
    const SystemState x_e = equilibrium_state(refs);

    const Vec3 u_a = guidance_input(x_e.robot_pos, refs, params.guidance);
    const StateDerivative rhs = system_rhs(x_e, u_a, Vec3{}, params);
    worst_rhs = std::max(worst_rhs, rhs.norm());

    Scenario sc;
    sc.params = params;
    sc.task = PointTask{refs};
    sc.policy = NominalPolicy{};
    sc.dt = 1e-3;
    sc.duration = 60.0;
    sc.initial = x_e;
    sc.initial.human_pos += Vec3{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 0.0};
    sc.initial.human_vel += Vec3{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.0};
    sc.initial.robot_pos +=
        Vec3{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    sc.initial.robot_vel +=
        Vec3{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};

    const Trajectory traj = run(sc);
    if (traj.flag != ExitFlag::Completed || traj.records.empty()) {
      ++aborted;
      continue;
    }
    worst_final = std::max(worst_final, state_distance(traj.records.back().state, x_e));
  }

  r.seconds = seconds_since(t0);
  r.pass = aborted == 0 && worst_rhs < tol_rhs && worst_final < tol_conv && r.seconds < 30.0;
  r.detail = format("max |rhs(x_e)| %.2e (tol %.0e); max final state error %.2e m (tol %.0e); "
                    "%d/20 runs completed in %.1f s (budget 30 s)",
                    worst_rhs, tol_rhs, worst_final, tol_conv, 20 - aborted, r.seconds);
  return r;
}

// ---------------------------------------------------------------------------
// 2. The storage function decreases along unforced constant-ref trajectories
//    and its numeric rate matches the dissipation terms on taut segments.

CriterionResult criterion_storage_decrease() {
  CriterionResult r{2, "storage-decrease", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const double scale = tolerance_scale();
  const double inc_tolerance = 1e-6 * scale;  // per-second; allowance is *dt per step
  const double rate_abs = 1e-6 * scale;
  const double rate_rel = 1e-3 * scale;

  SystemParams params;  // nominal gains: inertia 0.8, damping 2.4, kp 4.5, fz 1
  const GuidanceRefs refs =
      make_guidance_refs(Vec3{0.0, 0.0, 0.0}, Vec3{0.0, 0.0, 1.0}, params.cable);

  Rng rng(mix_seed(1002, 0));
  int slack_starts = 0;
  int aborted = 0;
  double worst_increment = 0.0;
  double worst_rate_dev = 0.0;
  bool all_checks = true;
  for (int i = 0; i < 50; ++i) {
    Scenario sc;
    sc.params = params;
    sc.task = PointTask{refs};
    sc.policy = NominalPolicy{};
    sc.dt = 1e-3;
    sc.duration = 10.0;
    sc.initial.human_pos = Vec3{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), 0.0};
    sc.initial.human_vel = Vec3{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.0};
    sc.initial.robot_pos = sc.initial.human_pos + Vec3{rng.uniform(-0.3, 0.3),
                                                       rng.uniform(-0.3, 0.3),
                                                       rng.uniform(0.3, 1.4)};
    sc.initial.robot_vel =
        Vec3{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    if (cable_mode(sc.initial, params.cable) == CableMode::Slack) ++slack_starts;

    const Trajectory traj = run(sc);
    if (traj.flag != ExitFlag::Completed) {
      ++aborted;
      all_checks = false;
      continue;
    }
    const MonotoneReport mono = check_monotone(traj, refs, params, inc_tolerance);
    const RateMatchReport rate = check_rate_match(traj, refs, params, rate_abs, rate_rel);
    worst_increment = std::max(worst_increment, mono.max_increment);
    worst_rate_dev = std::max(worst_rate_dev, rate.max_deviation);
    all_checks = all_checks && mono.pass && rate.pass;
  }

  r.seconds = seconds_since(t0);
  r.pass = all_checks && aborted == 0 && slack_starts >= 10;
  r.detail = format("max per-step V increase %.2e J (allowed %.0e); worst rate mismatch %.2e W; "
                    "%d/50 slack starts; %d aborted; %.1f s",
                    worst_increment, inc_tolerance * 1e-3, worst_rate_dev, slack_starts, aborted,
                    r.seconds);
  return r;
}

// ---------------------------------------------------------------------------
// 3. Energy bookkeeping: the storage never gains more than the ports supply,
//    across randomized moving-reference campaigns with human force pulses.

// Each port's supply-rate inequality holds when the opposite input is absent
// (the combined port always holds), so the campaign mix cycles through:
//   - constant refs + human pulse -> human port (and combined),
//   - moving maneuver refs, no human force -> robot port (and combined),
//   - moving refs + human pulse -> combined port.
CriterionResult criterion_passivity() {
  CriterionResult r{3, "passivity-margins", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const double scale = tolerance_scale();
  const double tol = 1e-6 * scale;

  double min_margin[3] = {1e30, 1e30, 1e30};
  int checked[3] = {0, 0, 0};
  int aborted = 0;
  bool all_ok = true;
  for (int i = 0; i < 100; ++i) {
    Rng rng(mix_seed(1003, static_cast<std::uint64_t>(i)));
    SystemParams params;
    const double fz = rng.uniform(0.5, 2.0);
    params.guidance.fz_des = fz;

    Scenario sc;
    sc.params = params;

    // Margins are checked against the raw -1e-6 J floor with no truncation
    // allowance, so the step size is chosen to keep the integrator's energy
    // defect at slack/taut crossings well below the floor: a catch at
    // relative speed w mis-books roughly 0.05*k*(w*dt)^2 joules.
    const int kind = i % 3;  // 0: point+pulse, 1: path only, 2: path+pulse
    Vec3 start;
    if (kind == 0) {
      sc.dt = 1e-4;  // the initial dash toward a far target catches hard
      const Vec3 target{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), 0.0};
      const GuidanceRefs refs = make_guidance_refs(target, Vec3{0.0, 0.0, fz}, params.cable);
      sc.task = PointTask{refs};
      sc.duration = 12.0;
      start = target + Vec3{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 0.0};
    } else {
      sc.dt = 2.5e-4;  // near-path starts catch gently
      ParametricPath path(random_open_waypoints(rng, 3, 0.8));
      Maneuver maneuver{std::move(path), ForceProfile{}, fz};
      start = maneuver.path.evaluate(0.0) + Vec3{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), 0.0};
      sc.task = PathTask{std::move(maneuver)};
      sc.duration = 20.0;
    }

    if (kind == 1) {
      sc.policy = NominalPolicy{};
    } else {
      // Continuous human force pulse (trapezoidal ramp), magnitude up to 3 N.
      const double t1 = rng.uniform(2.0, 5.0);
      const double hold = rng.uniform(2.0, 4.0);
      const double angle = rng.uniform(0.0, 6.283185307179586);
      const double mag = rng.uniform(0.5, 3.0);
      const Vec3 pulse{mag * std::cos(angle), mag * std::sin(angle), 0.0};
      SchedulePolicy schedule;
      schedule.points = {{t1, Vec3{}}, {t1 + 0.5, pulse}, {t1 + 0.5 + hold, pulse},
                         {t1 + 1.0 + hold, Vec3{}}};
      sc.policy = schedule;
    }

    sc.initial.human_pos = start;
    sc.initial.human_vel = Vec3{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 0.0};
    sc.initial.robot_pos = start + Vec3{0.0, 0.0, params.cable.rest_length * rng.uniform(0.85, 1.1)};
    sc.initial.robot_vel =
        Vec3{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};

    const Trajectory traj = run(sc);
    if (traj.flag != ExitFlag::Completed || traj.records.size() < 2) {
      ++aborted;
      all_ok = false;
      continue;
    }
    const GuidanceRefs refs_terminal = task_terminal_refs(sc.task, params.cable);
    std::vector<PassivityPort> ports{PassivityPort::Combined};
    if (kind == 0) ports.push_back(PassivityPort::Human);
    if (kind == 1) ports.push_back(PassivityPort::Robot);
    for (PassivityPort port : ports) {
      const PassivityReport rep = passivity_report(traj, port, refs_terminal, params, tol);
      const int slot = port == PassivityPort::Robot ? 0 : port == PassivityPort::Human ? 1 : 2;
      min_margin[slot] = std::min(min_margin[slot], rep.margin);
      ++checked[slot];
      all_ok = all_ok && rep.margin >= -tol;
    }
  }

  r.seconds = seconds_since(t0);
  r.pass = all_ok && aborted == 0 && r.seconds < 300.0;
  r.detail = format("min margins: robot %.2e (%d runs), human %.2e (%d), combined %.2e (%d) J "
                    "(floor -%.0e); %d aborted; 100 campaigns in %.1f s (budget 300 s)",
                    min_margin[0], checked[0], min_margin[1], checked[1], min_margin[2],
                    checked[2], tol, aborted, r.seconds);
  return r;
}

// ---------------------------------------------------------------------------
// 4. Slack-phase closed forms: robot climb speed and human velocity decay.

CriterionResult criterion_slack_limits() {
  CriterionResult r{4, "slack-phase-limits", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const double scale = tolerance_scale();

  SystemParams params;
  const SlackPhaseLimits limits = slack_phase_limits(params);
  const GuidanceRefs refs =
      make_guidance_refs(Vec3{0.0, 0.0, 0.0}, Vec3{0.0, 0.0, params.guidance.fz_des}, params.cable);

  Scenario sc;
  sc.params = params;
  sc.task = PointTask{refs};
  sc.policy = NominalPolicy{};
  sc.dt = 1e-3;
  sc.duration = 2.5;
  sc.initial.human_pos = Vec3{0.0, 0.0, 0.0};
  sc.initial.human_vel = Vec3{0.3, -0.2, 0.0};
  sc.initial.robot_pos = Vec3{0.0, 0.0, 0.05};  // far inside the slack region
  sc.initial.robot_vel = Vec3{};

  const Trajectory traj = run(sc);
  bool ok = traj.flag == ExitFlag::Completed;

  // Robot climb speed at t = 2 s (the exponential transient has died down,
  // the cable is still slack).
  double climb_err = 1e30;
  double decay_err = 1e30;
  bool still_slack = false;
  if (ok) {
    const auto& at2 = traj.records[index_at(traj, 2.0)];
    const auto& at02 = traj.records[index_at(traj, 0.2)];
    const auto& at12 = traj.records[index_at(traj, 1.2)];
    still_slack = at2.mode == CableMode::Slack && at12.mode == CableMode::Slack;
    climb_err = std::abs(at2.state.robot_vel.z - limits.climb_velocity) / limits.climb_velocity;
    const double v0 = at02.state.human_vel.norm();
    const double v1 = at12.state.human_vel.norm();
    const double tau_est = (at12.t - at02.t) / std::log(v0 / v1);
    decay_err = std::abs(tau_est - limits.time_constant) / limits.time_constant;
  }

  r.seconds = seconds_since(t0);
  r.pass = ok && still_slack && climb_err < 0.01 * scale && decay_err < 0.02 * scale;
  r.detail = format("climb speed error %.3f%% of %.5f m/s (tol 1%%); decay time-constant error "
                    "%.3f%% of %.3f s (tol 2%%); slack throughout: %s",
                    climb_err * 100.0, limits.climb_velocity, decay_err * 100.0,
                    limits.time_constant, still_slack ? "yes" : "no");
  return r;
}

// Shared builder for the stop-window criteria: straight reference path with
// the nominal trapezoidal pull.
Scenario stop_scenario(double t_start, double t_end, double duration) {
  SystemParams params;
  ParametricPath path({Vec3{-2.0, -0.5, 0.0}, Vec3{2.0, 0.0, 0.0}});
  Maneuver maneuver{std::move(path), ForceProfile{}, params.guidance.fz_des};

  Scenario sc;
  sc.params = params;
  sc.initial.human_pos = maneuver.path.evaluate(0.0);
  sc.initial.robot_pos = sc.initial.human_pos +
                         Vec3{0.0, 0.0, params.cable.rest_length +
                                            params.guidance.fz_des / params.cable.stiffness};
  sc.task = PathTask{std::move(maneuver)};
  sc.policy = StopWindowPolicy{t_start, t_end};
  sc.dt = 1e-3;
  sc.duration = duration;
  return sc;
}

// ---------------------------------------------------------------------------
// 5. A planted human brings the system to a verified rest point, and the task
//    still finishes after release.

CriterionResult criterion_stop_robustness() {
  CriterionResult r{5, "stop-robustness", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const double scale = tolerance_scale();
  const double t_start = 25.0, t_end = 33.0;

  Scenario sc = stop_scenario(t_start, t_end, 150.0);
  const auto& maneuver = std::get<PathTask>(sc.task).maneuver;
  const Trajectory traj = run(sc);
  bool ok = traj.flag == ExitFlag::Completed;

  // a) human at rest through the back of the window (5 s settle-in grace)
  double max_speed = 0.0;
  if (ok) {
    for (std::size_t i = index_at(traj, t_start + 5.0); i < traj.records.size(); ++i) {
      const auto& rec = traj.records[i];
      if (rec.t >= t_end) break;
      max_speed = std::max(max_speed, rec.state.human_vel.norm());
    }
  }

  // b) robot parked on the stop-balance point at the end of the window
  double robot_gap = 1e30;
  if (ok) {
    const auto& frozen = traj.records[index_at(traj, t_end - sc.dt)];
    const GuidanceRefs refs_frozen = maneuver.refs_at(frozen.s_star, sc.params.cable);
    const Vec3 parked = stop_equilibrium(frozen.state.human_pos, refs_frozen,
                                         sc.params.guidance, sc.params.cable, sc.params.human);
    robot_gap = distance(frozen.state.robot_pos, parked);
  }

  // c) the task completes after release
  double final_s = 0.0;
  double end_gap = 1e30;
  if (ok) {
    final_s = traj.records.back().s_star;
    end_gap = distance(traj.records.back().state.human_pos, maneuver.path.evaluate(1.0));
  }

  r.seconds = seconds_since(t0);
  r.pass = ok && max_speed < 1e-4 * scale && robot_gap < 1e-3 * scale && final_s >= 0.999 &&
           end_gap < 0.01;
  r.detail = format("window speed max %.2e m/s (tol 1e-4); robot-to-balance gap %.2e m "
                    "(tol 1e-3); final s* %.6f (floor 0.999); end gap %.2e m",
                    max_speed, robot_gap, final_s, end_gap);
  return r;
}

// ---------------------------------------------------------------------------
// 6. While the human is planted the path parameter and the reference error
//    hold still instead of winding up.

CriterionResult criterion_stop_anti_windup() {
  CriterionResult r{6, "stop-anti-windup", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const double scale = tolerance_scale();
  const double t_start = 20.0, t_end = 25.0;

  Scenario sc = stop_scenario(t_start, t_end, 26.0);
  const auto& maneuver = std::get<PathTask>(sc.task).maneuver;
  const Trajectory traj = run(sc);
  bool ok = traj.flag == ExitFlag::Completed;

  double s_drift = 1e30;
  double error_growth = 1e30;
  if (ok) {
    // Measure once the braking transient has died (3.5 s into the window).
    const std::size_t i0 = index_at(traj, t_start + 3.5);
    const double s0 = traj.records[i0].s_star;
    const double e0 =
        distance(maneuver.path.evaluate(traj.records[i0].s_star), traj.records[i0].state.human_pos);
    s_drift = 0.0;
    error_growth = 0.0;
    for (std::size_t i = i0; i < traj.records.size(); ++i) {
      const auto& rec = traj.records[i];
      if (rec.t >= t_end) break;
      s_drift = std::max(s_drift, std::abs(rec.s_star - s0));
      const double e = distance(maneuver.path.evaluate(rec.s_star), rec.state.human_pos);
      error_growth = std::max(error_growth, e - e0);
    }
  }

  r.seconds = seconds_since(t0);
  r.pass = ok && s_drift < 1e-3 * scale && error_growth < 1e-3 * scale;
  r.detail = format("s* drift %.2e (tol 1e-3); reference error growth %.2e m (tol 1e-3) over "
                    "the planted window",
                    s_drift, error_growth);
  return r;
}

// ---------------------------------------------------------------------------
// 7. Randomized campaign: the human stays close to the reference path.

CriterionResult criterion_path_following() {
  CriterionResult r{7, "path-following-quality", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const double scale = tolerance_scale();

  ParametricPath path({Vec3{-2.0, -0.5, 0.0}, Vec3{2.0, 0.0, 0.0}});
  const Vec3 start = path.evaluate(0.0);
  const Vec3 normal = unit_z().cross(path.tangent(0.0));

  std::vector<double> grid(101);
  for (int i = 0; i <= 100; ++i) grid[i] = i / 100.0;

  std::vector<std::vector<double>> curves;
  int aborted = 0;
  for (int run_i = 0; run_i < 8; ++run_i) {
    Rng rng(mix_seed(1007, static_cast<std::uint64_t>(run_i)));
    Scenario sc;
    sc.params = SystemParams{};
    sc.params.human.mass *= rng.uniform(0.5, 1.5);
    sc.params.human.damping = Diag3{rng.uniform(0.5, 1.5) * sc.params.human.damping.d};

    Maneuver maneuver{ParametricPath({Vec3{-2.0, -0.5, 0.0}, Vec3{2.0, 0.0, 0.0}}),
                      ForceProfile{}, sc.params.guidance.fz_des};
    sc.task = PathTask{std::move(maneuver)};
    sc.policy = NominalPolicy{};
    sc.dt = 1e-3;
    sc.duration = 120.0;
    sc.initial.human_pos = start + rng.uniform(-0.08, 0.08) * normal;
    sc.initial.human_vel = Vec3{};
    sc.initial.robot_pos = sc.initial.human_pos +
                           Vec3{0.0, 0.0, sc.params.cable.rest_length +
                                              sc.params.guidance.fz_des / sc.params.cable.stiffness};
    const Trajectory traj = run(sc);
    if (traj.flag != ExitFlag::Completed) {
      ++aborted;
      continue;
    }
    curves.push_back(error_curve(traj.human_positions(), path, grid));
  }

  double max_abs_mean = 1e30, max_abs_any = 1e30;
  if (curves.size() >= 2) {
    const PathErrorReport stats = error_stats(curves, grid);
    max_abs_mean = stats.max_abs_mean;
    max_abs_any = stats.max_abs_any;
  }

  r.seconds = seconds_since(t0);
  r.pass = aborted == 0 && curves.size() == 8 && max_abs_mean < 0.10 * scale &&
           max_abs_any < 0.30 * scale;
  r.detail = format("8-run campaign: max |mean e(s)| %.4f m (bound 0.10, reference level 0.05); "
                    "max |e| %.4f m (bound 0.30); %d aborted; %.1f s",
                    max_abs_mean, max_abs_any, aborted, r.seconds);
  return r;
}

// ---------------------------------------------------------------------------
// 8. Projection and path-error definitions agree with brute-force oracles.

CriterionResult criterion_projection_oracle() {
  CriterionResult r{8, "projection-oracle", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const double scale = tolerance_scale();
  const double tol_proj = 2e-6 * scale;

  Rng rng(mix_seed(1008, 0));
  double worst_proj = 0.0;

  constexpr int kBruteSamples = 1000000;
  std::vector<Vec3> samples(kBruteSamples + 1);
  for (int p = 0; p < 10; ++p) {
    ParametricPath path(random_open_waypoints(rng, 4, 1.2));
    for (int j = 0; j <= kBruteSamples; ++j) {
      samples[j] = path.evaluate(static_cast<double>(j) / kBruteSamples);
    }
    for (int q = 0; q < 20; ++q) {
      const Vec3 base = path.evaluate(rng.uniform(0.0, 1.0));
      const double angle = rng.uniform(0.0, 6.283185307179586);
      const double radius = rng.uniform(0.0, 1.2);
      const Vec3 query = base + Vec3{radius * std::cos(angle), radius * std::sin(angle), 0.0};

      int best = 0;
      double best_d2 = (samples[0] - query).squared_norm();
      for (int j = 1; j <= kBruteSamples; ++j) {
        const double d2 = (samples[j] - query).squared_norm();
        if (d2 < best_d2) {
          best_d2 = d2;
          best = j;
        }
      }
      const double s_brute = static_cast<double>(best) / kBruteSamples;
      worst_proj = std::max(worst_proj, std::abs(path.project(query) - s_brute));
    }
  }

  // Path-error oracle, exact construction: lay a synthetic trajectory
  //   p(sigma) = curve(sigma) + e(sigma) * n(sigma)
  // over a dense sigma grid. Since n is perpendicular to the tangent, the
  // trajectory crosses the normal plane at every s exactly at sigma = s with
  // normal component exactly e(s), so path_error must reproduce the analytic
  // e up to one grid step of drift in e and in the rotating frame:
  //   |gap| <= (|e'| + |e|·|n'|) * dsigma  ~ 3e-5 for the profile below.
  ParametricPath curved({Vec3{-2.0, -0.5, 0.0}, Vec3{0.0, 0.6, 0.0}, Vec3{2.0, 0.0, 0.0}});
  const double tol_synthetic = 1e-4 * scale;
  double worst_synthetic = 0.0;
  {
    // Decaying entry offset (the selection-rule stress case) plus a
    // sign-changing wiggle so both error signs are exercised.
    const auto offset = [](double sigma) {
      return 0.1 * std::exp(-5.0 * sigma) - 0.06 * sigma * std::cos(4.0 * sigma);
    };
    constexpr int kSynthetic = 40000;
    std::vector<Vec3> synthetic(kSynthetic + 1);
    for (int j = 0; j <= kSynthetic; ++j) {
      const double sigma = static_cast<double>(j) / kSynthetic;
      const Vec3 n = unit_z().cross(curved.tangent(sigma));
      synthetic[j] = curved.evaluate(sigma) + offset(sigma) * n;
    }
    for (int g = 0; g <= 100; ++g) {
      const double s = g / 100.0;
      worst_synthetic =
          std::max(worst_synthetic, std::abs(path_error(synthetic, curved, s) - offset(s)));
    }
  }

  // Cross-check on a genuine simulated trajectory against an independent
  // transliteration of the definition: the error at station s is the normal
  // coordinate of the trajectory where it intersects the normal plane of the
  // path at s. The oracle interpolates the logged polyline and takes the
  // first exact plane crossing in continuous time (closest approach for a
  // plane the trajectory never reaches); the library instead reads the
  // discrete sample nearest the plane, so the two must agree to within one
  // sample spacing at every station. The run is deliberately badly damped so
  // the lateral error is large and both error signs appear.
  SystemParams params;
  params.human.damping = Diag3{6.0, 6.0, 6.0};
  Maneuver maneuver{ParametricPath({Vec3{-2.0, -0.5, 0.0}, Vec3{0.0, 0.6, 0.0}, Vec3{2.0, 0.0, 0.0}}),
                    ForceProfile{}, params.guidance.fz_des};
  Scenario sc;
  sc.params = params;
  sc.initial.human_pos = maneuver.path.evaluate(0.0) + Vec3{0.0, -0.1, 0.0};
  sc.initial.robot_pos = sc.initial.human_pos + Vec3{0.0, 0.0, 1.01};
  sc.task = PathTask{std::move(maneuver)};
  sc.policy = NominalPolicy{};
  sc.dt = 1e-3;
  sc.duration = 50.0;
  const Trajectory traj = run(sc);
  bool ok = traj.flag == ExitFlag::Completed;

  double worst_err_gap = 1e30;
  double sample_spacing = 0.0;
  if (ok) {
    const std::vector<Vec3> positions = traj.human_positions();
    for (std::size_t i = 1; i < positions.size(); ++i) {
      sample_spacing = std::max(sample_spacing, distance(positions[i], positions[i - 1]));
    }
    worst_err_gap = 0.0;
    for (int g = 0; g <= 100; ++g) {
      const double s = g / 100.0;
      const Vec3 anchor = curved.evaluate(s);
      const Vec3 tangent = curved.tangent(s);
      const Vec3 normal = unit_z().cross(tangent);

      double oracle = 0.0;
      bool crossed = false;
      double previous = tangent.dot(positions[0] - anchor);
      for (std::size_t j = 1; j < positions.size(); ++j) {
        const double current = tangent.dot(positions[j] - anchor);
        if (previous == 0.0 || previous * current < 0.0) {
          const double u = previous == 0.0 ? 0.0 : previous / (previous - current);
          const Vec3 at = positions[j - 1] + (positions[j] - positions[j - 1]) * u;
          oracle = normal.dot(at - anchor);
          crossed = true;
          break;
        }
        previous = current;
      }
      if (!crossed) {
        std::size_t best = 0;
        double best_abs = std::abs(tangent.dot(positions[0] - anchor));
        for (std::size_t j = 1; j < positions.size(); ++j) {
          const double a = std::abs(tangent.dot(positions[j] - anchor));
          if (a < best_abs) {
            best_abs = a;
            best = j;
          }
        }
        oracle = normal.dot(positions[best] - anchor);
      }

      const double mine = path_error(positions, curved, s);
      worst_err_gap = std::max(worst_err_gap, std::abs(mine - oracle));
    }
  }

  r.seconds = seconds_since(t0);
  r.pass = ok && worst_proj <= tol_proj && worst_synthetic <= tol_synthetic &&
           worst_err_gap <= sample_spacing + 1e-6 * scale;
  r.detail = format("projection vs 1e6-sample brute force: max gap %.2e (tol %.0e) over 200 "
                    "queries; path-error vs analytic offset: max gap %.2e m (tol %.0e); vs "
                    "plane-intersection read on a simulated run: max gap %.2e m (one sample "
                    "spacing %.2e m); %.1f s",
                    worst_proj, tol_proj, worst_synthetic, tol_synthetic, worst_err_gap,
                    sample_spacing, r.seconds);
  return r;
}

// ---------------------------------------------------------------------------
// 9. The integrator converges at fourth order on smooth (switch-free) motion.

CriterionResult criterion_integrator_order() {
  CriterionResult r{9, "integrator-order", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const double scale = tolerance_scale();

  SystemParams params;
  const GuidanceRefs refs =
      make_guidance_refs(Vec3{0.0, 0.0, 0.0}, Vec3{0.0, 0.0, 4.0}, params.cable);
  const Controller controller = [&](const SystemState& state, double) {
    return guidance_input(state.robot_pos, refs, params.guidance);
  };
  const Policy policy = [](const SystemState&, double, const Vec3&) { return Vec3{}; };

  SystemState x0;
  x0.human_pos = Vec3{0.3, -0.2, 0.0};
  x0.human_vel = Vec3{0.4, 0.3, 0.0};
  x0.robot_pos = Vec3{0.25, -0.15, 1.04};
  x0.robot_vel = Vec3{0.2, -0.1, 0.1};

  const double horizon = 0.4;
  const double dts[3] = {0.008, 0.004, 0.002};
  SystemState finals[3];
  bool taut_throughout = true;
  for (int k = 0; k < 3; ++k) {
    SystemState x = x0;
    const int steps = static_cast<int>(std::llround(horizon / dts[k]));
    for (int n = 0; n < steps; ++n) {
      x = step_rk4(x, controller, policy, params, n * dts[k], dts[k]);
      if (x.cable_vector().norm() <= params.cable.rest_length + 0.005) taut_throughout = false;
    }
    finals[k] = x;
  }
  const double d1 = state_distance(finals[0], finals[1]);
  const double d2 = state_distance(finals[1], finals[2]);
  const double order = std::log2(d1 / d2);

  const double lo = 4.0 - 0.3 * scale;
  const double hi = 4.0 + 0.3 * scale;
  r.seconds = seconds_since(t0);
  r.pass = taut_throughout && order >= lo && order <= hi;
  r.detail = format("Richardson order %.3f (window [%.2f, %.2f]); refinement gaps %.3e / %.3e; "
                    "taut throughout: %s",
                    order, lo, hi, d1, d2, taut_throughout ? "yes" : "no");
  return r;
}

// ---------------------------------------------------------------------------
// 10. Campaigns are bit-reproducible: same seed, same bytes.

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CriterionResult criterion_determinism() {
  CriterionResult r{10, "campaign-determinism", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();

  const fs::path base = fs::temp_directory_path() / "tether-acceptance-determinism";
  std::error_code ec;
  fs::remove_all(base, ec);
  fs::create_directories(base / "a");
  fs::create_directories(base / "b");

  const std::string config = R"({
  "task": {"type": "path"},
  "sim": {"dt": 0.001, "duration": 20.0, "seed": 7}
})";
  const fs::path config_path = base / "follow.json";
  {
    std::ofstream out(config_path, std::ios::binary);
    out << config;
  }

  std::ostringstream sink;
  FollowOptions opts;
  opts.config_path = config_path.string();
  opts.runs = 4;
  opts.randomize_human = true;
  opts.write_svg = false;

  opts.out_dir = (base / "a").string();
  const int code_a = cmd_follow(opts, sink);
  opts.out_dir = (base / "b").string();
  const int code_b = cmd_follow(opts, sink);

  bool identical = code_a == 0 && code_b == 0;
  int compared = 0;
  if (identical) {
    for (int i = 0; i < 4; ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "run_%02d.csv", i);
      const std::string a = read_all(base / "a" / name);
      const std::string b = read_all(base / "b" / name);
      if (a.empty() || a != b) {
        identical = false;
        break;
      }
      ++compared;
    }
    if (identical &&
        read_all(base / "a" / "follow_report.json") != read_all(base / "b" / "follow_report.json")) {
      identical = false;
    }
  }
  fs::remove_all(base, ec);

  r.seconds = seconds_since(t0);
  r.pass = identical;
  r.detail = format("two 4-run campaigns, exit codes %d/%d, %d trajectory files byte-compared: %s",
                    code_a, code_b, compared, identical ? "identical" : "MISMATCH");
  return r;
}

struct Entry {
  CriterionResult (*fn)();
  const char* name;
  const char* summary;
};

const Entry kEntries[] = {
    {criterion_equilibrium, "equilibrium-rest-and-convergence",
     "rest states are exact fixed points and attract 1 m / 0.5 m/s perturbations within 60 s"},
    {criterion_storage_decrease, "storage-decrease",
     "V never increases under constant refs and u_H = 0; numeric dV/dt matches the dissipation"},
    {criterion_passivity, "passivity-margins",
     "storage gained <= supply - dissipation (+1e-6 J) per port over 100 randomized campaigns"},
    {criterion_slack_limits, "slack-phase-limits",
     "slack-phase robot climb speed and human velocity decay match their closed forms"},
    {criterion_stop_robustness, "stop-robustness",
     "a planted human stops the system at the verified balance point; the task finishes after"},
    {criterion_stop_anti_windup, "stop-anti-windup",
     "the path parameter and reference error hold still during a 5 s stop"},
    {criterion_path_following, "path-following-quality",
     "8-run randomized campaign stays within 0.10 m mean / 0.30 m max lateral error"},
    {criterion_projection_oracle, "projection-oracle",
     "projection matches 1e6-sample brute force; path error matches its direct definition"},
    {criterion_integrator_order, "integrator-order",
     "Richardson order estimate of the integrator lies in [3.7, 4.3]"},
    {criterion_determinism, "campaign-determinism",
     "same seed => byte-identical campaign CSV outputs"},
};

}  // namespace

bool all_passed(const std::vector<CriterionResult>& results) {
  if (results.empty()) return false;
  for (const auto& r : results) {
    if (!r.pass) return false;
  }
  return true;
}

std::vector<CriterionResult> run_acceptance(std::ostream& out, bool list_only) {
  std::vector<CriterionResult> results;
  if (list_only) {
    for (std::size_t i = 0; i < std::size(kEntries); ++i) {
      out << (i + 1) << ". " << kEntries[i].name << " — " << kEntries[i].summary << '\n';
    }
    return results;
  }
  for (std::size_t i = 0; i < std::size(kEntries); ++i) {
    CriterionResult r = kEntries[i].fn();
    out << (r.pass ? "PASS" : "FAIL") << "  " << r.id << ' ' << r.name << " | " << r.detail
        << '\n';
    out.flush();
    results.push_back(std::move(r));
  }
  int passed = 0;
  for (const auto& r : results) passed += r.pass ? 1 : 0;
  out << passed << '/' << results.size() << " criteria passed\n";
  return results;
}

}  // namespace tether
