// Tests for the energy-style storage function and the trajectory checks.
//
// Oracles used here:
//  - the closed-form offset fz^2/(2k) + rest_length*fz, derived by hand from
//    the storage definition at the rest configuration,
//  - the damping quadratics for the expected dissipation rate,
//  - the decoupled slack-phase formulas (first-order linear ODEs),
//  - sign/structure arguments: zero supply on nominal runs, monotone decay of
//    the storage, and its guaranteed failure under injected handle power.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>

#include "doctest.h"
#include "tether/analysis.hpp"
#include "tether/control.hpp"
#include "tether/errors.hpp"
#include "tether/model.hpp"
#include "tether/sim.hpp"

using namespace tether;

namespace {

GuidanceRefs default_refs(double fz = 1.0, const Vec3& human_ref = Vec3{}) {
  return make_guidance_refs(human_ref, Vec3{0.0, 0.0, fz}, CableParams{});
}

Scenario point_scenario(const Vec3& target, double duration, double dt) {
  Scenario sc;
  sc.task = PointTask{make_guidance_refs(target, Vec3{0.0, 0.0, 1.0}, sc.params.cable)};
  sc.initial.robot_pos = Vec3{0.0, 0.0, 0.5};
  sc.duration = duration;
  sc.dt = dt;
  return sc;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("storage vanishes at the equilibrium; offset has the closed form") {
    const SystemParams params;
    const double k = params.cable.stiffness;
    const double rest = params.cable.rest_length;

    for (const double fz : {1.0, 2.0, 0.7}) {
      CAPTURE(fz);
      const GuidanceRefs refs = default_refs(fz);
      const StorageFunction storage(refs, params);
      // v0 is fixed so the equilibrium evaluates to exactly zero; the same
      // expressions cancel term for term, so this is exact.
      CHECK(storage.evaluate(equilibrium_state(refs)).total == 0.0);
      // Hand-derived: at rest the robot sits at its reference (no kinetic or
      // feedback-spring energy), the cable stores fz^2/(2k), and the cable
      // vector projects (rest + fz/k) * fz onto the reference force.
      const double expected_offset = fz * fz / (2.0 * k) + rest * fz;
      CHECK(storage.offset() == doctest::Approx(expected_offset).epsilon(1e-12));
    }
    // Defaults give the much-quoted 1.005 J.
    CHECK(StorageFunction(default_refs(), params).offset() ==
          doctest::Approx(1.005).epsilon(1e-12));
  }

  TEST_CASE("storage counts kinetic and feedback-spring contributions") {
    const SystemParams params;
    const GuidanceRefs refs = default_refs();
    const StorageFunction storage(refs, params);
    const SystemState eq = equilibrium_state(refs);

    SystemState moving_human = eq;
    moving_human.human_vel = Vec3{1.0, 0.0, 0.0};
    CHECK(storage.evaluate(moving_human).total == doctest::Approx(5.0).epsilon(1e-12));

    SystemState moving_robot = eq;
    moving_robot.robot_vel = Vec3{0.0, 1.0, 0.0};
    CHECK(storage.evaluate(moving_robot).total == doctest::Approx(0.4).epsilon(1e-12));

    // Horizontal robot offset: only the v1 spring term sees it directly.
    SystemState shifted = eq;
    shifted.robot_pos = eq.robot_pos + Vec3{0.1, 0.0, 0.0};
    CHECK(storage.evaluate(shifted).v1 == doctest::Approx(0.0225).epsilon(1e-12));

    // The vertical proportional row is zero by construction: a pure vertical
    // robot offset contributes nothing to v1 (the cable term picks it up).
    SystemState lifted = eq;
    lifted.robot_pos = eq.robot_pos + Vec3{0.0, 0.0, 0.3};
    CHECK(storage.evaluate(lifted).v1 == 0.0);
    CHECK(storage.evaluate(lifted).total > 0.0);

    // One-shot helper agrees with the class.
    const StorageBreakdown a = lyapunov(moving_human, refs, params);
    const StorageBreakdown b = storage.evaluate(moving_human);
    CHECK(a.total == b.total);
    CHECK(a.v1 == b.v1);
    CHECK(a.v2 == b.v2);
    CHECK(a.v0 == b.v0);
  }

  TEST_CASE("storage is positive away from the equilibrium and grows along rays") {
    const SystemParams params;
    const GuidanceRefs refs = default_refs();
    const StorageFunction storage(refs, params);
    const SystemState eq = equilibrium_state(refs);

    std::mt19937_64 eng(20240451);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      SystemState s = eq;
      s.human_pos += Vec3{unit(eng), unit(eng), 0.0} * 0.3;
      s.robot_pos += Vec3{unit(eng), unit(eng), unit(eng)} * 0.3;
      s.human_vel += Vec3{unit(eng), unit(eng), 0.0} * 0.3;
      s.robot_vel += Vec3{unit(eng), unit(eng), unit(eng)} * 0.3;
      CAPTURE(trial);
      CHECK(storage.evaluate(s).total > 0.0);
    }

    // Radial growth along representative rays out of the equilibrium.
    const auto value_at = [&](int axis, double scale) {
      SystemState s = eq;
      switch (axis) {
        case 0: s.human_pos += Vec3{scale, 0.0, 0.0}; break;
        case 1: s.robot_pos += Vec3{0.0, scale, 0.0}; break;
        case 2: s.robot_pos += Vec3{0.0, 0.0, scale}; break;
        case 3: s.human_vel += Vec3{scale, 0.0, 0.0}; break;
        default: s.robot_vel += Vec3{0.0, 0.0, scale}; break;
      }
      return storage.evaluate(s).total;
    };
    for (int axis = 0; axis < 5; ++axis) {
      CAPTURE(axis);
      double previous = 0.0;
      for (const double scale : {1.0, 2.0, 4.0, 8.0}) {
        const double current = value_at(axis, scale);
        CHECK(current > previous);
        previous = current;
      }
      CHECK(previous > 10.0);  // grows without bound, not a plateau
    }
  }

  TEST_CASE("expected storage rate is the negative sum of damping quadratics") {
    SystemParams params;
    SystemState state;
    state.robot_vel = Vec3{1.0, 0.0, 0.0};
    CHECK(lyapunov_rate_expected(state, params) == doctest::Approx(-2.4).epsilon(1e-12));

    state.robot_vel = Vec3{};
    state.human_vel = Vec3{0.5, 0.0, 0.0};
    CHECK(lyapunov_rate_expected(state, params) == doctest::Approx(-5.0).epsilon(1e-12));

    state.robot_vel = Vec3{1.0, 0.0, 0.0};
    CHECK(lyapunov_rate_expected(state, params) == doctest::Approx(-7.4).epsilon(1e-12));

    // Anisotropic damping exercises every diagonal entry.
    params.human.damping = Diag3(2.0, 3.0, 4.0);
    params.admittance.damping = Diag3(1.0, 2.0, 5.0);
    state.human_vel = Vec3{1.0, 1.0, 1.0};
    state.robot_vel = Vec3{2.0, 0.0, 1.0};
    CHECK(lyapunov_rate_expected(state, params) ==
          doctest::Approx(-(2.0 + 3.0 + 4.0) - (1.0 * 4.0 + 5.0)).epsilon(1e-12));
  }

  TEST_CASE("storage decreases monotonically along nominal runs") {
    // Slack start crossing into taut: the step tolerance absorbs the
    // integrator's kink defect at the catch because dt is small here.
    Scenario sc = point_scenario(Vec3{1.0, 0.0, 0.0}, 20.0, 2.5e-4);
    const Trajectory traj = run(sc);
    REQUIRE(traj.flag == ExitFlag::Completed);
    const GuidanceRefs refs = task_terminal_refs(sc.task, sc.params.cable);

    const MonotoneReport rep = check_monotone(traj, refs, sc.params, 1e-2);
    CHECK(rep.allowed == doctest::Approx(1e-2 * 2.5e-4).epsilon(1e-12));
    CHECK(rep.max_increment <= rep.allowed);
    CHECK(rep.pass);

    // Taut start, no mode switches expected: same verdict.
    Scenario taut = point_scenario(Vec3{0.5, 0.0, 0.0}, 15.0, 2.5e-4);
    taut.initial.robot_pos = Vec3{0.0, 0.0, 1.02};
    const Trajectory traj2 = run(taut);
    REQUIRE(traj2.flag == ExitFlag::Completed);
    const MonotoneReport rep2 =
        check_monotone(traj2, task_terminal_refs(taut.task, taut.params.cable), taut.params, 1e-2);
    CHECK(rep2.pass);
  }

  TEST_CASE("injected handle power defeats monotonicity, as it must") {
    // Start exactly at the equilibrium, then shove the human sideways for a
    // second: the pulse feeds energy in and the storage must rise well past
    // any per-step allowance. A monotonicity checker that still passed here
    // would be vacuous.
    Scenario sc;
    sc.task = PointTask{default_refs()};
    sc.initial = equilibrium_state(default_refs());
    sc.policy = LateralPulsePolicy{1.0, 2.0, Vec3{0.0, 30.0, 0.0}};
    sc.dt = 1e-3;
    sc.duration = 5.0;
    const Trajectory traj = run(sc);
    REQUIRE(traj.flag == ExitFlag::Completed);

    const MonotoneReport rep =
        check_monotone(traj, task_terminal_refs(sc.task, sc.params.cable), sc.params, 1e-2);
    CHECK_FALSE(rep.pass);
    CHECK(rep.max_increment > 10.0 * rep.allowed);
    CHECK(rep.at_time >= 1.0);
    CHECK(rep.at_time <= 2.0 + 2.0 * sc.dt);
  }

  TEST_CASE("measured storage rate matches the dissipation prediction") {
    Scenario sc;
    sc.task = PointTask{default_refs()};
    sc.initial.human_pos = Vec3{0.2, 0.0, 0.0};
    sc.initial.robot_pos = Vec3{0.0, 0.0, 1.01};
    sc.dt = 1e-3;
    sc.duration = 10.0;
    const Trajectory traj = run(sc);
    REQUIRE(traj.flag == ExitFlag::Completed);

    const GuidanceRefs refs = task_terminal_refs(sc.task, sc.params.cable);
    const RateMatchReport rep = check_rate_match(traj, refs, sc.params, 5e-3, 1e-2);
    CHECK(rep.pass);
    CHECK(rep.samples_checked > 1000);

    // Fewer than three samples: nothing to difference, trivially passes.
    Trajectory tiny;
    tiny.dt = 0.1;
    tiny.records.resize(2);
    const RateMatchReport empty_rep = check_rate_match(tiny, refs, sc.params, 1e-9, 1e-9);
    CHECK(empty_rep.pass);
    CHECK(empty_rep.samples_checked == 0);
  }

  TEST_CASE("passivity holds on a nominal regulation run with zero supply") {
    Scenario sc = point_scenario(Vec3{2.0, 0.0, 0.0}, 20.0, 1e-3);
    const Trajectory traj = run(sc);
    REQUIRE(traj.flag == ExitFlag::Completed);
    const GuidanceRefs refs = task_terminal_refs(sc.task, sc.params.cable);

    // No handle force and a constant reference: both port inputs are
    // identically zero, so the supply integrals are exact zeros, bit for bit.
    const PassivityReport combined =
        passivity_report(traj, PassivityPort::Combined, refs, sc.params, 1e-6);
    CHECK(combined.supply_integral == 0.0);
    CHECK(combined.storage_delta < 0.0);
    CHECK(combined.dissipation_integral > 0.0);
    // The slack/taut catches on this run register in the allowance.
    CHECK(combined.quadrature_allowance > 0.0);
    CHECK(combined.pass);

    const PassivityReport human =
        passivity_report(traj, PassivityPort::Human, refs, sc.params, 1e-6);
    CHECK(human.supply_integral == 0.0);
    CHECK(human.pass);

    const PassivityReport robot =
        passivity_report(traj, PassivityPort::Robot, refs, sc.params, 1e-6);
    CHECK(robot.supply_integral == 0.0);
    CHECK(robot.pass);
    // The robot-port margin exceeds the combined one by exactly the human
    // dissipation, which is nonnegative.
    CHECK(robot.margin >= combined.margin - 1e-12);
  }

  TEST_CASE("passivity verdicts survive a trajectory file round trip bit for bit") {
    Scenario sc;
    sc.task = PointTask{default_refs()};
    sc.initial.human_pos = Vec3{0.3, -0.2, 0.0};
    sc.initial.robot_pos = Vec3{0.0, 0.0, 1.01};
    sc.policy = LateralPulsePolicy{0.5, 1.0, Vec3{5.0, -3.0, 0.0}};
    sc.dt = 1e-3;
    sc.duration = 3.0;
    const Trajectory traj = run(sc);
    REQUIRE(traj.flag == ExitFlag::Completed);

    const std::string path =
        (std::filesystem::temp_directory_path() / "tether_analysis_roundtrip.csv").string();
    write_trajectory_csv(traj, path);
    const Trajectory loaded = read_trajectory_csv(path);
    std::filesystem::remove(path);

    const GuidanceRefs refs = task_terminal_refs(sc.task, sc.params.cable);
    for (const PassivityPort port :
         {PassivityPort::Robot, PassivityPort::Human, PassivityPort::Combined}) {
      CAPTURE(to_string(port));
      const PassivityReport a = passivity_report(traj, port, refs, sc.params, 1e-6);
      const PassivityReport b = passivity_report(loaded, port, refs, sc.params, 1e-6);
      CHECK(a.supply_integral == b.supply_integral);
      CHECK(a.dissipation_integral == b.dissipation_integral);
      CHECK(a.storage_delta == b.storage_delta);
      CHECK(a.margin == b.margin);
      CHECK(a.quadrature_allowance == b.quadrature_allowance);
      CHECK(a.pass == b.pass);
    }
  }

  TEST_CASE("missing or non-finite logs are reported, not silently zeroed") {
    const SystemParams params;
    const GuidanceRefs refs = default_refs();
    const SystemState eq = equilibrium_state(refs);

    Trajectory too_short;
    too_short.dt = 0.1;
    too_short.records.resize(1);
    too_short.records[0].state = eq;
    CHECK_THROWS_AS(passivity_report(too_short, PassivityPort::Combined, refs, params, 1e-6),
                    MissingLogsError);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    Trajectory bad_uh;
    bad_uh.dt = 0.1;
    bad_uh.records.resize(2);
    for (std::size_t i = 0; i < 2; ++i) {
      bad_uh.records[i].t = 0.1 * static_cast<double>(i);
      bad_uh.records[i].state = eq;
      bad_uh.records[i].u_a = guidance_input(eq.robot_pos, refs, params.guidance);
      bad_uh.records[i].u_h = Vec3{nan, 0.0, 0.0};
    }
    CHECK_THROWS_AS(passivity_report(bad_uh, PassivityPort::Human, refs, params, 1e-6),
                    MissingLogsError);
    CHECK_THROWS_AS(passivity_report(bad_uh, PassivityPort::Combined, refs, params, 1e-6),
                    MissingLogsError);
    // The robot port never touches u_h: it must still evaluate, and at the
    // equilibrium everything is exactly zero.
    const PassivityReport robot =
        passivity_report(bad_uh, PassivityPort::Robot, refs, params, 1e-6);
    CHECK(robot.supply_integral == 0.0);
    CHECK(robot.margin == 0.0);
    CHECK(robot.pass);

    Trajectory bad_ua = bad_uh;
    for (auto& rec : bad_ua.records) {
      rec.u_h = Vec3{};
      rec.u_a = Vec3{nan, nan, nan};
    }
    CHECK_THROWS_AS(passivity_report(bad_ua, PassivityPort::Robot, refs, params, 1e-6),
                    MissingLogsError);
    CHECK_THROWS_AS(passivity_report(bad_ua, PassivityPort::Combined, refs, params, 1e-6),
                    MissingLogsError);
  }

  TEST_CASE("closed-form equilibrium balances the dynamics; infeasible forces rejected") {
    const SystemParams params;
    const GuidanceRefs refs = default_refs(1.0, Vec3{0.7, -0.4, 0.0});
    const SystemState eq = equilibrium(refs, params);

    const Vec3 u_a = guidance_input(eq.robot_pos, refs, params.guidance);
    const StateDerivative d = system_rhs(eq, u_a, Vec3{}, params);
    CHECK(d.human_vel.norm() == 0.0);
    CHECK(d.robot_vel.norm() == 0.0);
    CHECK(d.human_acc.norm() < 1e-12);
    CHECK(d.robot_acc.norm() < 1e-12);

    GuidanceRefs tilted = refs;
    tilted.force_ref = Vec3{0.1, 0.0, 1.0};
    CHECK_THROWS_AS(equilibrium(tilted, params), InfeasibleForceError);

    GuidanceRefs at_weight = refs;
    at_weight.force_ref = Vec3{0.0, 0.0, params.human.weight()};
    CHECK_THROWS_AS(equilibrium(at_weight, params), InfeasibleForceError);

    GuidanceRefs zero = refs;
    zero.force_ref = Vec3{};
    CHECK_THROWS_AS(equilibrium(zero, params), InfeasibleForceError);

    GuidanceRefs near_weight = refs;
    near_weight.force_ref = Vec3{0.0, 0.0, params.human.weight() - 1e-4};
    near_weight.robot_pos_ref =
        robot_reference(near_weight.human_pos_ref, near_weight.force_ref, params.cable);
    CHECK_NOTHROW(equilibrium(near_weight, params));
  }

  TEST_CASE("slack-phase limits match the decoupled closed forms") {
    SystemParams params;
    SlackPhaseLimits limits = slack_phase_limits(params);
    CHECK(limits.climb_velocity == doctest::Approx(1.0 / 2.4).epsilon(1e-12));
    CHECK(limits.decay_rate == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(limits.time_constant == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(limits.half_life == doctest::Approx(std::log(2.0) / 2.0).epsilon(1e-12));

    params.guidance.fz_des = 2.0;
    params.human.damping = Diag3(12.0, 18.0, 24.0);
    limits = slack_phase_limits(params);
    CHECK(limits.climb_velocity == doctest::Approx(2.0 / 2.4).epsilon(1e-12));
    CHECK(limits.decay_rate == doctest::Approx(54.0 / 30.0).epsilon(1e-12));
    CHECK(limits.half_life == doctest::Approx(std::log(2.0) / 1.8).epsilon(1e-12));
  }

  TEST_CASE("tolerance scale is positive and stable") {
    const double first = tolerance_scale();
    CHECK(first > 0.0);
    CHECK(tolerance_scale() == first);
  }
}
