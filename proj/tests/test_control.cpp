#include "doctest.h"

#include <cmath>

#include "tether/control.hpp"
#include "tether/errors.hpp"
#include "tether/model.hpp"
#include "tether/params.hpp"
#include "tether/sim.hpp"

using namespace tether;

TEST_SUITE("control") {
  TEST_CASE("robot reference offsets along the force direction") {
    CableParams cable;  // k = 100, rest length 1
    // Vertical unit force: stretch 0.01 above the rest length.
    Vec3 r = robot_reference(Vec3{0, 0, 0}, Vec3{0, 0, 1.0}, cable);
    CHECK(r.x == 0.0);
    CHECK(r.y == 0.0);
    CHECK(r.z == doctest::Approx(1.01));

    // Doubling the force doubles only the stretch, not the rest offset.
    r = robot_reference(Vec3{0, 0, 0}, Vec3{0, 0, 2.0}, cable);
    CHECK(r.z == doctest::Approx(1.02));

    // Translation equivariance.
    const Vec3 base = robot_reference(Vec3{0, 0, 0}, Vec3{1, 0, 1}, cable);
    const Vec3 moved = robot_reference(Vec3{3, -2, 0}, Vec3{1, 0, 1}, cable);
    CHECK(moved.x == doctest::Approx(base.x + 3.0));
    CHECK(moved.y == doctest::Approx(base.y - 2.0));
    CHECK(moved.z == doctest::Approx(base.z));

    CHECK_THROWS_AS(robot_reference(Vec3{}, Vec3{}, cable), ZeroForceRefError);
  }

  TEST_CASE("robot reference renders the desired force at rest") {
    // Placing the robot at the reference over the human reference must make
    // the cable deliver exactly the reference force.
    CableParams cable;
    const Vec3 f_ref{0.7, -0.4, 1.2};
    const Vec3 human{1.0, 2.0, 0.0};
    const Vec3 robot = robot_reference(human, f_ref, cable);
    const Vec3 delivered = cable_force(robot, human, cable);
    CHECK(delivered.x == doctest::Approx(f_ref.x).epsilon(1e-12));
    CHECK(delivered.y == doctest::Approx(f_ref.y).epsilon(1e-12));
    CHECK(delivered.z == doctest::Approx(f_ref.z).epsilon(1e-12));
  }

  TEST_CASE("guidance input: proportional horizontal action plus feedforward") {
    GuidanceParams gains;  // kp = 4.5, fz 1.0
    CableParams cable;
    const GuidanceRefs refs = make_guidance_refs(Vec3{0, 0, 0}, Vec3{0, 0, 1.0}, cable);
    // Robot displaced (-0.1, -0.2, -0.5) from its reference (0, 0, 1.01).
    const Vec3 u = guidance_input(Vec3{-0.1, -0.2, 0.51}, refs, gains);
    CHECK(u.x == doctest::Approx(0.45));
    CHECK(u.y == doctest::Approx(0.9));
    CHECK(u.z == doctest::Approx(1.0));  // vertical channel is feedforward only
  }

  TEST_CASE("horizontal error saturation rescales radially") {
    const Vec3 e = saturate_horizontal(Vec3{3, 4, -2}, 1.0);
    CHECK(e.x == doctest::Approx(0.6));
    CHECK(e.y == doctest::Approx(0.8));
    CHECK(e.z == doctest::Approx(-2.0));  // z passes through

    // Inside the bound: untouched.
    const Vec3 small = saturate_horizontal(Vec3{0.3, 0.4, 9}, 1.0);
    CHECK(small.x == doctest::Approx(0.3));
    CHECK(small.y == doctest::Approx(0.4));

    // bound <= 0 disables.
    const Vec3 off = saturate_horizontal(Vec3{3, 4, 0}, 0.0);
    CHECK(off.x == doctest::Approx(3.0));

    GuidanceParams gains;
    gains.error_saturation = 1.0;
    CableParams cable;
    const GuidanceRefs refs = make_guidance_refs(Vec3{0, 0, 0}, Vec3{0, 0, 1.0}, cable);
    const Vec3 u = guidance_input(Vec3{-3.0, -4.0, 1.01}, refs, gains);
    CHECK(u.x == doctest::Approx(4.5 * 0.6));
    CHECK(u.y == doctest::Approx(4.5 * 0.8));
    CHECK(u.z == doctest::Approx(1.0));
  }

  TEST_CASE("time-varying decomposition is the exact input shift") {
    GuidanceParams gains;
    CableParams cable;
    const GuidanceRefs terminal = make_guidance_refs(Vec3{2, 0, 0}, Vec3{0, 0, 1.0}, cable);
    const GuidanceRefs moving = make_guidance_refs(Vec3{0.3, -1.2, 0}, Vec3{0.9, 0.2, 1.0}, cable);

    CHECK(time_varying_decompose(terminal, terminal, gains).norm() == 0.0);

    // Identity: u(refs_t) = u(refs_terminal) + shift, for any robot position.
    const Vec3 positions[] = {Vec3{0, 0, 1}, Vec3{1.7, -0.4, 0.2}, Vec3{-2, 3, 5}};
    const Vec3 shift = time_varying_decompose(moving, terminal, gains);
    for (const Vec3& p : positions) {
      const Vec3 direct = guidance_input(p, moving, gains);
      const Vec3 recomposed = guidance_input(p, terminal, gains) + shift;
      CHECK((direct - recomposed).norm() == doctest::Approx(0.0));
    }
  }

  TEST_CASE("equilibrium state is a genuine fixed point of the dynamics") {
    SystemParams params;
    CableParams cable = params.cable;
    const GuidanceRefs refs = make_guidance_refs(Vec3{2, 0, 0}, Vec3{0, 0, 1.0}, cable);
    const SystemState x_e = equilibrium_state(refs);
    CHECK(x_e.human_pos.x == 2.0);
    CHECK(x_e.human_vel.norm() == 0.0);
    CHECK(x_e.robot_pos.z == doctest::Approx(1.01));

    const Vec3 u_a = guidance_input(x_e.robot_pos, refs, params.guidance);
    const StateDerivative d = system_rhs(x_e, u_a, Vec3{}, params);
    CHECK(d.norm() < 1e-13);
  }

  TEST_CASE("equilibrium position is independent of the admittance shaping") {
    // The fixed point depends only on refs; M_A and B_A shape transients.
    SystemParams a;
    SystemParams b;
    b.admittance.inertia = Diag3::uniform(2.5);
    b.admittance.damping = Diag3::uniform(9.0);
    const GuidanceRefs refs = make_guidance_refs(Vec3{1, 1, 0}, Vec3{0, 0, 2.0}, a.cable);
    const SystemState x_e = equilibrium_state(refs);
    const Vec3 ua_a = guidance_input(x_e.robot_pos, refs, a.guidance);
    const Vec3 ua_b = guidance_input(x_e.robot_pos, refs, b.guidance);
    CHECK(system_rhs(x_e, ua_a, Vec3{}, a).norm() < 1e-13);
    CHECK(system_rhs(x_e, ua_b, Vec3{}, b).norm() < 1e-13);
  }

  TEST_CASE("rest balance: solver satisfies the force equation") {
    SystemParams params;
    const GuidanceRefs refs = make_guidance_refs(Vec3{2, 0, 0}, Vec3{0, 0, 1.0}, params.cable);

    SUBCASE("human at the reference: the plain equilibrium") {
      const Vec3 robot =
          stop_equilibrium(refs.human_pos_ref, refs, params.guidance, params.cable, params.human);
      CHECK((robot - refs.robot_pos_ref).norm() < 1e-9);
    }

    SUBCASE("displaced human: residual vanishes on the full cable law") {
      const Vec3 human{1.2, -0.4, 0.0};
      const Vec3 robot = stop_equilibrium(human, refs, params.guidance, params.cable, params.human);
      // Independent residual check (this is the defining equation).
      const Vec3 f_c = cable_force(robot, human, params.cable);
      const Vec3 residual =
          params.guidance.kp_matrix() * (refs.robot_pos_ref - robot) + refs.force_ref - f_c;
      CHECK(residual.norm() < 1e-10);
      // The balance must be taut and feasible.
      CHECK((robot - human).norm() > params.cable.rest_length);
      CHECK(f_c.z < params.human.weight());
      // The vertical channel has no feedback, so f_c.z == force_ref.z exactly.
      CHECK(f_c.z == doctest::Approx(refs.force_ref.z).epsilon(1e-12));
    }
  }

  TEST_CASE("rest balance matches a simulated planted human") {
    // Simulate the closed loop with the human planted from t = 2 s on; by
    // t = 20 s the robot must sit at the computed rest balance.
    SystemParams params;
    const GuidanceRefs refs = make_guidance_refs(Vec3{2, 0, 0}, Vec3{0, 0, 1.0}, params.cable);

    Scenario sc;
    sc.params = params;
    sc.task = PointTask{refs};
    sc.policy = StopWindowPolicy{2.0, 1e9};
    sc.dt = 1e-3;
    sc.duration = 20.0;
    sc.initial.human_pos = Vec3{0.5, 0.3, 0.0};
    sc.initial.robot_pos = sc.initial.human_pos + Vec3{0, 0, 1.01};

    const Trajectory traj = run(sc);
    REQUIRE(traj.flag == ExitFlag::Completed);
    const SystemState& final_state = traj.records.back().state;
    // The human has long braked to rest; use their actual rest position.
    CHECK(final_state.human_vel.norm() < 1e-8);
    const Vec3 predicted = stop_equilibrium(final_state.human_pos, refs, params.guidance,
                                            params.cable, params.human);
    CHECK((final_state.robot_pos - predicted).norm() < 1e-3);
  }
}
