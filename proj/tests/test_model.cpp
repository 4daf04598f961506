#include "doctest.h"

#include <cmath>

#include "tether/errors.hpp"
#include "tether/model.hpp"
#include "tether/params.hpp"

using namespace tether;

TEST_SUITE("model") {
  TEST_CASE("cable tension follows the piecewise law") {
    CableParams cable;  // k = 100, rest length 1
    CHECK(cable_tension(1.5, cable) == doctest::Approx(50.0));
    CHECK(cable_tension(0.8, cable) == 0.0);
    CHECK(cable_tension(1.0, cable) == 0.0);  // boundary belongs to slack
    CHECK(cable_tension(1.0 + 1e-9, cable) == doctest::Approx(1e-7));
    // Continuity at the boundary from above.
    CHECK(cable_tension(1.0 + 1e-12, cable) < 1e-9);
  }

  TEST_CASE("cable force points from human toward robot, zero when slack") {
    CableParams cable;
    const Vec3 f = cable_force(Vec3{0, 0, 2}, Vec3{0, 0, 0}, cable);
    CHECK(f.x == 0.0);
    CHECK(f.y == 0.0);
    CHECK(f.z == doctest::Approx(100.0));  // stretch 1 at k=100

    // Slack: inside the rest sphere the cable cannot push.
    CHECK(cable_force(Vec3{0, 0, 0.5}, Vec3{0, 0, 0}, cable).norm() == 0.0);
    CHECK(cable_force(Vec3{1, 0, 0}, Vec3{0, 0, 0}, cable).norm() == 0.0);

    // Oblique geometry: direction is the unit cable vector.
    const Vec3 robot{3.0, 4.0, 0.0};  // length 5, stretch 4 -> tension 400
    const Vec3 g = cable_force(robot, Vec3{0, 0, 0}, cable);
    CHECK(g.x == doctest::Approx(400.0 * 3.0 / 5.0));
    CHECK(g.y == doctest::Approx(400.0 * 4.0 / 5.0));
    CHECK(g.z == 0.0);
  }

  TEST_CASE("ground reaction balances weight minus vertical pull") {
    HumanParams human;  // 10 kg, g = 9.81 -> weight 98.1 N
    CHECK(human.weight() == doctest::Approx(98.1));
    CHECK(ground_reaction(Vec3{5, -2, 97.1}, human) == doctest::Approx(1.0));
    CHECK(ground_reaction(Vec3{0, 0, 0}, human) == doctest::Approx(98.1));
    // A downward cable component loads the ground further.
    CHECK(ground_reaction(Vec3{0, 0, -10}, human) == doctest::Approx(108.1));
    CHECK_THROWS_AS(ground_reaction(Vec3{0, 0, human.weight()}, human), LiftOffError);
    CHECK_THROWS_AS(ground_reaction(Vec3{0, 0, 200.0}, human), LiftOffError);
    try {
      ground_reaction(Vec3{0, 0, 150.0}, human);
      FAIL("expected LiftOffError");
    } catch (const LiftOffError& e) {
      CHECK(e.vertical_force() == doctest::Approx(150.0));
      CHECK(e.weight() == doctest::Approx(98.1));
      CHECK(e.time() == doctest::Approx(-1.0));
    }
  }

  TEST_CASE("human acceleration: forces over mass, horizontal only") {
    HumanParams human;
    SystemState state;
    state.human_vel = Vec3{0, 0, 0};
    // 1 N horizontal pull on 10 kg.
    Vec3 acc = human_accel(state, human, Vec3{1.0, 0.0, 0.5}, Vec3{});
    CHECK(acc.x == doctest::Approx(0.1));
    CHECK(acc.y == 0.0);
    CHECK(acc.z == 0.0);  // vertical balance absorbed by the ground

    // The applied handle force can cancel the pull exactly.
    acc = human_accel(state, human, Vec3{1.0, 2.0, 0.3}, Vec3{-1.0, -2.0, 0.0});
    CHECK(acc.norm() == doctest::Approx(0.0));

    // Damping alone: B_H/m = 2 per second.
    state.human_vel = Vec3{1.0, -0.5, 0.0};
    acc = human_accel(state, human, Vec3{}, Vec3{});
    CHECK(acc.x == doctest::Approx(-2.0));
    CHECK(acc.y == doctest::Approx(1.0));
    CHECK(acc.z == 0.0);
  }

  TEST_CASE("human acceleration refuses lift-off states") {
    HumanParams human;
    SystemState state;
    CHECK_THROWS_AS(human_accel(state, human, Vec3{0, 0, 99.0}, Vec3{}), LiftOffError);
  }

  TEST_CASE("admittance acceleration: virtual mass-damper pushed by -f_c + u_a") {
    AdmittanceParams admittance;  // M = 0.8 I, B = 2.4 I
    SystemState state;
    state.robot_vel = Vec3{};
    Vec3 acc = admittance_input(state, Vec3{}, Vec3{0.8, 0, 0}, admittance);
    CHECK(acc.x == doctest::Approx(1.0));

    // The robot feels the cable reaction with a minus sign.
    acc = admittance_input(state, Vec3{0, 0, 1.0}, Vec3{}, admittance);
    CHECK(acc.z == doctest::Approx(-1.25));

    // Damping: B/M = 3 per second.
    state.robot_vel = Vec3{1.0, 0, 0};
    acc = admittance_input(state, Vec3{}, Vec3{}, admittance);
    CHECK(acc.x == doctest::Approx(-3.0));
  }

  TEST_CASE("slack cable decouples the two bodies") {
    SystemParams params;
    SystemState state;
    state.human_pos = Vec3{0, 0, 0};
    state.human_vel = Vec3{0.4, -0.1, 0};
    state.robot_vel = Vec3{0.1, 0.2, -0.3};
    const Vec3 u_a{1.0, 0.5, 1.0};
    const Vec3 u_h{0.3, 0.0, 0.0};

    state.robot_pos = Vec3{0.2, 0.1, 0.5};  // slack
    const StateDerivative a = system_rhs(state, u_a, u_h, params);
    state.robot_pos = Vec3{-0.3, 0.2, 0.7};  // still slack
    const StateDerivative b = system_rhs(state, u_a, u_h, params);

    CHECK(a.human_acc.x == b.human_acc.x);
    CHECK(a.human_acc.y == b.human_acc.y);
    CHECK(a.robot_acc.x == b.robot_acc.x);  // u_a fixed here, no cable force
    // And the robot acceleration does not depend on the human while slack.
    CHECK(a.robot_acc.z == b.robot_acc.z);
  }

  TEST_CASE("coupled right-hand side wires forces with opposite signs") {
    SystemParams params;
    SystemState state;
    state.human_pos = Vec3{0, 0, 0};
    state.robot_pos = Vec3{0, 0, 1.5};  // tension 50, straight up
    const StateDerivative d = system_rhs(state, Vec3{}, Vec3{}, params);
    // Human: vertical pull does not move the hand horizontally.
    CHECK(d.human_acc.norm() == 0.0);
    // Robot: -f_c / M = -50/0.8 downward.
    CHECK(d.robot_acc.z == doctest::Approx(-62.5));
    CHECK(d.human_vel.x == state.human_vel.x);
    CHECK(d.robot_vel.z == state.robot_vel.z);
  }

  TEST_CASE("cable mode is strict: the rest sphere itself is slack") {
    CableParams cable;
    SystemState state;
    state.robot_pos = Vec3{0, 0, 1.0};
    CHECK(cable_mode(state, cable) == CableMode::Slack);
    state.robot_pos = Vec3{0, 0, 1.0 + 1e-12};
    CHECK(cable_mode(state, cable) == CableMode::Taut);
    state.robot_pos = Vec3{0, 0, 0.2};
    CHECK(cable_mode(state, cable) == CableMode::Slack);
  }

  TEST_CASE("elastic energy integrates the tension law") {
    CableParams cable;
    CHECK(cable_elastic_energy(1.5, cable) == doctest::Approx(12.5));
    CHECK(cable_elastic_energy(0.9, cable) == 0.0);
    CHECK(cable_elastic_energy(1.0, cable) == 0.0);
    // d/dL elastic == tension (midpoint finite difference).
    const double L = 1.37;
    const double h = 1e-6;
    const double fd =
        (cable_elastic_energy(L + h, cable) - cable_elastic_energy(L - h, cable)) / (2 * h);
    CHECK(fd == doctest::Approx(cable_tension(L, cable)).epsilon(1e-9));
  }

  TEST_CASE("parameter validation rejects infeasible vertical force") {
    SystemParams params;
    params.guidance.fz_des = params.human.weight();  // exactly the weight
    CHECK_THROWS_AS(params.validate(), InfeasibleForceError);
    params.guidance.fz_des = 0.0;
    CHECK_THROWS_AS(params.validate(), InfeasibleForceError);
    params.guidance.fz_des = 98.0999;
    CHECK_NOTHROW(params.validate());
  }
}
