#pragma once

#include "tether/params.hpp"
#include "tether/vec3.hpp"

namespace tether {

/// Full system state: human hand position/velocity and robot position/velocity,
/// all in the world frame. The human is constrained to the ground plane, so
/// human_pos.z == 0 and human_vel.z == 0 throughout.
struct SystemState {
  Vec3 human_pos;
  Vec3 human_vel;
  Vec3 robot_pos;
  Vec3 robot_vel;

  bool is_finite() const {
    return human_pos.is_finite() && human_vel.is_finite() && robot_pos.is_finite() &&
           robot_vel.is_finite();
  }
  /// Cable configuration vector l_c = p_R - p_H.
  Vec3 cable_vector() const { return robot_pos - human_pos; }
};

struct StateDerivative {
  Vec3 human_vel;
  Vec3 human_acc;
  Vec3 robot_vel;
  Vec3 robot_acc;

  double norm() const;
};

enum class CableMode { Slack, Taut };

/// Cable internal force intensity. Zero when the end-to-end distance does not
/// exceed the rest length, Hooke's law beyond it. Continuous at the boundary.
double cable_tension(double length, const CableParams& cable);

/// Force the cable applies to the human at the handle; the robot end receives
/// the negation. Zero vector when slack.
Vec3 cable_force(const Vec3& robot_pos, const Vec3& human_pos, const CableParams& cable);

inline Vec3 cable_force(const SystemState& state, const CableParams& cable) {
  return cable_force(state.robot_pos, state.human_pos, cable);
}

/// Vertical ground reaction intensity that keeps the human on the plane.
/// Throws LiftOffError when the vertical pull reaches the human's weight.
double ground_reaction(const Vec3& cable_force_on_human, const HumanParams& human);

/// Human hand acceleration under cable force and additional human force.
/// The vertical component is structurally zero: the ground reaction absorbs
/// gravity and any vertical force components (LiftOffError past the model's
/// validity bound).
Vec3 human_accel(const SystemState& state, const HumanParams& human, const Vec3& f_c,
                 const Vec3& u_h);

/// Robot acceleration rendered by the admittance filter: the robot behaves as
/// a virtual mass-damper pushed by -f_c and the guidance input u_a.
Vec3 admittance_input(const SystemState& state, const Vec3& f_c, const Vec3& u_a,
                      const AdmittanceParams& admittance);

/// Right-hand side of the coupled human-cable-robot dynamics.
StateDerivative system_rhs(const SystemState& state, const Vec3& u_a, const Vec3& u_h,
                           const SystemParams& params);

/// Taut iff ||p_R - p_H|| strictly exceeds the rest length.
CableMode cable_mode(const SystemState& state, const CableParams& cable);

/// Elastic energy stored in the cable at end-to-end distance `length`,
/// integrating the tension law upward from the rest length. Zero when slack.
double cable_elastic_energy(double length, const CableParams& cable);

}  // namespace tether
