#include "tether/model.hpp"

#include <cmath>
#include <sstream>

#include "tether/errors.hpp"

namespace tether {

std::ostream& operator<<(std::ostream& os, const Vec3& v) {
  return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
}

std::string LiftOffError::format(double vertical_force, double weight, double time) {
  std::ostringstream msg;
  msg << "vertical cable force " << vertical_force << " N reaches the human weight " << weight
      << " N";
  if (time >= 0.0) {
    msg << " at t=" << time << " s";
  }
  msg << "; ground contact lost, model invalid";
  return msg.str();
}

double StateDerivative::norm() const {
  return std::sqrt(human_vel.squared_norm() + human_acc.squared_norm() +
                   robot_vel.squared_norm() + robot_acc.squared_norm());
}

double cable_tension(double length, const CableParams& cable) {
  const double stretch = length - cable.rest_length;
  return stretch > 0.0 ? cable.stiffness * stretch : 0.0;
}

Vec3 cable_force(const Vec3& robot_pos, const Vec3& human_pos, const CableParams& cable) {
  const Vec3 l_c = robot_pos - human_pos;
  const double length = l_c.norm();
  const double tension = cable_tension(length, cable);
  if (tension == 0.0) {
    return Vec3{};
  }
  // Taut implies length > rest_length >= 0, so the direction is well defined.
  return l_c * (tension / length);
}

double ground_reaction(const Vec3& cable_force_on_human, const HumanParams& human) {
  const double weight = human.weight();
  if (cable_force_on_human.z >= weight) {
    throw LiftOffError(cable_force_on_human.z, weight);
  }
  return weight - cable_force_on_human.z;
}

Vec3 human_accel(const SystemState& state, const HumanParams& human, const Vec3& f_c,
                 const Vec3& u_h) {
  // Validity check: the ground must still be pushing back.
  ground_reaction(f_c, human);
  Vec3 acc = (f_c + u_h - human.damping * state.human_vel) / human.mass;
  acc.z = 0.0;  // plane constraint: vertical balance handled by the ground
  return acc;
}

Vec3 admittance_input(const SystemState& state, const Vec3& f_c, const Vec3& u_a,
                      const AdmittanceParams& admittance) {
  return admittance.inertia.inverse() * (u_a - f_c - admittance.damping * state.robot_vel);
}

StateDerivative system_rhs(const SystemState& state, const Vec3& u_a, const Vec3& u_h,
                           const SystemParams& params) {
  const Vec3 f_c = cable_force(state, params.cable);
  StateDerivative d;
  d.human_vel = state.human_vel;
  d.human_acc = human_accel(state, params.human, f_c, u_h);
  d.robot_vel = state.robot_vel;
  d.robot_acc = admittance_input(state, f_c, u_a, params.admittance);
  return d;
}

CableMode cable_mode(const SystemState& state, const CableParams& cable) {
  return state.cable_vector().norm() > cable.rest_length ? CableMode::Taut : CableMode::Slack;
}

double cable_elastic_energy(double length, const CableParams& cable) {
  const double stretch = length - cable.rest_length;
  return stretch > 0.0 ? 0.5 * cable.stiffness * stretch * stretch : 0.0;
}

}  // namespace tether
