#pragma once

#include "tether/errors.hpp"
#include "tether/vec3.hpp"

namespace tether {

/// Mass-damper approximation of a human following an external pulling force.
/// There is no spring term: the human does not know the goal and only reacts
/// to the cable.
struct HumanParams {
  double mass = 10.0;                      // kg
  Diag3 damping = Diag3::uniform(20.0);    // N*s/m
  double gravity = 9.81;                   // m/s^2

  double weight() const { return mass * gravity; }
  void validate() const {
    if (!(mass > 0.0)) throw ConfigError("human mass must be > 0");
    if (!damping.positive()) throw ConfigError("human damping entries must be > 0");
    if (!(gravity > 0.0)) throw ConfigError("gravity must be > 0");
  }
};

/// Unilateral spring cable: zero force when slack, Hooke's law when stretched
/// past the rest length.
struct CableParams {
  double stiffness = 100.0;   // N/m
  double rest_length = 1.0;   // m

  void validate() const {
    if (!(stiffness > 0.0)) throw ConfigError("cable stiffness must be > 0");
    if (!(rest_length > 0.0)) throw ConfigError("cable rest length must be > 0");
  }
};

/// Virtual inertia and damping rendered by the admittance filter.
struct AdmittanceParams {
  Diag3 inertia = Diag3::uniform(0.8);   // kg
  Diag3 damping = Diag3::uniform(2.4);   // N*s/m

  void validate() const {
    if (!inertia.positive()) throw ConfigError("admittance inertia entries must be > 0");
    if (!damping.positive()) throw ConfigError("admittance damping entries must be > 0");
  }
};

/// Guidance gains: proportional robot-position feedback acts on x,y only, the
/// vertical channel carries the constant desired cable force.
struct GuidanceParams {
  double kp = 4.5;              // N/m, horizontal proportional gain
  double fz_des = 1.0;          // N, desired vertical cable force
  double error_saturation = 0.0;  // m, bound on ||e_R.xy||; <= 0 disables

  /// diag(kp, kp, 0): the vertical row is zero by construction.
  Diag3 kp_matrix() const { return Diag3(kp, kp, 0.0); }
  bool saturation_enabled() const { return error_saturation > 0.0; }

  void validate() const {
    if (!(kp > 0.0)) throw ConfigError("guidance kp must be > 0");
  }
  /// The equilibrium only exists (and keeps the human grounded) for
  /// 0 < fz_des < m_H * g.
  void validate_against(const HumanParams& human) const {
    validate();
    if (!(fz_des > 0.0 && fz_des < human.weight()))
      throw InfeasibleForceError("desired vertical cable force must lie in (0, m_H*g) = (0, " +
                                 std::to_string(human.weight()) + "), got " +
                                 std::to_string(fz_des));
  }
};

struct SystemParams {
  HumanParams human;
  CableParams cable;
  AdmittanceParams admittance;
  GuidanceParams guidance;

  void validate() const {
    human.validate();
    cable.validate();
    admittance.validate();
    guidance.validate_against(human);
  }
};

}  // namespace tether
