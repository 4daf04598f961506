#pragma once

#include "tether/model.hpp"
#include "tether/params.hpp"
#include "tether/vec3.hpp"

namespace tether {

/// Reference triple driving the guidance law. The robot reference is derived
/// from the human reference and the desired cable force so that, at rest with
/// a taut cable, the cable delivers exactly `force_ref` to the human.
struct GuidanceRefs {
  Vec3 human_pos_ref;  ///< desired human position, on the ground plane
  Vec3 force_ref;      ///< desired cable force on the human [N]
  Vec3 robot_pos_ref;  ///< derived robot hover reference
};

/// Robot position that renders `force_ref` through the cable when the human
/// stands at `human_pos_ref`: offset along the force direction by the rest
/// length plus the elastic stretch. Throws ZeroForceRefError when the force
/// reference vanishes (offset direction undefined).
Vec3 robot_reference(const Vec3& human_pos_ref, const Vec3& force_ref, const CableParams& cable);

GuidanceRefs make_guidance_refs(const Vec3& human_pos_ref, const Vec3& force_ref,
                                const CableParams& cable);

/// Radially rescale the horizontal (x,y) part of `error` to norm at most
/// `bound`, preserving direction; z passes through. `bound` <= 0 disables.
Vec3 saturate_horizontal(const Vec3& error, double bound);

/// Guidance force command: proportional action on the horizontal robot
/// position error plus the cable-force feedforward. The vertical channel is
/// feedforward only.
Vec3 guidance_input(const Vec3& robot_pos, const GuidanceRefs& refs, const GuidanceParams& gains);

/// Exogenous part of the guidance input for a time-varying reference: the
/// command with refs at time t equals the command frozen at the terminal refs
/// plus this shift (exact algebraic identity, state-independent).
Vec3 time_varying_decompose(const GuidanceRefs& refs_t, const GuidanceRefs& refs_terminal,
                            const GuidanceParams& gains);

/// Zero-velocity closed-loop fixed point for constant refs.
SystemState equilibrium_state(const GuidanceRefs& refs);

/// Robot rest position when the human holds still at `human_pos` (applying
/// whatever handle force keeps them there). Solves the force balance
/// 0 = -f_c(p_R, p_H) + K_pH (p_R_ref - p_R) + f_c_ref on the full
/// piecewise cable law with a damped Newton iteration.
/// Throws NoConvergenceError if the iteration fails and LiftOffError if the
/// balancing cable pull would exceed the human's weight.
Vec3 stop_equilibrium(const Vec3& human_pos, const GuidanceRefs& refs, const GuidanceParams& gains,
                      const CableParams& cable, const HumanParams& human);

}  // namespace tether
