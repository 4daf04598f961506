#include "tether/control.hpp"

#include <array>
#include <cmath>

#include "tether/errors.hpp"

namespace tether {
namespace {

// Solve the 3x3 system A x = b by Gaussian elimination with partial pivoting.
// Returns false when the pivot collapses (singular to working precision).
bool solve3(std::array<std::array<double, 3>, 3> a, Vec3 b, Vec3& x) {
  std::array<double, 3> rhs{b.x, b.y, b.z};
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 3; ++row) {
      if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
    }
    if (std::abs(a[pivot][col]) < 1e-14) return false;
    std::swap(a[col], a[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    for (int row = col + 1; row < 3; ++row) {
      const double factor = a[row][col] / a[col][col];
      for (int k = col; k < 3; ++k) a[row][k] -= factor * a[col][k];
      rhs[row] -= factor * rhs[col];
    }
  }
  for (int row = 2; row >= 0; --row) {
    double sum = rhs[row];
    for (int k = row + 1; k < 3; ++k) sum -= a[row][k] * (k == 0 ? x.x : (k == 1 ? x.y : x.z));
    const double value = sum / a[row][row];
    if (row == 0)
      x.x = value;
    else if (row == 1)
      x.y = value;
    else
      x.z = value;
  }
  return true;
}

// Jacobian of the cable force on the human with respect to the robot
// position: k [n n^T + (1 - rest/L)(I - n n^T)] when taut, zero when slack.
std::array<std::array<double, 3>, 3> cable_force_jacobian(const Vec3& robot_pos,
                                                          const Vec3& human_pos,
                                                          const CableParams& cable) {
  std::array<std::array<double, 3>, 3> jac{};
  const Vec3 l = robot_pos - human_pos;
  const double length = l.norm();
  if (length <= cable.rest_length) return jac;
  const Vec3 n = l / length;
  const double radial = cable.stiffness;
  const double lateral = cable.stiffness * (1.0 - cable.rest_length / length);
  const double nv[3] = {n.x, n.y, n.z};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      jac[i][j] = (radial - lateral) * nv[i] * nv[j] + (i == j ? lateral : 0.0);
    }
  }
  return jac;
}

Vec3 stop_residual(const Vec3& robot_pos, const Vec3& human_pos, const GuidanceRefs& refs,
                   const GuidanceParams& gains, const CableParams& cable) {
  const Vec3 f_c = cable_force(robot_pos, human_pos, cable);
  return gains.kp_matrix() * (refs.robot_pos_ref - robot_pos) + refs.force_ref - f_c;
}

}  // namespace

Vec3 robot_reference(const Vec3& human_pos_ref, const Vec3& force_ref, const CableParams& cable) {
  const double magnitude = force_ref.norm();
  if (magnitude <= 0.0) {
    throw ZeroForceRefError();
  }
  return human_pos_ref + force_ref * (1.0 / cable.stiffness + cable.rest_length / magnitude);
}

GuidanceRefs make_guidance_refs(const Vec3& human_pos_ref, const Vec3& force_ref,
                                const CableParams& cable) {
  return GuidanceRefs{human_pos_ref, force_ref,
                      robot_reference(human_pos_ref, force_ref, cable)};
}

Vec3 saturate_horizontal(const Vec3& error, double bound) {
  if (bound <= 0.0) return error;
  const double horizontal = std::hypot(error.x, error.y);
  if (horizontal <= bound) return error;
  const double scale = bound / horizontal;
  return Vec3{error.x * scale, error.y * scale, error.z};
}

Vec3 guidance_input(const Vec3& robot_pos, const GuidanceRefs& refs, const GuidanceParams& gains) {
  Vec3 error = refs.robot_pos_ref - robot_pos;
  if (gains.saturation_enabled()) {
    error = saturate_horizontal(error, gains.error_saturation);
  }
  return gains.kp_matrix() * error + refs.force_ref;
}

Vec3 time_varying_decompose(const GuidanceRefs& refs_t, const GuidanceRefs& refs_terminal,
                            const GuidanceParams& gains) {
  return gains.kp_matrix() * (refs_t.robot_pos_ref - refs_terminal.robot_pos_ref) +
         (refs_t.force_ref - refs_terminal.force_ref);
}

SystemState equilibrium_state(const GuidanceRefs& refs) {
  return SystemState{refs.human_pos_ref, Vec3{}, refs.robot_pos_ref, Vec3{}};
}

Vec3 stop_equilibrium(const Vec3& human_pos, const GuidanceRefs& refs, const GuidanceParams& gains,
                      const CableParams& cable, const HumanParams& human) {
  // Start from the taut configuration that would deliver force_ref over the
  // pinned human; the solver then corrects for the proportional term.
  Vec3 robot_pos = robot_reference(human_pos, refs.force_ref, cable);
  const Diag3 kp = gains.kp_matrix();
  constexpr int kMaxIterations = 100;
  constexpr double kTolerance = 1e-12;

  Vec3 residual = stop_residual(robot_pos, human_pos, refs, gains, cable);
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    const double residual_norm = residual.norm();
    if (residual_norm < kTolerance) {
      // Sanity: the balance must be rendered by a taut cable and the implied
      // pull must keep the human grounded.
      if ((robot_pos - human_pos).norm() <= cable.rest_length) {
        throw NoConvergenceError("rest balance solver landed on a slack cable");
      }
      ground_reaction(cable_force(robot_pos, human_pos, cable), human);
      return robot_pos;
    }

    // Newton system: (J_f + K_pH) * step = residual, where residual already
    // carries the sign so that robot_pos + step reduces it.
    auto jac = cable_force_jacobian(robot_pos, human_pos, cable);
    jac[0][0] += kp.d.x;
    jac[1][1] += kp.d.y;
    jac[2][2] += kp.d.z;
    Vec3 step{};
    double damping = 0.0;
    while (!solve3(jac, residual, step)) {
      // Singular system (e.g. slack iterate with the zero vertical gain):
      // regularize progressively until the step is computable.
      damping = damping == 0.0 ? 1e-8 : damping * 10.0;
      if (damping > 1e6) {
        throw NoConvergenceError("rest balance Jacobian is singular");
      }
      jac[0][0] += damping;
      jac[1][1] += damping;
      jac[2][2] += damping;
    }

    // Backtracking line search on the residual norm.
    double alpha = 1.0;
    bool advanced = false;
    for (int cut = 0; cut < 40; ++cut) {
      const Vec3 candidate = robot_pos + step * alpha;
      const Vec3 trial = stop_residual(candidate, human_pos, refs, gains, cable);
      if (trial.norm() < residual_norm) {
        robot_pos = candidate;
        residual = trial;
        advanced = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!advanced) {
      throw NoConvergenceError("rest balance line search stalled");
    }
  }
  throw NoConvergenceError("rest balance solver exceeded its iteration budget");
}

}  // namespace tether
