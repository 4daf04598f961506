#include "tether/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "tether/errors.hpp"
#include "tether/sim.hpp"

namespace tether {

StorageFunction::StorageFunction(const GuidanceRefs& refs, const SystemParams& params)
    : refs_(refs), params_(params) {
  v0_ = -raw_value(equilibrium_state(refs_));
}

double StorageFunction::raw_value(const SystemState& state) const {
  const Vec3 e_r = refs_.robot_pos_ref - state.robot_pos;
  const double v1 = 0.5 * (params_.human.mass * state.human_vel.squared_norm() +
                           params_.admittance.inertia.quadratic(state.robot_vel) +
                           params_.guidance.kp_matrix().quadratic(e_r));
  const Vec3 l_c = state.cable_vector();
  const double v2 = cable_elastic_energy(l_c.norm(), params_.cable) - l_c.dot(refs_.force_ref);
  return v1 + v2;
}

StorageBreakdown StorageFunction::evaluate(const SystemState& state) const {
  StorageBreakdown b;
  const Vec3 e_r = refs_.robot_pos_ref - state.robot_pos;
  b.v1 = 0.5 * (params_.human.mass * state.human_vel.squared_norm() +
                params_.admittance.inertia.quadratic(state.robot_vel) +
                params_.guidance.kp_matrix().quadratic(e_r));
  const Vec3 l_c = state.cable_vector();
  b.v2 = cable_elastic_energy(l_c.norm(), params_.cable) - l_c.dot(refs_.force_ref);
  b.v0 = v0_;
  b.total = b.v1 + b.v2 + b.v0;
  return b;
}

StorageBreakdown lyapunov(const SystemState& state, const GuidanceRefs& refs,
                          const SystemParams& params) {
  return StorageFunction(refs, params).evaluate(state);
}

double lyapunov_rate_expected(const SystemState& state, const SystemParams& params) {
  return -params.human.damping.quadratic(state.human_vel) -
         params.admittance.damping.quadratic(state.robot_vel);
}

MonotoneReport check_monotone(const Trajectory& trajectory, const GuidanceRefs& refs,
                              const SystemParams& params, double tolerance) {
  const StorageFunction storage(refs, params);
  MonotoneReport report;
  report.allowed = tolerance * trajectory.dt;
  report.pass = true;
  if (trajectory.records.size() < 2) {
    return report;
  }
  double previous = storage.evaluate(trajectory.records.front().state).total;
  for (std::size_t i = 1; i < trajectory.records.size(); ++i) {
    const double current = storage.evaluate(trajectory.records[i].state).total;
    const double increment = current - previous;
    if (increment > report.max_increment) {
      report.max_increment = increment;
      report.at_time = trajectory.records[i].t;
    }
    previous = current;
  }
  report.pass = report.max_increment <= report.allowed;
  return report;
}

RateMatchReport check_rate_match(const Trajectory& trajectory, const GuidanceRefs& refs,
                                 const SystemParams& params, double abs_tol, double rel_tol) {
  const StorageFunction storage(refs, params);
  RateMatchReport report;
  report.pass = true;
  const auto& rec = trajectory.records;
  if (rec.size() < 3) {
    return report;
  }

  std::vector<double> v(rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) {
    v[i] = storage.evaluate(rec[i].state).total;
  }
  // Collect switch samples; the finite difference near them sees one-sided
  // dynamics and is excluded (±2 samples).
  std::vector<bool> near_switch(rec.size(), false);
  for (std::size_t i = 1; i < rec.size(); ++i) {
    if (rec[i].mode != rec[i - 1].mode) {
      const std::size_t lo = i >= 2 ? i - 2 : 0;
      const std::size_t hi = std::min(rec.size() - 1, i + 2);
      for (std::size_t j = lo; j <= hi; ++j) near_switch[j] = true;
    }
  }

  for (std::size_t i = 1; i + 1 < rec.size(); ++i) {
    if (near_switch[i] || rec[i].mode != CableMode::Taut) continue;
    const double fd = (v[i + 1] - v[i - 1]) / (2.0 * trajectory.dt);
    const double expected = lyapunov_rate_expected(rec[i].state, params);
    const double deviation = std::abs(fd - expected);
    const double allowed = std::max(abs_tol, rel_tol * std::abs(expected));
    ++report.samples_checked;
    if (deviation > report.max_deviation) {
      report.max_deviation = deviation;
      report.at_time = rec[i].t;
    }
    if (deviation > allowed) {
      report.pass = false;
    }
  }
  return report;
}

const char* to_string(PassivityPort port) {
  switch (port) {
    case PassivityPort::Robot:
      return "robot";
    case PassivityPort::Human:
      return "human";
    case PassivityPort::Combined:
      return "combined";
  }
  return "unknown";
}

PassivityReport passivity_report(const Trajectory& trajectory, PassivityPort port,
                                 const GuidanceRefs& refs_terminal, const SystemParams& params,
                                 double tolerance) {
  const auto& rec = trajectory.records;
  if (rec.size() < 2) {
    throw MissingLogsError("at least two trajectory samples");
  }
  const bool use_robot = port != PassivityPort::Human;
  const bool use_human = port != PassivityPort::Robot;

  // Per-sample port input/output and dissipation. The robot-side input is
  // derived from the logged command so that CSV round trips agree bitwise
  // with in-memory trajectories.
  const std::size_t n = rec.size();
  std::vector<double> power(n), dissipation(n);
  std::vector<Vec3> input_robot(n), input_human(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rec[i];
    if (use_robot && !r.u_a.is_finite()) throw MissingLogsError("uA");
    if (use_human && !r.u_h.is_finite()) throw MissingLogsError("uH");
    double p = 0.0;
    double d = 0.0;
    if (use_robot) {
      input_robot[i] =
          r.u_a - guidance_input(r.state.robot_pos, refs_terminal, params.guidance);
      p += input_robot[i].dot(r.state.robot_vel);
      d += params.admittance.damping.quadratic(r.state.robot_vel);
    }
    if (use_human) {
      input_human[i] = r.u_h;
      p += r.u_h.dot(r.state.human_vel);
      d += params.human.damping.quadratic(r.state.human_vel);
    }
    power[i] = p;
    dissipation[i] = d;
  }

  PassivityReport report;
  report.port = port;
  report.tolerance = tolerance;
  const double dt = trajectory.dt;
  for (std::size_t i = 1; i < n; ++i) {
    report.supply_integral += 0.5 * dt * (power[i - 1] + power[i]);
    report.dissipation_integral += 0.5 * dt * (dissipation[i - 1] + dissipation[i]);
  }

  // A step change in the logged input makes the trapezoidal panel around it
  // first-order; widen the band by the quadrature error bound for each jump.
  constexpr double kJumpThreshold = 0.1;  // N between adjacent samples
  for (std::size_t i = 1; i < n; ++i) {
    double jump2 = 0.0;
    double speed2 = 0.0;
    if (use_robot) {
      jump2 += (input_robot[i] - input_robot[i - 1]).squared_norm();
      speed2 += std::max(rec[i].state.robot_vel.squared_norm(),
                         rec[i - 1].state.robot_vel.squared_norm());
    }
    if (use_human) {
      jump2 += (input_human[i] - input_human[i - 1]).squared_norm();
      speed2 += std::max(rec[i].state.human_vel.squared_norm(),
                         rec[i - 1].state.human_vel.squared_norm());
    }
    const double jump = std::sqrt(jump2);
    if (jump > kJumpThreshold) {
      report.quadrature_allowance += 0.5 * dt * jump * std::sqrt(speed2);
    }
  }

  // The slack/taut switch is a derivative kink in the vector field: a classic
  // fixed-step integrator crossing it mid-step mis-books energy on the order
  // of the elastic energy of one step's worth of length change. Measured on
  // catch events, 0.05·k·Δℓ² bounds the per-crossing defect with margin.
  constexpr double kKinkCoefficient = 0.05;
  for (std::size_t i = 1; i < n; ++i) {
    if (cable_mode(rec[i].state, params.cable) == cable_mode(rec[i - 1].state, params.cable)) {
      continue;
    }
    const double length_change = rec[i].state.cable_vector().norm() -
                                 rec[i - 1].state.cable_vector().norm();
    report.quadrature_allowance +=
        kKinkCoefficient * params.cable.stiffness * length_change * length_change;
  }

  const StorageFunction storage(refs_terminal, params);
  report.storage_delta = storage.evaluate(rec.back().state).total -
                         storage.evaluate(rec.front().state).total;
  report.margin = report.supply_integral - report.dissipation_integral - report.storage_delta;
  report.pass = report.margin >= -(report.tolerance + report.quadrature_allowance);
  return report;
}

SystemState equilibrium(const GuidanceRefs& refs, const SystemParams& params) {
  if (refs.force_ref.x != 0.0 || refs.force_ref.y != 0.0) {
    throw InfeasibleForceError(
        "equilibrium requires a vertical reference force: any horizontal "
        "component leaves the human with no rest state");
  }
  const double fz = refs.force_ref.z;
  if (!(fz > 0.0 && fz < params.human.weight())) {
    throw InfeasibleForceError("reference vertical cable force must lie in (0, m_H*g) = (0, " +
                               std::to_string(params.human.weight()) + "), got " +
                               std::to_string(fz));
  }
  return equilibrium_state(refs);
}

SlackPhaseLimits slack_phase_limits(const SystemParams& params) {
  SlackPhaseLimits limits;
  limits.climb_velocity = params.guidance.fz_des / params.admittance.damping.d.z;
  limits.decay_rate = params.human.damping.trace() / (3.0 * params.human.mass);
  limits.time_constant = 1.0 / limits.decay_rate;
  limits.half_life = std::log(2.0) / limits.decay_rate;
  return limits;
}

double tolerance_scale() {
  static const double scale = [] {
    const char* raw = std::getenv("TETHER_TOL_SCALE");
    if (raw == nullptr || *raw == '\0') return 1.0;
    char* end = nullptr;
    const double value = std::strtod(raw, &end);
    if (end == raw || !(value > 0.0) || !std::isfinite(value)) return 1.0;
    return value;
  }();
  return scale;
}

}  // namespace tether
